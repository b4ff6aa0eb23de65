//! Dense tensors, tree tensor networks on subcubic trees, the normal-form
//! construction, and width measures of dense states.
//!
//! A TTN stores one rank-3 tensor per internal tree vertex. Tensor indices
//! are ordered by ascending neighbor id; open (leaf) edges carry the physical
//! qubit index, inner edges carry a bond index whose dimension is exactly the
//! Schmidt rank across that edge's bipartition.
//!
//! The construction roots the tree at the smallest internal vertex and works
//! with one orthonormal Schmidt frame per inner edge, taken on the child
//! (away-from-root) side. Every non-root tensor holds the overlaps
//! `⟨frame_lower1 ⊗ frame_lower2 | frame_upper⟩`, which makes it an isometry;
//! the root tensor holds `⟨frame_1 frame_2 frame_3 | psi⟩` and carries all
//! Schmidt coefficients. Grouping the contraction at any inner edge then
//! yields the Schmidt vectors on the leaf side and the coefficient-scaled
//! partners on the root side, which is exactly the normal form.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dense::{self, inner, norm, project_out_subset, C64};
use crate::error::{domain, size, Result};
use crate::graph::{Graph, SubcubicTree, TreeEnumerator};
use crate::stabilizer;

/// Default qubit ceiling for dense contraction and construction.
pub const DEFAULT_DENSE_LIMIT: usize = 20;

/// Default qubit ceiling for the exhaustive width minimizations.
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 8;

/// Dense complex tensor, row-major, with one label per index.
#[derive(Clone, Debug)]
pub struct Tensor {
    dims: Vec<usize>,
    labels: Vec<String>,
    data: Vec<C64>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, labels: Vec<String>, data: Vec<C64>) -> Self {
        assert_eq!(dims.len(), labels.len(), "one label per index");
        assert_eq!(
            dims.iter().product::<usize>(),
            data.len(),
            "value count must match the dimension product"
        );
        Self { dims, labels, data }
    }

    pub fn from_fn(
        dims: Vec<usize>,
        labels: Vec<String>,
        mut f: impl FnMut(&[usize]) -> C64,
    ) -> Self {
        let total: usize = dims.iter().product();
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            for (k, &d) in dims.iter().enumerate().rev() {
                idx[k] = rem % d;
                rem /= d;
            }
            data.push(f(&idx));
        }
        Self::new(dims, labels, data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn label_pos(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        let strides = self.strides();
        let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.data[flat]
    }

    pub fn conj(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            labels: self.labels.clone(),
            data: self.data.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn scale(&mut self, c: C64) {
        for v in self.data.iter_mut() {
            *v *= c;
        }
    }

    /// Reorder indices: `perm[k]` is the old position of the new k-th index.
    pub fn permute(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.dims.len());
        let new_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let new_labels: Vec<String> = perm.iter().map(|&p| self.labels[p].clone()).collect();
        let old_strides = self.strides();
        let total = self.data.len();
        let mut data = vec![C64::new(0.0, 0.0); total];
        let mut idx = vec![0usize; new_dims.len()];
        for (flat, value) in data.iter_mut().enumerate() {
            let mut rem = flat;
            for (k, &d) in new_dims.iter().enumerate().rev() {
                idx[k] = rem % d;
                rem /= d;
            }
            let old_flat: usize = idx
                .iter()
                .zip(perm)
                .map(|(&i, &p)| i * old_strides[p])
                .sum();
            *value = self.data[old_flat];
        }
        Self::new(new_dims, new_labels, data)
    }

    /// Contract index `ia` of `self` with index `ib` of `other`, summing
    /// products over the shared range. Both contracted slots disappear; the
    /// result's indices are self's remaining followed by other's remaining.
    pub fn contract_pair(&self, other: &Tensor, ia: usize, ib: usize) -> Result<Tensor> {
        if ia >= self.rank() || ib >= other.rank() {
            return Err(domain(format!(
                "contract_pair: index out of range ({ia} of {}, {ib} of {})",
                self.rank(),
                other.rank()
            )));
        }
        if self.dims[ia] != other.dims[ib] {
            return Err(domain(format!(
                "contract_pair: dimension mismatch {} vs {}",
                self.dims[ia], other.dims[ib]
            )));
        }
        let d = self.dims[ia];
        let a_keep: Vec<usize> = (0..self.rank()).filter(|&k| k != ia).collect();
        let b_keep: Vec<usize> = (0..other.rank()).filter(|&k| k != ib).collect();
        let mut a_perm = a_keep.clone();
        a_perm.push(ia);
        let mut b_perm = vec![ib];
        b_perm.extend(&b_keep);
        let a = self.permute(&a_perm);
        let b = other.permute(&b_perm);
        let a_rows: usize = a_keep.iter().map(|&k| self.dims[k]).product();
        let b_cols: usize = b_keep.iter().map(|&k| other.dims[k]).product();
        let ma = DMatrix::from_row_slice(a_rows, d, &a.data);
        let mb = DMatrix::from_row_slice(d, b_cols, &b.data);
        let prod = ma * mb;
        let mut data = Vec::with_capacity(a_rows * b_cols);
        for r in 0..a_rows {
            for c in 0..b_cols {
                data.push(prod[(r, c)]);
            }
        }
        let mut dims: Vec<usize> = a_keep.iter().map(|&k| self.dims[k]).collect();
        dims.extend(b_keep.iter().map(|&k| other.dims[k]));
        let mut labels: Vec<String> = a_keep.iter().map(|&k| self.labels[k].clone()).collect();
        labels.extend(b_keep.iter().map(|&k| other.labels[k].clone()));
        Ok(Tensor::new(dims, labels, data))
    }

    /// Contract several index pairs at once: `pairs[k] = (index of self,
    /// index of other)`. One reshape and matrix product per call.
    pub fn contract_multi(&self, other: &Tensor, pairs: &[(usize, usize)]) -> Result<Tensor> {
        for &(ia, ib) in pairs {
            if ia >= self.rank() || ib >= other.rank() {
                return Err(domain("contract_multi: index out of range".to_string()));
            }
            if self.dims[ia] != other.dims[ib] {
                return Err(domain(format!(
                    "contract_multi: dimension mismatch {} vs {}",
                    self.dims[ia], other.dims[ib]
                )));
            }
        }
        let a_contract: Vec<usize> = pairs.iter().map(|&(a, _)| a).collect();
        let b_contract: Vec<usize> = pairs.iter().map(|&(_, b)| b).collect();
        let a_keep: Vec<usize> = (0..self.rank()).filter(|k| !a_contract.contains(k)).collect();
        let b_keep: Vec<usize> = (0..other.rank()).filter(|k| !b_contract.contains(k)).collect();
        let mut a_perm = a_keep.clone();
        a_perm.extend(&a_contract);
        let mut b_perm = b_contract.clone();
        b_perm.extend(&b_keep);
        let a = self.permute(&a_perm);
        let b = other.permute(&b_perm);
        let d: usize = a_contract.iter().map(|&k| self.dims[k]).product();
        let a_rows: usize = a_keep.iter().map(|&k| self.dims[k]).product();
        let b_cols: usize = b_keep.iter().map(|&k| other.dims[k]).product();
        let ma = DMatrix::from_row_slice(a_rows, d, &a.data);
        let mb = DMatrix::from_row_slice(d, b_cols, &b.data);
        let prod = ma * mb;
        let mut data = Vec::with_capacity(a_rows * b_cols);
        for r in 0..a_rows {
            for c in 0..b_cols {
                data.push(prod[(r, c)]);
            }
        }
        let mut dims: Vec<usize> = a_keep.iter().map(|&k| self.dims[k]).collect();
        dims.extend(b_keep.iter().map(|&k| other.dims[k]));
        let mut labels: Vec<String> = a_keep.iter().map(|&k| self.labels[k].clone()).collect();
        labels.extend(b_keep.iter().map(|&k| other.labels[k].clone()));
        Ok(Tensor::new(dims, labels, data))
    }

    /// Sum over two equal-range indices of the same tensor.
    pub fn trace_pair(&self, i: usize, j: usize) -> Result<Tensor> {
        if i == j || i >= self.rank() || j >= self.rank() {
            return Err(domain("trace_pair: bad index pair".to_string()));
        }
        if self.dims[i] != self.dims[j] {
            return Err(domain(format!(
                "trace_pair: dimension mismatch {} vs {}",
                self.dims[i], self.dims[j]
            )));
        }
        let keep: Vec<usize> = (0..self.rank()).filter(|&k| k != i && k != j).collect();
        let dims: Vec<usize> = keep.iter().map(|&k| self.dims[k]).collect();
        let labels: Vec<String> = keep.iter().map(|&k| self.labels[k].clone()).collect();
        let strides = self.strides();
        let total: usize = dims.iter().product();
        let mut data = vec![C64::new(0.0, 0.0); total.max(1)];
        let mut idx = vec![0usize; keep.len()];
        for (flat, value) in data.iter_mut().enumerate() {
            let mut rem = flat;
            for (k, &d) in dims.iter().enumerate().rev() {
                idx[k] = rem % d;
                rem /= d;
            }
            let base: usize = idx.iter().zip(&keep).map(|(&v, &k)| v * strides[k]).sum();
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..self.dims[i] {
                acc += self.data[base + t * strides[i] + t * strides[j]];
            }
            *value = acc;
        }
        Ok(Tensor::new(dims, labels, data))
    }
}

fn leaf_label(q: usize) -> String {
    format!("leaf{q}")
}

fn bond_label(u: usize, v: usize) -> String {
    format!("bond{}-{}", u.min(v), u.max(v))
}

/// Subcubic tree plus one tensor per internal vertex.
///
/// For the guarded two-leaf base case the whole state is a single rank-2
/// tensor stored under vertex 0.
#[derive(Clone, Debug)]
pub struct TreeTensorNetwork {
    tree: SubcubicTree,
    tensors: BTreeMap<usize, Tensor>,
    bond_dims: BTreeMap<(usize, usize), usize>,
    leaf_dims: Vec<usize>,
}

impl TreeTensorNetwork {
    pub fn tree(&self) -> &SubcubicTree {
        &self.tree
    }

    pub fn leaf_count(&self) -> usize {
        self.tree.leaf_count()
    }

    pub fn tensor(&self, vertex: usize) -> &Tensor {
        &self.tensors[&vertex]
    }

    pub fn tensors(&self) -> &BTreeMap<usize, Tensor> {
        &self.tensors
    }

    pub fn bond_dims(&self) -> &BTreeMap<(usize, usize), usize> {
        &self.bond_dims
    }

    pub fn leaf_dim(&self, q: usize) -> usize {
        self.leaf_dims[q]
    }

    /// Network dimension D: the largest index dimension over all edges.
    pub fn dimension(&self) -> usize {
        self.bond_dims
            .values()
            .copied()
            .chain(self.leaf_dims.iter().copied())
            .max()
            .unwrap_or(1)
    }

    /// Inner edges (both endpoints internal), normalized (min, max).
    pub fn inner_edges(&self) -> Vec<(usize, usize)> {
        self.bond_dims.keys().copied().collect()
    }

    /// The internal vertex adjacent to leaf `q` (the leaf itself for n=2).
    pub fn vertex_holding_leaf(&self, q: usize) -> usize {
        if self.leaf_count() == 2 {
            0
        } else {
            self.tree.neighbors(q)[0]
        }
    }

    /// Position of the index for edge to `neighbor` within the tensor at
    /// `vertex` (indices are ordered by ascending neighbor id).
    pub fn index_position(&self, vertex: usize, neighbor: usize) -> usize {
        if self.leaf_count() == 2 {
            // single tensor with indices (leaf0, leaf1)
            return neighbor;
        }
        self.tree
            .neighbors(vertex)
            .iter()
            .position(|&w| w == neighbor)
            .expect("neighbor of vertex")
    }

    /// Replace the tensor at a vertex, keeping dims bookkeeping consistent.
    pub(crate) fn set_tensor(&mut self, vertex: usize, tensor: Tensor) {
        self.tensors.insert(vertex, tensor);
    }

    pub(crate) fn set_leaf_dim(&mut self, q: usize, dim: usize) {
        self.leaf_dims[q] = dim;
    }

    /// Contract the whole network. The result's indices are ordered by leaf
    /// label; with all leaves unmeasured this is the dense statevector in
    /// big-endian qubit order.
    pub fn contract_full(&self) -> Result<Vec<C64>> {
        let total_bits: usize = self
            .leaf_dims
            .iter()
            .map(|&d| if d > 1 { 1 } else { 0 })
            .sum();
        if total_bits > DEFAULT_DENSE_LIMIT {
            return Err(size(format!(
                "contract_full refused: {total_bits} open qubits > limit {DEFAULT_DENSE_LIMIT}"
            )));
        }
        let n = self.leaf_count();
        if n == 2 {
            let t = &self.tensors[&0];
            return Ok(t.data.to_vec());
        }
        let root = n; // smallest internal vertex id
        let t = self.contract_subtree(root, None)?;
        // order indices by leaf label
        let mut order: Vec<usize> = (0..t.rank()).collect();
        order.sort_by_key(|&k| {
            t.labels[k]
                .strip_prefix("leaf")
                .and_then(|s| s.parse::<usize>().ok())
                .expect("only leaf labels remain")
        });
        let out = t.permute(&order);
        Ok(out.data)
    }

    /// Contract the subtree hanging at `vertex`, leaving the bond toward
    /// `parent` (when given) open as the last index.
    fn contract_subtree(&self, vertex: usize, parent: Option<usize>) -> Result<Tensor> {
        let mut acc = self.tensors[&vertex].clone();
        for &w in self.tree.neighbors(vertex) {
            if Some(w) == parent || self.tree.is_leaf(w) {
                continue;
            }
            let child = self.contract_subtree(w, Some(vertex))?;
            let bond = bond_label(vertex, w);
            let pa = acc
                .label_pos(&bond)
                .ok_or_else(|| domain(format!("missing bond label {bond}")))?;
            let pb = child
                .label_pos(&bond)
                .ok_or_else(|| domain(format!("missing bond label {bond} in child")))?;
            acc = acc.contract_pair(&child, pa, pb)?;
        }
        if let Some(p) = parent {
            // move the parent bond to the end
            let bond = bond_label(vertex, p);
            let pos = acc
                .label_pos(&bond)
                .ok_or_else(|| domain(format!("missing bond label {bond}")))?;
            let mut perm: Vec<usize> = (0..acc.rank()).filter(|&k| k != pos).collect();
            perm.push(pos);
            acc = acc.permute(&perm);
        }
        Ok(acc)
    }

    /// Contract one side of an inner edge, leaving the bond open as the last
    /// index. Leaf indices come first, sorted by label.
    pub fn contract_side(&self, edge: (usize, usize), endpoint: usize) -> Result<Tensor> {
        let (u, v) = edge;
        if !self.bond_dims.contains_key(&(u.min(v), u.max(v))) {
            return Err(domain(format!("({u},{v}) is not an inner edge")));
        }
        let other = if endpoint == u { v } else { u };
        let t = self.contract_subtree(endpoint, Some(other))?;
        // sort leaf indices, keep bond last
        let bond_pos = t.rank() - 1;
        let mut order: Vec<usize> = (0..bond_pos).collect();
        order.sort_by_key(|&k| {
            t.labels[k]
                .strip_prefix("leaf")
                .and_then(|s| s.parse::<usize>().ok())
                .expect("leaf label")
        });
        order.push(bond_pos);
        Ok(t.permute(&order))
    }
}

/// Orthonormal frame on a sorted qubit subset: one dense column per
/// Schmidt vector, each of length 2^|subset|.
struct Frame {
    columns: Vec<Vec<C64>>,
}

impl Frame {
    fn qubit_basis() -> Self {
        Frame {
            columns: vec![
                vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
                vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            ],
        }
    }

    fn len(&self) -> usize {
        self.columns.len()
    }
}

/// Rooted view of the tree used during construction.
struct Rooted {
    root: usize,
    /// parent[v] for every internal vertex except the root
    parent: BTreeMap<usize, usize>,
    /// internal vertices in depth-descending order (deepest first)
    order: Vec<usize>,
}

fn root_tree(tree: &SubcubicTree) -> Rooted {
    let root = tree.leaf_count(); // smallest internal vertex id
    let mut parent = BTreeMap::new();
    let mut order = Vec::new();
    let mut queue = std::collections::VecDeque::from([root]);
    let mut seen = vec![false; tree.vertex_count()];
    seen[root] = true;
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &w in tree.neighbors(v) {
            if !tree.is_leaf(w) && !seen[w] {
                seen[w] = true;
                parent.insert(w, v);
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    Rooted {
        root,
        parent,
        order,
    }
}

/// Tensor entries `⟨f1_i ⊗ f2_j | target_k⟩` for frames over a two-block
/// partition of the target's qubit positions.
fn overlap_tensor(
    f1: &Frame,
    pos1: &[usize],
    f2: &Frame,
    target: &[Vec<C64>],
    target_qubits: usize,
    labels: [String; 3],
) -> Tensor {
    let d1 = f1.len();
    let d2 = f2.len();
    let d3 = target.len();
    let mut data = Vec::with_capacity(d1 * d2 * d3);
    for a in 0..d1 {
        let reduced: Vec<Vec<C64>> = target
            .iter()
            .map(|t| project_out_subset(t, target_qubits, pos1, &f1.columns[a]))
            .collect();
        for b in 0..d2 {
            for r in reduced.iter() {
                data.push(inner(&f2.columns[b], r));
            }
        }
    }
    Tensor::new(vec![d1, d2, d3], labels.to_vec(), data)
}

fn positions_within(sub: &[usize], full: &[usize]) -> Vec<usize> {
    sub.iter()
        .map(|q| full.binary_search(q).expect("subset of sorted list"))
        .collect()
}

/// Shared recursion for both construction paths. `frames_for` must return an
/// orthonormal frame spanning the support of the reduced state on the given
/// (ascending) leaf set.
fn build_ttn(
    psi: &[C64],
    tree: &SubcubicTree,
    mut frames_for: impl FnMut(&[usize]) -> Result<Frame>,
) -> Result<TreeTensorNetwork> {
    let n = tree.leaf_count();
    assert_eq!(psi.len(), 1 << n, "state/tree size mismatch");

    if n == 2 {
        let t = Tensor::new(
            vec![2, 2],
            vec![leaf_label(0), leaf_label(1)],
            psi.to_vec(),
        );
        return Ok(TreeTensorNetwork {
            tree: tree.clone(),
            tensors: BTreeMap::from([(0, t)]),
            bond_dims: BTreeMap::new(),
            leaf_dims: vec![2, 2],
        });
    }

    let rooted = root_tree(tree);
    // Frames for every inner edge, on the child side.
    let mut edge_frames: BTreeMap<(usize, usize), (Vec<usize>, Frame)> = BTreeMap::new();
    for (&child, &par) in &rooted.parent {
        let side = tree.leaves_on_side((child, par), child)?;
        let frame = frames_for(&side)?;
        edge_frames.insert((child.min(par), child.max(par)), (side, frame));
    }

    let mut tensors = BTreeMap::new();
    for &v in &rooted.order {
        let nbrs = tree.neighbors(v); // ascending
        let is_root = v == rooted.root;
        let lower: Vec<usize> = if is_root {
            nbrs.to_vec()
        } else {
            let p = rooted.parent[&v];
            nbrs.iter().copied().filter(|&w| w != p).collect()
        };

        // frame + sorted leaf set for an edge (v, w) on w's side
        let side_of = |w: usize| -> (Vec<usize>, Frame) {
            if tree.is_leaf(w) {
                (vec![w], Frame::qubit_basis())
            } else {
                let key = (v.min(w), v.max(w));
                let (side, frame) = &edge_frames[&key];
                (
                    side.clone(),
                    Frame {
                        columns: frame.columns.clone(),
                    },
                )
            }
        };

        let tensor = if is_root {
            let (s1, f1) = side_of(lower[0]);
            let (s2, f2) = side_of(lower[1]);
            let (s3, f3) = side_of(lower[2]);
            // project frame 1 out of psi, then frame 2, then overlap with 3
            let mut rest12: Vec<usize> = s2.iter().chain(&s3).copied().collect();
            rest12.sort_unstable();
            let pos2 = positions_within(&s2, &rest12);
            let mut data = Vec::with_capacity(f1.len() * f2.len() * f3.len());
            for a in 0..f1.len() {
                let w1 = project_out_subset(psi, n, &s1, &f1.columns[a]);
                for b in 0..f2.len() {
                    let w2 = project_out_subset(&w1, rest12.len(), &pos2, &f2.columns[b]);
                    for c in 0..f3.len() {
                        data.push(inner(&f3.columns[c], &w2));
                    }
                }
            }
            let labels: Vec<String> = lower
                .iter()
                .map(|&w| {
                    if tree.is_leaf(w) {
                        leaf_label(w)
                    } else {
                        bond_label(v, w)
                    }
                })
                .collect();
            Tensor::new(
                vec![f1.len(), f2.len(), f3.len()],
                labels,
                data,
            )
        } else {
            let p = rooted.parent[&v];
            let (s1, f1) = side_of(lower[0]);
            let (s2, f2) = side_of(lower[1]);
            let key_up = (v.min(p), v.max(p));
            let (side_up, frame_up) = &edge_frames[&key_up];
            let pos1 = positions_within(&s1, side_up);
            debug_assert_eq!(s1.len() + s2.len(), side_up.len());
            let raw = overlap_tensor(
                &f1,
                &pos1,
                &f2,
                &frame_up.columns,
                side_up.len(),
                [
                    if tree.is_leaf(lower[0]) {
                        leaf_label(lower[0])
                    } else {
                        bond_label(v, lower[0])
                    },
                    if tree.is_leaf(lower[1]) {
                        leaf_label(lower[1])
                    } else {
                        bond_label(v, lower[1])
                    },
                    bond_label(v, p),
                ],
            );
            // restore ascending-neighbor index order
            let want: Vec<String> = nbrs
                .iter()
                .map(|&w| {
                    if tree.is_leaf(w) {
                        leaf_label(w)
                    } else {
                        bond_label(v, w)
                    }
                })
                .collect();
            let perm: Vec<usize> = want
                .iter()
                .map(|l| raw.label_pos(l).expect("own label"))
                .collect();
            raw.permute(&perm)
        };
        tensors.insert(v, tensor);
    }

    let bond_dims: BTreeMap<(usize, usize), usize> = edge_frames
        .iter()
        .map(|(&k, (_, f))| (k, f.len()))
        .collect();
    Ok(TreeTensorNetwork {
        tree: tree.clone(),
        tensors,
        bond_dims,
        leaf_dims: vec![2; n],
    })
}

/// Build the normal-form TTN of a dense normalized state along `tree`.
///
/// Schmidt frames come from dense SVD per inner edge; every bond dimension
/// equals the Schmidt rank across that edge (no padding).
pub fn build_ttn_from_state(psi: &[C64], tree: &SubcubicTree) -> Result<TreeTensorNetwork> {
    let n = dense::num_qubits(psi.len())?;
    if n != tree.leaf_count() {
        return Err(domain(format!(
            "state on {n} qubits but tree has {} leaves",
            tree.leaf_count()
        )));
    }
    if n > DEFAULT_DENSE_LIMIT {
        return Err(size(format!(
            "dense construction refused for n={n} > limit {DEFAULT_DENSE_LIMIT}"
        )));
    }
    if (norm(psi) - 1.0).abs() > 1e-9 {
        return Err(domain(format!(
            "input state is not normalized (norm {})",
            norm(psi)
        )));
    }
    build_ttn(psi, tree, |side| {
        let dec = dense::schmidt(psi, n, side)?;
        let columns = (0..dec.rank())
            .map(|i| (0..dec.left.nrows()).map(|r| dec.left[(r, i)]).collect())
            .collect();
        Ok(Frame { columns })
    })
}

/// Build the TTN of a graph state along `tree`, with Schmidt data from the
/// stabilizer formalism.
///
/// Frames are stabilizer states converted densely, so parts larger than the
/// dense limit are refused even though the stabilizer data itself stays
/// polynomial.
pub fn build_ttn_graph_state(g: &Graph, tree: &SubcubicTree) -> Result<TreeTensorNetwork> {
    build_ttn_graph_state_limited(g, tree, DEFAULT_DENSE_LIMIT)
}

pub fn build_ttn_graph_state_limited(
    g: &Graph,
    tree: &SubcubicTree,
    limit: usize,
) -> Result<TreeTensorNetwork> {
    let n = g.vertex_count();
    if n != tree.leaf_count() {
        return Err(domain(format!(
            "graph on {n} vertices but tree has {} leaves",
            tree.leaf_count()
        )));
    }
    if n > limit {
        return Err(size(format!(
            "graph-state construction needs dense parts; refused for n={n} > limit {limit}"
        )));
    }
    let psi = stabilizer::graph_state_dense(g);
    build_ttn(&psi, tree, |side| {
        let fams = stabilizer::schmidt_vectors(g, side)?;
        let columns: Result<Vec<Vec<C64>>> =
            fams.iter().map(|f| f.to_dense_limited(limit)).collect();
        Ok(Frame { columns: columns? })
    })
}

/// Per-edge verdict of the normal-form diagnostic.
#[derive(Clone, Debug, Serialize)]
pub struct EdgeVerdict {
    pub edge: (usize, usize),
    pub bond_dim: usize,
    pub schmidt_rank: usize,
    pub left_orthogonal: bool,
    pub right_orthogonal: bool,
    pub coefficients_match: bool,
    pub passed: bool,
}

/// Check the normal form: for every inner edge, group the network into
/// Σ_i |φ_i⟩|ξ_i⟩ and verify both families are orthogonal and proportional
/// to the Schmidt vectors of the contracted state across that edge.
pub fn normal_form_check(ttn: &TreeTensorNetwork) -> Result<(bool, Vec<EdgeVerdict>)> {
    const TOL: f64 = 1e-9;
    if ttn.leaf_dims.iter().any(|&d| d != 2) {
        return Err(domain(
            "normal form check expects unmeasured leaves".to_string(),
        ));
    }
    let psi = ttn.contract_full()?;
    let n = ttn.leaf_count();
    let mut verdicts = Vec::new();
    for edge in ttn.inner_edges() {
        let (u, v) = edge;
        let left = ttn.contract_side(edge, u)?;
        let right = ttn.contract_side(edge, v)?;
        let d = *ttn.bond_dims().get(&edge).expect("inner edge");

        let left_cols = frame_columns(&left);
        let right_cols = frame_columns(&right);
        let left_orthogonal = gram_is_diagonal(&left_cols, TOL);
        let right_orthogonal = gram_is_diagonal(&right_cols, TOL);

        // products ||φ_i||·||ξ_i|| against the Schmidt coefficients
        let mut products: Vec<f64> = (0..d)
            .map(|i| norm(&left_cols[i]) * norm(&right_cols[i]))
            .collect();
        products.sort_by(|a, b| b.partial_cmp(a).expect("finite norms"));
        let side = ttn.tree().leaves_on_side(edge, u)?;
        let dec = dense::schmidt(&psi, n, &side)?;
        let schmidt_rank = dec.rank();
        let coefficients_match = d == schmidt_rank
            && products
                .iter()
                .zip(&dec.values)
                .all(|(p, s)| (p - s).abs() <= TOL)
            && products.iter().all(|&p| p > TOL);
        let passed = left_orthogonal && right_orthogonal && coefficients_match;
        verdicts.push(EdgeVerdict {
            edge,
            bond_dim: d,
            schmidt_rank,
            left_orthogonal,
            right_orthogonal,
            coefficients_match,
            passed,
        });
    }
    Ok((verdicts.iter().all(|v| v.passed), verdicts))
}

fn frame_columns(side: &Tensor) -> Vec<Vec<C64>> {
    let d = *side.dims().last().expect("bond index last");
    let rows: usize = side.dims()[..side.rank() - 1].iter().product();
    (0..d)
        .map(|i| (0..rows).map(|r| side.data()[r * d + i]).collect())
        .collect()
}

fn gram_is_diagonal(cols: &[Vec<C64>], tol: f64) -> bool {
    for (i, a) in cols.iter().enumerate() {
        for b in cols.iter().skip(i + 1) {
            if inner(a, b).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Result of the χ-width minimization: the smallest achievable value of the
/// maximal Schmidt rank over tree edges, with the witness tree.
#[derive(Clone, Debug)]
pub struct ChiWidthResult {
    /// max over tree edges of the Schmidt rank, minimized over trees.
    pub max_rank: usize,
    pub tree: SubcubicTree,
}

impl ChiWidthResult {
    /// χ-width on the log2 scale.
    pub fn chi_width(&self) -> f64 {
        (self.max_rank as f64).log2()
    }
}

/// Entropic width result: minimized max bipartite entropy over tree edges.
#[derive(Clone, Debug)]
pub struct EntWidthResult {
    pub width: f64,
    pub tree: SubcubicTree,
}

fn schmidt_rank_cached(
    psi: &[C64],
    n: usize,
    side: &[usize],
    cache: &mut BTreeMap<Vec<usize>, (usize, f64)>,
) -> (usize, f64) {
    // Canonical key: the side containing party 0 (rank and entropy are
    // symmetric under complement).
    let key: Vec<usize> = if side.contains(&0) {
        side.to_vec()
    } else {
        (0..n).filter(|q| !side.contains(q)).collect()
    };
    if let Some(&hit) = cache.get(&key) {
        return hit;
    }
    let values = dense::schmidt_values(psi, n, &key).expect("proper bipartition");
    let out = (values.len(), dense::entropy_of_values(&values));
    cache.insert(key, out);
    out
}

/// Exhaustive χ-width of a dense state: minimize over all subcubic trees the
/// maximal Schmidt rank across any tree edge. Ties keep the first tree in
/// canonical enumeration order.
pub fn chi_width_dense(psi: &[C64]) -> Result<ChiWidthResult> {
    chi_width_dense_limited(psi, DEFAULT_EXHAUSTIVE_LIMIT)
}

pub fn chi_width_dense_limited(psi: &[C64], limit: usize) -> Result<ChiWidthResult> {
    let n = dense::num_qubits(psi.len())?;
    if n > limit {
        return Err(size(format!(
            "exhaustive chi-width refused for n={n} > limit {limit}"
        )));
    }
    if n < 2 {
        return Err(domain("chi-width needs at least 2 parties".to_string()));
    }
    let mut cache = BTreeMap::new();
    let mut best: Option<(usize, SubcubicTree)> = None;
    for tree in TreeEnumerator::new(n)? {
        let mut worst = 1usize;
        let bound = best.as_ref().map_or(usize::MAX, |(w, _)| *w);
        let mut pruned = false;
        for &e in tree.edges() {
            let side = tree.leaves_on_side(e, e.0)?;
            let (rank, _) = schmidt_rank_cached(psi, n, &side, &mut cache);
            worst = worst.max(rank);
            if worst >= bound {
                pruned = true;
                break;
            }
        }
        if !pruned {
            best = Some((worst, tree));
        }
    }
    let (max_rank, tree) = best.expect("enumeration nonempty");
    Ok(ChiWidthResult { max_rank, tree })
}

/// Exhaustive entropic entanglement width of a dense state.
pub fn entanglement_width_dense(psi: &[C64]) -> Result<EntWidthResult> {
    entanglement_width_dense_limited(psi, DEFAULT_EXHAUSTIVE_LIMIT)
}

pub fn entanglement_width_dense_limited(psi: &[C64], limit: usize) -> Result<EntWidthResult> {
    let n = dense::num_qubits(psi.len())?;
    if n > limit {
        return Err(size(format!(
            "exhaustive entanglement width refused for n={n} > limit {limit}"
        )));
    }
    if n < 2 {
        return Err(domain(
            "entanglement width needs at least 2 parties".to_string(),
        ));
    }
    let mut cache = BTreeMap::new();
    let mut best: Option<(f64, SubcubicTree)> = None;
    for tree in TreeEnumerator::new(n)? {
        let mut worst = 0f64;
        for &e in tree.edges() {
            let side = tree.leaves_on_side(e, e.0)?;
            let (_, entropy) = schmidt_rank_cached(psi, n, &side, &mut cache);
            worst = worst.max(entropy);
        }
        if best.as_ref().is_none_or(|(w, _)| worst < *w) {
            best = Some((worst, tree));
        }
    }
    let (width, tree) = best.expect("enumeration nonempty");
    Ok(EntWidthResult { width, tree })
}

/// Analytic dimension-2 TTN of the linear cluster state |L_n⟩ on the
/// caterpillar tree, usable far beyond the dense limit.
///
/// Each internal tensor passes the last covered qubit value along the bond
/// and contributes the (-1)^{x_i x_{i+1}} edge sign, so the contraction
/// telescopes to 2^{-n/2} (-1)^{Σ x_i x_{i+1}}.
pub fn linear_cluster_ttn(n: usize) -> Result<TreeTensorNetwork> {
    if n < 2 {
        return Err(domain("linear cluster TTN needs n >= 2".to_string()));
    }
    let tree = SubcubicTree::caterpillar(n)?;
    let half = std::f64::consts::FRAC_1_SQRT_2;
    if n == 2 {
        let data = (0..4)
            .map(|idx| {
                let x0 = (idx >> 1) & 1;
                let x1 = idx & 1;
                C64::new(0.5 * if x0 * x1 == 1 { -1.0 } else { 1.0 }, 0.0)
            })
            .collect();
        let t = Tensor::new(vec![2, 2], vec![leaf_label(0), leaf_label(1)], data);
        return Ok(TreeTensorNetwork {
            tree,
            tensors: BTreeMap::from([(0, t)]),
            bond_dims: BTreeMap::new(),
            leaf_dims: vec![2, 2],
        });
    }
    if n == 3 {
        let t = Tensor::from_fn(
            vec![2, 2, 2],
            vec![leaf_label(0), leaf_label(1), leaf_label(2)],
            |idx| {
                let sign = if (idx[0] * idx[1] + idx[1] * idx[2]) % 2 == 1 {
                    -1.0
                } else {
                    1.0
                };
                C64::new(sign * half * half * half, 0.0)
            },
        );
        return Ok(TreeTensorNetwork {
            tree,
            tensors: BTreeMap::from([(3, t)]),
            bond_dims: BTreeMap::new(),
            leaf_dims: vec![2, 2, 2],
        });
    }

    let mut tensors = BTreeMap::new();
    let mut bond_dims = BTreeMap::new();
    let sign = |b: usize| if b % 2 == 1 { -1.0 } else { 1.0 };
    // leftmost internal vertex n: neighbors [0, 1, n+1]
    tensors.insert(
        n,
        Tensor::from_fn(
            vec![2, 2, 2],
            vec![leaf_label(0), leaf_label(1), bond_label(n, n + 1)],
            |idx| {
                let (x0, x1, r) = (idx[0], idx[1], idx[2]);
                if r != x1 {
                    return C64::new(0.0, 0.0);
                }
                C64::new(0.5 * sign(x0 * x1), 0.0)
            },
        ),
    );
    // middle internal vertices n+i carry leaf i+1; neighbors
    // [i+1, n+i-1, n+i+1]
    for i in 1..=n - 4 {
        let v = n + i;
        tensors.insert(
            v,
            Tensor::from_fn(
                vec![2, 2, 2],
                vec![
                    leaf_label(i + 1),
                    bond_label(v - 1, v),
                    bond_label(v, v + 1),
                ],
                |idx| {
                    let (x, l, r) = (idx[0], idx[1], idx[2]);
                    if r != x {
                        return C64::new(0.0, 0.0);
                    }
                    C64::new(half * sign(l * x), 0.0)
                },
            ),
        );
    }
    // rightmost internal vertex 2n-3: neighbors [n-2, n-1, 2n-4]
    let last = 2 * n - 3;
    tensors.insert(
        last,
        Tensor::from_fn(
            vec![2, 2, 2],
            vec![
                leaf_label(n - 2),
                leaf_label(n - 1),
                bond_label(last - 1, last),
            ],
            |idx| {
                let (xa, xb, l) = (idx[0], idx[1], idx[2]);
                C64::new(0.5 * sign(l * xa + xa * xb), 0.0)
            },
        ),
    );
    for v in n..last {
        bond_dims.insert((v, v + 1), 2);
    }
    Ok(TreeTensorNetwork {
        tree,
        tensors,
        bond_dims,
        leaf_dims: vec![2; n],
    })
}

// ---------------------------------------------------------------------------
// TTN file format (JSON)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TensorDto {
    dims: Vec<usize>,
    values: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct TreeDto {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// Serialized TTN: the tree edge list, per-internal-vertex tensors with flat
/// row-major [re, im] values, and bond dimensions keyed "u-v".
#[derive(Serialize, Deserialize)]
pub struct TtnFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    tree: TreeDto,
    leaf_dims: Vec<usize>,
    bond_dims: BTreeMap<String, usize>,
    tensors: BTreeMap<String, TensorDto>,
}

impl TtnFile {
    pub fn from_ttn(ttn: &TreeTensorNetwork, config: Option<serde_json::Value>) -> Self {
        Self {
            config,
            tree: TreeDto {
                n: ttn.leaf_count(),
                edges: ttn.tree().edges().to_vec(),
            },
            leaf_dims: ttn.leaf_dims.clone(),
            bond_dims: ttn
                .bond_dims
                .iter()
                .map(|(&(u, v), &d)| (format!("{u}-{v}"), d))
                .collect(),
            tensors: ttn
                .tensors
                .iter()
                .map(|(&v, t)| {
                    (
                        v.to_string(),
                        TensorDto {
                            dims: t.dims().to_vec(),
                            values: t.data().iter().map(|c| [c.re, c.im]).collect(),
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn into_ttn(self) -> Result<TreeTensorNetwork> {
        let tree = SubcubicTree::new(self.tree.n, self.tree.edges)?;
        let n = tree.leaf_count();
        if self.leaf_dims.len() != n {
            return Err(domain(format!(
                "leaf_dims has {} entries for {} leaves",
                self.leaf_dims.len(),
                n
            )));
        }
        let mut bond_dims = BTreeMap::new();
        for (key, d) in self.bond_dims {
            let (u, v) = key
                .split_once('-')
                .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
                .ok_or_else(|| domain(format!("bad bond key {key}")))?;
            bond_dims.insert((u, v), d);
        }
        let mut tensors = BTreeMap::new();
        for (key, dto) in self.tensors {
            let v: usize = key
                .parse()
                .map_err(|e| domain(format!("bad tensor vertex key {key}: {e}")))?;
            let labels: Vec<String> = if n == 2 {
                vec![leaf_label(0), leaf_label(1)]
            } else {
                tree.neighbors(v)
                    .iter()
                    .map(|&w| {
                        if tree.is_leaf(w) {
                            leaf_label(w)
                        } else {
                            bond_label(v, w)
                        }
                    })
                    .collect()
            };
            let data: Vec<C64> = dto.values.iter().map(|&[re, im]| C64::new(re, im)).collect();
            if dto.dims.iter().product::<usize>() != data.len() {
                return Err(domain(format!(
                    "tensor at {v}: dims {:?} do not match {} values",
                    dto.dims,
                    data.len()
                )));
            }
            if dto.dims.len() != labels.len() {
                return Err(domain(format!(
                    "tensor at {v} must have {} indices, got {}",
                    labels.len(),
                    dto.dims.len()
                )));
            }
            tensors.insert(v, Tensor::new(dto.dims, labels, data));
        }
        // cross-check dims against declared bond/leaf dims
        let ttn = TreeTensorNetwork {
            tree,
            tensors,
            bond_dims,
            leaf_dims: self.leaf_dims,
        };
        ttn.validate_dims()?;
        Ok(ttn)
    }
}

impl TreeTensorNetwork {
    fn validate_dims(&self) -> Result<()> {
        let n = self.leaf_count();
        if n == 2 {
            let t = self
                .tensors
                .get(&0)
                .ok_or_else(|| domain("two-leaf TTN must store its tensor at vertex 0"))?;
            if t.dims() != [self.leaf_dims[0], self.leaf_dims[1]] {
                return Err(domain("two-leaf tensor dims mismatch".to_string()));
            }
            return Ok(());
        }
        for v in self.tree.internal_vertices() {
            let t = self
                .tensors
                .get(&v)
                .ok_or_else(|| domain(format!("missing tensor at internal vertex {v}")))?;
            for (pos, &w) in self.tree.neighbors(v).iter().enumerate() {
                let want = if self.tree.is_leaf(w) {
                    self.leaf_dims[w]
                } else {
                    *self
                        .bond_dims
                        .get(&(v.min(w), v.max(w)))
                        .ok_or_else(|| domain(format!("missing bond dim for ({v},{w})")))?
                };
                if t.dims()[pos] != want {
                    return Err(domain(format!(
                        "tensor at {v}, index {pos}: dim {} but edge to {w} has dim {want}",
                        t.dims()[pos]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self, config: Option<serde_json::Value>) -> Result<String> {
        Ok(serde_json::to_string_pretty(&TtnFile::from_ttn(self, config))?)
    }

    pub fn from_json(text: &str) -> Result<TreeTensorNetwork> {
        let file: TtnFile = serde_json::from_str(text)?;
        file.into_ttn()
    }
}

/// Parse the statevector file format: a JSON array of [re, im] pairs,
/// amplitude index big-endian over qubit labels.
pub fn statevector_from_json(text: &str) -> Result<Vec<C64>> {
    let pairs: Vec<[f64; 2]> = serde_json::from_str(text)?;
    let v: Vec<C64> = pairs.iter().map(|&[re, im]| C64::new(re, im)).collect();
    dense::num_qubits(v.len())?;
    Ok(v)
}

pub fn statevector_to_json(psi: &[C64]) -> String {
    let pairs: Vec<[f64; 2]> = psi.iter().map(|c| [c.re, c.im]).collect();
    serde_json::to_string(&pairs).expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{fidelity, random_state};
    use crate::graph::Graph;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn contract_identity_pair() {
        let id = Tensor::from_fn(vec![2, 2], vec!["a".into(), "b".into()], |i| {
            c(if i[0] == i[1] { 1.0 } else { 0.0 }, 0.0)
        });
        let id2 = Tensor::from_fn(vec![2, 2], vec!["b".into(), "c".into()], |i| {
            c(if i[0] == i[1] { 1.0 } else { 0.0 }, 0.0)
        });
        let prod = id.contract_pair(&id2, 1, 0).unwrap();
        assert_eq!(prod.dims(), &[2, 2]);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod.get(&[i, j]).re, want, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn matrix_vector_contraction() {
        let m = Tensor::new(
            vec![2, 2],
            vec!["r".into(), "c".into()],
            vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)],
        );
        let v = Tensor::new(vec![2], vec!["c".into()], vec![c(1.0, 0.0), c(-1.0, 0.0)]);
        let out = m.contract_pair(&v, 1, 0).unwrap();
        assert_abs_diff_eq!(out.get(&[0]).re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.get(&[1]).re, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = Tensor::new(vec![2], vec!["i".into()], vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let b = Tensor::new(
            vec![3],
            vec!["j".into()],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        );
        assert!(a.contract_pair(&b, 0, 0).is_err());
    }

    #[test]
    fn three_tensor_cycle_matches_brute_force() {
        // sum_{jkl} A1[a,j,k] A2[b,j,l] A3[c,k,l] against nested loops.
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let rnd = |rng: &mut ChaCha12Rng| {
            c(
                rand::Rng::gen_range(rng, -1.0..1.0),
                rand::Rng::gen_range(rng, -1.0..1.0),
            )
        };
        let a1 = Tensor::from_fn(
            vec![2, 3, 4],
            vec!["a".into(), "j".into(), "k".into()],
            |_| rnd(&mut rng),
        );
        let mut rng2 = ChaCha12Rng::seed_from_u64(43);
        let a2 = Tensor::from_fn(
            vec![2, 3, 2],
            vec!["b".into(), "j".into(), "l".into()],
            |_| rnd(&mut rng2),
        );
        let mut rng3 = ChaCha12Rng::seed_from_u64(44);
        let a3 = Tensor::from_fn(
            vec![2, 4, 2],
            vec!["c".into(), "k".into(), "l".into()],
            |_| rnd(&mut rng3),
        );
        // contract j, then k, then trace the two l's
        let t12 = a1.contract_pair(&a2, 1, 1).unwrap(); // [a,k,b,l]
        let t = t12.contract_pair(&a3, 1, 1).unwrap(); // [a,b,l,c,l']
        let l1 = t.label_pos("l").unwrap();
        let result = t.trace_pair(l1, 4).unwrap(); // [a,b,c]
        for a in 0..2 {
            for b in 0..2 {
                for cc in 0..2 {
                    let mut want = c(0.0, 0.0);
                    for j in 0..3 {
                        for k in 0..4 {
                            for l in 0..2 {
                                want += a1.get(&[a, j, k])
                                    * a2.get(&[b, j, l])
                                    * a3.get(&[cc, k, l]);
                            }
                        }
                    }
                    let got = result.get(&[a, b, cc]);
                    assert!((want - got).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn product_state_ttn_all_bonds_one() {
        // |0..0⟩ has chi = 1 across every cut.
        let n = 5;
        let mut psi = vec![c(0.0, 0.0); 1 << n];
        psi[0] = c(1.0, 0.0);
        let tree = SubcubicTree::caterpillar(n).unwrap();
        let ttn = build_ttn_from_state(&psi, &tree).unwrap();
        assert!(ttn.bond_dims().values().all(|&d| d == 1));
        assert_eq!(ttn.dimension(), 2);
        let out = ttn.contract_full().unwrap();
        assert!(fidelity(&psi, &out) > 1.0 - 1e-12);
    }

    #[test]
    fn single_internal_vertex_holds_the_state() {
        // n=3: the lone internal vertex's tensor is the dense state itself.
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let psi = random_state(3, &mut rng);
        let tree = SubcubicTree::caterpillar(3).unwrap();
        let ttn = build_ttn_from_state(&psi, &tree).unwrap();
        assert_eq!(ttn.tensors().len(), 1);
        let out = ttn.contract_full().unwrap();
        for (a, b) in psi.iter().zip(&out) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn random_state_round_trip_all_trees_n4() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let psi = random_state(4, &mut rng);
        for tree in TreeEnumerator::new(4).unwrap() {
            let ttn = build_ttn_from_state(&psi, &tree).unwrap();
            let out = ttn.contract_full().unwrap();
            assert!(
                fidelity(&psi, &out) > 1.0 - 1e-10,
                "tree {:?}",
                tree.edges()
            );
        }
    }

    #[test]
    fn bond_dims_equal_schmidt_ranks() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let psi = random_state(6, &mut rng);
        let tree = SubcubicTree::caterpillar(6).unwrap();
        let ttn = build_ttn_from_state(&psi, &tree).unwrap();
        for (&(u, v), &d) in ttn.bond_dims() {
            let side = tree.leaves_on_side((u, v), u).unwrap();
            let dec = dense::schmidt(&psi, 6, &side).unwrap();
            assert_eq!(d, dec.rank(), "edge ({u},{v})");
        }
    }

    #[test]
    fn unnormalized_state_rejected() {
        let psi = vec![c(1.0, 0.0); 4];
        let tree = SubcubicTree::caterpillar(2).unwrap();
        assert!(build_ttn_from_state(&psi, &tree).is_err());
    }

    #[test]
    fn c6_graph_ttn_matches_amplitudes() {
        let g = Graph::cycle(6).unwrap();
        let tree = SubcubicTree::caterpillar(6).unwrap();
        let ttn = build_ttn_graph_state(&g, &tree).unwrap();
        for &d in ttn.bond_dims().values() {
            assert_eq!(d, 4);
        }
        assert_eq!(ttn.dimension(), 4);
        let out = ttn.contract_full().unwrap();
        let want = stabilizer::graph_state_dense(&g);
        for (a, b) in out.iter().zip(&want) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn edgeless_graph_ttn_bond_one() {
        let g = Graph::new(5);
        let tree = SubcubicTree::caterpillar(5).unwrap();
        let ttn = build_ttn_graph_state(&g, &tree).unwrap();
        assert!(ttn.bond_dims().values().all(|&d| d == 1));
        let out = ttn.contract_full().unwrap();
        let want = stabilizer::graph_state_dense(&g);
        assert!(fidelity(&out, &want) > 1.0 - 1e-12);
    }

    #[test]
    fn l6_graph_ttn_dimension_two() {
        let g = Graph::path(6).unwrap();
        let tree = SubcubicTree::caterpillar(6).unwrap();
        let ttn = build_ttn_graph_state(&g, &tree).unwrap();
        assert_eq!(ttn.dimension(), 2);
        let out = ttn.contract_full().unwrap();
        let want = stabilizer::graph_state_dense(&g);
        assert!(fidelity(&out, &want) > 1.0 - 1e-10);
    }

    #[test]
    fn graph_path_matches_dense_path() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..5 {
            let n = 5;
            let mut g = Graph::new(n);
            for a in 0..n {
                for b in (a + 1)..n {
                    if rand::Rng::gen_bool(&mut rng, 0.5) {
                        g.add_edge(a, b).unwrap();
                    }
                }
            }
            let tree_idx =
                rand::Rng::gen_range(&mut rng, 0..crate::graph::subcubic_tree_count(n));
            let tree = crate::graph::tree_from_index(n, tree_idx).unwrap();
            let via_graph = build_ttn_graph_state(&g, &tree).unwrap();
            let psi = stabilizer::graph_state_dense(&g);
            let via_dense = build_ttn_from_state(&psi, &tree).unwrap();
            assert_eq!(via_graph.bond_dims(), via_dense.bond_dims());
            let a = via_graph.contract_full().unwrap();
            let b = via_dense.contract_full().unwrap();
            assert!(fidelity(&a, &b) > 1.0 - 1e-10);
            assert!(fidelity(&a, &psi) > 1.0 - 1e-10);
        }
    }

    #[test]
    fn normal_form_passes_on_construction() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let psi = random_state(5, &mut rng);
        let tree = SubcubicTree::caterpillar(5).unwrap();
        let ttn = build_ttn_from_state(&psi, &tree).unwrap();
        let (ok, verdicts) = normal_form_check(&ttn).unwrap();
        assert!(ok, "{verdicts:?}");
        assert_eq!(verdicts.len(), 2);
    }

    #[test]
    fn normal_form_detects_padded_bond() {
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        let psi = random_state(4, &mut rng);
        let tree = SubcubicTree::caterpillar(4).unwrap();
        let ttn = build_ttn_from_state(&psi, &tree).unwrap();
        // pad the single inner bond with a zero slice
        let (u, v) = ttn.inner_edges()[0];
        let mut padded = ttn.clone();
        for vertex in [u, v] {
            let t = padded.tensor(vertex).clone();
            let pos = padded.index_position(vertex, if vertex == u { v } else { u });
            let mut dims = t.dims().to_vec();
            let old = dims[pos];
            dims[pos] = old + 1;
            let grown = Tensor::from_fn(dims.clone(), t.labels().to_vec(), |idx| {
                if idx[pos] < old {
                    let mut inner_idx = idx.to_vec();
                    inner_idx[pos] = idx[pos];
                    t.get(&inner_idx)
                } else {
                    c(0.0, 0.0)
                }
            });
            padded.set_tensor(vertex, grown);
        }
        padded.bond_dims.insert((u, v), ttn.bond_dims()[&(u, v)] + 1);
        let (ok, verdicts) = normal_form_check(&padded).unwrap();
        assert!(!ok);
        assert!(verdicts.iter().any(|vd| !vd.coefficients_match));
    }

    #[test]
    fn normal_form_vacuous_for_three_leaves() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let psi = random_state(3, &mut rng);
        let tree = SubcubicTree::caterpillar(3).unwrap();
        let ttn = build_ttn_from_state(&psi, &tree).unwrap();
        let (ok, verdicts) = normal_form_check(&ttn).unwrap();
        assert!(ok);
        assert!(verdicts.is_empty());
    }

    #[test]
    fn chi_width_c6_is_two() {
        let g = Graph::cycle(6).unwrap();
        let psi = stabilizer::graph_state_dense(&g);
        let r = chi_width_dense(&psi).unwrap();
        assert_eq!(r.max_rank, 4);
        assert_abs_diff_eq!(r.chi_width(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn chi_width_product_state_zero() {
        let mut psi = vec![c(0.0, 0.0); 16];
        psi[0] = c(1.0, 0.0);
        let r = chi_width_dense(&psi).unwrap();
        assert_eq!(r.max_rank, 1);
        assert_abs_diff_eq!(r.chi_width(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn chi_width_star_graph_one() {
        let g = Graph::star(6).unwrap();
        let psi = stabilizer::graph_state_dense(&g);
        let r = chi_width_dense(&psi).unwrap();
        assert_eq!(r.max_rank, 2);
    }

    #[test]
    fn entanglement_width_graph_state_equals_chi() {
        for g in [
            Graph::cycle(5).unwrap(),
            Graph::path(5).unwrap(),
            Graph::star(5).unwrap(),
        ] {
            let psi = stabilizer::graph_state_dense(&g);
            let chi = chi_width_dense(&psi).unwrap();
            let ent = entanglement_width_dense(&psi).unwrap();
            assert_abs_diff_eq!(ent.width, chi.chi_width(), epsilon = 1e-9);
        }
    }

    #[test]
    fn entanglement_width_below_chi() {
        let mut rng = ChaCha12Rng::seed_from_u64(53);
        for _ in 0..5 {
            let psi = random_state(5, &mut rng);
            let chi = chi_width_dense(&psi).unwrap();
            let ent = entanglement_width_dense(&psi).unwrap();
            assert!(ent.width <= chi.chi_width() + 1e-9);
        }
    }

    #[test]
    fn linear_cluster_ttn_matches_graph_state() {
        for n in [2usize, 3, 4, 6, 9] {
            let ttn = linear_cluster_ttn(n).unwrap();
            assert!(ttn.dimension() <= 2);
            let out = ttn.contract_full().unwrap();
            let g = Graph::path(n).unwrap();
            let want = stabilizer::graph_state_dense(&g);
            for (a, b) in out.iter().zip(&want) {
                assert!((a - b).norm() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn ttn_json_round_trip() {
        let g = Graph::cycle(6).unwrap();
        let tree = SubcubicTree::caterpillar(6).unwrap();
        let ttn = build_ttn_graph_state(&g, &tree).unwrap();
        let json = ttn.to_json(None).unwrap();
        let back = TreeTensorNetwork::from_json(&json).unwrap();
        let a = ttn.contract_full().unwrap();
        let b = back.contract_full().unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-15);
        }
        assert_eq!(ttn.bond_dims(), back.bond_dims());
    }

    #[test]
    fn statevector_json_round_trip() {
        let mut rng = ChaCha12Rng::seed_from_u64(61);
        let psi = random_state(3, &mut rng);
        let text = statevector_to_json(&psi);
        let back = statevector_from_json(&text).unwrap();
        for (a, b) in psi.iter().zip(&back) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn n2_guarded_case() {
        let g = Graph::with_edges(2, &[(0, 1)]).unwrap();
        let tree = SubcubicTree::caterpillar(2).unwrap();
        let ttn = build_ttn_graph_state(&g, &tree).unwrap();
        let out = ttn.contract_full().unwrap();
        let want = stabilizer::graph_state_dense(&g);
        assert!(fidelity(&out, &want) > 1.0 - 1e-12);
    }

    #[test]
    fn parameter_count_bound() {
        // A subcubic TTN with n leaves and dimension D stores at most
        // (n-2)·D^3 complex values across its internal tensors.
        let mut rng = ChaCha12Rng::seed_from_u64(71);
        let psi = random_state(6, &mut rng);
        let tree = SubcubicTree::caterpillar(6).unwrap();
        let ttn = build_ttn_from_state(&psi, &tree).unwrap();
        let d = ttn.dimension();
        let total: usize = ttn.tensors().values().map(|t| t.data().len()).sum();
        assert!(total <= (6 - 2) * d * d * d);
    }
}
