//! Simple undirected graphs and subcubic trees.
//!
//! Parties (graph vertices / qubits / tree leaves) are 0-indexed everywhere,
//! including the file formats. A subcubic tree on `n ≥ 2` leaves has vertices
//! `0..2n-2`: ids `< n` are the leaves, labeled by party, ids `n..2n-2` are
//! the internal (degree-3) vertices.

use std::fmt::Write as _;

use crate::error::{domain, Error, Result};
use crate::gf2::{BitVec, Gf2Matrix};

/// Simple undirected graph stored as bit-packed adjacency rows.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Graph {
    n: usize,
    adj: Vec<BitVec>,
}

impl Graph {
    /// Edgeless graph on `n` vertices.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            adj: (0..n).map(|_| BitVec::zeros(n)).collect(),
        }
    }

    pub fn with_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::new(n);
        for &(a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        if a >= self.n || b >= self.n {
            return Err(domain(format!(
                "edge ({a},{b}) out of range for graph on {} vertices",
                self.n
            )));
        }
        if a == b {
            return Err(domain(format!("self-loop at vertex {a} not allowed")));
        }
        self.adj[a].set(b, true);
        self.adj[b].set(a, true);
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].get(b)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].ones()
    }

    pub fn adjacency_row(&self, v: usize) -> &BitVec {
        &self.adj[v]
    }

    /// Edges as (a, b) pairs with a < b, ascending.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in self.adj[a].ones() {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// The |A|×|B| submatrix Γ(A, B) of the adjacency matrix.
    pub fn adjacency_submatrix(&self, a: &[usize], b: &[usize]) -> Gf2Matrix {
        Gf2Matrix::from_fn(a.len(), b.len(), |i, j| self.has_edge(a[i], b[j]))
    }

    /// GF(2) rank of Γ(A, V∖A); see [`crate::gf2::cut_rank`].
    pub fn cut_rank(&self, part: &[usize]) -> Result<usize> {
        crate::gf2::cut_rank(self, part)
    }

    /// Cycle graph C_n.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(domain(format!("cycle graph needs n >= 3, got {n}")));
        }
        let mut g = Self::new(n);
        for i in 0..n {
            g.add_edge(i, (i + 1) % n)?;
        }
        Ok(g)
    }

    /// Linear chain L_n (path graph).
    pub fn path(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(domain("path graph needs n >= 1".to_string()));
        }
        let mut g = Self::new(n);
        for i in 0..n.saturating_sub(1) {
            g.add_edge(i, i + 1)?;
        }
        Ok(g)
    }

    /// Complete graph K_n.
    pub fn complete(n: usize) -> Result<Self> {
        let mut g = Self::new(n);
        for a in 0..n {
            for b in (a + 1)..n {
                g.add_edge(a, b)?;
            }
        }
        Ok(g)
    }

    /// Star graph: vertex 0 adjacent to all others.
    pub fn star(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(domain("star graph needs n >= 1".to_string()));
        }
        let mut g = Self::new(n);
        for i in 1..n {
            g.add_edge(0, i)?;
        }
        Ok(g)
    }

    /// Parse the graph file format: line 1 is `n m`, then `m` lines `a b`
    /// with `0 <= a < b < n`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(Error::Parse {
                line: 1,
                msg: "empty graph file".into(),
            })?;
        let mut it = header.split_whitespace();
        let parse_usize = |tok: Option<&str>, line: usize, what: &str| -> Result<usize> {
            tok.ok_or(Error::Parse {
                line,
                msg: format!("missing {what}"),
            })?
            .parse()
            .map_err(|e| Error::Parse {
                line,
                msg: format!("bad {what}: {e}"),
            })
        };
        let n = parse_usize(it.next(), 1, "vertex count")?;
        let m = parse_usize(it.next(), 1, "edge count")?;
        let mut g = Self::new(n);
        let mut seen = 0;
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let a = parse_usize(it.next(), line_no, "edge endpoint")?;
            let b = parse_usize(it.next(), line_no, "edge endpoint")?;
            if a >= b {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("edge endpoints must satisfy a < b, got {a} {b}"),
                });
            }
            g.add_edge(a, b).map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
            seen += 1;
        }
        if seen != m {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header declares {m} edges, file has {seen}"),
            });
        }
        Ok(g)
    }

    pub fn to_text(&self) -> String {
        let edges = self.edges();
        let mut out = format!("{} {}\n", self.n, edges.len());
        for (a, b) in edges {
            writeln!(out, "{a} {b}").unwrap();
        }
        out
    }
}

/// Tree whose vertices all have degree 1 or 3; the `n` leaves are labeled by
/// parties `0..n-1`. Deleting any edge induces a bipartition of the parties.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SubcubicTree {
    n_leaves: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl SubcubicTree {
    /// Validate and build a tree from its edge list. Vertices must be exactly
    /// `0..2n-2` with leaves `0..n-1` of degree 1 and the rest of degree 3.
    pub fn new(n_leaves: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n_leaves < 2 {
            return Err(domain(format!(
                "subcubic tree needs at least 2 leaves, got {n_leaves}"
            )));
        }
        let vertex_count = 2 * n_leaves - 2;
        if edges.len() != vertex_count - 1 {
            return Err(domain(format!(
                "subcubic tree on {n_leaves} leaves needs {} edges, got {}",
                vertex_count - 1,
                edges.len()
            )));
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); vertex_count];
        for &(u, v) in &edges {
            if u >= vertex_count || v >= vertex_count {
                return Err(domain(format!(
                    "tree edge ({u},{v}) out of range for {vertex_count} vertices"
                )));
            }
            if u == v {
                return Err(domain(format!("tree self-loop at {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
        }
        for (v, list) in adj.iter().enumerate() {
            let want = if v < n_leaves { 1 } else { 3 };
            if list.len() != want {
                return Err(domain(format!(
                    "vertex {v} has degree {}, expected {want}",
                    list.len()
                )));
            }
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(domain(format!("parallel edges at vertex {v}")));
            }
        }
        let tree = Self {
            n_leaves,
            edges,
            adj,
        };
        // |V| - 1 edges and no repeated edges: connectivity implies acyclic.
        let mut seen = vec![false; vertex_count];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &tree.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(domain("tree is not connected".to_string()));
        }
        Ok(tree)
    }

    fn new_unchecked(n_leaves: usize, edges: Vec<(usize, usize)>) -> Self {
        let vertex_count = 2 * n_leaves - 2;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); vertex_count];
        for &(u, v) in &edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
        }
        Self {
            n_leaves,
            edges,
            adj,
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.n_leaves
    }

    pub fn vertex_count(&self) -> usize {
        2 * self.n_leaves - 2
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        v < self.n_leaves
    }

    /// Edge list in construction order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Internal vertex ids, ascending.
    pub fn internal_vertices(&self) -> impl Iterator<Item = usize> {
        self.n_leaves..self.vertex_count()
    }

    /// Neighbors of `v`, ascending.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Leaf labels reachable from `endpoint` after deleting edge `{u, v}`.
    ///
    /// Returned ascending. `endpoint` must be one of the edge's endpoints.
    pub fn leaves_on_side(&self, edge: (usize, usize), endpoint: usize) -> Result<Vec<usize>> {
        let (u, v) = edge;
        if !self.has_edge(u, v) {
            return Err(domain(format!("edge ({u},{v}) not in tree")));
        }
        let other = if endpoint == u {
            v
        } else if endpoint == v {
            u
        } else {
            return Err(domain(format!("{endpoint} is not an endpoint of ({u},{v})")));
        };
        let mut seen = vec![false; self.vertex_count()];
        seen[other] = true; // block the deleted edge
        seen[endpoint] = true;
        let mut stack = vec![endpoint];
        let mut leaves = Vec::new();
        while let Some(w) = stack.pop() {
            if self.is_leaf(w) {
                leaves.push(w);
            }
            for &x in &self.adj[w] {
                if !seen[x] {
                    seen[x] = true;
                    stack.push(x);
                }
            }
        }
        leaves.sort_unstable();
        Ok(leaves)
    }

    /// The party bipartition induced by deleting `edge`: the first set holds
    /// the leaf labels on the side of the edge's first endpoint.
    pub fn bipartition_from_edge(&self, edge: (usize, usize)) -> Result<(Vec<usize>, Vec<usize>)> {
        let a = self.leaves_on_side(edge, edge.0)?;
        let b = self.leaves_on_side(edge, edge.1)?;
        Ok((a, b))
    }

    /// The caterpillar shape: a path of `n-2` internal vertices, leaves 0 and
    /// 1 on the left end, leaf `i+1` on internal vertex `i`, leaves `n-2` and
    /// `n-1` on the right end.
    pub fn caterpillar(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(domain(format!("caterpillar needs n >= 2, got {n}")));
        }
        if n == 2 {
            return Self::new(2, vec![(0, 1)]);
        }
        if n == 3 {
            // single internal vertex; left and right ends coincide
            return Self::new(3, vec![(0, 3), (1, 3), (2, 3)]);
        }
        let internal = |i: usize| n + i;
        let mut edges = Vec::with_capacity(2 * n - 3);
        for i in 0..n - 3 {
            edges.push((internal(i), internal(i + 1)));
        }
        edges.push((0, internal(0)));
        edges.push((1, internal(0)));
        for i in 1..=n.saturating_sub(4) {
            edges.push((i + 1, internal(i)));
        }
        edges.push((n - 2, internal(n - 3)));
        edges.push((n - 1, internal(n - 3)));
        Self::new(n, edges)
    }

    /// Parse the tree file format: line 1 is `n`, then `2n-3` lines `u v`
    /// over vertex ids `0..2n-2`, where vertex `i < n` is the leaf labeled
    /// party `i`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty tree file".into(),
        })?;
        let n: usize = header.trim().parse().map_err(|e| Error::Parse {
            line: 1,
            msg: format!("bad leaf count: {e}"),
        })?;
        let mut edges = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let mut next = || -> Result<usize> {
                it.next()
                    .ok_or(Error::Parse {
                        line: line_no,
                        msg: "missing vertex id".into(),
                    })?
                    .parse()
                    .map_err(|e| Error::Parse {
                        line: line_no,
                        msg: format!("bad vertex id: {e}"),
                    })
            };
            let u = next()?;
            let v = next()?;
            edges.push((u, v));
        }
        Self::new(n, edges).map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n_leaves);
        for &(u, v) in &self.edges {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }
}

/// Number of leaf-labeled subcubic trees on `n` leaves: (2n-5)!! for n >= 3,
/// and 1 for n = 2.
pub fn subcubic_tree_count(n: usize) -> u64 {
    assert!(n >= 2);
    assert!(n <= 19, "tree count exceeds u64 beyond n = 19");
    (2..n).map(|k| (2 * k - 3) as u64).product()
}

/// Streams every leaf-labeled subcubic tree on `n` leaves exactly once.
///
/// Enumeration is by canonical leaf insertion: leaf `k` is grafted onto each
/// edge of the tree over leaves `0..k`, in edge order; the grafting vertex
/// gets id `n + k - 2`. Trees are rebuilt from the current insertion-choice
/// digits, so iteration state is a plain odometer and [`tree_from_index`]
/// can decode any position independently (useful for chunked parallel scans).
pub struct TreeEnumerator {
    n: usize,
    digits: Vec<usize>,
    exhausted: bool,
}

impl TreeEnumerator {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(domain(format!(
                "subcubic trees need n >= 2 leaves, got {n}"
            )));
        }
        Ok(Self {
            n,
            digits: vec![0; n.saturating_sub(2)],
            exhausted: false,
        })
    }
}

impl Iterator for TreeEnumerator {
    type Item = SubcubicTree;

    fn next(&mut self) -> Option<SubcubicTree> {
        if self.exhausted {
            return None;
        }
        let tree = build_by_insertion(self.n, &self.digits);
        // Odometer increment; digit for leaf k has radix 2k-3.
        let mut pos = self.digits.len();
        loop {
            if pos == 0 {
                self.exhausted = true;
                break;
            }
            pos -= 1;
            let k = pos + 2; // digit `pos` chooses the edge for leaf `k`
            let radix = 2 * k - 3;
            self.digits[pos] += 1;
            if self.digits[pos] < radix {
                break;
            }
            self.digits[pos] = 0;
        }
        Some(tree)
    }
}

/// Decode the tree at `index` in canonical enumeration order.
pub fn tree_from_index(n: usize, index: u64) -> Result<SubcubicTree> {
    if n < 2 {
        return Err(domain(format!("subcubic trees need n >= 2 leaves, got {n}")));
    }
    let total = subcubic_tree_count(n);
    if index >= total {
        return Err(domain(format!(
            "tree index {index} out of range ({total} trees for n={n})"
        )));
    }
    let mut digits = vec![0usize; n - 2];
    let mut rest = index;
    for pos in (0..digits.len()).rev() {
        let radix = (2 * (pos + 2) - 3) as u64;
        digits[pos] = (rest % radix) as usize;
        rest /= radix;
    }
    Ok(build_by_insertion(n, &digits))
}

fn build_by_insertion(n: usize, digits: &[usize]) -> SubcubicTree {
    let mut edges: Vec<(usize, usize)> = vec![(0, 1)];
    for (pos, &choice) in digits.iter().enumerate() {
        let k = pos + 2;
        let w = n + pos;
        let (u, v) = edges[choice];
        edges[choice] = (u, w);
        edges.push((w, v));
        edges.push((w, k));
    }
    SubcubicTree::new_unchecked(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn caterpillar_n6_matches_expected_shape() {
        let t = SubcubicTree::caterpillar(6).unwrap();
        assert_eq!(t.leaf_count(), 6);
        assert_eq!(t.edges().len(), 9);
        // Internal path 6-7-8-9 with leaves {0,1} at 6, 2 at 7, 3 at 8,
        // {4,5} at 9.
        assert_eq!(t.neighbors(6), &[0, 1, 7]);
        assert_eq!(t.neighbors(7), &[2, 6, 8]);
        assert_eq!(t.neighbors(8), &[3, 7, 9]);
        assert_eq!(t.neighbors(9), &[4, 5, 8]);
    }

    #[test]
    fn caterpillar_n4() {
        let t = SubcubicTree::caterpillar(4).unwrap();
        assert_eq!(t.neighbors(4), &[0, 1, 5]);
        assert_eq!(t.neighbors(5), &[2, 3, 4]);
    }

    #[test]
    fn caterpillar_middle_edge_bipartition() {
        // The edge between the two middle internal vertices of the 6-leaf
        // caterpillar splits the parties 3|3.
        let t = SubcubicTree::caterpillar(6).unwrap();
        let (a, b) = t.bipartition_from_edge((7, 8)).unwrap();
        assert_eq!(a, vec![0, 1, 2]);
        assert_eq!(b, vec![3, 4, 5]);
        let (a2, b2) = t.bipartition_from_edge((8, 7)).unwrap();
        assert_eq!(a2, b);
        assert_eq!(b2, a);
    }

    #[test]
    fn leaf_edge_bipartition_is_singleton() {
        let t = SubcubicTree::caterpillar(6).unwrap();
        let (a, b) = t.bipartition_from_edge((3, 8)).unwrap();
        assert_eq!(a, vec![3]);
        assert_eq!(b, vec![0, 1, 2, 4, 5]);
    }

    #[test]
    fn missing_edge_rejected() {
        let t = SubcubicTree::caterpillar(6).unwrap();
        assert!(t.bipartition_from_edge((0, 9)).is_err());
    }

    #[test]
    fn enumerator_counts() {
        assert_eq!(subcubic_tree_count(2), 1);
        assert_eq!(subcubic_tree_count(3), 1);
        assert_eq!(subcubic_tree_count(4), 3);
        assert_eq!(subcubic_tree_count(6), 105);
        for n in 2..=8 {
            let count = TreeEnumerator::new(n).unwrap().count() as u64;
            assert_eq!(count, subcubic_tree_count(n), "n={n}");
        }
    }

    #[test]
    fn enumerator_trees_valid_and_distinct() {
        for n in 2..=6 {
            let mut seen = HashSet::new();
            for t in TreeEnumerator::new(n).unwrap() {
                // Revalidate through the checked constructor.
                let t2 = SubcubicTree::new(n, t.edges().to_vec()).unwrap();
                let mut key: Vec<(usize, usize)> = t2
                    .edges()
                    .iter()
                    .map(|&(u, v)| (u.min(v), u.max(v)))
                    .collect();
                key.sort_unstable();
                assert!(seen.insert(key), "duplicate tree for n={n}");
            }
            assert_eq!(seen.len() as u64, subcubic_tree_count(n));
        }
    }

    #[test]
    fn enumerated_trees_are_labeled_distinct_shapes() {
        // n=4: the three trees pair {0,1}, {0,2}, {0,3} with the remaining
        // two leaves, exhausting the labeled topologies.
        let trees: Vec<_> = TreeEnumerator::new(4).unwrap().collect();
        assert_eq!(trees.len(), 3);
        let mut partners = HashSet::new();
        for t in &trees {
            let side = t.leaves_on_side(
                (t.neighbors(0)[0], 0),
                t.neighbors(0)[0],
            );
            // partner of leaf 0 = the other leaf adjacent to the same
            // internal vertex
            let hub = t.neighbors(0)[0];
            let partner: Vec<usize> = t
                .neighbors(hub)
                .iter()
                .copied()
                .filter(|&w| w != 0 && t.is_leaf(w))
                .collect();
            assert_eq!(partner.len(), 1);
            partners.insert(partner[0]);
            drop(side);
        }
        assert_eq!(partners, HashSet::from([1, 2, 3]));
    }

    #[test]
    fn tree_from_index_matches_enumeration() {
        for n in [2usize, 3, 5, 6] {
            for (i, t) in TreeEnumerator::new(n).unwrap().enumerate() {
                let d = tree_from_index(n, i as u64).unwrap();
                assert_eq!(t.edges(), d.edges());
            }
        }
        assert!(tree_from_index(4, 3).is_err());
    }

    #[test]
    fn every_edge_splits_leaves_into_two_nonempty_parts() {
        for t in TreeEnumerator::new(5).unwrap() {
            for &e in t.edges() {
                let (a, b) = t.bipartition_from_edge(e).unwrap();
                assert!(!a.is_empty() && !b.is_empty());
                let mut all: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
                all.sort_unstable();
                assert_eq!(all, (0..5).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn graph_text_round_trip() {
        let g = Graph::cycle(6).unwrap();
        let parsed = Graph::from_text(&g.to_text()).unwrap();
        assert_eq!(g, parsed);
    }

    #[test]
    fn graph_parse_errors_carry_line_numbers() {
        let err = Graph::from_text("3 1\n2 1\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn tree_text_round_trip() {
        let t = SubcubicTree::caterpillar(5).unwrap();
        let parsed = SubcubicTree::from_text(&t.to_text()).unwrap();
        assert_eq!(t, parsed);
    }

    #[test]
    fn invalid_trees_rejected() {
        // degree-2 internal vertex
        assert!(SubcubicTree::new(3, vec![(0, 3), (1, 3), (2, 3)]).is_ok());
        assert!(SubcubicTree::new(3, vec![(0, 1), (1, 2), (2, 3)]).is_err());
        // too few leaves
        assert!(SubcubicTree::new(1, vec![]).is_err());
        // disconnected (parallel edges make up the count)
        assert!(SubcubicTree::new(2, vec![(0, 0)]).is_err());
    }

    #[test]
    fn n2_tree_is_single_edge() {
        let t = SubcubicTree::new(2, vec![(0, 1)]).unwrap();
        let (a, b) = t.bipartition_from_edge((0, 1)).unwrap();
        assert_eq!((a, b), (vec![0], vec![1]));
    }
}
