//! Rank width of graphs and the subcubic trees achieving it.
//!
//! Exact search enumerates all (2n-5)!! leaf-labeled subcubic trees, pruning
//! a candidate as soon as a partial edge maximum reaches the best width found.
//! The greedy heuristic merges clusters bottom-up and only guarantees an
//! upper bound.

use rayon::prelude::*;

use crate::error::{domain, size, Result};
use crate::gf2::cut_rank;
use crate::graph::{subcubic_tree_count, tree_from_index, Graph, SubcubicTree, TreeEnumerator};

/// Default vertex-count ceiling for the exact search.
pub const DEFAULT_EXACT_LIMIT: usize = 10;

/// A width value together with the tree witnessing it.
#[derive(Clone, Debug)]
pub struct WidthResult {
    pub width: usize,
    pub tree: SubcubicTree,
    /// True when no subcubic tree achieves a smaller width.
    pub exact: bool,
}

/// max over all edges e of T of the cut rank of the induced bipartition.
pub fn width_of_tree(g: &Graph, tree: &SubcubicTree) -> Result<usize> {
    if tree.leaf_count() != g.vertex_count() {
        return Err(domain(format!(
            "tree has {} leaves but graph has {} vertices",
            tree.leaf_count(),
            g.vertex_count()
        )));
    }
    let mut width = 0;
    for &e in tree.edges() {
        let side = tree.leaves_on_side(e, e.0)?;
        width = width.max(cut_rank(g, &side)?);
    }
    Ok(width)
}

/// Partial width evaluation that stops once `bound` is reached; returns
/// `None` when the tree cannot beat `bound`.
fn width_below_bound(g: &Graph, tree: &SubcubicTree, bound: usize) -> Option<usize> {
    let mut width = 0;
    for &e in tree.edges() {
        let side = tree.leaves_on_side(e, e.0).expect("edge from own tree");
        let r = cut_rank(g, &side).expect("leaves are graph vertices");
        width = width.max(r);
        if width >= bound {
            return None;
        }
    }
    Some(width)
}

/// Exact rank width by exhaustive tree search, serial.
pub fn rank_width_exact(g: &Graph) -> Result<WidthResult> {
    rank_width_exact_with(g, DEFAULT_EXACT_LIMIT, 1)
}

/// Exact rank width with an explicit vertex-count limit and worker count.
///
/// Returns the first optimal tree in canonical enumeration order regardless
/// of `threads`; the parallel reduction keys on (width, tree index).
pub fn rank_width_exact_with(g: &Graph, limit: usize, threads: usize) -> Result<WidthResult> {
    let n = g.vertex_count();
    if n < 2 {
        return Err(domain(format!(
            "rank width search needs n >= 2 vertices, got {n}"
        )));
    }
    if n > limit {
        return Err(size(format!(
            "exact search refused for n={n} > limit {limit}; use the heuristic \
             or raise the limit"
        )));
    }
    // Rank width of any graph with an edge is at least 1, so the search can
    // stop as soon as that floor is hit.
    let floor = usize::from(g.edge_count() > 0);

    if threads <= 1 {
        let mut best: Option<(usize, SubcubicTree)> = None;
        for tree in TreeEnumerator::new(n)? {
            let bound = best.as_ref().map_or(usize::MAX, |(w, _)| *w);
            if let Some(w) = width_below_bound(g, &tree, bound) {
                let done = w == floor;
                best = Some((w, tree));
                if done {
                    break;
                }
            }
        }
        let (width, tree) = best.expect("enumeration yields at least one tree");
        return Ok(WidthResult {
            width,
            tree,
            exact: true,
        });
    }

    let total = subcubic_tree_count(n);
    let chunk = total.div_ceil(threads as u64 * 8).max(1);
    let starts: Vec<u64> = (0..total).step_by(chunk as usize).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| domain(format!("thread pool: {e}")))?;
    let best = pool.install(|| {
        starts
            .par_iter()
            .map(|&start| {
                let end = (start + chunk).min(total);
                let mut local: Option<(usize, u64)> = None;
                for idx in start..end {
                    let tree = tree_from_index(n, idx).expect("index in range");
                    let bound = local.map_or(usize::MAX, |(w, _)| w);
                    if let Some(w) = width_below_bound(g, &tree, bound) {
                        local = Some((w, idx));
                        if w == floor {
                            break;
                        }
                    }
                }
                local
            })
            .reduce(|| None, |a, b| match (a, b) {
                (None, x) | (x, None) => x,
                (Some(x), Some(y)) => Some(x.min(y)),
            })
    });
    let (width, idx) = best.expect("enumeration yields at least one tree");
    Ok(WidthResult {
        width,
        tree: tree_from_index(n, idx)?,
        exact: true,
    })
}

/// Greedy bottom-up pairing: repeatedly merge the two clusters whose union
/// minimizes cut rank, ties broken by the lexicographically smallest cluster
/// pair. The result's width is an upper bound on rwd(G).
pub fn rank_width_heuristic(g: &Graph) -> Result<WidthResult> {
    let n = g.vertex_count();
    if n < 2 {
        return Err(domain(format!(
            "rank width heuristic needs n >= 2 vertices, got {n}"
        )));
    }
    // Clusters kept sorted lexicographically by their (sorted) leaf lists;
    // `roots` tracks the tree vertex representing each cluster.
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    let mut roots: Vec<usize> = (0..n).collect();
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(2 * n - 3);
    let mut next_internal = n;

    while clusters.len() > 2 {
        let mut best: Option<(usize, usize, usize)> = None; // (rank, i, j)
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let mut union: Vec<usize> =
                    clusters[i].iter().chain(&clusters[j]).copied().collect();
                union.sort_unstable();
                let r = cut_rank(g, &union)?;
                // Earlier (i, j) wins ties because the outer list is sorted.
                if best.is_none_or(|(br, _, _)| r < br) {
                    best = Some((r, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("at least three clusters");
        let v = next_internal;
        next_internal += 1;
        edges.push((roots[i], v));
        edges.push((roots[j], v));
        let merged_b = clusters.remove(j);
        let merged_a = clusters.remove(i);
        roots.remove(j);
        roots.remove(i);
        let mut merged: Vec<usize> = merged_a;
        merged.extend(merged_b);
        merged.sort_unstable();
        let pos = clusters
            .binary_search(&merged)
            .expect_err("clusters are disjoint");
        clusters.insert(pos, merged);
        roots.insert(pos, v);
    }
    edges.push((roots[0], roots[1]));

    let tree = SubcubicTree::new(n, edges)?;
    let width = width_of_tree(g, &tree)?;
    Ok(WidthResult {
        width,
        tree,
        exact: false,
    })
}
