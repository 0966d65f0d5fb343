//! Local-geometry redundancy score and the iterative greedy filter selection
//! built on it.
//!
//! A layer's weights are viewed as `C_out` filter vectors of length
//! `L = C_in * K * K`. The local power of a filter is the mean Euclidean
//! distance to its `k` nearest live neighbours; filters with the smallest
//! local power are the easiest to replace by their neighbours. Selection
//! removes one filter per step and re-scores the rest on the reduced graph.

use crate::error::{invalid, Error, Result};
use crate::scalar::{l2_distance, Scalar};
use crate::tensor::ToyModel;

/// One layer's filters as a `rows x cols` matrix plus a liveness mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank<T> {
    layer_id: usize,
    rows: usize,
    cols: usize,
    data: Vec<T>,
    alive: Vec<bool>,
}

impl<T: Scalar> FilterBank<T> {
    pub fn new(layer_id: usize, rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows * cols != data.len() || cols == 0 {
            return Err(Error::ShapeMismatch {
                left: vec![rows, cols],
                right: vec![data.len()],
                context: "filter bank rows x cols vs data length",
            });
        }
        Ok(Self {
            layer_id,
            rows,
            cols,
            data,
            alive: vec![true; rows],
        })
    }

    /// Bank from explicit filter vectors.
    pub fn from_rows(layer_id: usize, rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid("filter rows differ in length"));
        }
        Self::new(layer_id, rows.len(), cols, rows.concat())
    }

    /// Filters of a parametric model layer, reshaped to `C_out x (C_in*K*K)`.
    pub fn from_model(model: &ToyModel<T>, layer: usize) -> Result<Self> {
        let (rows, cols, data) = model.filter_matrix(layer)?;
        Self::new(layer, rows, cols, data.to_vec())
    }

    pub fn layer_id(&self) -> usize {
        self.layer_id
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_alive(&self, i: usize) -> bool {
        self.alive[i]
    }

    pub fn live_indices(&self) -> Vec<usize> {
        (0..self.rows).filter(|&i| self.alive[i]).collect()
    }

    pub fn live_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub fn kill(&mut self, i: usize) -> Result<()> {
        if i >= self.rows {
            return Err(Error::IndexOutOfRange {
                what: "filter",
                index: i,
                len: self.rows,
            });
        }
        self.alive[i] = false;
        Ok(())
    }

    /// New bank holding only the live rows not listed in `removed`.
    pub fn without(&self, removed: &[usize]) -> Result<Self> {
        let keep: Vec<usize> = self
            .live_indices()
            .into_iter()
            .filter(|i| !removed.contains(i))
            .collect();
        let mut data = Vec::with_capacity(keep.len() * self.cols);
        for &i in &keep {
            data.extend_from_slice(self.row(i));
        }
        Self::new(self.layer_id, keep.len(), self.cols, data)
    }

    /// Multiplies every entry by `c`.
    pub fn scaled(&self, c: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= c;
        }
        out
    }
}

/// Symmetric pairwise-distance graph over the live filters of a bank.
///
/// Node `g` stands for original filter `id_map[g]`. Deleted nodes stay in
/// the matrix but are never read again.
#[derive(Debug, Clone)]
pub struct NeighborGraph<T> {
    nodes: usize,
    dist: Vec<T>,
    live: Vec<bool>,
    id_map: Vec<usize>,
}

/// Builds the full distance graph over the bank's live filters.
pub fn pairwise_distance<T: Scalar>(bank: &FilterBank<T>) -> Result<NeighborGraph<T>> {
    let ids = bank.live_indices();
    if ids.is_empty() {
        return Err(invalid("filter bank has no live filters"));
    }
    let n = ids.len();
    let mut dist = vec![T::zero(); n * n];
    for a in 0..n {
        for b in a + 1..n {
            let d = l2_distance(bank.row(ids[a]), bank.row(ids[b]));
            dist[a * n + b] = d;
            dist[b * n + a] = d;
        }
    }
    Ok(NeighborGraph {
        nodes: n,
        dist,
        live: vec![true; n],
        id_map: ids,
    })
}

impl<T: Scalar> NeighborGraph<T> {
    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn live_count(&self) -> usize {
        self.live.iter().filter(|&&l| l).count()
    }

    pub fn is_live(&self, node: usize) -> bool {
        self.live.get(node).copied().unwrap_or(false)
    }

    pub fn live_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes).filter(|&g| self.live[g])
    }

    /// Original filter index of graph node `node`.
    pub fn filter_id(&self, node: usize) -> usize {
        self.id_map[node]
    }

    pub fn id_map(&self) -> &[usize] {
        &self.id_map
    }

    pub fn distance(&self, a: usize, b: usize) -> T {
        self.dist[a * self.nodes + b]
    }

    /// Removes a node and its incident edges.
    pub fn delete(&mut self, node: usize) -> Result<()> {
        if !self.is_live(node) {
            return Err(invalid(format!("node {node} is not live")));
        }
        self.live[node] = false;
        Ok(())
    }

    /// Sum of distances from `node` to every live node.
    pub fn global_distance(&self, node: usize) -> T {
        let row = &self.dist[node * self.nodes..(node + 1) * self.nodes];
        let mut acc = T::zero();
        for g in self.live_nodes() {
            acc += row[g];
        }
        acc
    }

    fn local_power_unchecked(&self, node: usize, k: usize, scratch: &mut Vec<T>) -> T {
        scratch.clear();
        let row = &self.dist[node * self.nodes..(node + 1) * self.nodes];
        scratch.extend(self.live_nodes().filter(|&g| g != node).map(|g| row[g]));
        let (head, kth, _) =
            scratch.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap());
        // sum the k smallest in ascending order so the value is independent
        // of how the partition arranged them
        let mut nearest: Vec<T> = head.to_vec();
        nearest.push(*kth);
        nearest.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut acc = T::zero();
        for d in nearest {
            acc += d;
        }
        acc / T::from_usize_lossy(k)
    }
}

/// Mean distance from `node` to its `k` nearest live neighbours.
pub fn local_power<T: Scalar>(graph: &NeighborGraph<T>, node: usize, k: usize) -> Result<T> {
    if !graph.is_live(node) {
        return Err(Error::IndexOutOfRange {
            what: "live graph node",
            index: node,
            len: graph.node_count(),
        });
    }
    let live = graph.live_count();
    if k == 0 || k >= live {
        return Err(invalid(format!(
            "k = {k} outside 1..={} for {live} live filters",
            live.saturating_sub(1)
        )));
    }
    Ok(graph.local_power_unchecked(node, k, &mut Vec::new()))
}

/// Number of filters removed at rate `rate` from `c_out`: `floor(rate * c_out)`.
///
/// A tolerance of 1e-9 absorbs products such as `0.29 * 100` landing just
/// below an integer.
pub fn prune_count(rate: f64, c_out: usize) -> usize {
    let m = (rate * c_out as f64 + 1e-9).floor();
    (m.max(0.0) as usize).min(c_out)
}

pub(crate) fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(invalid(format!(
            "prune rate must lie in [0, 1), got {rate}"
        )));
    }
    Ok(())
}

/// Filters chosen for removal from one layer, in selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult<T> {
    pub layer_id: usize,
    pub pruned: Vec<usize>,
    /// Criterion score of each filter at the step it was chosen (local power
    /// for the local-geometry criterion).
    pub scores_at_selection: Vec<T>,
}

impl<T> SelectionResult<T> {
    pub fn empty(layer_id: usize) -> Self {
        Self {
            layer_id,
            pruned: Vec::new(),
            scores_at_selection: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.pruned.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pruned.is_empty()
    }
}

/// Greedy local filter selection.
///
/// Picks `floor(prune_rate * C_out)` filters one at a time. Each step scores
/// every live filter by local power on the current graph, gathers all
/// filters tied at the minimum, keeps the one with the smallest summed
/// distance to the live filters (lowest index on a further tie), and deletes
/// it from the graph.
pub fn select_filters<T: Scalar>(
    bank: &FilterBank<T>,
    prune_rate: f64,
    k: usize,
) -> Result<SelectionResult<T>> {
    check_rate(prune_rate)?;
    if k == 0 {
        return Err(invalid("k must be >= 1"));
    }
    let m = prune_count(prune_rate, bank.rows());
    if m == 0 {
        return Ok(SelectionResult::empty(bank.layer_id()));
    }
    let live = bank.live_count();
    if m + k + 1 > live {
        return Err(invalid(format!(
            "selecting {m} of {live} filters leaves fewer than k + 1 = {} for local power",
            k + 1
        )));
    }
    let mut graph = pairwise_distance(bank)?;
    let mut result = SelectionResult {
        layer_id: bank.layer_id(),
        pruned: Vec::with_capacity(m),
        scores_at_selection: Vec::with_capacity(m),
    };
    let mut scratch = Vec::with_capacity(graph.node_count());
    let mut scores = Vec::with_capacity(graph.node_count());
    for _ in 0..m {
        scores.clear();
        scores.extend(
            graph
                .live_nodes()
                .map(|g| (g, graph.local_power_unchecked(g, k, &mut scratch))),
        );
        let min_score =
            scores
                .iter()
                .map(|&(_, s)| s)
                .fold(T::infinity(), |a, b| if b < a { b } else { a });
        let mut best: Option<(usize, T)> = None;
        for &(g, s) in &scores {
            if s != min_score {
                continue;
            }
            let global = graph.global_distance(g);
            // strict comparison keeps the lowest filter index on equal sums
            let better = match best {
                None => true,
                Some((bg, bs)) => {
                    global < bs || (global == bs && graph.filter_id(g) < graph.filter_id(bg))
                }
            };
            if better {
                best = Some((g, global));
            }
        }
        let (chosen, _) = best.expect("at least one live filter");
        result.pruned.push(graph.filter_id(chosen));
        result.scores_at_selection.push(min_score);
        graph.delete(chosen)?;
    }
    Ok(result)
}

/// Mean k-NN distance over all live filters of a bank.
pub fn mean_knn_distance<T: Scalar>(bank: &FilterBank<T>, k: usize) -> Result<T> {
    let graph = pairwise_distance(bank)?;
    let live = graph.live_count();
    if k == 0 || k >= live {
        return Err(invalid(format!(
            "need at least k + 1 = {} filters, have {live}",
            k + 1
        )));
    }
    let mut scratch = Vec::new();
    let mut acc = T::zero();
    for g in graph.live_nodes() {
        acc += graph.local_power_unchecked(g, k, &mut scratch);
    }
    Ok(acc / T::from_usize_lossy(live))
}

/// Relative change of the mean k-NN distance between a filter set and a
/// surviving subset: `|m(surviving) - m(original)| / m(original)`.
pub fn distribution_divergence<T: Scalar>(
    original: &FilterBank<T>,
    surviving: &FilterBank<T>,
    k: usize,
) -> Result<T> {
    if surviving.cols() != original.cols() {
        return Err(Error::ShapeMismatch {
            left: vec![original.rows(), original.cols()],
            right: vec![surviving.rows(), surviving.cols()],
            context: "surviving filters must share the original filter length",
        });
    }
    if surviving.live_count() < k + 1 {
        return Err(invalid(format!(
            "{} surviving filters, need at least k + 1 = {}",
            surviving.live_count(),
            k + 1
        )));
    }
    for s in surviving.live_indices() {
        let row = surviving.row(s);
        if !original
            .live_indices()
            .iter()
            .any(|&o| original.row(o) == row)
        {
            return Err(invalid(format!(
                "surviving filter {s} is not an original filter"
            )));
        }
    }
    let base = mean_knn_distance(original, k)?;
    let kept = mean_knn_distance(surviving, k)?;
    if base == T::zero() {
        return Ok(if kept == T::zero() {
            T::zero()
        } else {
            T::infinity()
        });
    }
    Ok((kept - base).abs() / base)
}

/// Diagnostic value of the subset objective: summed change in local power of
/// the surviving filters between the full bank and the reduced bank.
pub fn selection_objective<T: Scalar>(
    bank: &FilterBank<T>,
    pruned: &[usize],
    k: usize,
) -> Result<T> {
    let full = pairwise_distance(bank)?;
    let mut reduced = full.clone();
    for &p in pruned {
        let node = full
            .id_map()
            .iter()
            .position(|&id| id == p)
            .ok_or_else(|| invalid(format!("filter {p} is not live")))?;
        reduced.delete(node)?;
    }
    let mut acc = T::zero();
    for g in reduced.live_nodes() {
        acc += local_power(&reduced, g, k)? - local_power(&full, g, k)?;
    }
    Ok(acc)
}
