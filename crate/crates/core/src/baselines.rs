//! Competing filter-selection criteria. All of them return a
//! [`SelectionResult`] with exactly `floor(rate * C_out)` distinct indices so
//! they can be swapped into the scheduler and metrics.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{check_rate, prune_count, select_filters, FilterBank, SelectionResult};
use crate::scalar::{l1_norm, l2_distance, Scalar};

pub const WEISZFELD_TOL: f64 = 1e-9;
pub const WEISZFELD_MAX_ITER: usize = 1000;
const WEISZFELD_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    LocalGeometry,
    L1Norm,
    GeometricMedian,
    CenterDistance,
    Random,
}

impl CriterionKind {
    pub fn cli_name(&self) -> &'static str {
        match self {
            CriterionKind::LocalGeometry => "local",
            CriterionKind::L1Norm => "l1",
            CriterionKind::GeometricMedian => "median",
            CriterionKind::CenterDistance => "center",
            CriterionKind::Random => "random",
        }
    }
}

impl FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "local" | "local_geometry" => CriterionKind::LocalGeometry,
            "l1" | "l1_norm" => CriterionKind::L1Norm,
            "median" | "geometric_median" => CriterionKind::GeometricMedian,
            "center" | "center_distance" => CriterionKind::CenterDistance,
            "random" => CriterionKind::Random,
            other => return Err(invalid(format!("unknown criterion `{other}`"))),
        })
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

/// A filter-selection rule with its kind-specific parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    LocalGeometry { k: usize },
    L1Norm,
    GeometricMedian,
    CenterDistance,
    Random { seed: u64 },
}

impl Criterion {
    /// Criterion of `kind`; `k` is used by local geometry, `seed` by random.
    pub fn of_kind(kind: CriterionKind, k: usize, seed: u64) -> Self {
        match kind {
            CriterionKind::LocalGeometry => Criterion::LocalGeometry { k },
            CriterionKind::L1Norm => Criterion::L1Norm,
            CriterionKind::GeometricMedian => Criterion::GeometricMedian,
            CriterionKind::CenterDistance => Criterion::CenterDistance,
            CriterionKind::Random => Criterion::Random { seed },
        }
    }

    pub fn kind(&self) -> CriterionKind {
        match self {
            Criterion::LocalGeometry { .. } => CriterionKind::LocalGeometry,
            Criterion::L1Norm => CriterionKind::L1Norm,
            Criterion::GeometricMedian => CriterionKind::GeometricMedian,
            Criterion::CenterDistance => CriterionKind::CenterDistance,
            Criterion::Random { .. } => CriterionKind::Random,
        }
    }

    pub fn k(&self) -> Option<usize> {
        match self {
            Criterion::LocalGeometry { k } => Some(*k),
            _ => None,
        }
    }

    pub fn select<T: Scalar>(&self, bank: &FilterBank<T>, rate: f64) -> Result<SelectionResult<T>> {
        match *self {
            Criterion::LocalGeometry { k } => select_filters(bank, rate, k),
            Criterion::L1Norm => select_by_l1(bank, rate),
            Criterion::GeometricMedian => select_by_geometric_median(bank, rate),
            Criterion::CenterDistance => select_by_center_distance(bank, rate),
            Criterion::Random { seed } => select_random(bank, rate, seed),
        }
    }
}

/// Picks the `m` live filters with the smallest scores; ties go to the lowest index.
fn smallest_m<T: Scalar>(
    bank: &FilterBank<T>,
    rate: f64,
    score: impl Fn(usize) -> T,
) -> Result<SelectionResult<T>> {
    check_rate(rate)?;
    let m = prune_count(rate, bank.rows());
    let live = bank.live_indices();
    if m > live.len() {
        return Err(invalid(format!(
            "cannot select {m} of {} live filters",
            live.len()
        )));
    }
    let mut scored: Vec<(T, usize)> = live.into_iter().map(|i| (score(i), i)).collect();
    scored.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite scores")
            .then(a.1.cmp(&b.1))
    });
    scored.truncate(m);
    Ok(SelectionResult {
        layer_id: bank.layer_id(),
        pruned: scored.iter().map(|&(_, i)| i).collect(),
        scores_at_selection: scored.iter().map(|&(s, _)| s).collect(),
    })
}

/// Smallest l1 row norms.
pub fn select_by_l1<T: Scalar>(bank: &FilterBank<T>, rate: f64) -> Result<SelectionResult<T>> {
    smallest_m(bank, rate, |i| l1_norm(bank.row(i)))
}

/// Rows closest to the geometric median of all live rows.
pub fn select_by_geometric_median<T: Scalar>(
    bank: &FilterBank<T>,
    rate: f64,
) -> Result<SelectionResult<T>> {
    check_rate(rate)?;
    if prune_count(rate, bank.rows()) == 0 {
        return Ok(SelectionResult::empty(bank.layer_id()));
    }
    let rows: Vec<&[T]> = bank
        .live_indices()
        .into_iter()
        .map(|i| bank.row(i))
        .collect();
    let median = geometric_median(&rows)?;
    smallest_m(bank, rate, |i| l2_distance(bank.row(i), &median))
}

/// Rows closest to the coordinate-wise mean of all live rows.
pub fn select_by_center_distance<T: Scalar>(
    bank: &FilterBank<T>,
    rate: f64,
) -> Result<SelectionResult<T>> {
    let rows: Vec<&[T]> = bank
        .live_indices()
        .into_iter()
        .map(|i| bank.row(i))
        .collect();
    let center = coordinate_mean(&rows, bank.cols());
    smallest_m(bank, rate, |i| l2_distance(bank.row(i), &center))
}

/// Uniform sample without replacement from the live filters.
pub fn select_random<T: Scalar>(
    bank: &FilterBank<T>,
    rate: f64,
    seed: u64,
) -> Result<SelectionResult<T>> {
    check_rate(rate)?;
    let m = prune_count(rate, bank.rows());
    let live = bank.live_indices();
    if m > live.len() {
        return Err(invalid(format!(
            "cannot select {m} of {} live filters",
            live.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, live.len(), m);
    Ok(SelectionResult {
        layer_id: bank.layer_id(),
        pruned: picks.iter().map(|p| live[p]).collect(),
        scores_at_selection: vec![T::zero(); m],
    })
}

fn coordinate_mean<T: Scalar>(rows: &[&[T]], cols: usize) -> Vec<T> {
    let mut mean = vec![T::zero(); cols];
    for r in rows {
        for (m, &v) in mean.iter_mut().zip(r.iter()) {
            *m += v;
        }
    }
    let n = T::from_usize_lossy(rows.len().max(1));
    for m in &mut mean {
        *m /= n;
    }
    mean
}

/// Weiszfeld iteration from the coordinate mean.
///
/// Distances below 1e-12 are clamped to 1e-12. Stops when an update moves
/// the estimate by at most `1e-9 * max(1, |estimate|)`; errors after 1000
/// iterations.
pub fn geometric_median<T: Scalar>(rows: &[&[T]]) -> Result<Vec<T>> {
    let cols = rows.first().map_or(0, |r| r.len());
    if rows.is_empty() {
        return Err(invalid("geometric median of an empty set"));
    }
    let eps = T::lit(WEISZFELD_EPS);
    let tol = T::lit(WEISZFELD_TOL);
    let mut y = coordinate_mean(rows, cols);
    for _ in 0..WEISZFELD_MAX_ITER {
        let mut num = vec![T::zero(); cols];
        let mut den = T::zero();
        for r in rows {
            let d = l2_distance(r, &y).max(eps);
            let w = T::one() / d;
            den += w;
            for (n, &v) in num.iter_mut().zip(r.iter()) {
                *n += w * v;
            }
        }
        for n in &mut num {
            *n /= den;
        }
        let step = l2_distance(&num, &y);
        let scale = crate::scalar::l2_norm(&num).max(T::one());
        y = num;
        if step <= tol * scale {
            return Ok(y);
        }
    }
    Err(Error::NoConvergence {
        iterations: WEISZFELD_MAX_ITER,
    })
}
