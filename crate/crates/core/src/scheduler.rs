//! Progressive pruning: scale the selected filters by `gamma`, fine-tune for
//! one epoch, re-select on the updated weights, repeat; then hard-zero the
//! final selection and remove those channels from the network.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::baselines::Criterion;
use crate::error::{invalid, Error, Result};
use crate::geometry::{prune_count, FilterBank};
use crate::metrics::{mean_average_precision, ArchSpec, RetrievalEval};
use crate::scalar::Scalar;
use crate::tensor::{Batch, LossSpec, Sgd, Tensor, ToyModel};

pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-6;

/// Decay factor used when none is given: 0.01 up to a 50% rate, 0.3 above.
pub fn default_gamma(rate: f64) -> f64 {
    if rate <= 0.5 {
        0.01
    } else {
        0.3
    }
}

/// Settings of the decay / fine-tune loop.
#[derive(Debug, Clone, PartialEq)]
pub struct DecaySchedule<T> {
    pub gamma: T,
    pub epochs: usize,
    /// Epochs between re-selections; the decay is applied at each re-selection.
    pub reselect_every: usize,
    /// A selected filter counts as zero once its norm is at most this fraction
    /// of the median norm of the layer's unselected filters.
    pub zero_threshold: T,
    /// `(model layer index, prune rate)` pairs.
    pub prune_rates: Vec<(usize, f64)>,
}

impl<T: Scalar> DecaySchedule<T> {
    /// Same rate on every prunable layer, decay from [`default_gamma`].
    pub fn uniform(model: &ToyModel<T>, rate: f64, epochs: usize) -> Self {
        Self {
            gamma: T::lit(default_gamma(rate)),
            epochs,
            reselect_every: 1,
            zero_threshold: T::lit(DEFAULT_ZERO_THRESHOLD),
            prune_rates: model
                .prunable_layers()
                .into_iter()
                .map(|l| (l, rate))
                .collect(),
        }
    }

    pub fn with_gamma(mut self, gamma: T) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self, model: &ToyModel<T>) -> Result<()> {
        if !(self.gamma >= T::zero() && self.gamma <= T::one()) {
            return Err(invalid(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if self.epochs == 0 || self.reselect_every == 0 {
            return Err(invalid("epochs and reselect_every must be >= 1"));
        }
        if !(self.zero_threshold > T::zero()) {
            return Err(invalid("zero_threshold must be > 0"));
        }
        let prunable = model.prunable_layers();
        for &(layer, rate) in &self.prune_rates {
            if !(0.0..1.0).contains(&rate) {
                return Err(invalid(format!(
                    "prune rate {rate} for layer {layer} outside [0, 1)"
                )));
            }
            if !prunable.contains(&layer) {
                return Err(invalid(format!(
                    "layer {layer} is not a prunable conv layer"
                )));
            }
        }
        Ok(())
    }
}

/// Optimiser settings for fine-tuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineTune<T> {
    pub lr: T,
    pub momentum: T,
    pub loss: LossSpec<T>,
}

/// Source of training batches, possibly different every epoch.
pub trait EpochData<T: Clone> {
    fn batches(&self, epoch: usize) -> Cow<'_, [Batch<T>]>;
}

impl<T: Clone> EpochData<T> for [Batch<T>] {
    fn batches(&self, _epoch: usize) -> Cow<'_, [Batch<T>]> {
        Cow::Borrowed(self)
    }
}

impl<T: Clone> EpochData<T> for Vec<Batch<T>> {
    fn batches(&self, _epoch: usize) -> Cow<'_, [Batch<T>]> {
        Cow::Borrowed(self)
    }
}

/// Selected filters of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPlan {
    pub layer: usize,
    pub prune_rate: f64,
    pub criterion: Criterion,
    /// Original filter indices in selection order.
    pub selected: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PruningPlan {
    #[serde(rename = "layer", default)]
    pub layers: Vec<LayerPlan>,
}

impl PruningPlan {
    pub fn total_selected(&self) -> usize {
        self.layers.iter().map(|l| l.selected.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub layer: usize,
    pub selected: Vec<usize>,
    /// l2 norm of every filter of the layer after the epoch's training.
    pub norms: Vec<f64>,
    /// Selected filters whose norm is still above the zero threshold.
    pub unconverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean pre-update batch loss; `None` when the epoch had no batches.
    pub loss: Option<f64>,
    pub layers: Vec<LayerRecord>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PruneTrace {
    pub records: Vec<EpochRecord>,
    pub final_plan: PruningPlan,
}

/// A run that stopped early, with the trace of the completed epochs.
#[derive(Debug, thiserror::Error)]
#[error("progressive pruning aborted: {source}")]
pub struct PruneAbort {
    #[source]
    pub source: Error,
    pub trace: PruneTrace,
}

fn select_all<T: Scalar>(
    model: &ToyModel<T>,
    rates: &[(usize, f64)],
    criterion: &Criterion,
) -> Result<Vec<LayerPlan>> {
    rates
        .iter()
        .map(|&(layer, rate)| {
            let bank = FilterBank::from_model(model, layer)?;
            let sel = criterion.select(&bank, rate)?;
            Ok(LayerPlan {
                layer,
                prune_rate: rate,
                criterion: *criterion,
                selected: sel.pruned,
            })
        })
        .collect()
}

fn median<T: Scalar>(values: &[T]) -> T {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite norms"));
    let n = v.len();
    if n == 0 {
        T::zero()
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    }
}

/// Norm below which a selected filter counts as zero: `rel` times the median
/// norm of the filters that are not selected (of all filters if every one is).
fn zero_limit<T: Scalar>(norms: &[T], selected: &[usize], rel: T) -> T {
    let kept: Vec<T> = (0..norms.len())
        .filter(|i| !selected.contains(i))
        .map(|i| norms[i])
        .collect();
    rel * median(if kept.is_empty() { norms } else { &kept })
}

/// Removes planned output channels and the matching input slices of their
/// consumers. Every planned filter must already be (numerically) zero.
pub fn compact<T: Scalar>(
    model: &ToyModel<T>,
    plan: &PruningPlan,
    arch: &ArchSpec,
    zero_threshold: T,
) -> Result<(ToyModel<T>, ArchSpec)> {
    let expected = ArchSpec::from_model(model, arch.input.height, arch.input.width)?;
    if expected.layers != arch.layers {
        return Err(Error::Arch(
            "architecture does not describe this model".into(),
        ));
    }
    let embedding = model.embedding_layer();
    let mut slim = model.clone();
    for lp in &plan.layers {
        if Some(lp.layer) == embedding {
            return Err(Error::Arch(format!(
                "layer {} produces the embedding and cannot be pruned",
                lp.layer
            )));
        }
        if !model.prunable_layers().contains(&lp.layer) {
            return Err(Error::Arch(format!(
                "layer {} is not a prunable conv layer",
                lp.layer
            )));
        }
        let norms = model.filter_norms(lp.layer)?;
        let limit = zero_limit(&norms, &lp.selected, zero_threshold);
        let mut offenders: Vec<usize> = lp
            .selected
            .iter()
            .copied()
            .filter(|&f| f >= norms.len() || norms[f] > limit)
            .collect();
        offenders.sort_unstable();
        if !offenders.is_empty() {
            return Err(Error::NotZeroed {
                layer: lp.layer,
                offenders,
            });
        }
        if lp.selected.is_empty() {
            continue;
        }
        let node = arch
            .index_of(&format!("L{}", lp.layer))
            .ok_or_else(|| Error::Arch(format!("layer {} missing from architecture", lp.layer)))?;
        let consumers: Vec<usize> = arch
            .parametric_consumers(node)?
            .into_iter()
            .map(|c| {
                arch.layers[c]
                    .name
                    .strip_prefix('L')
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| {
                        Error::Arch(format!("cannot resolve consumer `{}`", arch.layers[c].name))
                    })
            })
            .collect::<Result<_>>()?;
        if consumers.is_empty() {
            return Err(Error::Arch(format!(
                "layer {} has no consumer to shrink",
                lp.layer
            )));
        }
        let keep: Vec<usize> = (0..norms.len())
            .filter(|i| !lp.selected.contains(i))
            .collect();
        slim.retain_outputs(lp.layer, &keep)?;
        for c in consumers {
            slim.retain_inputs(c, &keep)?;
        }
    }
    let slim = ToyModel::from_parts(slim.layers().to_vec(), slim.params().to_vec(), slim.seed())?;
    let slim_arch = ArchSpec::from_model(&slim, arch.input.height, arch.input.width)?;
    Ok((slim, slim_arch))
}

/// Zeroes the planned filters, then compacts.
fn finalize<T: Scalar>(
    mut model: ToyModel<T>,
    plan: &PruningPlan,
    arch: &ArchSpec,
    zero_threshold: T,
) -> Result<(ToyModel<T>, ArchSpec)> {
    for lp in &plan.layers {
        for &f in &lp.selected {
            model.zero_filter(lp.layer, f)?;
        }
    }
    compact(&model, plan, arch, zero_threshold)
}

/// One-shot hard pruning: select on the current weights, zero, compact.
pub fn hard_prune<T: Scalar>(
    model: &ToyModel<T>,
    rates: &[(usize, f64)],
    criterion: &Criterion,
    arch: &ArchSpec,
) -> Result<(ToyModel<T>, PruningPlan)> {
    let plan = PruningPlan {
        layers: select_all(model, rates, criterion)?,
    };
    let (slim, _) = finalize(model.clone(), &plan, arch, T::lit(DEFAULT_ZERO_THRESHOLD))?;
    Ok((slim, plan))
}

/// Applies a stored plan: zero the listed filters and compact.
pub fn apply_plan<T: Scalar>(
    model: &ToyModel<T>,
    plan: &PruningPlan,
    arch: &ArchSpec,
) -> Result<ToyModel<T>> {
    Ok(finalize(model.clone(), plan, arch, T::lit(DEFAULT_ZERO_THRESHOLD))?.0)
}

/// Runs `epochs` epochs of SGD over `data`. Returns the mean loss of each epoch.
pub fn fine_tune<T: Scalar>(
    model: &mut ToyModel<T>,
    data: &(impl EpochData<T> + ?Sized),
    opt: &FineTune<T>,
    epochs: usize,
) -> Result<Vec<Option<f64>>> {
    let mut sgd = Sgd::new(opt.lr, opt.momentum)?;
    (0..epochs)
        .map(|e| run_epoch(model, data, e, &mut sgd, &opt.loss))
        .collect()
}

fn run_epoch<T: Scalar>(
    model: &mut ToyModel<T>,
    data: &(impl EpochData<T> + ?Sized),
    epoch: usize,
    sgd: &mut Sgd<T>,
    loss: &LossSpec<T>,
) -> Result<Option<f64>> {
    let batches = data.batches(epoch);
    let mut total = 0.0;
    let mut count = 0usize;
    for b in batches.iter().filter(|b| !b.is_empty()) {
        total += sgd.step(model, b, loss)?.as_f64();
        count += 1;
    }
    Ok((count > 0).then(|| total / count as f64))
}

/// The decay / fine-tune loop followed by hard removal.
///
/// Per epoch (re-selection epochs only for steps 1 and 2): (1) run the
/// criterion on the current weights of every scheduled layer, (2) multiply
/// the selected rows by `gamma`, (3) train one epoch. After the last epoch
/// the selection is refreshed if any training step ran since the last one,
/// the selected filters are zeroed and the network is compacted.
pub fn progressive_prune<T: Scalar>(
    model: &ToyModel<T>,
    schedule: &DecaySchedule<T>,
    criterion: &Criterion,
    data: &(impl EpochData<T> + ?Sized),
    opt: &FineTune<T>,
    arch: &ArchSpec,
) -> std::result::Result<(ToyModel<T>, PruneTrace), PruneAbort> {
    let mut trace = PruneTrace::default();
    match progressive_inner(model, schedule, criterion, data, opt, arch, &mut trace) {
        Ok(slim) => Ok((slim, trace)),
        Err(source) => Err(PruneAbort { source, trace }),
    }
}

fn progressive_inner<T: Scalar>(
    model: &ToyModel<T>,
    schedule: &DecaySchedule<T>,
    criterion: &Criterion,
    data: &(impl EpochData<T> + ?Sized),
    opt: &FineTune<T>,
    arch: &ArchSpec,
    trace: &mut PruneTrace,
) -> Result<ToyModel<T>> {
    schedule.validate(model)?;
    let mut model = model.clone();
    let mut sgd = Sgd::new(opt.lr, opt.momentum)?;
    let mut current: Vec<LayerPlan> = Vec::new();
    let mut trained_since_selection = true;
    for epoch in 0..schedule.epochs {
        if epoch % schedule.reselect_every == 0 {
            current = select_all(&model, &schedule.prune_rates, criterion)?;
            for lp in &current {
                for &f in &lp.selected {
                    model.scale_filter(lp.layer, f, schedule.gamma)?;
                }
            }
            trained_since_selection = false;
        }
        let loss = run_epoch(&mut model, data, epoch, &mut sgd, &opt.loss)?;
        if loss.is_some() {
            trained_since_selection = true;
        }
        let mut layers = Vec::with_capacity(current.len());
        for lp in &current {
            let norms = model.filter_norms(lp.layer)?;
            let limit = zero_limit(&norms, &lp.selected, schedule.zero_threshold);
            layers.push(LayerRecord {
                layer: lp.layer,
                selected: lp.selected.clone(),
                unconverged: lp.selected.iter().filter(|&&f| norms[f] > limit).count(),
                norms: norms.iter().map(|n| n.as_f64()).collect(),
            });
        }
        trace.records.push(EpochRecord {
            epoch,
            loss,
            layers,
        });
    }
    if trained_since_selection {
        current = select_all(&model, &schedule.prune_rates, criterion)?;
    }
    let plan = PruningPlan { layers: current };
    trace.final_plan = plan.clone();
    let (slim, _) = finalize(model, &plan, arch, schedule.zero_threshold)?;
    Ok(slim)
}

/// Hard prune followed by `epochs` epochs of fine-tuning on the slim model.
pub fn oneshot_prune_finetune<T: Scalar>(
    model: &ToyModel<T>,
    rates: &[(usize, f64)],
    criterion: &Criterion,
    data: &(impl EpochData<T> + ?Sized),
    opt: &FineTune<T>,
    epochs: usize,
    arch: &ArchSpec,
) -> Result<(ToyModel<T>, PruningPlan)> {
    let (mut slim, plan) = hard_prune(model, rates, criterion, arch)?;
    fine_tune(&mut slim, data, opt, epochs)?;
    Ok((slim, plan))
}

/// Labelled images for retrieval evaluation.
#[derive(Debug, Clone)]
pub struct RetrievalSet<T> {
    pub gallery: Vec<(Tensor<T>, usize)>,
    pub queries: Vec<(Tensor<T>, usize)>,
}

impl<T: Scalar> RetrievalSet<T> {
    pub fn evaluate(&self, model: &ToyModel<T>) -> Result<RetrievalEval<T>> {
        RetrievalEval::from_model(model, &self.gallery, &self.queries)
    }

    pub fn map(&self, model: &ToyModel<T>) -> Result<f64> {
        mean_average_precision(&self.evaluate(model)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub layer: usize,
    pub rate: f64,
    pub map: f64,
}

/// Prunes only `layer` at each rate (one-shot plus `epochs` of fine-tuning),
/// evaluates mAP, and starts every point from the untouched input model. A
/// rate that removes no filter leaves the model as is.
#[allow(clippy::too_many_arguments)]
pub fn sensitivity_sweep<T: Scalar>(
    model: &ToyModel<T>,
    layer: usize,
    rates: &[f64],
    criterion: &Criterion,
    eval: &RetrievalSet<T>,
    data: &(impl EpochData<T> + ?Sized),
    opt: &FineTune<T>,
    epochs: usize,
    arch: &ArchSpec,
) -> Result<Vec<SweepPoint>> {
    if !model.prunable_layers().contains(&layer) {
        return Err(invalid(format!(
            "layer {layer} is not a prunable conv layer"
        )));
    }
    let rows = model.filter_matrix(layer)?.0;
    rates
        .iter()
        .map(|&rate| {
            crate::geometry::check_rate(rate)?;
            let map = if prune_count(rate, rows) == 0 {
                eval.map(model)?
            } else {
                let (slim, _) = oneshot_prune_finetune(
                    model,
                    &[(layer, rate)],
                    criterion,
                    data,
                    opt,
                    epochs,
                    arch,
                )?;
                eval.map(&slim)?
            };
            Ok(SweepPoint { layer, rate, map })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ToyDataset, ToyTaskConfig};
    use crate::tensor::{Layer, LossKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model() -> ToyModel<f64> {
        ToyModel::new(
            vec![
                Layer::Conv2d {
                    c_out: 8,
                    c_in: 1,
                    k: 3,
                },
                Layer::Relu,
                Layer::MaxPool2,
                Layer::Conv2d {
                    c_out: 6,
                    c_in: 8,
                    k: 3,
                },
                Layer::Relu,
                Layer::GlobalMaxPool,
                Layer::Linear { c_in: 6, c_out: 4 },
            ],
            3,
        )
        .unwrap()
    }

    fn arch(m: &ToyModel<f64>) -> ArchSpec {
        ArchSpec::from_model(m, 8, 8).unwrap()
    }

    fn task() -> ToyDataset<f64> {
        ToyDataset::generate(&ToyTaskConfig {
            classes: 4,
            train_per_class: 4,
            gallery_per_class: 3,
            query_per_class: 2,
            height: 8,
            width: 8,
            ..ToyTaskConfig::default()
        })
        .unwrap()
    }

    fn opt(lr: f64) -> FineTune<f64> {
        FineTune {
            lr,
            momentum: 0.0,
            loss: LossSpec::triplet(1.0).unwrap(),
        }
    }

    #[test]
    fn gamma_zero_without_training_equals_hard_prune() {
        let m = model();
        let crit = Criterion::LocalGeometry { k: 2 };
        let schedule = DecaySchedule::uniform(&m, 0.5, 1).with_gamma(0.0);
        let no_data: Vec<Batch<f64>> = Vec::new();
        let (slim, trace) =
            progressive_prune(&m, &schedule, &crit, &no_data, &opt(0.1), &arch(&m)).unwrap();
        let (hard, plan) = hard_prune(&m, &schedule.prune_rates, &crit, &arch(&m)).unwrap();
        assert_eq!(slim, hard);
        assert_eq!(trace.final_plan, plan);
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].loss, None);
        assert_eq!(trace.records[0].layers[0].unconverged, 0);
    }

    #[test]
    fn compacted_model_matches_masked_model() {
        let m = model();
        let rates = [(0, 0.5), (3, 0.34)];
        let (slim, plan) = hard_prune(&m, &rates, &Criterion::L1Norm, &arch(&m)).unwrap();
        assert_eq!(plan.layers[0].selected.len(), 4);
        assert_eq!(plan.layers[1].selected.len(), 2);
        assert_eq!(
            slim.layers()[0],
            Layer::Conv2d {
                c_out: 4,
                c_in: 1,
                k: 3
            }
        );
        assert_eq!(
            slim.layers()[3],
            Layer::Conv2d {
                c_out: 4,
                c_in: 4,
                k: 3
            }
        );
        assert_eq!(slim.layers()[6], Layer::Linear { c_in: 4, c_out: 4 });
        let mut masked = m.clone();
        for lp in &plan.layers {
            for &f in &lp.selected {
                masked.zero_filter(lp.layer, f).unwrap();
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let x = Tensor::from_fn(vec![1, 8, 8], |_| rng.random_range(-1.0..1.0));
            let a = masked.embed(&x).unwrap();
            let b = slim.embed(&x).unwrap();
            for (u, v) in a.data().iter().zip(b.data()) {
                assert!((u - v).abs() <= 1e-9);
            }
        }
        let slim_arch = ArchSpec::from_model(&slim, 8, 8).unwrap();
        assert!(crate::metrics::count_params(&slim_arch) < crate::metrics::count_params(&arch(&m)));
    }

    #[test]
    fn compact_refuses_live_filters_and_the_embedding_layer() {
        let m = model();
        let plan = PruningPlan {
            layers: vec![LayerPlan {
                layer: 0,
                prune_rate: 0.25,
                criterion: Criterion::L1Norm,
                selected: vec![5, 1],
            }],
        };
        match compact(&m, &plan, &arch(&m), 1e-6) {
            Err(Error::NotZeroed {
                layer: 0,
                offenders,
            }) => assert_eq!(offenders, vec![1, 5]),
            other => panic!("unexpected {other:?}"),
        }
        let head = PruningPlan {
            layers: vec![LayerPlan {
                layer: 6,
                ..plan.layers[0].clone()
            }],
        };
        let err = compact(&m, &head, &arch(&m), 1e-6).unwrap_err();
        assert!(err.to_string().contains("embedding"), "{err}");
        let (other, _) = hard_prune(&m, &[(0, 0.5)], &Criterion::L1Norm, &arch(&m)).unwrap();
        let wrong_arch = arch(&other);
        assert!(compact(&m, &PruningPlan::default(), &wrong_arch, 1e-6).is_err());
    }

    #[test]
    fn trace_has_one_record_per_epoch_and_decays_selection() {
        let m = model();
        let ds = task();
        let data = ds.sampler(LossKind::Triplet, 8, 1).unwrap();
        let schedule = DecaySchedule::uniform(&m, 0.5, 3).with_gamma(0.5);
        let (slim, trace) = progressive_prune(
            &m,
            &schedule,
            &Criterion::L1Norm,
            &data,
            &opt(0.0),
            &arch(&m),
        )
        .unwrap();
        assert_eq!(trace.records.len(), 3);
        assert!(trace.records.iter().all(|r| r.loss.is_some()));
        // lr = 0: l1 keeps picking the same, ever smaller rows
        let first = &trace.records[0].layers[0];
        let last = &trace.records[2].layers[0];
        assert_eq!(first.selected, last.selected);
        for &f in &first.selected {
            assert!((last.norms[f] - first.norms[f] * 0.25).abs() < 1e-12);
        }
        assert_eq!(
            slim.layers()[0],
            Layer::Conv2d {
                c_out: 4,
                c_in: 1,
                k: 3
            }
        );
        assert_eq!(trace.final_plan.total_selected(), 4 + 3);
    }

    #[test]
    fn divergence_aborts_with_partial_trace() {
        let m = model();
        let ds = task();
        let data = ds.sampler(LossKind::Triplet, 4, 1).unwrap();
        let schedule = DecaySchedule::uniform(&m, 0.5, 5);
        let err = progressive_prune(
            &m,
            &schedule,
            &Criterion::L1Norm,
            &data,
            &opt(1e300),
            &arch(&m),
        )
        .unwrap_err();
        assert!(
            matches!(err.source, Error::NonFinite { .. }),
            "{}",
            err.source
        );
        assert!(err.trace.records.len() < 5);
    }

    #[test]
    fn schedule_validation() {
        let m = model();
        let ok = DecaySchedule::uniform(&m, 0.3, 2);
        assert_eq!(ok.gamma, 0.01);
        assert_eq!(DecaySchedule::uniform(&m, 0.9, 2).gamma, 0.3);
        ok.validate(&m).unwrap();
        assert!(ok.clone().with_gamma(1.5).validate(&m).is_err());
        let mut bad = ok.clone();
        bad.prune_rates.push((6, 0.5));
        assert!(bad.validate(&m).is_err());
        let mut bad = ok;
        bad.epochs = 0;
        assert!(bad.validate(&m).is_err());
    }

    #[test]
    fn sweep_restores_model_and_rate_zero_is_baseline() {
        let m = model();
        let ds = task();
        let data = ds.sampler(LossKind::Triplet, 8, 2).unwrap();
        let print = m.fingerprint();
        let base = ds.retrieval.map(&m).unwrap();
        let run = || {
            sensitivity_sweep(
                &m,
                0,
                &[0.0, 0.5, 0.0],
                &Criterion::L1Norm,
                &ds.retrieval,
                &data,
                &opt(0.05),
                1,
                &arch(&m),
            )
            .unwrap()
        };
        let curve = run();
        assert_eq!(m.fingerprint(), print);
        assert_eq!(curve[0].map, base);
        assert_eq!(curve[2].map, base);
        assert_eq!(curve, run());
        assert!(sensitivity_sweep(
            &m,
            6,
            &[0.1],
            &Criterion::L1Norm,
            &ds.retrieval,
            &data,
            &opt(0.0),
            1,
            &arch(&m)
        )
        .is_err());
    }
}
