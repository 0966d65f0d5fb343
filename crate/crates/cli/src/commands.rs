use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use plfp_core::data::{ToyDataset, ToyTaskConfig};
use plfp_core::geometry::{local_power, pairwise_distance, prune_count};
use plfp_core::harness::{self, Arm, ArmResult, Method, TrainConfig};
use plfp_core::io::{
    load_archive, read_plan, save_archive, validate_plan, write_plan, write_trace, WeightArchive,
};
use plfp_core::metrics::{mean_average_precision, rank_at, reduction, ArchSpec};
use plfp_core::scheduler::{
    apply_plan, default_gamma, fine_tune, hard_prune, progressive_prune, sensitivity_sweep,
    DecaySchedule, LayerPlan, PruningPlan,
};
use plfp_core::{Criterion, CriterionKind, FilterBank, Model64};
use serde::Serialize;

use crate::{
    Command, CompareArgs, EvaluateArgs, Format, PlanArgs, PruneArgs, SelectArgs, SweepArgs,
    TrainArgs, TrainOpts,
};

/// A bad flag value, reported with exit code 1.
#[derive(Debug)]
pub struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn run(command: Command, seed: u64) -> Result<()> {
    match command {
        Command::Plan(a) => plan(a, seed),
        Command::Prune(a) => prune(a, seed),
        Command::Train(a) => train(a, seed),
        Command::Sweep(a) => sweep(a, seed),
        Command::Evaluate(a) => evaluate(a),
        Command::Compare(a) => compare(a, seed),
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(usage(format!("--rate must lie in [0, 1), got {rate}")));
    }
    Ok(())
}

fn read_archive(path: &Path) -> Result<WeightArchive<f64>> {
    let bytes = fs::read(path).with_context(|| format!("reading archive {}", path.display()))?;
    load_archive(&bytes).with_context(|| format!("loading archive {}", path.display()))
}

fn write_archive(path: &Path, archive: &WeightArchive<f64>) -> Result<()> {
    fs::write(path, save_archive(archive)?)
        .with_context(|| format!("writing archive {}", path.display()))
}

fn read_dataset(path: &Path) -> Result<ToyDataset<f64>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading dataset {}", path.display()))?;
    let cfg = ToyTaskConfig::from_toml(&text)
        .with_context(|| format!("parsing dataset {}", path.display()))?;
    Ok(ToyDataset::generate(&cfg)?)
}

fn train_config(opts: &TrainOpts) -> Result<TrainConfig> {
    if opts.batch_size == 0 {
        return Err(usage("--batch-size must be positive"));
    }
    if !(opts.lr >= 0.0) || !(0.0..1.0).contains(&opts.momentum) || !(opts.margin >= 0.0) {
        return Err(usage(
            "need --lr >= 0, --momentum in [0, 1) and --margin >= 0",
        ));
    }
    Ok(TrainConfig {
        lr: opts.lr,
        momentum: opts.momentum,
        margin: opts.margin,
        loss: opts.loss.into(),
        batch_size: opts.batch_size,
    })
}

fn criterion_of(kind: CriterionKind, k: usize, seed: u64) -> Result<Criterion> {
    if kind == CriterionKind::LocalGeometry && k == 0 {
        return Err(usage("--k must be >= 1"));
    }
    Ok(Criterion::of_kind(kind, k, seed))
}

fn layer_rates(model: &Model64, select: &SelectArgs) -> Result<Vec<(usize, f64)>> {
    check_rate(select.rate)?;
    let prunable = model.prunable_layers();
    let layers = if select.layers.is_empty() {
        prunable.clone()
    } else {
        select.layers.clone()
    };
    for &l in &layers {
        if !prunable.contains(&l) {
            return Err(usage(format!(
                "layer {l} is not a prunable conv layer (prunable: {prunable:?})"
            )));
        }
    }
    Ok(layers.into_iter().map(|l| (l, select.rate)).collect())
}

fn arch_of(archive: &WeightArchive<f64>) -> Result<ArchSpec> {
    Ok(ArchSpec::from_model(
        &archive.model,
        archive.input_height,
        archive.input_width,
    )?)
}

fn plan(a: PlanArgs, seed: u64) -> Result<()> {
    let archive = read_archive(&a.archive)?;
    let model = &archive.model;
    let rates = layer_rates(model, &a.select)?;
    let criterion = criterion_of(a.select.criterion.into(), a.select.k, seed)?;
    let mut layers = Vec::new();
    for &(layer, rate) in &rates {
        let bank = FilterBank::from_model(model, layer)?;
        let sel = criterion
            .select(&bank, rate)
            .map_err(|e| usage(format!("layer {layer}: {e}")))?;
        let powers = if bank.rows() > a.select.k {
            let graph = pairwise_distance(&bank)?;
            let p = (0..bank.rows())
                .map(|i| local_power(&graph, i, a.select.k))
                .collect::<plfp_core::Result<Vec<f64>>>()?;
            let min = p.iter().copied().fold(f64::INFINITY, f64::min);
            let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            format!("local power min {min:.6e} max {max:.6e}")
        } else {
            "local power n/a".to_string()
        };
        println!(
            "layer {layer}: {} filters, m = {}, {powers}, selected {:?}",
            bank.rows(),
            prune_count(rate, bank.rows()),
            sel.pruned
        );
        layers.push(LayerPlan {
            layer,
            prune_rate: rate,
            criterion,
            selected: sel.pruned,
        });
    }
    let plan = PruningPlan { layers };
    fs::write(&a.out, write_plan(&plan)?)
        .with_context(|| format!("writing plan {}", a.out.display()))?;
    Ok(())
}

fn prune(a: PruneArgs, seed: u64) -> Result<()> {
    let archive = read_archive(&a.archive)?;
    let model = &archive.model;
    let arch = arch_of(&archive)?;
    let write = |slim: Model64| -> Result<()> {
        let out = WeightArchive {
            model: slim,
            ..archive.clone()
        };
        write_archive(&a.out, &out)?;
        let before = plfp_core::metrics::count_params(&arch);
        let after = plfp_core::metrics::count_params(&arch_of(&out)?);
        println!("parameters {before} -> {after}");
        Ok(())
    };
    let save_plan = |plan: &PruningPlan| -> Result<()> {
        if let Some(p) = &a.plan_out {
            fs::write(p, write_plan(plan)?)
                .with_context(|| format!("writing plan {}", p.display()))?;
        }
        Ok(())
    };

    if let Some(path) = &a.plan {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading plan {}", path.display()))?;
        let plan = read_plan(&text)?;
        validate_plan(&plan, model)?;
        save_plan(&plan)?;
        return write(apply_plan(model, &plan, &arch)?);
    }

    let rates = layer_rates(model, &a.select)?;
    let criterion = criterion_of(a.select.criterion.into(), a.select.k, seed)?;
    let gamma = a.gamma.unwrap_or_else(|| default_gamma(a.select.rate));
    let epochs = a.epochs.unwrap_or(30);
    if !(0.0..=1.0).contains(&gamma) {
        return Err(usage(format!("--gamma must lie in [0, 1], got {gamma}")));
    }
    if epochs == 0 {
        return Err(usage("--epochs must be >= 1"));
    }
    let cfg = train_config(&a.train)?;
    if !(a.zero_threshold > 0.0) {
        return Err(usage("--zero-threshold must be > 0"));
    }

    if gamma == 0.0 && epochs == 1 {
        let (slim, plan) = hard_prune(model, &rates, &criterion, &arch)?;
        if let Some(t) = &a.trace {
            let record = plfp_core::scheduler::EpochRecord {
                epoch: 0,
                loss: None,
                layers: plan
                    .layers
                    .iter()
                    .map(|lp| {
                        Ok(plfp_core::scheduler::LayerRecord {
                            layer: lp.layer,
                            selected: lp.selected.clone(),
                            // norms after the hard zeroing
                            norms: model
                                .filter_norms(lp.layer)?
                                .into_iter()
                                .enumerate()
                                .map(|(f, n)| if lp.selected.contains(&f) { 0.0 } else { n })
                                .collect(),
                            unconverged: 0,
                        })
                    })
                    .collect::<plfp_core::Result<_>>()?,
            };
            write_trace(&[record], fs::File::create(t)?)?;
        }
        save_plan(&plan)?;
        return write(slim);
    }

    let Some(data) = &a.data else {
        bail!("progressive pruning needs --data (use --gamma 0 --epochs 1 for one-shot pruning)");
    };
    let ds = read_dataset(data)?;
    let sampler = ds.sampler(cfg.loss, cfg.batch_size, seed)?;
    let schedule = DecaySchedule {
        gamma,
        epochs,
        reselect_every: 1,
        zero_threshold: a.zero_threshold,
        prune_rates: rates,
    };
    let result = progressive_prune(
        model,
        &schedule,
        &criterion,
        &sampler,
        &cfg.fine_tune()?,
        &arch,
    );
    let trace = match &result {
        Ok((_, t)) => &t.records,
        Err(abort) => &abort.trace.records,
    };
    if let Some(t) = &a.trace {
        write_trace(
            trace,
            fs::File::create(t).with_context(|| format!("writing trace {}", t.display()))?,
        )?;
    }
    let (slim, trace) = result?;
    save_plan(&trace.final_plan)?;
    write(slim)
}

fn train(a: TrainArgs, seed: u64) -> Result<()> {
    let ds = read_dataset(&a.data)?;
    let cfg = train_config(&a.train)?;
    let archive = match &a.archive {
        Some(p) => {
            let mut archive = read_archive(p)?;
            let sampler = ds.sampler(cfg.loss, cfg.batch_size, seed)?;
            fine_tune(&mut archive.model, &sampler, &cfg.fine_tune()?, a.epochs)?;
            archive
        }
        None => WeightArchive {
            model: harness::pretrain(&ds, &cfg, a.epochs, seed)?,
            input_height: ds.config.height,
            input_width: ds.config.width,
        },
    };
    println!("mAP {:.6}", ds.retrieval.map(&archive.model)?);
    write_archive(&a.out, &archive)
}

fn sweep(a: SweepArgs, seed: u64) -> Result<()> {
    let archive = read_archive(&a.archive)?;
    let ds = read_dataset(&a.data)?;
    let cfg = train_config(&a.train)?;
    let criterion = criterion_of(a.criterion.into(), a.k, seed)?;
    for &r in &a.rates {
        check_rate(r)?;
    }
    let prunable = archive.model.prunable_layers();
    let layers = if a.layers.is_empty() {
        prunable.clone()
    } else {
        a.layers.clone()
    };
    let sampler = ds.sampler(cfg.loss, cfg.batch_size, seed)?;
    let arch = arch_of(&archive)?;
    let mut out = String::new();
    for layer in layers {
        if !prunable.contains(&layer) {
            return Err(usage(format!("layer {layer} is not a prunable conv layer")));
        }
        let curve = sensitivity_sweep(
            &archive.model,
            layer,
            &a.rates,
            &criterion,
            &ds.retrieval,
            &sampler,
            &cfg.fine_tune()?,
            a.epochs,
            &arch,
        )?;
        for point in curve {
            out.push_str(&serde_json::to_string(&point)?);
            out.push('\n');
        }
    }
    match &a.out {
        Some(p) => fs::write(p, out).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(out.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct Evaluation {
    map: f64,
    rank1: f64,
    rank5: f64,
    rank10: f64,
    flops_reduction: f64,
    params_reduction: f64,
}

/// The full-width reference network when `model` has its layer kinds, else `model` itself.
fn default_reference(model: &Model64, h: usize, w: usize) -> Result<ArchSpec> {
    let full = harness::reference_layers(model.input_channels(), model.embedding_dim());
    let same_kinds = full.len() == model.layers().len()
        && full
            .iter()
            .zip(model.layers())
            .all(|(a, b)| std::mem::discriminant(a) == std::mem::discriminant(b));
    if same_kinds {
        Ok(ArchSpec::from_model(&Model64::new(full, 0)?, h, w)?)
    } else {
        Ok(ArchSpec::from_model(model, h, w)?)
    }
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let archive = read_archive(&a.archive)?;
    let ds = read_dataset(&a.data)?;
    let (h, w) = (archive.input_height, archive.input_width);
    let base = match &a.reference {
        Some(p) => arch_of(&read_archive(p)?)?,
        None => default_reference(&archive.model, h, w)?,
    };
    let red = reduction(&base, &arch_of(&archive)?);
    let eval = ds.retrieval.evaluate(&archive.model)?;
    let e = Evaluation {
        map: mean_average_precision(&eval)?,
        rank1: rank_at(&eval, 1)?,
        rank5: rank_at(&eval, 5)?,
        rank10: rank_at(&eval, 10)?,
        flops_reduction: red.flops_pct,
        params_reduction: red.params_pct,
    };
    match a.format {
        Format::Json => println!("{}", serde_json::to_string(&e)?),
        Format::Text => {
            println!("mAP       {:.2}", 100.0 * e.map);
            println!("Rank@1    {:.2}", 100.0 * e.rank1);
            println!("Rank@5    {:.2}", 100.0 * e.rank5);
            println!("Rank@10   {:.2}", 100.0 * e.rank10);
            println!("FLOPs↓    {:.2}%", e.flops_reduction);
            println!("Params↓   {:.2}%", e.params_reduction);
        }
    }
    Ok(())
}

fn parse_arm(spec: &str, k: usize, gamma: Option<f64>, seed: u64) -> Result<Arm> {
    let (c, m) = spec
        .split_once(':')
        .ok_or_else(|| usage(format!("arm `{spec}` must look like criterion:method")))?;
    let kind: CriterionKind = c.parse().map_err(|e| usage(format!("arm `{spec}`: {e}")))?;
    let method = match m {
        "progressive" => Method::Progressive { gamma },
        "oneshot" => Method::OneShot,
        _ => {
            return Err(usage(format!(
                "arm `{spec}`: method must be progressive or oneshot"
            )))
        }
    };
    Ok(Arm {
        criterion: criterion_of(kind, k, seed)?,
        method,
    })
}

fn arm_label(arm: &Arm) -> String {
    let method = match arm.method {
        Method::Progressive { .. } => "progressive",
        Method::OneShot => "oneshot",
    };
    match arm.criterion.k() {
        Some(k) => format!("{} (k={k}) {method}", arm.criterion.kind().cli_name()),
        None => format!("{} {method}", arm.criterion.kind().cli_name()),
    }
}

#[derive(Serialize)]
struct CompareRow<'a> {
    seed: u64,
    #[serde(flatten)]
    result: &'a ArmResult,
}

fn compare(a: CompareArgs, seed: u64) -> Result<()> {
    check_rate(a.rate)?;
    if a.arms.len() < 2 {
        return Err(usage("compare needs at least two --arm values"));
    }
    if a.seeds == 0 || a.epochs == 0 {
        return Err(usage("--seeds and --epochs must be >= 1"));
    }
    if let Some(g) = a.gamma {
        if !(0.0..=1.0).contains(&g) {
            return Err(usage(format!("--gamma must lie in [0, 1], got {g}")));
        }
    }
    let ds = read_dataset(&a.data)?;
    let cfg = train_config(&a.train)?;
    let start = match &a.archive {
        Some(p) => Some(read_archive(p)?.model),
        None => None,
    };
    let mut per_arm: Vec<Vec<(u64, ArmResult)>> = vec![Vec::new(); a.arms.len()];
    for s in seed..seed + a.seeds {
        let base = match &start {
            Some(m) => m.clone(),
            None => harness::pretrain(&ds, &cfg, a.pretrain_epochs, s)?,
        };
        for (i, spec) in a.arms.iter().enumerate() {
            let arm = parse_arm(spec, a.k, a.gamma, s)?;
            per_arm[i].push((
                s,
                harness::run_arm(&base, &ds, &arm, a.rate, a.epochs, &cfg, s)?,
            ));
        }
    }
    match a.format {
        Format::Json => {
            for rows in &per_arm {
                for (s, r) in rows {
                    println!(
                        "{}",
                        serde_json::to_string(&CompareRow {
                            seed: *s,
                            result: r
                        })?
                    );
                }
            }
        }
        Format::Text => {
            println!(
                "{:<28} {:>5} {:>7} {:>7} {:>7} {:>7} {:>8} {:>8} {:>8}",
                "method", "P", "mAP", "R@1", "R@5", "R@10", "FLOPs↓", "Params↓", "drift"
            );
            for rows in &per_arm {
                // the run with the median mAP over seeds
                let mut order: Vec<&(u64, ArmResult)> = rows.iter().collect();
                order.sort_by(|x, y| x.1.map.total_cmp(&y.1.map).then(x.0.cmp(&y.0)));
                let (_, r) = order[(order.len() - 1) / 2];
                println!(
                    "{:<28} {:>5.2} {:>7.2} {:>7.2} {:>7.2} {:>7.2} {:>7.2}% {:>7.2}% {:>8.4}",
                    arm_label(&r.arm),
                    r.rate,
                    100.0 * r.map,
                    100.0 * r.rank1,
                    100.0 * r.rank5,
                    100.0 * r.rank10,
                    r.flops_reduction,
                    r.params_reduction,
                    r.drift
                );
            }
        }
    }
    Ok(())
}
