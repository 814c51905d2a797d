use metacost::cost::{rate_curve, CostOptions};
use metacost::data::{load_dataset, synth_dataset, write_dataset, DatasetSpec, SynthTarget};
use metacost::deep::{enumerate_feature_sets, feature_sweep, FeatureSpace, SweepBudget};
use metacost::metrics::{mean_cmc, WaveformSet};
use metacost::models::{ChannelSpace, MeeModel, ModelParamSet, ModelRegistry, ParamRange};
use metacost::quasiopt::{format_table, improvement_summary, loo_quasi_opt, score_params, Score, TableRow};
use metacost::sensitivity::{mc_costs, run_mc, sobol_samples, McConfig, Reference, SamplingPlan};
use metacost::{Dataset, GaitTrial};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{ensure_dir, num, strings, write_csv, write_json, write_raw_csv};

/// Bins per axis of the two-parameter RMSE grid.
const HEATMAP_BINS: usize = 50;

fn load(cfg: &RunConfig) -> Result<Dataset, CliError> {
    Ok(load_dataset(cfg.dataset_path()?)?)
}

fn selected<'r>(cfg: &RunConfig, registry: &'r ModelRegistry) -> Result<Vec<&'r dyn MeeModel>, CliError> {
    match &cfg.model {
        Some(name) => Ok(vec![registry.get(name)?]),
        None => Ok(registry.iter().collect()),
    }
}

fn cost_options(cfg: &RunConfig) -> CostOptions {
    CostOptions { clamp_nonneg: cfg.clamp_nonneg }
}

/// Default ranges with the configured overrides applied by parameter name.
fn ranges_for(cfg: &RunConfig, model: &dyn MeeModel) -> Vec<ParamRange> {
    let mut r = model.default_ranges();
    for (i, name) in model.param_names().iter().enumerate() {
        if let Some(o) = cfg.ranges.get(*name) {
            r[i] = *o;
        }
    }
    r
}

fn check_range_names(cfg: &RunConfig, models: &[&dyn MeeModel]) -> Result<(), CliError> {
    for name in cfg.ranges.keys() {
        if !models.iter().any(|m| m.param_names().contains(&name.as_str())) {
            return Err(CliError::Config(format!("range override for unknown parameter {name:?}")));
        }
    }
    Ok(())
}

fn plan(cfg: &RunConfig) -> SamplingPlan {
    SamplingPlan { n_samples: cfg.samples, skip: cfg.skip, seed: cfg.seed }
}

fn channel_names(model: &dyn MeeModel, trial: &GaitTrial) -> Vec<String> {
    match model.space() {
        ChannelSpace::Muscle => trial.muscles.iter().map(|m| m.name.clone()).collect(),
        ChannelSpace::Joint => trial.joints.iter().map(|j| j.name.clone()).collect(),
    }
}

/// Mean CMC between the muscle-space models' per-muscle rate curves, one
/// waveform set per (trial, muscle). `None` with fewer than two such models.
fn cross_model_cmc(ds: &Dataset, models: &[(&dyn MeeModel, Vec<f64>)]) -> Result<Option<CmcReport>, CliError> {
    let muscle: Vec<_> = models.iter().filter(|(m, _)| m.space() == ChannelSpace::Muscle).collect();
    if muscle.len() < 2 {
        return Ok(None);
    }
    let mut sets = Vec::new();
    let mut clamped = 0;
    for t in &ds.trials {
        let curves = muscle
            .iter()
            .map(|(m, p)| rate_curve(*m, t, p))
            .collect::<Result<Vec<_>, _>>()?;
        for c in 0..t.muscles.len() {
            let rows: Vec<&[f64]> = curves.iter().map(|cv| cv.channel(c)).collect();
            let ws = WaveformSet::new(&rows)?;
            if metacost::metrics::cmc(&ws)?.clamped {
                clamped += 1;
            }
            sets.push(ws);
        }
    }
    Ok(Some(CmcReport {
        models: muscle.iter().map(|(m, _)| m.name().to_string()).collect(),
        mean: mean_cmc(&sets),
        waveform_sets: sets.len(),
        clamped,
    }))
}

#[derive(Debug, Serialize)]
struct CmcReport {
    models: Vec<String>,
    /// `None` when every set was degenerate.
    mean: Option<f64>,
    waveform_sets: usize,
    /// Sets whose CMC radicand was negative and clamped to zero.
    clamped: usize,
}

pub fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = load(cfg)?;
    println!(
        "ok: {} trials, {} subjects, grid {}",
        ds.trials.len(),
        ds.subjects().len(),
        ds.trials.first().map_or(0, |t| t.grid)
    );
    Ok(())
}

#[derive(Serialize)]
struct TrialCost<'a> {
    trial: &'a str,
    subject: &'a str,
    calculated: f64,
    measured: f64,
}

#[derive(Serialize)]
struct ModelEvaluation<'a> {
    params: ModelParamSet,
    score: Score,
    trials: Vec<TrialCost<'a>>,
}

#[derive(Serialize)]
struct EvaluateResult<'a> {
    models: Vec<ModelEvaluation<'a>>,
    cmc: Option<CmcReport>,
}

pub fn evaluate(cfg: &RunConfig, curves: bool) -> Result<(), CliError> {
    let ds = load(cfg)?;
    let registry = ModelRegistry::builtin();
    let models = selected(cfg, &registry)?;
    if cfg.params.is_some() && models.len() != 1 {
        return Err(CliError::Config("params require a single --model".into()));
    }
    ensure_dir(&cfg.out)?;
    let opts = cost_options(cfg);
    let mut evals = Vec::new();
    let mut table = Vec::new();
    let mut cost_rows = Vec::new();
    let mut used = Vec::new();
    for &model in &models {
        let values = cfg.params.clone().unwrap_or_else(|| model.original_params().to_vec());
        if values.len() != model.arity() {
            return Err(CliError::Config(format!("{} takes {} parameters, got {}", model.name(), model.arity(), values.len())));
        }
        let (pc, score) = score_params(model, &ds, &values, &opts)?;
        let trials: Vec<TrialCost> = ds
            .trials
            .iter()
            .zip(&pc.calculated)
            .map(|(t, &c)| TrialCost { trial: &t.id, subject: &t.subject.id, calculated: c, measured: t.measured_cost })
            .collect();
        for tc in &trials {
            cost_rows.push(vec![model.name().into(), tc.trial.into(), tc.subject.into(), num(tc.calculated), num(tc.measured)]);
        }
        if curves {
            write_curves(cfg, model, &ds, &values)?;
        }
        table.push(TableRow { model: model.name().into(), original: Some(score), quasi: None });
        evals.push(ModelEvaluation { params: ModelParamSet::with_values(model, values.clone()), score, trials });
        used.push((model, values));
    }
    let cmc = cross_model_cmc(&ds, &used)?;
    print!("{}", format_table(&table));
    if let Some(c) = cmc.as_ref().and_then(|c| c.mean) {
        println!("mean CMC across muscle models: {c:.3}");
    }
    write_csv(cfg, "evaluate_costs.csv", &strings(["model", "trial", "subject", "calculated", "measured"]), &cost_rows)?;
    write_json(cfg, "evaluate.json", &EvaluateResult { models: evals, cmc })?;
    Ok(())
}

/// Long-format per-channel rate curves in W/kg against gait-cycle percent.
fn write_curves(cfg: &RunConfig, model: &dyn MeeModel, ds: &Dataset, params: &[f64]) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for t in &ds.trials {
        let curve = rate_curve(model, t, params)?;
        let names = channel_names(model, t);
        for (c, name) in names.iter().enumerate().take(curve.channels) {
            for (k, r) in curve.channel(c).iter().enumerate() {
                let pct = 100.0 * k as f64 / t.grid as f64;
                rows.push(vec![t.id.clone(), t.subject.id.clone(), name.clone(), num(pct), num(r / t.subject.mass)]);
            }
        }
    }
    let header = strings(["trial", "subject", "channel", "cycle_pct", "rate_w_per_kg"]);
    write_csv(cfg, &format!("curves_{}.csv", model.name()), &header, &rows)?;
    Ok(())
}

pub fn sense(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = load(cfg)?;
    let registry = ModelRegistry::builtin();
    let models = selected(cfg, &registry)?;
    check_range_names(cfg, &models)?;
    ensure_dir(&cfg.out)?;
    for model in models {
        let mc = McConfig {
            plan: plan(cfg),
            ranges: ranges_for(cfg, model),
            behavioural: cfg.behavioural,
            reference: if cfg.behavioural_vs_rest { Reference::Rest } else { Reference::All },
            cost: cost_options(cfg),
            jobs: cfg.jobs,
        };
        let run = run_mc(model, &ds, &mc)?;
        let summary = run.summary();
        println!("{}: {} samples, {} invalid, best RMSE {:.4}", model.name(), summary.n_samples, summary.invalid_samples, run.rmse[run.behavioural[0]]);
        for idx in &summary.indices {
            println!("  {:<10} KS {:.4}  p {:.3e}", idx.name, idx.statistic, idx.p_value);
        }
        println!("  ranking: {}", summary.ranking.join(" > "));
        println!("  best: {}", ModelParamSet::with_values(model, run.best().to_vec()));

        let mut header = strings(["rank", "sample", "rmse"]);
        header.extend(summary.param_names.iter().cloned());
        let best_rows: Vec<Vec<String>> = summary
            .best
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let mut r = vec![(i + 1).to_string(), b.sample.to_string(), num(b.rmse)];
                r.extend(b.values.iter().map(|v| num(*v)));
                r
            })
            .collect();
        write_csv(cfg, &format!("sense_{}_best.csv", model.name()), &header, &best_rows)?;
        if model.arity() == 2 {
            write_heatmaps(cfg, model.name(), &summary.param_names, &run.samples.rows, &run.rmse, &mc.ranges)?;
        }
        write_json(cfg, &format!("sense_{}.json", model.name()), &summary)?;
    }
    Ok(())
}

/// Scatter of every sample and a min-RMSE grid over the two parameters.
fn write_heatmaps(
    cfg: &RunConfig,
    model: &str,
    names: &[String],
    rows: &[Vec<f64>],
    rmse: &[f64],
    ranges: &[ParamRange],
) -> Result<(), CliError> {
    let header = strings(["sample", names[0].as_str(), names[1].as_str(), "rmse"]);
    let scatter: Vec<Vec<String>> = rows
        .iter()
        .zip(rmse)
        .enumerate()
        .map(|(i, (p, r))| vec![i.to_string(), num(p[0]), num(p[1]), num(*r)])
        .collect();
    write_csv(cfg, &format!("heatmap_{model}.csv"), &header, &scatter)?;

    let n = HEATMAP_BINS;
    let bin = |v: f64, r: &ParamRange| (((v - r.lo) / (r.hi - r.lo) * n as f64).floor() as usize).min(n - 1);
    let mut best = vec![f64::INFINITY; n * n];
    let mut count = vec![0usize; n * n];
    for (p, &r) in rows.iter().zip(rmse) {
        let cell = bin(p[0], &ranges[0]) * n + bin(p[1], &ranges[1]);
        count[cell] += 1;
        best[cell] = best[cell].min(r);
    }
    let centre = |i: usize, r: &ParamRange| r.lo + (i as f64 + 0.5) * (r.hi - r.lo) / n as f64;
    let mut grid = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let c = i * n + j;
            grid.push(vec![num(centre(i, &ranges[0])), num(centre(j, &ranges[1])), num(best[c]), count[c].to_string()]);
        }
    }
    let header = strings([names[0].as_str(), names[1].as_str(), "min_rmse", "count"]);
    write_csv(cfg, &format!("heatmap_{model}_grid.csv"), &header, &grid)?;
    Ok(())
}

#[derive(Serialize)]
struct QuasiOptResult {
    reports: Vec<metacost::quasiopt::LooReport>,
    table: Vec<TableRow>,
    improvement: metacost::quasiopt::Improvement,
    /// Quasi-optimal parameters fitted on every trial.
    all_trial_best: Vec<ModelParamSet>,
    cmc_original: Option<CmcReport>,
    cmc_quasi: Option<CmcReport>,
}

pub fn quasiopt(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = load(cfg)?;
    let registry = ModelRegistry::builtin();
    let models = selected(cfg, &registry)?;
    check_range_names(cfg, &models)?;
    ensure_dir(&cfg.out)?;
    let opts = cost_options(cfg);
    let measured = ds.measured_costs();
    let (mut reports, mut table, mut best_sets) = (Vec::new(), Vec::new(), Vec::new());
    let (mut originals, mut quasis) = (Vec::new(), Vec::new());
    for &model in &models {
        let samples = sobol_samples(model, &ranges_for(cfg, model), &plan(cfg))?;
        let costs = mc_costs(model, &ds, &samples, &opts, cfg.jobs)?;
        let report = loo_quasi_opt(model, &ds, &samples, &costs, cfg.jobs)?;
        let (_, original) = score_params(model, &ds, model.original_params(), &opts)?;
        let all = costs.rmse(&measured, None);
        let best = (0..all.len())
            .filter(|&i| all[i].is_finite())
            .min_by(|&a, &b| all[a].total_cmp(&all[b]))
            .ok_or_else(|| CliError::Numerical(format!("{}: no sample with finite RMSE", model.name())))?;
        originals.push((model.name().to_string(), original.rmse));
        quasis.push((model.name().to_string(), report.score.rmse));
        table.push(TableRow { model: model.name().into(), original: Some(original), quasi: Some(report.score) });
        best_sets.push(ModelParamSet::with_values(model, samples.rows[best].clone()));
        reports.push(report);
    }
    let improvement = improvement_summary(&originals, &quasis);
    let text = format_table(&table);
    print!("{text}");
    if improvement.per_model.is_empty() {
        println!("mean RMSE reduction undefined (original RMSE is zero)");
    } else {
        println!("mean RMSE reduction {:.1} % (sd {:.1})", improvement.mean, improvement.sd);
    }

    let with_original: Vec<(&dyn MeeModel, Vec<f64>)> = models.iter().map(|m| (*m, m.original_params().to_vec())).collect();
    let with_quasi: Vec<(&dyn MeeModel, Vec<f64>)> = models.iter().zip(&best_sets).map(|(m, b)| (*m, b.values.clone())).collect();
    let cmc_original = cross_model_cmc(&ds, &with_original)?;
    let cmc_quasi = cross_model_cmc(&ds, &with_quasi)?;

    let header = strings(["model", "held_out", "sample", "train_rmse", "test_rmse", "params"]);
    let folds: Vec<Vec<String>> = reports
        .iter()
        .flat_map(|r| {
            r.folds.iter().map(|f| {
                let params = f.params.values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";");
                vec![r.model.clone(), f.held_out.clone(), f.sample.to_string(), num(f.train_rmse), num(f.test_rmse), params]
            })
        })
        .collect();
    write_csv(cfg, "quasiopt_folds.csv", &header, &folds)?;
    write_raw_csv(cfg, "quasiopt_table.txt", text.as_bytes())?;
    write_json(
        cfg,
        "quasiopt.json",
        &QuasiOptResult { reports, table, improvement, all_trial_best: best_sets, cmc_original, cmc_quasi },
    )?;
    Ok(())
}

fn budget(cfg: &RunConfig) -> Result<SweepBudget, CliError> {
    let mut b = match cfg.budget.as_str() {
        "full" => SweepBudget::default(),
        "desk" => SweepBudget::desk(),
        other => return Err(CliError::Config(format!("unknown budget {other:?} (full|desk)"))),
    };
    b.seed = cfg.seed;
    if let Some(d) = cfg.draws {
        b.draws = d;
    }
    if let Some(e) = cfg.epochs {
        b.base.max_epochs = e;
    }
    Ok(b)
}

#[derive(Serialize)]
struct SweepResult<'a> {
    budget: &'a SweepBudget,
    report: &'a metacost::deep::SweepReport,
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let ds = load(cfg)?;
    let space: FeatureSpace = cfg.space.parse().map_err(CliError::Config)?;
    let budget = budget(cfg)?;
    ensure_dir(&cfg.out)?;
    let sets = enumerate_feature_sets(space);
    let report = feature_sweep(&ds, &sets, &budget, cfg.jobs)?;
    let tag = cfg.space.to_ascii_lowercase();
    for r in report.rows.iter().take(10) {
        println!("{:>8.4}  {}", r.rmse, r.features);
    }

    let mut body = Vec::new();
    report.write_csv(&mut body).map_err(|e| CliError::Io(e.to_string()))?;
    write_raw_csv(cfg, &format!("sweep_{tag}.csv"), &body)?;

    let names = space.feature_names();
    let mut header = vec!["feature".to_string()];
    header.extend(names.iter().map(|s| s.to_string()));
    let rows: Vec<Vec<String>> = report
        .pair_heatmap()
        .iter()
        .zip(names)
        .map(|(row, name)| {
            let mut r = vec![name.to_string()];
            r.extend(row.iter().map(|c| c.map_or(String::new(), num)));
            r
        })
        .collect();
    write_csv(cfg, &format!("sweep_{tag}_pairs.csv"), &header, &rows)?;
    write_json(cfg, &format!("sweep_{tag}.json"), &SweepResult { budget: &budget, report: &report })?;
    Ok(())
}

fn parse_target(cfg: &RunConfig, registry: &ModelRegistry) -> Result<SynthTarget, CliError> {
    let (kind, arg) = match cfg.target.split_once(':') {
        Some((k, a)) => (k.trim(), Some(a.trim())),
        None => (cfg.target.trim(), None),
    };
    let number = |what: &str, default: f64| -> Result<f64, CliError> {
        arg.map_or(Ok(default), |a| a.parse().map_err(|_| CliError::Config(format!("invalid {what} {a:?}"))))
    };
    match kind.to_ascii_lowercase().as_str() {
        "activation-velocity" => Ok(SynthTarget::ActivationVelocity { gain: number("gain", 30.0)? }),
        "constant" => Ok(SynthTarget::ConstantRate { watts: number("rate", 300.0)? }),
        _ => {
            let model = registry.get(kind)?;
            let params = cfg.params.clone().unwrap_or_else(|| model.original_params().to_vec());
            Ok(SynthTarget::Model { model: model.name().into(), params })
        }
    }
}

#[derive(Serialize)]
struct SynthInfo {
    trials: usize,
    subjects: usize,
    target: String,
}

pub fn synth(cfg: &RunConfig) -> Result<(), CliError> {
    let registry = ModelRegistry::builtin();
    let target = parse_target(cfg, &registry)?;
    let mut spec = match cfg.preset.as_str() {
        "full" => DatasetSpec::full(target.clone()),
        "small" => DatasetSpec { target: target.clone(), ..DatasetSpec::small(4, 4) },
        "learnable" => DatasetSpec { target: target.clone(), ..DatasetSpec::learnable(30.0) },
        other => return Err(CliError::Config(format!("unknown preset {other:?} (full|small|learnable)"))),
    };
    if let Some(n) = cfg.subjects {
        spec.subjects = n;
    }
    let ds = synth_dataset(&spec, cfg.seed)?;
    write_dataset(&ds, &cfg.out)?;
    write_json(
        cfg,
        "generator.json",
        &SynthInfo { trials: ds.trials.len(), subjects: ds.subjects().len(), target: format!("{target:?}") },
    )?;
    println!("wrote {} trials of {} subjects to {}", ds.trials.len(), ds.subjects().len(), cfg.out.display());
    Ok(())
}
