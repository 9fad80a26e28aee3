use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use starcore::freeze::{frozen_scan, Agreement};
use starcore::greedy::greedy_solve;
use starcore::hypergraph::build_gamma;
use starcore::peel::{core_stats, peel_star_core};
use starcore::sampler::{derive_seed, sample_csp, sample_planted, sample_uniform_small};
use starcore::thresholds::{
    fixed_point_trace, lambda, rho_k, threshold_report_with_grid, ThresholdReport,
    DEFAULT_FIXED_POINT_MAX_ITER, DEFAULT_FIXED_POINT_TOL,
};
use starcore::{Error, Property};

use crate::config::{Density, ExperimentConfig};
use crate::summary::{Aggregate, Predicted, RunSummary, SCHEMA_VERSION};
use crate::CliError;

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j);
    }
    let pool = b.build().map_err(|e| CliError::Other(e.to_string()))?;
    Ok(pool.install(f))
}

fn predictions(cfg: &ExperimentConfig, ratios: &[f64]) -> Predicted {
    let m = &cfg.model;
    let mut p = Predicted::default();
    if m.properties()
        .require(&[Property::Feasible, Property::OneEssential])
        .is_ok()
    {
        p.xi = starcore::thresholds::xi(m).ok();
        p.lambda = ratios
            .iter()
            .filter_map(|&r| lambda(m, r).ok().map(|l| (r, l)))
            .collect();
        if let Some(x) = p.xi {
            p.rho_k = ratios
                .iter()
                .filter_map(|&r| rho_k(m.arity(), x * r).ok().map(|v| (x * r, v)))
                .collect();
        }
    }
    if m.properties().all() {
        if let Ok(rep) = threshold_report_with_grid(m, cfg.grid_steps()) {
            p.r_f = Some(rep.r_f);
            p.r_p = Some(rep.r_p);
        }
    }
    p
}

fn summary<R: Serialize>(
    command: &str,
    cfg: &ExperimentConfig,
    predicted: Predicted,
    aggregates: Vec<Aggregate>,
    records: Vec<R>,
    extra: serde_json::Value,
    started: Instant,
) -> RunSummary<R> {
    RunSummary {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        config: cfg.settings.clone(),
        predicted,
        aggregates,
        records,
        extra,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaRow {
    pub r: f64,
    pub lambda: f64,
}

pub fn thresholds(cfg: &ExperimentConfig) -> Result<RunSummary<ThresholdReport>, CliError> {
    let started = Instant::now();
    let rep = threshold_report_with_grid(&cfg.model, cfg.grid_steps())?;
    let rows: Vec<LambdaRow> = cfg
        .ratios()
        .into_iter()
        .map(|r| {
            Ok(LambdaRow {
                r,
                lambda: rep.lambda(r)?,
            })
        })
        .collect::<Result<_, Error>>()?;
    let mut out = io::stdout().lock();
    writeln!(out, "model\t{}", cfg.model.name())?;
    writeln!(out, "k\t{}", rep.k)?;
    writeln!(out, "alpha_k\t{}", rep.alpha_k)?;
    writeln!(out, "xi\t{}", rep.xi)?;
    writeln!(out, "omega_f\t{}", rep.omega_f)?;
    writeln!(out, "omega_p\t{}", rep.omega_p)?;
    writeln!(out, "r_f\t{}", rep.r_f)?;
    writeln!(out, "r_p\t{}", rep.r_p)?;
    writeln!(out, "r_p_theta\t{}", rep.r_p_theta)?;
    writeln!(out, "r_p_location\t{:?}", rep.r_p_location)?;
    writeln!(out, "r_p_lower_bound\t{}", rep.r_p_lower_bound)?;
    writeln!(out, "r_sat_reference\t{}", rep.r_sat_reference)?;
    writeln!(out, "r_f_below_r_p\t{}", rep.r_f < rep.r_p)?;
    for row in &rows {
        writeln!(out, "lambda(r={})\t{}", row.r, row.lambda)?;
    }
    if let Some(path) = cfg.settings.out.as_deref() {
        let mut w = csv::Writer::from_writer(File::create(path)?);
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    let predicted = Predicted {
        xi: Some(rep.xi),
        r_f: Some(rep.r_f),
        r_p: Some(rep.r_p),
        lambda: rows.iter().map(|r| (r.r, r.lambda)).collect(),
        rho_k: Vec::new(),
    };
    Ok(summary(
        "thresholds",
        cfg,
        predicted,
        Vec::new(),
        vec![rep],
        serde_json::Value::Null,
        started,
    ))
}

pub fn sample(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let n = cfg.n()?;
    let seed = derive_seed(cfg.seed()?, 0);
    let density = single_density(cfg)?;
    let count = density.count(n);
    let m = &cfg.model;
    let mut w = output(cfg.settings.out.as_deref())?;
    match cfg.settings.kind.as_deref().unwrap_or("planted") {
        "planted" => {
            let p = sample_planted(m, n, count, seed)?;
            p.instance.write_to(&mut w, m.name(), Some(&p.sigma))?;
        }
        "uniform" => {
            let d = sample_uniform_small(m, n, count, seed)?;
            d.instance.write_to(&mut w, m.name(), Some(&d.sigma))?;
        }
        "random" => {
            let f = sample_csp(m, n, count, seed)?;
            f.write_to(&mut w, m.name(), None)?;
        }
        other => return Err(CliError::Config(format!("unknown sampler kind {other:?}"))),
    }
    w.flush()?;
    Ok(())
}

fn single_density(cfg: &ExperimentConfig) -> Result<Density, CliError> {
    let d = cfg.densities()?;
    if d.len() != 1 {
        return Err(CliError::Config(
            "this command takes a single density".into(),
        ));
    }
    Ok(d[0])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoreRecord {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub r: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub essential_edges: usize,
    /// Essential edges per variable.
    pub alpha_hat: f64,
    pub core_vertices: usize,
    pub core_edges: usize,
    pub core_lplus: usize,
    pub h1_plus: usize,
    pub h1_minus: usize,
    pub rounds: usize,
    /// `ρ_k(alpha_hat)`: core fraction predicted from the realized density.
    pub rho_pred: f64,
    /// `λ(r) = ρ_k(ξ r)`: core fraction predicted from the model alone.
    pub lambda_pred: f64,
    pub branching_ratio: f64,
}

fn core_trial(
    cfg: &ExperimentConfig,
    n: usize,
    density: Density,
    lambda_pred: f64,
    trial: usize,
    seed: u64,
) -> Result<(CoreRecord, Vec<[f64; 4]>), Error> {
    let m = &cfg.model;
    let k = m.arity();
    let count = density.count(n);
    let p = sample_planted(m, n, count, seed)?;
    let g = build_gamma(&p.instance, &p.sigma, m)?;
    let (core, trace) = peel_star_core(&g);
    let s = core_stats(&core);
    let alpha_hat = g.edge_count() as f64 / n as f64;
    // X±/n and B±/n for rounds 0..=i_max; stable rounds repeat the last ones
    let per_round = (0..=cfg.i_max())
        .map(|i| {
            let st = trace.round_stats[i.min(trace.round_stats.len() - 1)];
            [st.x.plus, st.x.minus, st.b.plus, st.b.minus].map(|c| c as f64 / n as f64)
        })
        .collect();
    let record = CoreRecord {
        trial,
        seed,
        n,
        k,
        r: density.ratio(n),
        m: count,
        essential_edges: g.edge_count(),
        alpha_hat,
        core_vertices: s.vertices,
        core_edges: s.edges,
        core_lplus: s.vertices_plus,
        h1_plus: s.h1_plus,
        h1_minus: s.h1_minus,
        rounds: trace.rounds,
        rho_pred: rho_k(k, alpha_hat)?,
        lambda_pred,
        branching_ratio: s.branching_ratio,
    };
    Ok((record, per_round))
}

pub fn core_scan(cfg: &ExperimentConfig) -> Result<RunSummary<CoreRecord>, CliError> {
    let started = Instant::now();
    let n = cfg.n()?;
    let root = cfg.seed()?;
    let densities = cfg.densities()?;
    let trials = cfg.trials();
    cfg.model
        .properties()
        .require(&[Property::Feasible, Property::OneEssential])?;
    let lambdas: Vec<f64> = densities
        .iter()
        .map(|d| lambda(&cfg.model, d.ratio(n)))
        .collect::<Result<_, _>>()?;
    let xi = starcore::thresholds::xi(&cfg.model)?;
    let alphas: Vec<f64> = densities.iter().map(|d| xi * d.ratio(n)).collect();
    let jobs: Vec<(usize, usize)> = (0..densities.len())
        .flat_map(|i| (0..trials).map(move |t| (i, t)))
        .collect();
    let results: Vec<(CoreRecord, Vec<[f64; 4]>)> = run_pool(cfg.settings.jobs, || {
        jobs.par_iter()
            .map(|&(i, t)| {
                core_trial(
                    cfg,
                    n,
                    densities[i],
                    lambdas[i],
                    t,
                    derive_seed(root, t as u64),
                )
            })
            .collect::<Result<Vec<_>, Error>>()
    })??;
    let (records, rounds): (Vec<CoreRecord>, Vec<Vec<[f64; 4]>>) = results.into_iter().unzip();

    let mut w = csv::Writer::from_writer(output(cfg.settings.out.as_deref())?);
    for r in &records {
        w.serialize(r)?;
    }
    w.flush()?;

    let mut aggregates = Vec::new();
    let mut evolution = Vec::new();
    for (i, d) in densities.iter().enumerate() {
        let r = d.ratio(n);
        let block = &rounds[i * trials..(i + 1) * trials];
        let trace = fixed_point_trace(
            cfg.k(),
            alphas[i].max(f64::MIN_POSITIVE),
            DEFAULT_FIXED_POINT_TOL,
            DEFAULT_FIXED_POINT_MAX_ITER,
        )?;
        for round in 0..=cfg.i_max() {
            let j = round.min(trace.rho_sequence.len() - 1);
            let col = |c: usize| block.iter().map(|t| t[round][c]).collect::<Vec<f64>>();
            evolution.push(RoundEvolution {
                r,
                round,
                x_plus: Aggregate::of("x_plus", Some(r), &col(0)),
                x_minus: Aggregate::of("x_minus", Some(r), &col(1)),
                b_plus: Aggregate::of("b_plus", Some(r), &col(2)),
                b_minus: Aggregate::of("b_minus", Some(r), &col(3)),
                x_pred: 0.5 * trace.rho_sequence[j],
                b_pred: trace.half_single_fraction(j),
            });
        }
        let rows: Vec<&CoreRecord> = records.iter().skip(i * trials).take(trials).collect();
        let col = |f: &dyn Fn(&CoreRecord) -> f64| rows.iter().map(|x| f(x)).collect::<Vec<f64>>();
        aggregates.push(Aggregate::of(
            "core_fraction",
            Some(r),
            &col(&|x| x.core_vertices as f64 / x.n as f64),
        ));
        aggregates.push(Aggregate::of(
            "essential_fraction",
            Some(r),
            &col(&|x| {
                if x.m == 0 {
                    0.0
                } else {
                    x.essential_edges as f64 / x.m as f64
                }
            }),
        ));
        aggregates.push(Aggregate::of(
            "branching_ratio",
            Some(r),
            &col(&|x| x.branching_ratio),
        ));
        aggregates.push(Aggregate::of("rounds", Some(r), &col(&|x| x.rounds as f64)));
    }
    let ratios: Vec<f64> = densities.iter().map(|d| d.ratio(n)).collect();
    Ok(summary(
        "core-scan",
        cfg,
        predictions(cfg, &ratios),
        aggregates,
        records,
        serde_json::json!({ "round_evolution": evolution }),
        started,
    ))
}

/// Mean per-sign fractions after `round` rounds against density evolution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundEvolution {
    pub r: f64,
    pub round: usize,
    pub x_plus: Aggregate,
    pub x_minus: Aggregate,
    pub b_plus: Aggregate,
    pub b_minus: Aggregate,
    /// `½ρ_i`.
    pub x_pred: f64,
    /// `½λ_i e^{-λ_i}`.
    pub b_pred: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreezeRow {
    pub trial: usize,
    pub variable: u32,
    pub in_core: bool,
    pub star_depth: String,
    pub frozen: Vec<bool>,
    pub near_short_cycle: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FreezeExtra {
    pub agreement: Vec<Agreement>,
    /// Solution pairs whose core difference was not flippable.
    pub difference_violations: usize,
    /// Peeled variables with an acyclic chain neighbourhood that were found
    /// frozen.
    pub chain_violations: usize,
}

pub fn freeze_scan(cfg: &ExperimentConfig) -> Result<RunSummary<FreezeRow>, CliError> {
    let started = Instant::now();
    let n = cfg.n()?;
    let root = cfg.seed()?;
    let density = single_density(cfg)?;
    let ell = cfg.ell_list();
    let report = run_pool(cfg.settings.jobs, || {
        frozen_scan(&cfg.model, n, density.count(n), &ell, cfg.trials(), root)
    })??;

    let mut w = csv::Writer::from_writer(output(cfg.settings.out.as_deref())?);
    let mut header: Vec<String> = ["trial", "variable", "in_core", "star_depth"]
        .map(String::from)
        .to_vec();
    header.extend(ell.iter().map(|l| format!("frozen_at_ell_{l}")));
    header.push("near_short_cycle".into());
    w.write_record(&header)?;
    let bit = |b: bool| if b { "1" } else { "0" };
    let mut rows = Vec::new();
    let mut chain_violations = 0;
    for t in &report.trials {
        for r in &t.records {
            let mut rec = vec![
                r.trial.to_string(),
                r.variable.to_string(),
                bit(r.in_core).into(),
                r.star_depth.to_string(),
            ];
            rec.extend(r.frozen.iter().map(|&f| bit(f).to_string()));
            rec.push(bit(r.near_short_cycle).into());
            w.write_record(&rec)?;
            if !r.in_core && !r.near_short_cycle && r.frozen.iter().any(|&f| f) {
                chain_violations += 1;
            }
            rows.push(FreezeRow {
                trial: r.trial,
                variable: r.variable,
                in_core: r.in_core,
                star_depth: r.star_depth.to_string(),
                frozen: r.frozen.clone(),
                near_short_cycle: r.near_short_cycle,
            });
        }
    }
    w.flush()?;

    let mut aggregates = Vec::new();
    let r = density.ratio(n);
    aggregates.push(Aggregate::of(
        "core_fraction",
        Some(r),
        &report
            .trials
            .iter()
            .map(|t| t.core_vertices as f64 / n as f64)
            .collect::<Vec<_>>(),
    ));
    for (i, &l) in ell.iter().enumerate() {
        let per_trial: Vec<f64> = report
            .trials
            .iter()
            .map(|t| t.records.iter().filter(|x| x.frozen[i]).count() as f64 / n as f64)
            .collect();
        aggregates.push(Aggregate::of(
            &format!("frozen_fraction_ell_{l}"),
            Some(r),
            &per_trial,
        ));
    }
    let extra = FreezeExtra {
        agreement: report.agreement.clone(),
        difference_violations: report.difference_violations,
        chain_violations,
    };
    let s = summary(
        "freeze-scan",
        cfg,
        predictions(cfg, &[r]),
        aggregates,
        rows,
        serde_json::to_value(&extra)?,
        started,
    );
    for a in &extra.agreement {
        eprintln!(
            "ell={}: core frozen {} / unfrozen {}; non-core frozen {} (near cycle {}) / unfrozen {}; agreement {:.4}",
            a.ell,
            a.core_frozen,
            a.core_unfrozen,
            a.noncore_frozen,
            a.noncore_frozen_near_cycle,
            a.noncore_unfrozen,
            a.agreement_rate()
        );
    }
    if extra.difference_violations > 0 || chain_violations > 0 {
        s.write(cfg.settings.json.as_deref())?;
        return Err(Error::Assertion(format!(
            "{} non-flippable core differences, {} frozen variables with acyclic chains",
            extra.difference_violations, chain_violations
        ))
        .into());
    }
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreedyRecord {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub r: f64,
    pub target: usize,
    pub placed: usize,
    pub success: bool,
    pub repairs: usize,
    pub flipped_variables: usize,
    pub max_repair_size: usize,
    pub density_reached: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GreedyExtra {
    /// Heuristic with no success guarantee.
    pub heuristic: bool,
    /// Informational: whether the success rate never rises with `r`.
    pub success_rate_nonincreasing: bool,
}

pub fn greedy(cfg: &ExperimentConfig) -> Result<RunSummary<GreedyRecord>, CliError> {
    let started = Instant::now();
    let n = cfg.n()?;
    let root = cfg.seed()?;
    let densities = cfg.densities()?;
    let trials = cfg.trials();
    let budget = cfg.budget();
    let jobs: Vec<(usize, usize)> = (0..densities.len())
        .flat_map(|i| (0..trials).map(move |t| (i, t)))
        .collect();
    let records: Vec<GreedyRecord> = run_pool(cfg.settings.jobs, || {
        jobs.par_iter()
            .map(|&(i, t)| {
                let seed = derive_seed(root, t as u64);
                let d = densities[i];
                let run = greedy_solve(&cfg.model, n, d.count(n), seed, budget)?;
                Ok(GreedyRecord {
                    trial: t,
                    seed,
                    n,
                    r: d.ratio(n),
                    target: run.target,
                    placed: run.placed,
                    success: run.success,
                    repairs: run.repairs,
                    flipped_variables: run.flipped_variables,
                    max_repair_size: run.max_repair_size,
                    density_reached: run.density_reached(),
                })
            })
            .collect::<Result<Vec<_>, Error>>()
    })??;

    let mut w = csv::Writer::from_writer(output(cfg.settings.out.as_deref())?);
    for r in &records {
        w.serialize(r)?;
    }
    w.flush()?;

    let mut aggregates = Vec::new();
    let mut rates = Vec::new();
    for (i, d) in densities.iter().enumerate() {
        let r = d.ratio(n);
        let rows: Vec<&GreedyRecord> = records.iter().skip(i * trials).take(trials).collect();
        let success: Vec<f64> = rows.iter().map(|x| x.success as u8 as f64).collect();
        let reached: Vec<f64> = rows.iter().map(|x| x.density_reached).collect();
        let a = Aggregate::of("success_rate", Some(r), &success);
        rates.push((r, a.mean));
        aggregates.push(a);
        aggregates.push(Aggregate::of("density_reached", Some(r), &reached));
    }
    rates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let extra = GreedyExtra {
        heuristic: true,
        success_rate_nonincreasing: rates.windows(2).all(|w| w[1].1 <= w[0].1),
    };
    let ratios: Vec<f64> = densities.iter().map(|d| d.ratio(n)).collect();
    Ok(summary(
        "greedy-solve",
        cfg,
        predictions(cfg, &ratios),
        aggregates,
        records,
        serde_json::to_value(&extra)?,
        started,
    ))
}
