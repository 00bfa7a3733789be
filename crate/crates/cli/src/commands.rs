//! The `fit`, `benchmark` and `truncation` commands.

use std::path::Path;

use pyics_core::diagnostics::{density_summary, ess, DensitySummary, Grid};
use pyics_core::gmddp::{run_gmddp, GmddpConfig, GmddpParams, GroupedData};
use pyics_core::pyprocess::PyParams;
use pyics_core::rng::{derive_seed, RngStream};
use pyics_core::samplers::{run_chain, Algorithm, ChainConfig, ChainTrace, WallClock};
use pyics_core::truncation::{exceedance_table, MnDraw, TruncationReport};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Command, Method, RunConfig};
use crate::error::{usage, CliError, CliResult};
use crate::output::{
    density_columns, gmddp_trace_columns, schema, strings, to_file, write_benchmark, write_density,
    write_gmddp_trace, write_json, write_timing, write_trace, BenchmarkRow, BENCHMARK_COLUMNS,
    DRAW_COLUMNS, EXCEEDANCE_COLUMNS, TIMING_COLUMNS, TRACE_COLUMNS,
};
use crate::prepare::{base_measure, grid_for, load_data, Loaded, Scaled};

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))
}

fn header(command: Command, config: &RunConfig) -> serde_json::Map<String, Value> {
    let mut map = serde_json::Map::new();
    map.insert("tool".into(), json!("pyics"));
    map.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    map.insert("core_version".into(), json!(pyics_core::VERSION));
    map.insert("command".into(), json!(command.name()));
    map.insert("seed".into(), json!(config.seed));
    map.insert("config".into(), config.to_json());
    map
}

fn ess_or_none(trace: &[f64]) -> Option<f64> {
    ess(trace).ok()
}

/// Fits one chain and writes `density.csv`, `trace.csv`, `timing.csv` and
/// `metadata.json` to the output directory.
pub fn cmd_fit(config: &RunConfig) -> CliResult<()> {
    config.validate(Command::Fit)?;
    let loaded = load_data(config, config.n[0], config.seed)?;
    let scaled = Scaled::new(&loaded.data, config.standardize)?;
    let base = base_measure(config, loaded.data.dim())?;
    let grid = grid_for(config, &loaded.data)?;
    create_dir(&config.output)?;
    let mut meta = header(Command::Fit, config);
    meta.insert(
        "data".into(),
        json!({
            "source": loaded.source,
            "n": loaded.data.len(),
            "dim": loaded.data.dim(),
            "groups": loaded.groups.as_ref().map(|g| distinct(g)),
            "standardization": scaled.to_json(),
        }),
    );
    meta.insert(
        "grid".into(),
        json!({ "dim": grid.dim(), "points": grid.len() }),
    );
    meta.insert("deviance_mode".into(), json!(config.deviance.name()));
    match config.algorithm[0] {
        Method::Exchangeable(algorithm) => {
            fit_exchangeable(config, algorithm, &scaled, base, &grid, &mut meta)?
        }
        Method::Gmddp => fit_gmddp(config, &loaded, &scaled, base, &grid, &mut meta)?,
    }
    write_json(&config.output, "metadata.json", &Value::Object(meta))
}

fn distinct(labels: &[i64]) -> Vec<i64> {
    let mut d = labels.to_vec();
    d.sort_unstable();
    d.dedup();
    d
}

fn summarize(
    grid: &Grid,
    realizations: &[Vec<f64>],
    config: &RunConfig,
    jacobian: f64,
) -> CliResult<DensitySummary> {
    Ok(density_summary(grid, realizations, config.band_level)?.scaled(jacobian))
}

fn fit_exchangeable(
    config: &RunConfig,
    algorithm: Algorithm,
    scaled: &Scaled,
    base: pyics_core::model::BaseMeasure,
    grid: &Grid,
    meta: &mut serde_json::Map<String, Value>,
) -> CliResult<()> {
    let mut chain = ChainConfig::new(
        algorithm,
        PyParams::new(config.sigma[0], config.theta[0])?,
        base,
    );
    chain.m = config.m;
    chain.iterations = config.iterations;
    chain.burnin = config.burnin;
    chain.seed = config.seed;
    chain.jump_cap = config.jump_cap;
    chain.deviance_mode = config.deviance;
    chain.eval_points = Some(scaled.eval_points(grid));
    let trace = run_chain(&chain, &scaled.data, &mut WallClock::default())?;
    let summary = summarize(grid, &trace.densities, config, scaled.jacobian())?;
    let dir = &config.output;
    to_file(dir, "density.csv", |w| {
        write_density(w, &[(None, &summary)])
    })?;
    to_file(dir, "trace.csv", |w| write_trace(w, &trace, config.burnin))?;
    to_file(dir, "timing.csv", |w| {
        write_timing(w, &trace.seconds, config.burnin)
    })?;
    let mass = grid.integrate(&summary.mean)?;
    meta.insert("density_mass".into(), json!(mass));
    meta.insert("cap_hits".into(), json!(trace.total_cap_hits));
    meta.insert("cap_hit_frequency".into(), json!(trace.cap_hit_frequency()));
    meta.insert(
        "ess".into(),
        json!({ "k_n": ess_or_none(&trace.k_n_trace()), "deviance": ess_or_none(&trace.deviance) }),
    );
    meta.insert("seconds".into(), json!(trace.total_seconds));
    meta.insert("acceptance_rates".into(), Value::Null);
    meta.insert(
        "schema".into(),
        schema(&[
            ("density.csv", strings(&density_columns(grid.dim(), false))),
            ("trace.csv", strings(TRACE_COLUMNS)),
            ("timing.csv", strings(TIMING_COLUMNS)),
        ]),
    );
    Ok(())
}

fn fit_gmddp(
    config: &RunConfig,
    loaded: &Loaded,
    scaled: &Scaled,
    base: pyics_core::model::BaseMeasure,
    grid: &Grid,
    meta: &mut serde_json::Map<String, Value>,
) -> CliResult<()> {
    let labels = loaded
        .groups
        .as_ref()
        .ok_or_else(|| CliError::Data("gmddp-ics needs group labels".into()))?;
    let (data, distinct) = GroupedData::from_labels(scaled.data.clone(), labels)?;
    let params = GmddpParams::new(config.theta[0], config.z, data.n_groups())?;
    let mut chain = GmddpConfig::new(params, base);
    chain.m = config.m;
    chain.iterations = config.iterations;
    chain.burnin = config.burnin;
    chain.seed = config.seed;
    chain.deviance_mode = config.deviance;
    chain.eval_points = Some(scaled.eval_points(grid));
    let trace = run_gmddp(&chain, &data, &mut WallClock::default())?;
    let summaries = (0..data.n_groups())
        .map(|l| {
            summarize(
                grid,
                &trace.group_realizations(l),
                config,
                scaled.jacobian(),
            )
        })
        .collect::<CliResult<Vec<_>>>()?;
    let blocks: Vec<(Option<i64>, &DensitySummary)> = distinct
        .iter()
        .map(|&g| Some(g))
        .zip(summaries.iter())
        .collect();
    let dir = &config.output;
    to_file(dir, "density.csv", |w| write_density(w, &blocks))?;
    to_file(dir, "trace.csv", |w| {
        write_gmddp_trace(w, &trace, config.burnin, &distinct)
    })?;
    to_file(dir, "timing.csv", |w| {
        write_timing(w, &trace.seconds, config.burnin)
    })?;
    let masses = summaries
        .iter()
        .map(|s| grid.integrate(&s.mean))
        .collect::<Result<Vec<_>, _>>()?;
    meta.insert("density_mass".into(), json!(masses));
    meta.insert("cap_hits".into(), json!(0));
    meta.insert("cap_hit_frequency".into(), json!(0.0));
    let k: Vec<f64> = trace.k_n.iter().map(|&k| k as f64).collect();
    meta.insert(
        "ess".into(),
        json!({ "k_n": ess_or_none(&k), "deviance": ess_or_none(&trace.deviance) }),
    );
    meta.insert("seconds".into(), json!(trace.total_seconds));
    meta.insert("acceptance_rates".into(), json!(trace.acceptance));
    meta.insert(
        "schema".into(),
        schema(&[
            ("density.csv", strings(&density_columns(grid.dim(), true))),
            ("trace.csv", gmddp_trace_columns(&distinct)),
            ("timing.csv", strings(TIMING_COLUMNS)),
        ]),
    );
    Ok(())
}

struct Task {
    algorithm: Algorithm,
    sigma: f64,
    theta: f64,
    n: usize,
    replicate: usize,
}

/// Runs every (algorithm, sigma, theta, n, replicate) chain on the worker
/// pool and returns one row per chain followed by one averaged row per
/// setting. Replicate `r` uses data and chain seeds derived from
/// `(seed, r)`, shared across algorithms.
pub fn benchmark_rows(config: &RunConfig) -> CliResult<Vec<BenchmarkRow>> {
    config.validate(Command::Benchmark)?;
    let algorithms: Vec<Algorithm> = config
        .algorithm
        .iter()
        .map(|m| match m {
            Method::Exchangeable(a) => Ok(*a),
            Method::Gmddp => Err(usage("benchmark covers the exchangeable samplers only")),
        })
        .collect::<CliResult<_>>()?;
    let mut config = config.clone();
    if config.input.is_none() && config.synthetic.is_none() {
        config.synthetic = Some(crate::config::Synthetic::TwoGaussian);
    }
    let ns: Vec<usize> = if config.input.is_some() {
        vec![0]
    } else {
        config.n.clone()
    };
    let mut tasks = Vec::new();
    for &algorithm in &algorithms {
        for &sigma in &config.sigma {
            for &theta in &config.theta {
                for &n in &ns {
                    for replicate in 0..config.replicates {
                        tasks.push(Task {
                            algorithm,
                            sigma,
                            theta,
                            n,
                            replicate,
                        });
                    }
                }
            }
        }
    }
    let results: Vec<CliResult<BenchmarkRow>> = tasks
        .par_iter()
        .map(|t| benchmark_one(&config, t))
        .collect();
    let rows = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    let mut out = rows.clone();
    for block in rows.chunks(config.replicates) {
        out.push(average(block));
    }
    Ok(out)
}

fn benchmark_one(config: &RunConfig, t: &Task) -> CliResult<BenchmarkRow> {
    let seed = derive_seed(config.seed, t.replicate as u64);
    let loaded = load_data(config, t.n, seed)?;
    let scaled = Scaled::new(&loaded.data, config.standardize)?;
    let base = base_measure(config, loaded.data.dim())?;
    let mut chain = ChainConfig::new(t.algorithm, PyParams::new(t.sigma, t.theta)?, base);
    chain.m = config.m;
    chain.iterations = config.iterations;
    chain.burnin = config.burnin;
    chain.seed = seed;
    chain.jump_cap = config.jump_cap;
    chain.deviance_mode = config.deviance;
    let trace: ChainTrace = run_chain(&chain, &scaled.data, &mut WallClock::default())?;
    let ess_k = ess_or_none(&trace.k_n_trace());
    let ess_d = ess_or_none(&trace.deviance);
    let seconds = trace.total_seconds;
    Ok(BenchmarkRow {
        algorithm: t.algorithm.name(),
        sigma: t.sigma,
        theta: t.theta,
        n: loaded.data.len(),
        replicate: Some(t.replicate),
        ess_k_n: ess_k,
        ess_deviance: ess_d,
        seconds,
        time_per_ess_k_n: ess_k.map(|e| seconds / e),
        time_per_ess_deviance: ess_d.map(|e| seconds / e),
        cap_hit_frequency: trace.cap_hit_frequency(),
    })
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let present: Vec<f64> = values.flatten().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

fn average(block: &[BenchmarkRow]) -> BenchmarkRow {
    let first = &block[0];
    let k = block.len() as f64;
    BenchmarkRow {
        replicate: None,
        ess_k_n: mean_of(block.iter().map(|r| r.ess_k_n)),
        ess_deviance: mean_of(block.iter().map(|r| r.ess_deviance)),
        seconds: block.iter().map(|r| r.seconds).sum::<f64>() / k,
        time_per_ess_k_n: mean_of(block.iter().map(|r| r.time_per_ess_k_n)),
        time_per_ess_deviance: mean_of(block.iter().map(|r| r.time_per_ess_deviance)),
        cap_hit_frequency: block.iter().map(|r| r.cap_hit_frequency).sum::<f64>() / k,
        ..first.clone()
    }
}

/// Writes `benchmark.csv` and `metadata.json`.
pub fn cmd_benchmark(config: &RunConfig) -> CliResult<()> {
    let rows = benchmark_rows(config)?;
    create_dir(&config.output)?;
    to_file(&config.output, "benchmark.csv", |w| {
        write_benchmark(w, &rows)
    })?;
    let mut meta = header(Command::Benchmark, config);
    meta.insert(
        "rows".into(),
        json!(rows.iter().filter(|r| r.replicate.is_some()).count()),
    );
    meta.insert(
        "schema".into(),
        schema(&[("benchmark.csv", strings(BENCHMARK_COLUMNS))]),
    );
    write_json(&config.output, "metadata.json", &Value::Object(meta))
}

/// Exceedance reports for every (sigma, theta, n) setting. Setting `i` draws
/// from streams under `derive_seed(seed, i)`.
pub fn truncation_reports(config: &RunConfig) -> CliResult<Vec<TruncationReport>> {
    config.validate(Command::Truncation)?;
    let mut reports = Vec::new();
    for &sigma in &config.sigma {
        for &theta in &config.theta {
            for &n in &config.n {
                let root = RngStream::new(derive_seed(config.seed, reports.len() as u64), 0);
                let params = PyParams::new(sigma, theta)?;
                reports.push(exceedance_table(
                    &root,
                    n as u64,
                    params,
                    &config.thresholds,
                    config.reps,
                    config.mn_cap,
                )?);
            }
        }
    }
    Ok(reports)
}

/// Writes `truncation_draws.csv`, `truncation_exceedance.csv` and
/// `metadata.json`.
pub fn cmd_truncation(config: &RunConfig) -> CliResult<()> {
    let reports = truncation_reports(config)?;
    create_dir(&config.output)?;
    let num = crate::output::num;
    to_file(&config.output, "truncation_draws.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(DRAW_COLUMNS)?;
        for r in &reports {
            for (i, d) in r.mn.iter().enumerate() {
                let l = r
                    .ln_log
                    .get(i)
                    .map_or_else(|| "NA".to_string(), |&v| num(v.exp()));
                let (m, capped) = match d {
                    MnDraw::Value(v) => (v.to_string(), "0"),
                    MnDraw::Capped => ("NA".to_string(), "1"),
                };
                out.write_record([
                    num(r.params.sigma()),
                    num(r.params.theta()),
                    r.n.to_string(),
                    i.to_string(),
                    m,
                    capped.to_string(),
                    l,
                ])?;
            }
        }
        out.flush().map_err(crate::output::io_to_csv)
    })?;
    to_file(&config.output, "truncation_exceedance.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(EXCEEDANCE_COLUMNS)?;
        let opt = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), num);
        for r in &reports {
            for row in &r.rows {
                out.write_record([
                    num(r.params.sigma()),
                    num(r.params.theta()),
                    r.n.to_string(),
                    row.threshold.to_string(),
                    opt(row.mn),
                    opt(row.ln),
                    opt(row.estimate),
                    row.source.name().to_string(),
                ])?;
            }
        }
        out.flush().map_err(crate::output::io_to_csv)
    })?;
    let mut meta = header(Command::Truncation, config);
    let settings: Vec<Value> = reports
        .iter()
        .map(|r| {
            let quantile = |q: f64| r.mn_quantile(q).map(|d| d.value().map_or(json!("capped"), |v| json!(v)));
            json!({
                "sigma": r.params.sigma(),
                "theta": r.params.theta(),
                "n": r.n,
                "capped_draws": r.capped(),
                "proxy_thresholds": r.rows.iter().filter(|x| x.source.name() != "direct").map(|x| x.threshold).collect::<Vec<_>>(),
                "m_n_quartiles": [quantile(0.25), quantile(0.5), quantile(0.75)],
                "l_n_quartiles": [r.ln_quantile(0.25), r.ln_quantile(0.5), r.ln_quantile(0.75)],
            })
        })
        .collect();
    meta.insert("settings".into(), json!(settings));
    meta.insert(
        "schema".into(),
        schema(&[
            ("truncation_draws.csv", strings(DRAW_COLUMNS)),
            ("truncation_exceedance.csv", strings(EXCEEDANCE_COLUMNS)),
        ]),
    );
    write_json(&config.output, "metadata.json", &Value::Object(meta))
}
