//! CSV and JSON writers. Column sets are fixed per file and versioned by
//! [`SCHEMA_VERSION`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use pyics_core::diagnostics::DensitySummary;
use pyics_core::gmddp::GmddpTrace;
use pyics_core::samplers::ChainTrace;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

/// Bumped whenever a column set changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const TRACE_COLUMNS: &[&str] = &["iteration", "k_n", "deviance", "jumps", "cap_hit"];
pub const TIMING_COLUMNS: &[&str] = &["iteration", "seconds"];
pub const BENCHMARK_COLUMNS: &[&str] = &[
    "kind",
    "algorithm",
    "sigma",
    "theta",
    "n",
    "replicate",
    "ess_k_n",
    "ess_deviance",
    "seconds",
    "time_per_ess_k_n",
    "time_per_ess_deviance",
    "cap_hit_frequency",
];
pub const DRAW_COLUMNS: &[&str] = &[
    "sigma",
    "theta",
    "n",
    "replicate",
    "m_n",
    "m_n_capped",
    "l_n",
];
pub const EXCEEDANCE_COLUMNS: &[&str] = &[
    "sigma",
    "theta",
    "n",
    "threshold",
    "p_m_n",
    "p_l_n",
    "estimate",
    "source",
];

/// Column names of the density file for a given dimension.
pub fn density_columns(dim: usize, grouped: bool) -> Vec<&'static str> {
    let mut cols = Vec::new();
    if grouped {
        cols.push("group");
    }
    cols.extend(if dim == 1 {
        &["x"][..]
    } else {
        &["x", "y"][..]
    });
    cols.extend(["mean", "lower", "upper"]);
    cols
}

/// Column names of the GM-DDP trace for the given group labels.
pub fn gmddp_trace_columns(labels: &[i64]) -> Vec<String> {
    let mut cols: Vec<String> = ["iteration", "k_n", "deviance", "common_share"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend(labels.iter().map(|l| format!("w_{l}")));
    cols
}

/// Shortest round-trip text, `NA` for non-finite values.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "NA".to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), num)
}

pub(crate) fn io_to_csv(e: std::io::Error) -> csv::Error {
    csv::Error::from(e)
}

type CsvResult<T> = Result<T, csv::Error>;

/// Density summaries, one block per group (or a single ungrouped block).
pub fn write_density<W: Write>(w: W, blocks: &[(Option<i64>, &DensitySummary)]) -> CsvResult<()> {
    let dim = blocks.first().map_or(1, |b| b.1.grid.dim());
    let grouped = blocks.iter().any(|b| b.0.is_some());
    let mut out = csv::Writer::from_writer(w);
    out.write_record(density_columns(dim, grouped))?;
    for (group, s) in blocks {
        for i in 0..s.mean.len() {
            let mut row = Vec::with_capacity(6);
            if let Some(g) = group {
                row.push(g.to_string());
            }
            let p = s.grid.point(i);
            row.extend(p[..dim].iter().map(|&v| num(v)));
            row.extend([num(s.mean[i]), num(s.lower[i]), num(s.upper[i])]);
            out.write_record(&row)?;
        }
    }
    out.flush().map_err(io_to_csv)
}

/// Retained iterations of an exchangeable chain, numbered from `burnin + 1`.
pub fn write_trace<W: Write>(w: W, trace: &ChainTrace, burnin: usize) -> CsvResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_COLUMNS)?;
    for r in 0..trace.len() {
        out.write_record([
            (burnin + r + 1).to_string(),
            trace.k_n[r].to_string(),
            num(trace.deviance[r]),
            trace.jumps[r].to_string(),
            (trace.cap_hit[r] as u8).to_string(),
        ])?;
    }
    out.flush().map_err(io_to_csv)
}

pub fn write_gmddp_trace<W: Write>(
    w: W,
    trace: &GmddpTrace,
    burnin: usize,
    labels: &[i64],
) -> CsvResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(gmddp_trace_columns(labels))?;
    for r in 0..trace.len() {
        let mut row = vec![
            (burnin + r + 1).to_string(),
            trace.k_n[r].to_string(),
            num(trace.deviance[r]),
            num(trace.common_share[r]),
        ];
        row.extend(trace.w[r].iter().map(|&v| num(v)));
        out.write_record(&row)?;
    }
    out.flush().map_err(io_to_csv)
}

pub fn write_timing<W: Write>(w: W, seconds: &[f64], burnin: usize) -> CsvResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TIMING_COLUMNS)?;
    for (r, s) in seconds.iter().enumerate() {
        out.write_record([(burnin + r + 1).to_string(), num(*s)])?;
    }
    out.flush().map_err(io_to_csv)
}

/// One benchmark row; `replicate` is `None` on summary rows.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkRow {
    pub algorithm: &'static str,
    pub sigma: f64,
    pub theta: f64,
    pub n: usize,
    pub replicate: Option<usize>,
    pub ess_k_n: Option<f64>,
    pub ess_deviance: Option<f64>,
    pub seconds: f64,
    pub time_per_ess_k_n: Option<f64>,
    pub time_per_ess_deviance: Option<f64>,
    pub cap_hit_frequency: f64,
}

pub fn write_benchmark<W: Write>(w: W, rows: &[BenchmarkRow]) -> CsvResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(BENCHMARK_COLUMNS)?;
    for r in rows {
        out.write_record([
            if r.replicate.is_some() {
                "replicate"
            } else {
                "summary"
            }
            .to_string(),
            r.algorithm.to_string(),
            num(r.sigma),
            num(r.theta),
            r.n.to_string(),
            r.replicate
                .map_or_else(|| "mean".to_string(), |i| i.to_string()),
            opt(r.ess_k_n),
            opt(r.ess_deviance),
            num(r.seconds),
            opt(r.time_per_ess_k_n),
            opt(r.time_per_ess_deviance),
            num(r.cap_hit_frequency),
        ])?;
    }
    out.flush().map_err(io_to_csv)
}

/// Creates `dir/name` and hands a buffered writer to `f`.
pub fn to_file(
    dir: &Path,
    name: &str,
    f: impl FnOnce(BufWriter<File>) -> CsvResult<()>,
) -> CliResult<()> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::output(&path, e))?;
    f(BufWriter::new(file)).map_err(|e| {
        let kind = std::io::Error::other(e.to_string());
        CliError::output(&path, kind)
    })
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> CliResult<()> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).unwrap_or_default();
    std::fs::write(&path, text + "\n").map_err(|e| CliError::output(&path, e))
}

/// Schema block embedded in every metadata file.
pub fn schema(files: &[(&str, Vec<String>)]) -> Value {
    let mut map = serde_json::Map::new();
    for (name, cols) in files {
        map.insert(name.to_string(), json!(cols));
    }
    json!({ "version": SCHEMA_VERSION, "files": map })
}

pub fn strings(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use pyics_core::diagnostics::{density_summary, Grid};

    #[test]
    fn density_layout() {
        let grid = Grid::line(vec![0.0, 0.5]).unwrap();
        let s = density_summary(&grid, &[vec![0.2, 0.4], vec![0.4, 0.4]], 0.9).unwrap();
        let mut buf = Vec::new();
        write_density(&mut buf, &[(None, &s)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("x,mean,lower,upper"));
        assert!(
            text.lines()
                .nth(1)
                .unwrap()
                .starts_with("0,0.30000000000000004,0.2,0.4"),
            "{text}"
        );
        assert_eq!(
            density_columns(2, true),
            ["group", "x", "y", "mean", "lower", "upper"]
        );
    }

    #[test]
    fn non_finite_values_are_na() {
        assert_eq!(num(f64::NAN), "NA");
        assert_eq!(num(1.5), "1.5");
        assert_eq!(opt(None), "NA");
    }
}
