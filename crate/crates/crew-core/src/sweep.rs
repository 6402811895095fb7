//! Monte-Carlo benchmark harness: (algorithm, N, trial) cells with
//! per-cell derived seeds, executed in parallel when the `parallel` feature
//! is enabled, and persisted as CSV/JSON reports.
//!
//! Determinism contract: a sweep re-run with an identical config produces a
//! byte-identical `results.csv`. Cell seeds are derived from the base seed,
//! the algorithm name, N, and the trial index, so adding an algorithm or a
//! length never perturbs the randomness of other cells. Wall-clock timing
//! is inherently non-reproducible, so the `wall_ms` column of `results.csv`
//! holds the deterministic placeholder 0 and measured timings go to the
//! non-contractual `timings.csv`.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::design::{evaluate_true_mse, run_algorithm, Algorithm};
use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;
use crate::seed::derive_seed;

pub const RESULTS_HEADER: &str = "algorithm,N,trial,seed,mse,iters,wall_ms";
const TIMINGS_HEADER: &str = "algorithm,N,trial,wall_ms";

/// Sweep description: base scenario, the N grid, the algorithms to run, and
/// the Monte-Carlo repetition count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub scenario: ScenarioConfig,
    pub lengths: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub emit_plot_data: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            lengths: vec![25, 50, 100],
            algorithms: Algorithm::all().to_vec(),
            trials: 20,
            emit_plot_data: true,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() {
            return Err(Error::Config("lengths must be nonempty".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("algorithms must be nonempty".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        let mut probe = self.scenario.clone();
        for &n in &self.lengths {
            probe.n = n;
            probe.validate()?;
        }
        Ok(())
    }
}

/// Stable per-cell seed: mixing the base seed with the algorithm name, the
/// sequence length, and the trial index keeps cells independent of each
/// other and of config-list ordering.
pub fn cell_seed(base: u64, algorithm: Algorithm, n: usize, trial: usize) -> u64 {
    let by_algorithm = derive_seed(base, algorithm.as_str(), n as u64);
    derive_seed(by_algorithm, "trial", trial as u64)
}

/// One sweep cell result. `mse` is NaN when the cell failed; the error text
/// is kept out of `results.csv` (fixed schema) and reported in the summary.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub algorithm: Algorithm,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub mse: f64,
    pub iterations: usize,
    pub wall_ms: f64,
    pub error: Option<String>,
}

/// Mean / standard-error aggregate over the non-failed trials of one
/// (algorithm, N) cell group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAggregate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub errors: usize,
}

/// All rows plus aggregates, and the metadata needed to emit reports.
#[derive(Debug, Clone)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
    pub aggregates: BTreeMap<String, BTreeMap<usize, CellAggregate>>,
    pub scenario_label: String,
    pub algorithms: Vec<Algorithm>,
    pub lengths: Vec<usize>,
    pub emit_plot_data: bool,
}

impl ResultsTable {
    /// Assembles a table from rows (sorted internally, so assembly is
    /// order-independent).
    pub fn from_rows(
        mut rows: Vec<ResultRow>,
        scenario_label: String,
        algorithms: Vec<Algorithm>,
        lengths: Vec<usize>,
        emit_plot_data: bool,
    ) -> Self {
        rows.sort_by(|a, b| {
            (a.algorithm.as_str(), a.n, a.trial).cmp(&(b.algorithm.as_str(), b.n, b.trial))
        });
        let aggregates = aggregate_rows(&rows);
        Self {
            rows,
            aggregates,
            scenario_label,
            algorithms,
            lengths,
            emit_plot_data,
        }
    }

    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }

    pub fn mean_mse(&self, algorithm: Algorithm, n: usize) -> Option<f64> {
        self.aggregates
            .get(algorithm.as_str())
            .and_then(|by_n| by_n.get(&n))
            .map(|agg| agg.mean)
    }
}

/// Recomputes aggregates from rows (also used by the report round-trip
/// tests).
pub fn aggregate_rows(rows: &[ResultRow]) -> BTreeMap<String, BTreeMap<usize, CellAggregate>> {
    let mut groups: BTreeMap<String, BTreeMap<usize, Vec<&ResultRow>>> = BTreeMap::new();
    for row in rows {
        groups
            .entry(row.algorithm.as_str().to_string())
            .or_default()
            .entry(row.n)
            .or_default()
            .push(row);
    }
    let mut out = BTreeMap::new();
    for (alg, by_n) in groups {
        let mut inner = BTreeMap::new();
        for (n, cell_rows) in by_n {
            let values: Vec<f64> = cell_rows
                .iter()
                .filter(|r| r.error.is_none())
                .map(|r| r.mse)
                .collect();
            let errors = cell_rows.len() - values.len();
            let (mean, stderr) = mean_and_stderr(&values);
            inner.insert(
                n,
                CellAggregate {
                    mean,
                    stderr,
                    trials: cell_rows.len(),
                    errors,
                },
            );
        }
        out.insert(alg, inner);
    }
    out
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    algorithm: Algorithm,
    n: usize,
    trial: usize,
}

fn enumerate_cells(config: &SweepConfig) -> Vec<Cell> {
    let mut cells = Vec::with_capacity(config.algorithms.len() * config.lengths.len() * config.trials);
    for &algorithm in &config.algorithms {
        for &n in &config.lengths {
            for trial in 0..config.trials {
                cells.push(Cell {
                    algorithm,
                    n,
                    trial,
                });
            }
        }
    }
    cells
}

fn run_cell(config: &SweepConfig, cell: &Cell) -> ResultRow {
    let seed = cell_seed(config.scenario.seed, cell.algorithm, cell.n, cell.trial);
    let mut scenario = config.scenario.clone();
    scenario.n = cell.n;
    scenario.seed = seed;
    let start = Instant::now();
    let outcome = run_algorithm(cell.algorithm, &scenario)
        .and_then(|o| evaluate_true_mse(&o, &scenario).map(|m| (o, m)));
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok((o, mse)) => ResultRow {
            algorithm: cell.algorithm,
            n: cell.n,
            trial: cell.trial,
            seed,
            mse,
            iterations: o.outer_iterations,
            wall_ms,
            error: None,
        },
        Err(e) => ResultRow {
            algorithm: cell.algorithm,
            n: cell.n,
            trial: cell.trial,
            seed,
            mse: f64::NAN,
            iterations: 0,
            wall_ms,
            error: Some(e.to_string()),
        },
    }
}

fn assemble(config: &SweepConfig, rows: Vec<ResultRow>) -> Result<ResultsTable> {
    if rows.iter().all(|r| r.error.is_some()) {
        let first = rows
            .iter()
            .find_map(|r| r.error.clone())
            .unwrap_or_else(|| "empty sweep".into());
        return Err(Error::AllCellsFailed(first));
    }
    Ok(ResultsTable::from_rows(
        rows,
        config.scenario.jamming.label().to_string(),
        config.algorithms.clone(),
        config.lengths.clone(),
        config.emit_plot_data,
    ))
}

/// Runs every cell on the current thread. Always available; the parallel
/// runner falls back to this path for `jobs = 1`.
pub fn run_sweep_sequential(config: &SweepConfig) -> Result<ResultsTable> {
    config.validate()?;
    let cells = enumerate_cells(config);
    let rows: Vec<ResultRow> = cells.iter().map(|c| run_cell(config, c)).collect();
    assemble(config, rows)
}

/// Runs the sweep with cells as independent parallel jobs. `jobs` bounds the
/// worker count (`None` uses the default rayon pool). Cell seeds are fixed
/// up front, so the result is identical for any worker count.
#[cfg(feature = "parallel")]
pub fn run_sweep(config: &SweepConfig, jobs: Option<usize>) -> Result<ResultsTable> {
    config.validate()?;
    if jobs == Some(1) {
        return run_sweep_sequential(config);
    }
    let cells = enumerate_cells(config);
    let rows: Vec<ResultRow> = match jobs {
        Some(workers) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| cells.par_iter().map(|c| run_cell(config, c)).collect())
        }
        None => cells.par_iter().map(|c| run_cell(config, c)).collect(),
    };
    assemble(config, rows)
}

/// Sequential build: `jobs` has no effect.
#[cfg(not(feature = "parallel"))]
pub fn run_sweep(config: &SweepConfig, jobs: Option<usize>) -> Result<ResultsTable> {
    let _ = jobs;
    run_sweep_sequential(config)
}

fn atomic_write(path: &Path, data: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, data)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes `results.csv`, `timings.csv`, `summary.json`, and (when enabled)
/// `plotdata_<scenario>.csv` into `dir`. Returns the written paths.
pub fn emit_report(table: &ResultsTable, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let mut results = String::from(RESULTS_HEADER);
    results.push('\n');
    for row in &table.rows {
        writeln!(
            results,
            "{},{},{},{},{},{},0",
            row.algorithm.as_str(),
            row.n,
            row.trial,
            row.seed,
            row.mse,
            row.iterations
        )
        .expect("string write");
    }
    let results_path = dir.join("results.csv");
    atomic_write(&results_path, &results)?;
    written.push(results_path);

    let mut timings = String::from(TIMINGS_HEADER);
    timings.push('\n');
    for row in &table.rows {
        writeln!(
            timings,
            "{},{},{},{}",
            row.algorithm.as_str(),
            row.n,
            row.trial,
            row.wall_ms
        )
        .expect("string write");
    }
    let timings_path = dir.join("timings.csv");
    atomic_write(&timings_path, &timings)?;
    written.push(timings_path);

    let summary = serde_json::json!({
        "scenario": table.scenario_label,
        "aggregates": table.aggregates,
        "total_rows": table.rows.len(),
        "total_errors": table.rows.iter().filter(|r| r.error.is_some()).count(),
        "errors": table
            .rows
            .iter()
            .filter_map(|r| {
                r.error.as_ref().map(|e| {
                    serde_json::json!({
                        "algorithm": r.algorithm.as_str(),
                        "N": r.n,
                        "trial": r.trial,
                        "message": e,
                    })
                })
            })
            .collect::<Vec<_>>(),
    });
    let summary_path = dir.join("summary.json");
    atomic_write(&summary_path, &serde_json::to_string_pretty(&summary)?)?;
    written.push(summary_path);

    if table.emit_plot_data {
        let mut plot = String::from("N");
        for algorithm in &table.algorithms {
            write!(plot, ",{0}_mean,{0}_stderr", algorithm.as_str()).expect("string write");
        }
        plot.push('\n');
        let mut lengths = table.lengths.clone();
        lengths.sort_unstable();
        lengths.dedup();
        for n in lengths {
            write!(plot, "{n}").expect("string write");
            for algorithm in &table.algorithms {
                let agg = table
                    .aggregates
                    .get(algorithm.as_str())
                    .and_then(|by_n| by_n.get(&n));
                match agg {
                    Some(a) => write!(plot, ",{},{}", a.mean, a.stderr).expect("string write"),
                    None => write!(plot, ",NaN,NaN").expect("string write"),
                }
            }
            plot.push('\n');
        }
        let plot_path = dir.join(format!("plotdata_{}.csv", table.scenario_label));
        atomic_write(&plot_path, &plot)?;
        written.push(plot_path);
    }

    Ok(written)
}

/// Parses a `results.csv` produced by [`emit_report`] back into rows
/// (timing is not part of the reproducible record and parses as written).
pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty results csv".into()))?;
    if header != RESULTS_HEADER {
        return Err(Error::Config(format!("unexpected header '{header}'")));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Config(format!(
                "row {idx}: expected 7 fields, got {}",
                fields.len()
            )));
        }
        let parse_err = |what: &str| Error::Config(format!("row {idx}: bad {what}"));
        let mse: f64 = fields[4].parse().map_err(|_| parse_err("mse"))?;
        rows.push(ResultRow {
            algorithm: fields[0].parse()?,
            n: fields[1].parse().map_err(|_| parse_err("N"))?,
            trial: fields[2].parse().map_err(|_| parse_err("trial"))?,
            seed: fields[3].parse().map_err(|_| parse_err("seed"))?,
            mse,
            iterations: fields[5].parse().map_err(|_| parse_err("iters"))?,
            wall_ms: fields[6].parse().map_err(|_| parse_err("wall_ms"))?,
            error: if mse.is_nan() {
                Some("recorded failure".into())
            } else {
                None
            },
        });
    }
    Ok(rows)
}
