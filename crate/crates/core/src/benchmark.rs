//! Benchmark harness: runs each (space, size, algorithm) cell over several
//! seeds and tabulates median seconds and median iteration counts.
//!
//! Replication `r` of a cell uses seed `seed_base + r`, so results do not
//! depend on how cells are scheduled across workers. The multiplicative
//! algorithm starts from the uniform design and is seed-independent; it is
//! run once per cell.

use std::fmt::Write as _;
use std::time::Duration;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::{solve, Algorithm, SolverConfig, TerminationStatus};
use crate::space::SpaceFamily;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkSpec {
    pub spaces: Vec<(SpaceFamily, Vec<usize>)>,
    pub algorithms: Vec<Algorithm>,
    pub replications: usize,
    pub epsilon: f64,
    pub seed_base: u64,
    pub max_iterations: usize,
    /// Per-run wall-clock budget; runs past it are reported as aborted.
    pub cell_budget: Option<Duration>,
}

impl BenchmarkSpec {
    pub fn new(spaces: Vec<(SpaceFamily, Vec<usize>)>, algorithms: Vec<Algorithm>) -> Self {
        Self {
            spaces,
            algorithms,
            replications: 3,
            epsilon: 1e-6,
            seed_base: 0,
            max_iterations: 10_000,
            cell_budget: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.spaces.is_empty() || self.spaces.iter().any(|(_, s)| s.is_empty()) {
            return Err(Error::InvalidConfig("benchmark needs at least one space size".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("benchmark needs at least one algorithm".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        Ok(())
    }

    fn replications_for(&self, algorithm: Algorithm) -> usize {
        match algorithm {
            Algorithm::Ma => 1,
            _ => self.replications,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub iterations: usize,
    pub seconds: f64,
    pub status: TerminationStatus,
    pub log_det: f64,
    pub certificate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellResult {
    pub family: SpaceFamily,
    pub size: usize,
    pub algorithm: Algorithm,
    pub runs: Vec<RunSummary>,
    pub median_seconds: f64,
    pub median_iterations: usize,
    /// The median time and the median iteration count come from different runs.
    pub median_mismatch: bool,
}

impl CellResult {
    fn from_runs(family: SpaceFamily, size: usize, algorithm: Algorithm, runs: Vec<RunSummary>) -> Self {
        let by_time = median_index(&runs, |a, b| a.seconds.total_cmp(&b.seconds));
        let by_iter = median_index(&runs, |a, b| a.iterations.cmp(&b.iterations));
        Self {
            family,
            size,
            algorithm,
            median_seconds: runs[by_time].seconds,
            median_iterations: runs[by_iter].iterations,
            median_mismatch: runs[by_time].seed != runs[by_iter].seed,
            runs,
        }
    }

    pub fn all_converged(&self) -> bool {
        self.runs.iter().all(|r| r.status == TerminationStatus::Converged)
    }

    pub fn aborted(&self) -> bool {
        self.runs.iter().any(|r| r.status == TerminationStatus::TimeBudget)
    }

    /// `"0.25 (13)"`, or `"147+ (10000+)"` when some run stopped before converging.
    pub fn display(&self) -> String {
        let secs = format_seconds(self.median_seconds);
        if self.all_converged() {
            format!("{secs} ({})", self.median_iterations)
        } else {
            format!("{secs}+ ({}+)", self.median_iterations)
        }
    }
}

/// Lower median of an odd or even sample, as an index into `runs`.
fn median_index<T>(runs: &[T], cmp: impl Fn(&T, &T) -> std::cmp::Ordering) -> usize {
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|&a, &b| cmp(&runs[a], &runs[b]));
    order[(runs.len() - 1) / 2]
}

fn format_seconds(s: f64) -> String {
    if s < 10.0 {
        format!("{s:.3}")
    } else if s < 100.0 {
        format!("{s:.1}")
    } else {
        format!("{s:.0}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkTable {
    pub cells: Vec<CellResult>,
}

impl BenchmarkTable {
    pub fn cell(&self, family: SpaceFamily, size: usize, algorithm: Algorithm) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.family == family && c.size == size && c.algorithm == algorithm)
    }

    /// One row per cell with medians and per-run details.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record([
            "family",
            "size",
            "n",
            "algorithm",
            "median_seconds",
            "median_iterations",
            "runs",
            "converged_runs",
            "aborted",
            "median_mismatch",
        ])?;
        for c in &self.cells {
            let converged = c
                .runs
                .iter()
                .filter(|r| r.status == TerminationStatus::Converged)
                .count();
            wtr.write_record([
                c.family.to_string(),
                c.size.to_string(),
                c.family.point_count(c.size).to_string(),
                c.algorithm.to_string(),
                c.median_seconds.to_string(),
                c.median_iterations.to_string(),
                c.runs.len().to_string(),
                converged.to_string(),
                c.aborted().to_string(),
                c.median_mismatch.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Aligned text: one block per family, algorithms as rows, sizes as columns.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let mut families: Vec<SpaceFamily> = Vec::new();
        for c in &self.cells {
            if !families.contains(&c.family) {
                families.push(c.family);
            }
        }
        for family in families {
            let cells: Vec<&CellResult> = self.cells.iter().filter(|c| c.family == family).collect();
            let mut sizes: Vec<usize> = Vec::new();
            let mut algorithms: Vec<Algorithm> = Vec::new();
            for c in &cells {
                if !sizes.contains(&c.size) {
                    sizes.push(c.size);
                }
                if !algorithms.contains(&c.algorithm) {
                    algorithms.push(c.algorithm);
                }
            }
            let header: Vec<String> = sizes
                .iter()
                .map(|&s| match family {
                    SpaceFamily::X4 => format!("n={s}^2"),
                    _ => format!("n={s}"),
                })
                .collect();
            let rows: Vec<(String, Vec<String>)> = algorithms
                .iter()
                .map(|&a| {
                    let row = sizes
                        .iter()
                        .map(|&s| {
                            cells
                                .iter()
                                .find(|c| c.size == s && c.algorithm == a)
                                .map_or_else(String::new, |c| c.display())
                        })
                        .collect();
                    (a.to_string(), row)
                })
                .collect();
            let label_w = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(family.name().len());
            let col_w: Vec<usize> = (0..sizes.len())
                .map(|j| {
                    rows.iter()
                        .map(|(_, r)| r[j].len())
                        .chain([header[j].len()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let _ = write!(out, "{:<label_w$} |", family.name());
            for (h, w) in header.iter().zip(&col_w) {
                let _ = write!(out, " {h:>w$}");
            }
            out.push('\n');
            let rule = label_w + 2 + col_w.iter().map(|w| w + 1).sum::<usize>();
            out.push_str(&"-".repeat(rule));
            out.push('\n');
            for (label, row) in rows {
                let _ = write!(out, "{label:<label_w$} |");
                for (cell, w) in row.iter().zip(&col_w) {
                    let _ = write!(out, " {cell:>w$}");
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}

struct Job {
    family: SpaceFamily,
    size: usize,
    algorithm: Algorithm,
    replication: usize,
}

/// Runs every cell of `spec` on `workers` threads (`0` = rayon default).
pub fn run_benchmark(spec: &BenchmarkSpec, workers: usize) -> Result<BenchmarkTable> {
    spec.validate()?;
    let mut spaces = Vec::new();
    for &(family, ref sizes) in &spec.spaces {
        for &size in sizes {
            spaces.push((family, size, family.build(size)?));
        }
    }
    let mut jobs = Vec::new();
    for (family, size, _) in &spaces {
        for &algorithm in &spec.algorithms {
            for replication in 0..spec.replications_for(algorithm) {
                jobs.push(Job {
                    family: *family,
                    size: *size,
                    algorithm,
                    replication,
                });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let runs: Vec<Result<RunSummary>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let space = &spaces
                    .iter()
                    .find(|(f, s, _)| *f == job.family && *s == job.size)
                    .expect("space built for every job")
                    .2;
                let seed = spec.seed_base + job.replication as u64;
                let mut config = SolverConfig::new(job.algorithm)
                    .with_seed(seed)
                    .with_epsilon(spec.epsilon)
                    .with_max_iterations(spec.max_iterations);
                config.time_budget = spec.cell_budget;
                let res = solve(space, &config)?;
                Ok(RunSummary {
                    seed,
                    iterations: res.iterations(),
                    seconds: res.trace.seconds(),
                    status: res.status(),
                    log_det: res.log_det,
                    certificate: res.certificate,
                })
            })
            .collect()
    });
    let mut cells = Vec::new();
    let mut runs = runs.into_iter();
    let mut jobs = jobs.iter().peekable();
    while let Some(first) = jobs.next() {
        let mut group = vec![runs.next().expect("one run per job")?];
        while jobs.peek().is_some_and(|j| {
            j.family == first.family && j.size == first.size && j.algorithm == first.algorithm
        }) {
            jobs.next();
            group.push(runs.next().expect("one run per job")?);
        }
        cells.push(CellResult::from_runs(first.family, first.size, first.algorithm, group));
    }
    Ok(BenchmarkTable { cells })
}
