//! Solver driver: starting designs, the iteration loop with its stopping
//! rules and monotonicity guard, certification and support clustering.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::information::{make_state, InformationState};
use crate::kernels::{self, converged};
use crate::space::DesignSpace;
use crate::weights::DesignWeights;

/// Name of the generator behind [`init_random_support`], recorded in every trace.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

/// Largest tolerated per-iteration decrease of `phi` before aborting.
pub const MONOTONICITY_SLACK: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Multiplicative algorithm.
    Ma,
    /// Vertex exchange method.
    Vem,
    /// VDM + nearest-neighbour exchanges + MA.
    Cocktail,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Self::Ma, Self::Vem, Self::Cocktail];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ma => "ma",
            Self::Vem => "vem",
            Self::Cocktail => "cocktail",
        }
    }

    /// The starting rule used for this algorithm in the benchmarks.
    pub fn default_init(self) -> InitStrategy {
        match self {
            Self::Ma => InitStrategy::UniformAll,
            Self::Vem | Self::Cocktail => InitStrategy::RandomSupport,
        }
    }

    fn step<'s>(self, state: &InformationState<'s>) -> Result<InformationState<'s>> {
        let out = match self {
            Self::Ma => kernels::ma_step(state)?,
            Self::Vem => kernels::vem_step(state)?,
            Self::Cocktail => kernels::cocktail_step(state)?,
        };
        Ok(out.new_state)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ma" => Ok(Self::Ma),
            "vem" => Ok(Self::Vem),
            "cocktail" => Ok(Self::Cocktail),
            other => Err(format!("unknown algorithm {other:?} (expected ma, vem or cocktail)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// `w_i = 1/n` everywhere.
    UniformAll,
    /// Uniform over a random nonsingular subset of `support_target` points.
    RandomSupport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub init: InitStrategy,
    pub rng_seed: u64,
    /// Defaults to `min(2m, n)`.
    pub support_target: Option<usize>,
    pub max_init_retries: usize,
    /// Wall-clock limit for the iteration loop.
    pub time_budget: Option<Duration>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::new(Algorithm::Cocktail)
    }
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            epsilon: 1e-6,
            max_iterations: 10_000,
            init: algorithm.default_init(),
            rng_seed: 0,
            support_target: None,
            max_init_retries: 100,
            time_budget: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_init(mut self, init: InitStrategy) -> Self {
        self.init = init;
        self
    }

    pub fn support_target_for(&self, space: &DesignSpace) -> usize {
        self.support_target
            .unwrap_or_else(|| (2 * space.dim()).min(space.len()))
    }

    pub fn validate(&self, space: &DesignSpace) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if self.max_init_retries == 0 {
            return Err(Error::InvalidConfig("max_init_retries must be at least 1".into()));
        }
        let target = self.support_target_for(space);
        if target < space.dim() || target > space.len() {
            return Err(Error::InvalidConfig(format!(
                "support target {target} outside [{}, {}]",
                space.dim(),
                space.len()
            )));
        }
        if self.algorithm == Algorithm::Ma && self.init != InitStrategy::UniformAll {
            return Err(Error::InvalidConfig(
                "the multiplicative algorithm never revives zero weights; start it from uniform_all"
                    .into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TerminationStatus {
    Converged,
    IterationCap,
    TimeBudget,
}

impl fmt::Display for TerminationStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Converged => "CONVERGED",
            Self::IterationCap => "ITERATION_CAP",
            Self::TimeBudget => "TIME_BUDGET",
        })
    }
}

/// State at the start of an iteration (record 0 is the starting design).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub log_det: f64,
    pub certificate: f64,
    pub support_size: usize,
    /// Seconds since the solve started.
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub rng: String,
    pub algorithm: Algorithm,
    pub epsilon: f64,
    pub seed: u64,
    pub records: Vec<IterationRecord>,
    pub status: TerminationStatus,
}

impl SolverTrace {
    /// Iterations performed (records minus the starting design).
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn seconds(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.seconds)
    }

    /// CSV with columns `iteration,logdet,certificate,support_size,seconds`, preceded by
    /// one `#` comment line naming the algorithm, epsilon, seed and generator.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# algorithm={} epsilon={:e} seed={} rng={}",
            self.algorithm, self.epsilon, self.seed, self.rng
        )?;
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["iteration", "logdet", "certificate", "support_size", "seconds"])?;
        for r in &self.records {
            wtr.write_record([
                r.iteration.to_string(),
                r.log_det.to_string(),
                r.certificate.to_string(),
                r.support_size.to_string(),
                r.seconds.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub index: usize,
    pub weight: f64,
    pub point: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignResult {
    pub weights: DesignWeights,
    pub support: Vec<SupportPoint>,
    pub log_det: f64,
    pub certificate: f64,
    pub trace: SolverTrace,
}

impl DesignResult {
    pub fn status(&self) -> TerminationStatus {
        self.trace.status
    }

    pub fn iterations(&self) -> usize {
        self.trace.iterations()
    }

    pub fn is_converged(&self) -> bool {
        self.trace.status == TerminationStatus::Converged
    }
}

pub fn init_uniform(space: &DesignSpace) -> DesignWeights {
    DesignWeights::uniform(space.len())
}

/// Uniform weights on `target` points drawn without replacement, redrawn until
/// the information matrix is nonsingular.
pub fn init_random_support(
    space: &DesignSpace,
    seed: u64,
    target: usize,
    max_retries: usize,
) -> Result<DesignWeights> {
    if target < space.dim() || target > space.len() {
        return Err(Error::InvalidConfig(format!(
            "support target {target} outside [{}, {}]",
            space.dim(),
            space.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..max_retries {
        let mut subset = rand::seq::index::sample(&mut rng, space.len(), target).into_vec();
        subset.sort_unstable();
        let w = DesignWeights::uniform_on(space.len(), &subset);
        match make_state(space, w) {
            Ok(state) => return Ok(state.into_weights()),
            Err(Error::SingularInformation { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegenerateStart {
        attempts: max_retries,
    })
}

fn starting_weights(space: &DesignSpace, config: &SolverConfig) -> Result<DesignWeights> {
    match config.init {
        InitStrategy::UniformAll => Ok(init_uniform(space)),
        InitStrategy::RandomSupport => init_random_support(
            space,
            config.rng_seed,
            config.support_target_for(space),
            config.max_init_retries,
        ),
    }
}

/// Runs `config.algorithm` from its starting design until the certificate
/// drops to `1 + epsilon` or a stopping rule fires.
pub fn solve(space: &DesignSpace, config: &SolverConfig) -> Result<DesignResult> {
    config.validate(space)?;
    let started = Instant::now();
    let weights = starting_weights(space, config)?;
    let setup = started.elapsed();
    solve_from(space, config, weights, started - setup)
}

/// Runs the iteration loop from caller-supplied weights.
pub fn solve_from_weights(
    space: &DesignSpace,
    config: &SolverConfig,
    weights: DesignWeights,
) -> Result<DesignResult> {
    config.validate(space)?;
    solve_from(space, config, weights, Instant::now())
}

fn solve_from(
    space: &DesignSpace,
    config: &SolverConfig,
    weights: DesignWeights,
    started: Instant,
) -> Result<DesignResult> {
    let mut state = match make_state(space, weights) {
        Ok(s) => s,
        Err(Error::SingularInformation { .. }) => return Err(Error::DegenerateStart { attempts: 1 }),
        Err(e) => return Err(e),
    };
    let mut records = Vec::new();
    let mut iteration = 0;
    let (status, certificate) = loop {
        let cert = converged(&state, config.epsilon);
        records.push(IterationRecord {
            iteration,
            log_det: state.log_det(),
            certificate: cert.max_ratio,
            support_size: state.weights().support_size(),
            seconds: started.elapsed().as_secs_f64(),
        });
        if cert.converged {
            break (TerminationStatus::Converged, cert.max_ratio);
        }
        if iteration >= config.max_iterations {
            break (TerminationStatus::IterationCap, cert.max_ratio);
        }
        if config.time_budget.is_some_and(|b| started.elapsed() > b) {
            break (TerminationStatus::TimeBudget, cert.max_ratio);
        }
        let next = config.algorithm.step(&state)?;
        if next.log_det() < state.log_det() - MONOTONICITY_SLACK {
            return Err(Error::MonotonicityViolation {
                iteration: iteration + 1,
                before: state.log_det(),
                after: next.log_det(),
            });
        }
        state = next;
        iteration += 1;
    };
    log::debug!(
        "{} finished after {iteration} iterations: {status}",
        config.algorithm
    );
    let support = state
        .weights()
        .support_iter()
        .map(|i| SupportPoint {
            index: i,
            weight: state.weights().get(i),
            point: space.point(i).to_vec(),
        })
        .collect();
    Ok(DesignResult {
        log_det: state.log_det(),
        certificate,
        support,
        weights: state.into_weights(),
        trace: SolverTrace {
            rng: RNG_ALGORITHM.to_owned(),
            algorithm: config.algorithm,
            epsilon: config.epsilon,
            seed: config.rng_seed,
            records,
            status,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportCertificate {
    pub index: usize,
    pub weight: f64,
    /// `d(i, w) / m`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub log_det: f64,
    /// `max_i d(i, w) / m` over all candidates.
    pub max_ratio: f64,
    pub argmax: usize,
    pub support: Vec<SupportCertificate>,
}

impl CertificateReport {
    pub fn is_optimal(&self, epsilon: f64) -> bool {
        self.max_ratio <= 1.0 + epsilon
    }
}

/// Recomputes `M(w)`, `phi(w)` and every `d(i, w)` from raw weights.
pub fn certify(space: &DesignSpace, weights: &[f64]) -> Result<CertificateReport> {
    let weights = DesignWeights::new(weights.to_vec())?;
    let state = make_state(space, weights)?;
    let m = state.dim() as f64;
    let cert = converged(&state, 0.0);
    let support = state
        .d_support()
        .into_iter()
        .map(|(index, d)| SupportCertificate {
            index,
            weight: state.weights().get(index),
            ratio: d / m,
        })
        .collect();
    Ok(CertificateReport {
        log_det: state.log_det(),
        max_ratio: cert.max_ratio,
        argmax: cert.argmax,
        support,
    })
}

/// Linkage threshold for [`cluster_support`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClusterRadius {
    /// Link support points within this `L1` distance.
    Absolute(f64),
    /// Link `a` and `b` when `||x_a - x_b||_1 <= factor * min(nn(a), nn(b))`,
    /// `nn` being the distance to the nearest other candidate in the space.
    /// Adapts to grids whose spacing varies across the space.
    LocalSpacing(f64),
}

impl ClusterRadius {
    /// `1.5x` the smallest nonzero pairwise distance in the space.
    pub fn default_for(space: &DesignSpace) -> Self {
        ClusterRadius::Absolute(1.5 * space.min_nonzero_distance())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportCluster {
    pub members: Vec<usize>,
    pub weight: f64,
    /// Weight-averaged coordinates.
    pub centroid: Vec<f64>,
}

/// Single-linkage grouping of support points; each group carries its summed mass.
pub fn cluster_support(
    result: &DesignResult,
    space: &DesignSpace,
    radius: ClusterRadius,
) -> Vec<SupportCluster> {
    let support = &result.support;
    let p = support.len();
    let nn: Vec<f64> = match radius {
        ClusterRadius::LocalSpacing(_) => support
            .iter()
            .map(|s| space.nearest_neighbor_distance(s.index))
            .collect(),
        ClusterRadius::Absolute(_) => Vec::new(),
    };
    let mut parent: Vec<usize> = (0..p).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    #[allow(clippy::needless_range_loop)]
    for a in 0..p {
        for b in a + 1..p {
            let dist = space.l1_distance(support[a].index, support[b].index);
            let limit = match radius {
                ClusterRadius::Absolute(r) => r,
                ClusterRadius::LocalSpacing(f) => f * nn[a].min(nn[b]),
            };
            if dist <= limit {
                let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut clusters: Vec<SupportCluster> = Vec::new();
    let mut slot = vec![usize::MAX; p];
    #[allow(clippy::needless_range_loop)]
    for a in 0..p {
        let r = root(&mut parent, a);
        if slot[r] == usize::MAX {
            slot[r] = clusters.len();
            clusters.push(SupportCluster {
                members: Vec::new(),
                weight: 0.0,
                centroid: vec![0.0; space.dim()],
            });
        }
        let c = &mut clusters[slot[r]];
        c.members.push(support[a].index);
        c.weight += support[a].weight;
        for (acc, x) in c.centroid.iter_mut().zip(&support[a].point) {
            *acc += support[a].weight * x;
        }
    }
    for c in &mut clusters {
        c.centroid.iter_mut().for_each(|v| *v /= c.weight);
    }
    clusters
}
