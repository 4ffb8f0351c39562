//! Monte Carlo evaluation of a storm scenario.
//!
//! Inundation closures are deterministic for a storm; only bridge uplift is
//! sampled. Each sample draws a failure flag per bridge, closes the affected
//! edges for every horizon, recomputes travel times and scores, and the
//! per-demand scores are reduced to mean and coefficient of variation.
//!
//! Draws are counter-based: the flag for (sample, bridge) comes from a ChaCha
//! stream keyed by the master seed and the bridge id, positioned by the
//! sample index. Results therefore do not depend on evaluation order or on
//! the number of worker threads.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::access::{group_averages, no_access_fraction, quartile_classify, two_step_fca, DemandSite, GroupAverage, Quartile, SupplySite};
use crate::error::{Error, Result};
use crate::fragility::{uplift_probability, FragilityTable};
use crate::hazard::{ExposureThresholds, SurgeField};
use crate::network::{closure_mask, Horizon, NetworkExposure, RoadGraph, TravelTimeRouter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub storm: String,
    pub thresholds: ExposureThresholds,
    /// Catchment in minutes of free-flow travel.
    pub catchment_min: f64,
    pub samples: usize,
    pub seed: u64,
    pub horizons: Vec<Horizon>,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    pub convergence_window: usize,
    pub convergence_tolerance: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            storm: "storm".to_string(),
            thresholds: ExposureThresholds::default(),
            catchment_min: 50.0,
            samples: 1_000,
            seed: 0,
            horizons: Horizon::ALL.to_vec(),
            workers: None,
            convergence_window: 100,
            convergence_tolerance: 0.01,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        if self.samples == 0 {
            return Err(Error::invalid("sample count must be at least 1"));
        }
        if !(self.catchment_min > 0.0) || !self.catchment_min.is_finite() {
            return Err(Error::invalid(format!("catchment must be positive, got {}", self.catchment_min)));
        }
        if self.horizons.is_empty() {
            return Err(Error::invalid("no horizons requested"));
        }
        if self.convergence_window == 0 {
            return Err(Error::invalid("convergence window must be at least 1"));
        }
        if !(self.convergence_tolerance > 0.0) {
            return Err(Error::invalid("convergence tolerance must be positive"));
        }
        if self.workers == Some(0) {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        Ok(())
    }
}

/// Counter-based Bernoulli sampler for bridge failures.
#[derive(Debug, Clone)]
pub struct FailureSampler {
    keys: Vec<[u8; 32]>,
}

impl FailureSampler {
    pub fn new<S: AsRef<str>>(seed: u64, bridge_ids: &[S]) -> Self {
        let keys = bridge_ids
            .iter()
            .map(|id| {
                let mut h = Sha256::new();
                h.update(seed.to_le_bytes());
                h.update(id.as_ref().as_bytes());
                h.finalize().into()
            })
            .collect();
        Self { keys }
    }

    pub fn bridge_count(&self) -> usize {
        self.keys.len()
    }

    /// Uniform variate in [0, 1) for one (sample, bridge) pair.
    pub fn uniform(&self, sample: u64, bridge: usize) -> f64 {
        let mut rng = ChaCha8Rng::from_seed(self.keys[bridge]);
        rng.set_stream(sample);
        rng.random::<f64>()
    }

    /// Failure flags for one sample; a bridge fails when its variate falls
    /// below its failure probability.
    pub fn sample(&self, probabilities: &[f64], sample: u64) -> Result<Vec<bool>> {
        if probabilities.len() != self.keys.len() {
            return Err(Error::invalid(format!(
                "{} probabilities for {} bridges",
                probabilities.len(),
                self.keys.len()
            )));
        }
        check_probabilities(probabilities)?;
        Ok(probabilities
            .iter()
            .enumerate()
            .map(|(b, &p)| self.uniform(sample, b) < p)
            .collect())
    }
}

fn check_probabilities(probabilities: &[f64]) -> Result<()> {
    match probabilities.iter().position(|p| !(0.0..=1.0).contains(p)) {
        Some(i) => Err(Error::invalid(format!(
            "failure probability {} of bridge {i} is outside [0, 1]",
            probabilities[i]
        ))),
        None => Ok(()),
    }
}

/// Independent Bernoulli failure draw for every bridge in one sample.
pub fn sample_failures<S: AsRef<str>>(probabilities: &[f64], seed: u64, sample: u64, bridge_ids: &[S]) -> Result<Vec<bool>> {
    FailureSampler::new(seed, bridge_ids).sample(probabilities, sample)
}

/// Failure probability of every bridge in the graph under a storm.
/// Bridges outside the surge coverage are unexposed and never fail.
pub fn bridge_failure_probabilities(
    graph: &RoadGraph,
    exposure: &NetworkExposure,
    fragility: &FragilityTable,
) -> Result<Vec<f64>> {
    graph
        .bridges()
        .iter()
        .zip(&exposure.bridges)
        .map(|(b, ex)| {
            let row = fragility.coefficients_for(b.mass_ton_per_m).map_err(|_| Error::UnsupportedBridge {
                bridge: Some(b.bridge_id.clone()),
                mass: b.mass_ton_per_m,
            })?;
            if ex.exposed {
                uplift_probability(&row, ex.h_max, ex.z_c)
            } else {
                Ok(0.0)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "samples", rename_all = "snake_case")]
pub enum Convergence {
    ConvergedAt(usize),
    NotConverged,
}

impl Convergence {
    pub fn samples(&self) -> Option<usize> {
        match self {
            Convergence::ConvergedAt(n) => Some(*n),
            Convergence::NotConverged => None,
        }
    }
}

/// Running means of a per-sample series: element `k` is the mean of the
/// first `k + 1` values.
pub fn running_mean_trace(values: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let width = values.first().map_or(0, Vec::len);
    let mut sums = vec![0.0; width];
    values
        .iter()
        .enumerate()
        .map(|(k, row)| {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
            sums.iter().map(|s| s / (k + 1) as f64).collect()
        })
        .collect()
}

/// Earliest sample count `n` (at least `window`) at which, for every demand,
/// the running means over the trailing `window` samples all lie within
/// `tolerance` (relative) of the running mean after `n` samples.
///
/// `trace[k][d]` is demand `d`'s running mean after `k + 1` samples.
pub fn convergence_report(trace: &[Vec<f64>], window: usize, tolerance: f64) -> Convergence {
    if window == 0 || trace.len() < window {
        return Convergence::NotConverged;
    }
    let stable = |n: usize| {
        let current = &trace[n - 1];
        trace[n - window..n].iter().all(|row| {
            row.iter().zip(current).all(|(&past, &now)| {
                let delta = (past - now).abs();
                delta == 0.0 || delta < tolerance * now.abs()
            })
        })
    };
    (window..=trace.len())
        .find(|&n| stable(n))
        .map_or(Convergence::NotConverged, Convergence::ConvergedAt)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonResult {
    pub horizon: Horizon,
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub quartile: Vec<Quartile>,
    pub groups: Vec<GroupAverage>,
    pub no_access_fraction: f64,
    /// Mean COV over demands with a positive mean score.
    pub average_cov: f64,
    pub convergence: Convergence,
    /// Edges closed regardless of sampling (inundation on the short horizon).
    pub deterministic_closures: usize,
    /// `trace[k][d]`: running mean of demand `d` after `k + 1` samples.
    #[serde(skip)]
    pub trace: Vec<Vec<f64>>,
    #[serde(skip)]
    sample_outcome: Vec<u32>,
    #[serde(skip)]
    outcomes: Vec<Vec<f64>>,
}

impl HorizonResult {
    /// Scaled scores of every demand in sample `k`.
    pub fn sample_scores(&self, k: usize) -> &[f64] {
        &self.outcomes[self.sample_outcome[k] as usize]
    }

    /// Number of distinct closure states seen across samples.
    pub fn distinct_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn mean_score(&self) -> f64 {
        if self.mean.is_empty() {
            0.0
        } else {
            self.mean.iter().sum::<f64>() / self.mean.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub storm: String,
    pub seed: u64,
    pub samples: usize,
    pub catchment_min: f64,
    pub demand_ids: Vec<String>,
    /// `(bridge_id, failure probability)` in bridge-id order.
    pub bridge_probabilities: Vec<(String, f64)>,
    pub horizons: Vec<HorizonResult>,
}

impl ScenarioResult {
    pub fn horizon(&self, h: Horizon) -> Option<&HorizonResult> {
        self.horizons.iter().find(|r| r.horizon == h)
    }
}

pub struct ScenarioInputs<'a> {
    pub graph: &'a RoadGraph,
    pub surge: &'a SurgeField,
    pub supplies: &'a [SupplySite],
    pub demands: &'a [DemandSite],
    pub fragility: &'a FragilityTable,
}

pub fn run_scenario(config: &ScenarioConfig, inputs: &ScenarioInputs<'_>) -> Result<ScenarioResult> {
    config.validate()?;
    match config.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
            pool.install(|| run_inner(config, inputs))
        }
        None => run_inner(config, inputs),
    }
}

fn run_inner(config: &ScenarioConfig, inputs: &ScenarioInputs<'_>) -> Result<ScenarioResult> {
    let graph = inputs.graph;
    let exposure = NetworkExposure::evaluate(graph, inputs.surge)?;
    let probabilities = bridge_failure_probabilities(graph, &exposure, inputs.fragility)?;
    let bridge_ids: Vec<&str> = graph.bridges().iter().map(|b| b.bridge_id.as_str()).collect();
    let sampler = FailureSampler::new(config.seed, &bridge_ids);

    let draws: Vec<Vec<u32>> = (0..config.samples as u64)
        .into_par_iter()
        .map(|k| {
            sampler.sample(&probabilities, k).map(|flags| {
                flags
                    .iter()
                    .enumerate()
                    .filter(|(_, &f)| f)
                    .map(|(b, _)| b as u32)
                    .collect()
            })
        })
        .collect::<Result<_>>()?;

    // Identical failure sets yield identical scores; evaluate each once.
    let mut outcome_index: HashMap<&[u32], u32> = HashMap::new();
    let mut distinct: Vec<&[u32]> = Vec::new();
    let sample_outcome: Vec<u32> = draws
        .iter()
        .map(|d| {
            *outcome_index.entry(d.as_slice()).or_insert_with(|| {
                distinct.push(d.as_slice());
                (distinct.len() - 1) as u32
            })
        })
        .collect();

    let demand_nodes = snap_all(graph, inputs.demands.iter().map(|d| &d.location))?;
    let supply_nodes = snap_all(graph, inputs.supplies.iter().map(|s| &s.location))?;
    let router = TravelTimeRouter::new(graph, demand_nodes, supply_nodes, config.catchment_min)?;

    let no_failures = vec![false; graph.bridges().len()];
    let mut horizons = Vec::with_capacity(config.horizons.len());
    for &h in &config.horizons {
        let base_mask = closure_mask(graph, &exposure, &config.thresholds, &no_failures, h)?;
        let base = router.base(&base_mask);
        let outcomes: Vec<Vec<f64>> = distinct
            .par_iter()
            .map(|failed| {
                let extra: Vec<usize> = failed
                    .iter()
                    .flat_map(|&b| graph.bridge_edges(b as usize).iter().copied())
                    .collect();
                let table = router.table_with_extra(&base, &extra);
                two_step_fca(&table, inputs.supplies, inputs.demands).values
            })
            .collect();
        horizons.push(aggregate(config, h, base_mask.len(), inputs.demands, &sample_outcome, outcomes)?);
    }

    Ok(ScenarioResult {
        storm: config.storm.clone(),
        seed: config.seed,
        samples: config.samples,
        catchment_min: config.catchment_min,
        demand_ids: inputs.demands.iter().map(|d| d.demand_id.clone()).collect(),
        bridge_probabilities: bridge_ids.iter().map(|s| s.to_string()).zip(probabilities).collect(),
        horizons,
    })
}

fn snap_all<'p>(graph: &RoadGraph, points: impl Iterator<Item = &'p crate::geom::Point>) -> Result<Vec<usize>> {
    points
        .map(|p| graph.snap(p).ok_or_else(|| Error::invalid("network has no nodes to snap to")))
        .collect()
}

fn aggregate(
    config: &ScenarioConfig,
    horizon: Horizon,
    deterministic_closures: usize,
    demands: &[DemandSite],
    sample_outcome: &[u32],
    outcomes: Vec<Vec<f64>>,
) -> Result<HorizonResult> {
    let n_dem = demands.len();
    let n = sample_outcome.len() as f64;
    let mut sum = vec![0.0; n_dem];
    let mut min = vec![f64::INFINITY; n_dem];
    let mut max = vec![f64::NEG_INFINITY; n_dem];
    let mut trace = Vec::with_capacity(sample_outcome.len());
    for (k, &o) in sample_outcome.iter().enumerate() {
        let scores = &outcomes[o as usize];
        for d in 0..n_dem {
            sum[d] += scores[d];
            min[d] = min[d].min(scores[d]);
            max[d] = max[d].max(scores[d]);
        }
        trace.push(sum.iter().map(|s| s / (k + 1) as f64).collect::<Vec<f64>>());
    }
    let mean: Vec<f64> = (0..n_dem)
        .map(|d| {
            if min[d] == max[d] {
                min[d]
            } else {
                (sum[d] / n).clamp(min[d], max[d])
            }
        })
        .collect();
    let mut sq = vec![0.0; n_dem];
    for &o in sample_outcome {
        let scores = &outcomes[o as usize];
        for d in 0..n_dem {
            let dev = scores[d] - mean[d];
            sq[d] += dev * dev;
        }
    }
    let cov: Vec<f64> = (0..n_dem)
        .map(|d| {
            if min[d] == max[d] || mean[d] == 0.0 {
                0.0
            } else {
                (sq[d] / n).sqrt() / mean[d]
            }
        })
        .collect();
    let positive: Vec<f64> = cov.iter().zip(&mean).filter(|(_, &m)| m > 0.0).map(|(&c, _)| c).collect();
    let average_cov = if positive.is_empty() {
        0.0
    } else {
        positive.iter().sum::<f64>() / positive.len() as f64
    };
    Ok(HorizonResult {
        horizon,
        quartile: quartile_classify(&mean),
        groups: group_averages(&mean, demands)?,
        no_access_fraction: no_access_fraction(&mean),
        average_cov,
        convergence: convergence_report(&trace, config.convergence_window, config.convergence_tolerance),
        deterministic_closures,
        mean,
        cov,
        min,
        max,
        trace,
        sample_outcome: sample_outcome.to_vec(),
        outcomes,
    })
}
