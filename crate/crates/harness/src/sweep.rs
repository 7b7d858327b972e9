//! The sweep driver: for every (node count, trial) cell it builds one
//! seeded random instance, runs every configured strategy against the
//! same model and the same observational output, and optionally solves
//! the exact feedback-vertex-set lower bound on the true graph.

use std::time::Instant;

use ced_core::fvs::{self, FvsResult};
use ced_core::lscm::{self, IcaOutput, LscmError, WeightMatrix, DEFAULT_WEIGHT_RANGE};
use ced_core::policy::{self, PolicyError, PolicyKind, RunOptions, RunOutcome};
use ced_core::seeds;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::HarnessError;

/// How many bumped sub-seeds to try before giving up on a cell. Failures
/// happen when weight draws land on a numerically singular model or an
/// intervention makes it singular; both are rare and seed-dependent.
const MAX_ATTEMPTS: u64 = 32;

// Independent seed streams per cell, so adding a strategy or toggling a
// flag never disturbs the instances themselves.
const TAG_MODEL: u64 = 0x11;
const TAG_OBS: u64 = 0x12;
const TAG_RUN: u64 = 0x13;

/// One strategy's result on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    pub strategy: PolicyKind,
    /// Seed the instance model was generated from.
    pub seed: u64,
    pub interventions: usize,
    pub identified: bool,
    pub fvs_size: Option<usize>,
    /// Surviving-class-size trace, exact mode only: initial size, then
    /// the size after each intervention.
    pub class_size_trace: Option<Vec<u64>>,
    pub wall_ms: Option<u128>,
}

/// A generated instance: the hidden model and what the observer sees.
#[derive(Debug, Clone)]
pub struct Instance {
    pub w: WeightMatrix,
    pub obs: IcaOutput,
    pub seed: u64,
    pub attempt: u64,
}

/// Runs the full sweep. Cells are independent and run in parallel;
/// records come back sorted by (n, trial, strategy position) regardless
/// of scheduling, so equal configurations produce identical output.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>, HarnessError> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = cfg
        .node_counts
        .iter()
        .flat_map(|&n| (0..cfg.trials_per_size).map(move |trial| (n, trial)))
        .collect();
    let per_cell: Result<Vec<Vec<TrialRecord>>, HarnessError> =
        cells.par_iter().map(|&(n, trial)| run_trial(cfg, n, trial)).collect();
    Ok(per_cell?.into_iter().flatten().collect())
}

/// All strategies on one freshly generated instance. An instance whose
/// intervention turns singular mid-run is discarded and rebuilt from the
/// next sub-seed, so every returned record saw a completed run.
pub fn run_trial(
    cfg: &ExperimentConfig,
    n: usize,
    trial: usize,
) -> Result<Vec<TrialRecord>, HarnessError> {
    for attempt in 0..MAX_ATTEMPTS {
        let Some(instance) = generate_instance(cfg, n, trial, attempt) else {
            continue;
        };
        let fvs_size = match cfg.fvs_enabled {
            true => Some(fvs::min_fvs(&instance.w.support())?.size),
            false => None,
        };
        let mut records = Vec::with_capacity(cfg.strategies.len());
        let mut discard = false;
        for (position, &strategy) in cfg.strategies.iter().enumerate() {
            match run_strategy(cfg, &instance, strategy, position, n, trial) {
                Ok(outcome) => {
                    let (outcome, wall_ms) = outcome;
                    records.push(TrialRecord {
                        n,
                        trial,
                        strategy,
                        seed: instance.seed,
                        interventions: outcome.interventions_used(),
                        identified: outcome.identified,
                        fvs_size,
                        class_size_trace: outcome.class_size_trace,
                        wall_ms,
                    });
                }
                Err(PolicyError::Model(LscmError::SingularIntervention { .. })) => {
                    discard = true;
                    break;
                }
                Err(other) => return Err(other.into()),
            }
        }
        if !discard {
            return Ok(records);
        }
    }
    Err(HarnessError::InstanceGeneration { n, trial, attempts: MAX_ATTEMPTS })
}

/// One strategy on one instance, with a verbose outcome; what the
/// `single` subcommand shows.
pub fn run_single(
    cfg: &ExperimentConfig,
    kind: PolicyKind,
    n: usize,
    trial: usize,
) -> Result<(Instance, RunOutcome, Option<FvsResult>), HarnessError> {
    cfg.validate()?;
    for attempt in 0..MAX_ATTEMPTS {
        let Some(instance) = generate_instance(cfg, n, trial, attempt) else {
            continue;
        };
        let fvs_result = match cfg.fvs_enabled {
            true => Some(fvs::min_fvs(&instance.w.support())?),
            false => None,
        };
        match run_strategy(cfg, &instance, kind, 0, n, trial) {
            Ok((outcome, _)) => return Ok((instance, outcome, fvs_result)),
            Err(PolicyError::Model(LscmError::SingularIntervention { .. })) => continue,
            Err(other) => return Err(other.into()),
        }
    }
    Err(HarnessError::InstanceGeneration { n, trial, attempts: MAX_ATTEMPTS })
}

fn generate_instance(
    cfg: &ExperimentConfig,
    n: usize,
    trial: usize,
    attempt: u64,
) -> Option<Instance> {
    let path = [TAG_MODEL, n as u64, trial as u64, attempt];
    let seed = seeds::derive(cfg.master_seed, &path);
    let p = cfg.edge_mode.probability(n);
    let w = lscm::generate_er_model(n, p, DEFAULT_WEIGHT_RANGE, seed).ok()?;
    let obs_seed = seeds::derive(cfg.master_seed, &[TAG_OBS, n as u64, trial as u64, attempt]);
    let obs = lscm::ica_oracle(&w, obs_seed);
    Some(Instance { w, obs, seed, attempt })
}

fn run_strategy(
    cfg: &ExperimentConfig,
    instance: &Instance,
    kind: PolicyKind,
    position: usize,
    n: usize,
    trial: usize,
) -> Result<(RunOutcome, Option<u128>), PolicyError> {
    let run_seed = seeds::derive(
        cfg.master_seed,
        &[TAG_RUN, n as u64, trial as u64, instance.attempt, position as u64],
    );
    let options = RunOptions::new(cfg.budget.for_nodes(n), cfg.mode, run_seed);
    let started = Instant::now();
    let outcome = policy::run_identification(&instance.w, &instance.obs, kind, &options)?;
    let wall_ms = cfg.record_wall_time.then(|| started.elapsed().as_millis());
    Ok((outcome, wall_ms))
}
