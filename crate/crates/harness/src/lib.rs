//! Experiment orchestration for the identification simulator: seeded
//! instance sweeps that run every strategy on the same models, exact
//! feedback-vertex-set lower bounds, aggregation, and CSV output.

pub mod config;
pub mod report;
pub mod selftest;
pub mod sweep;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ced_core::lscm::LscmError),
    #[error(transparent)]
    Policy(#[from] ced_core::policy::PolicyError),
    #[error(transparent)]
    Fvs(#[from] ced_core::fvs::FvsError),
    #[error(transparent)]
    Graph(#[from] ced_core::graph::GraphError),
    #[error("could not build a usable instance for n = {n}, trial {trial} in {attempts} attempts")]
    InstanceGeneration { n: usize, trial: usize, attempts: u64 },
    #[error("self-test {suite} failed: {detail}")]
    SelfTest { suite: &'static str, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
