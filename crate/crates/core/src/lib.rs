//! Experiment design for cyclic linear causal models.
//!
//! A linear model `x = Wx + e` with independent non-Gaussian noise is
//! identifiable from observational data only up to a permutation of the
//! rows of `I - W`. This crate represents that ambiguity as a bipartite
//! graph whose perfect matchings are exactly the candidate causal graphs,
//! and provides the pieces needed to resolve it experimentally:
//!
//! - [`graph`]: directed graphs, strongly connected components, cycle
//!   reversion, and brute-force equivalence-class enumeration.
//! - [`lscm`]: weight matrices, an idealized ICA oracle for observational
//!   and interventional data, and recovery of a weight-matrix row from a
//!   single intervention.
//! - [`matching`]: the bipartite view of the equivalence class with
//!   enumeration, uniqueness testing, and a greedy matching sampler.
//! - [`policy`]: intervention-selection strategies, exact and sampled
//!   marginal-benefit computation, and a submodularity checker.
//! - [`fvs`]: exact minimum feedback vertex sets, the per-instance lower
//!   bound on how many interventions any strategy needs.
//! - [`seeds`]: stable derivation of independent sub-seeds, so every
//!   randomized component replays from one master seed.

pub mod fvs;
pub mod graph;
pub mod lscm;
pub mod matching;
pub mod policy;
pub mod seeds;
