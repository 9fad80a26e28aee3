//! Frozen variables in random boolean constraint satisfaction problems.
//!
//! The crate covers constraint models and their structural properties,
//! threshold constants, planted and uniform instance sampling, *-core
//! peeling of the essential hypergraph, and exact freezing oracles for
//! small instances.

pub mod error;
pub mod freeze;
pub mod greedy;
pub mod hypergraph;
pub mod model;
pub mod numeric;
pub mod peel;
pub mod sampler;
pub mod solutions;
pub mod thresholds;

pub use error::{Error, Result};
pub use freeze::{
    closure, decompose_flippable, exact_frozen_set, frozen_scan, greatest_flippable_subset,
    is_cyclic, is_flippable, is_weakly_flippable, peeling_chain, FlippableDecomposition,
    FreezeScanReport, SolutionGraph,
};
pub use greedy::{greedy_solve, GreedyRun, RepairBudget};
pub use hypergraph::{build_gamma, EdgeType, EssentialHypergraph};
pub use model::{
    build_distance_model, check_feasible_1essential_characterization, validate_model,
    ConstraintFunction, CspModel, FourierTable, Orbit, Property, PropertyReport, SignVector,
};
pub use peel::{
    core_stats, exact_star_depth, parallel_rounds, peel_star_core, peel_star_core_randomized,
    star_depth, CoreSummary, PeelTrace, RoundStats, StarCore, StarDepth,
};
pub use sampler::{
    derive_seed, sample_csp, sample_essential_model, sample_model_a, sample_planted,
    sample_uniform_small, CspInstance, EdgeTypeDistribution, PlantedPair, UniformDraw,
};
pub use solutions::enumerate_solutions;
pub use thresholds::{
    alpha_k, binary_entropy, fixed_point_trace, lambda, p_phi_poly, r_p, r_sat, rho_k,
    threshold_report, x_k, xi, FixedPointTrace, ThresholdReport,
};
