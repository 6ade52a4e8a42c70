//! Many-objective Bayesian optimization with similarity-driven objective
//! reduction.

pub mod gp;
pub mod lbfgs;
pub mod qmc;
pub mod seeds;
pub mod pareto;
pub mod similarity;
pub mod benchmarks;
pub mod bo;
pub mod report;
