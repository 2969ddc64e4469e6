//! Discretised Kyle-Back market with known ground truth.

mod decomposition;
mod kyle;
pub mod montecarlo;
mod params;
pub mod tape;

pub use decomposition::{
    frequency_sweep, leakage_decomposition, sdf_adjusted_omega, FrequencyPoint, LeakageDecomposition, SdfPathTerms,
};
pub use kyle::{simulate_kyle, SimSession};
pub use montecarlo::{
    frequency_sweep_mc, kyle_summary, run_paths, sdf_bound_check, KyleSummary, LognormalSdf, SdfCheck, SweepPoint,
};
pub use params::{NoiseVolatility, SimParams};
