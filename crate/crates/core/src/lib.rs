//! Quantile-regression inference: regression quantiles by interior point,
//! conditional-density estimates built from the fitted quantile process,
//! Wald tests of linear restrictions and a Monte Carlo size/power harness.

pub mod density;
pub mod error;
pub mod io;
pub mod numerics;
pub mod rq;
pub mod sim;
pub mod wald;

pub use density::{
    bandwidth_h, compute_h, draw_levels, eg_density, estimate_g, estimate_g_eg, estimate_g_hk,
    estimate_g_iid, estimate_g_powell, grid_size_m, hall_sheather_bandwidth, infeasible_density,
    kernel_epa, EgConfig, KernelSupport, GEstimate, GMethod, HMatrix, LevelMode,
};
pub use error::{Error, Result};
pub use numerics::Matrix;
pub use rq::{check_loss, fit_process, fit_rq, Dataset, QuantileFit, QuantileProcess};
pub use wald::{compute_w, pvalue_curve, wald_test, CurvePoint, Restriction, WaldResult};
