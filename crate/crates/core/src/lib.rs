//! Confidence intervals for the slope of a linear random-intercept panel
//! model that exploit uncertain prior information that the time-varying
//! covariate is exogenous.
//!
//! The crate is `no_std` (with `alloc`). Enabling the `std` feature turns on
//! rayon-backed parallelism for grid construction and Monte Carlo studies;
//! results are bit-identical with or without it.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod coverage;
mod error;
pub mod interval;
pub mod montecarlo;
pub mod normal;
pub mod optimize;
pub mod pair;
mod par;
pub mod panel;
pub mod qp;
pub mod quadrature;
pub mod spline;
pub mod sqp;
pub mod stream;
mod sum;

pub use coverage::KgContext;
pub use error::{Error, Result};
pub use interval::{CiResult, FunctionGrid, GridDesign, GridEntry};
pub use montecarlo::{Noise, SimConfig, SimEstimate, SimKind, SimRun};
pub use optimize::OptimizedPair;
pub use pair::KnotFunctionPair;
pub use panel::{DesignSummary, FitResult, GlsFit, Interval, ModelParams, PanelData};
