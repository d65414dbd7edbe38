//! Per-channel nonlinear-interference SNR estimation for ultra-wideband
//! (S+C+L band, 20 THz and beyond) WDM fiber links.
//!
//! The pipeline is semi-analytical:
//!
//! 1. [`raman::solve_raman`] integrates the coupled power-evolution
//!    equations (intrinsic loss + inter-channel stimulated Raman
//!    scattering) over one span.
//! 2. [`fit::fit_all`] matches each channel's numerical power profile to a
//!    first-order two-exponential model, yielding per-channel effective
//!    loss/ISRS parameters.
//! 3. [`nli::compute_nli`] evaluates a closed-form GN-model expression with
//!    those parameters, including modulation-format (excess-kurtosis)
//!    corrections, and [`nli::total_snr`] folds in amplifier/transceiver
//!    noise.
//!
//! [`link::evaluate_link`] runs the full pipeline for a multi-span link.
//! Internal units are THz, km, W and ps throughout; decibel quantities are
//! converted at the ingestion boundaries.

pub mod error;
pub mod fit;
pub mod formats;
pub mod kahan;
pub mod link;
pub mod model;
pub mod nli;
pub mod raman;
pub mod synthetic;
pub mod units;

mod exec;

pub use error::{Error, Result};
pub use fit::EffectiveParams;
pub use link::{evaluate_link, EvalOptions, LinkEngine, LinkResult};
pub use model::{BandSegment, Channel, ChannelPlan, FiberProfile, LinkSpec};
pub use nli::{compute_nli, total_snr, NliResult};
pub use raman::{solve_raman, PowerEvolution, ZGrid};
