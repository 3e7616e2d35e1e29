//! End-to-end pipeline for occupational heat-exposure analysis from wearable
//! and weather streams.
//!
//! The crate is organized as a chain of stages, each usable on its own:
//!
//! * [`datamodel`] — canonical representation of sensor streams, trips,
//!   feature tables and subject splits, plus on-disk CSV/JSON layout.
//! * [`dsp`] — Butterworth filtering (zero-phase), heart-rate extraction from
//!   blood volume pulse, tonic/phasic electrodermal decomposition.
//! * [`features`] — one-minute windowed features: WBGT chain (globe
//!   temperature, natural wet bulb), cardiac cost, GPS/accelerometer activity.
//! * [`stats`] — pairwise Pearson correlation with Benjamini-Hochberg
//!   adjustment and the restricted correlation network.
//! * [`lgbn`] — linear Gaussian Bayesian networks: BIC hill-climb and
//!   continuous (acyclicity-penalized) structure learning, MLE fitting,
//!   conditional-Gaussian prediction, NMAE model selection.
//! * [`climate`] — monthly climate-delta perturbation of the observed
//!   weather and biomarker re-inference under ensemble scenarios.
//! * [`survivability`] — WBGT risk bands, exposure metrics, and bootstrap
//!   Monte Carlo uncertainty over the (ensemble x resample) grid.
//! * [`synth`] — deterministic synthetic-cohort generator with known ground
//!   truth, used by the test suites and the `synth` CLI stage.

pub mod climate;
pub mod datamodel;
pub mod dsp;
pub mod features;
pub mod lgbn;
pub mod stats;
pub mod survivability;
pub mod synth;

mod error;

pub use error::{Error, Result};
