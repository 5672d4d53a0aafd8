//! Matter-wave diffraction of heavy molecules through single and double
//! slits.
//!
//! The pipeline has four stages:
//!
//! 1. [`modes`]: the incident plane wave is expanded in the guided modes of
//!    each hard-walled slit.
//! 2. [`propagation`]: the exit-plane field is carried to the screen with the
//!    free-particle propagator in the far-field limit.
//! 3. [`intensity`]: the slit amplitudes are superposed coherently or with
//!    an environment-induced loss of coherence, giving relative intensity
//!    patterns and fringe visibilities.
//! 4. [`calibration`]: free scale and coherence parameters are fitted to
//!    measured count profiles.
//!
//! [`config`] and [`io`] provide the file formats used by the `matterwave`
//! binary.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod config;
pub mod error;
pub mod intensity;
pub mod io;
pub mod modes;
pub mod oracle;
pub mod physics;
pub mod propagation;
pub mod quadrature;

pub use error::{Error, Result};
pub use modes::{ModeIndex, ModeTruncation, Slit};
pub use physics::{
    derive_kinematics, sin_beta, Kinematics, PhysicalParams, ScreenGeometry, SlitGeometry,
};
pub use propagation::{Diffractor, Kernel, ScreenAmplitude, ScreenPoint};
