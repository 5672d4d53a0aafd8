//! Randomised comparison of the closed-form aperture integral against
//! adaptive quadrature.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::propagation::{aperture_integral_closed, aperture_integral_quadrature};

/// Absolute quadrature tolerance, relative to the aperture extent.
pub const QUADRATURE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCase {
    pub q: f64,
    pub mode: u64,
    pub extent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub cases: usize,
    pub near_resonant: usize,
    pub max_relative_error: f64,
    pub worst: Option<OracleCase>,
}

/// `n` cases from `seed`: odd modes up to 63, extents log-uniform over
/// [1e-8, 1e-1] m, `q * extent` uniform in [-100, 100], with every fourth
/// case placed within 1e-6 rad of the resonance `q * extent = +-mode * pi`.
pub fn random_cases(n: usize, seed: u64) -> Vec<OracleCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mode = 2 * rng.random_range(0..32u64) + 1;
            let extent = 10f64.powf(rng.random_range(-8.0..-1.0));
            let ql = if i % 4 == 0 {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                sign * (mode as f64 * PI + rng.random_range(-1e-6..=1e-6))
            } else {
                rng.random_range(-100.0..=100.0)
            };
            OracleCase {
                q: ql / extent,
                mode,
                extent,
            }
        })
        .collect()
}

pub fn relative_error(case: &OracleCase) -> Result<f64> {
    let closed = aperture_integral_closed(case.q, case.mode, case.extent);
    let quad = aperture_integral_quadrature(case.q, case.mode, case.extent, QUADRATURE_TOL)?;
    Ok((closed - quad).norm() / quad.norm())
}

pub fn run_oracle(n: usize, seed: u64) -> Result<OracleReport> {
    let cases = random_cases(n, seed);
    let mut report = OracleReport {
        cases: n,
        near_resonant: n.div_ceil(4),
        max_relative_error: 0.0,
        worst: None,
    };
    for case in &cases {
        let err = relative_error(case)?;
        if err > report.max_relative_error || report.worst.is_none() {
            report.max_relative_error = err;
            report.worst = Some(*case);
        }
    }
    Ok(report)
}
