//! Guided-mode expansion of the wavefunction inside a hard-walled slit.
//!
//! Inside slit 1 the stationary state is a double sine series over odd mode
//! numbers `(2n+1)` along the slit length `b` (x) and `(2m+1)` along the
//! width `a` (y), each mode travelling along z with its own longitudinal
//! wavevector. Slit 2 is the same series on the translated coordinate
//! `y' = y - a - d`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::physics::{Kinematics, SlitGeometry};

/// Which of the two apertures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slit {
    First,
    Second,
}

/// Index into the odd-only mode sums; the physical mode numbers are
/// `2m + 1` (width) and `2n + 1` (length).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    pub m: u32,
    pub n: u32,
}

impl ModeIndex {
    pub fn new(m: u32, n: u32) -> Self {
        Self { m, n }
    }

    pub fn width_mode(&self) -> u64 {
        2 * self.m as u64 + 1
    }

    pub fn length_mode(&self) -> u64 {
        2 * self.n as u64 + 1
    }
}

/// Cut-offs for the double mode sum. Indices run over `0..=max_m` and
/// `0..=max_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeTruncation {
    pub max_m: u32,
    pub max_n: u32,
    /// Relative change below which the adaptive refinement stops.
    pub tail_tol: f64,
}

impl Default for ModeTruncation {
    fn default() -> Self {
        Self {
            max_m: 50,
            max_n: 50,
            tail_tol: 1e-6,
        }
    }
}

impl ModeTruncation {
    pub fn new(max_m: u32, max_n: u32, tail_tol: f64) -> Result<Self> {
        let t = Self {
            max_m,
            max_n,
            tail_tol,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tol > 0.0) {
            return Err(Error::invalid(format!(
                "tail_tol must be positive, got {}",
                self.tail_tol
            )));
        }
        Ok(())
    }

    /// Number of width modes in the sum.
    pub fn width_modes(&self) -> usize {
        self.max_m as usize + 1
    }

    /// Number of length modes in the sum.
    pub fn length_modes(&self) -> usize {
        self.max_n as usize + 1
    }

    /// Refined cut-off used by the doubling loop: index `i` becomes
    /// `2i + 1`, doubling the number of modes.
    pub(crate) fn doubled(max: u32) -> u32 {
        max.saturating_mul(2).saturating_add(1)
    }
}

/// `sin(pi x)` with exact zeros at the integers.
pub(crate) fn sin_pi(x: f64) -> f64 {
    let mut r = x - 2.0 * (x * 0.5).round();
    if r > 0.5 {
        r = 1.0 - r;
    } else if r < -0.5 {
        r = -1.0 - r;
    }
    (PI * r).sin()
}

/// Fourier coefficient of the constant incident amplitude on mode `idx`:
/// `16 A / ((2m+1)(2n+1) pi^2)`.
pub fn fourier_coefficient(idx: ModeIndex, amplitude: f64) -> f64 {
    16.0 * amplitude / ((idx.width_mode() * idx.length_mode()) as f64 * PI * PI)
}

/// Coefficient addressed by physical mode numbers; vanishes unless both
/// are odd.
pub fn fourier_coefficient_raw(width_mode: u64, length_mode: u64, amplitude: f64) -> f64 {
    if width_mode % 2 == 1 && length_mode % 2 == 1 {
        16.0 * amplitude / ((width_mode * length_mode) as f64 * PI * PI)
    } else {
        0.0
    }
}

/// Longitudinal wavevector of one slit mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongitudinalWavevector {
    /// `k_z`; real for propagating modes, positive imaginary when evanescent.
    pub value: Complex64,
    /// `k_z - k`, evaluated without cancellation.
    pub deficit: Complex64,
    k: f64,
}

impl LongitudinalWavevector {
    pub fn is_evanescent(&self) -> bool {
        self.value.im > 0.0
    }

    /// `exp(i k_z z)`, split as `exp(i k z) exp(i (k_z - k) z)`.
    pub fn phase(&self, z: f64) -> Complex64 {
        let carrier = Complex64::from_polar(1.0, self.k * z);
        let i = Complex64::i();
        carrier * (i * self.deficit * z).exp()
    }
}

/// Squared transverse wavenumber `((2n+1) pi / b)^2 + ((2m+1) pi / a)^2`.
fn transverse(idx: ModeIndex, geo: &SlitGeometry) -> f64 {
    let kx = idx.length_mode() as f64 * PI / geo.length;
    let ky = idx.width_mode() as f64 * PI / geo.width;
    kx.hypot(ky)
}

pub fn longitudinal_wavevector(
    idx: ModeIndex,
    kin: &Kinematics,
    geo: &SlitGeometry,
) -> LongitudinalWavevector {
    wavevector_from_transverse(kin.k, transverse(idx, geo))
}

pub(crate) fn wavevector_from_transverse(k: f64, kt: f64) -> LongitudinalWavevector {
    let radicand = (k - kt) * (k + kt);
    if radicand >= 0.0 {
        let kz = radicand.sqrt();
        LongitudinalWavevector {
            value: Complex64::new(kz, 0.0),
            deficit: Complex64::new(-kt * kt / (k + kz), 0.0),
            k,
        }
    } else {
        let kz = Complex64::new(0.0, (-radicand).sqrt());
        LongitudinalWavevector {
            value: kz,
            deficit: kz - k,
            k,
        }
    }
}

/// Wavefunction `psi_j(x, y, z, t)` inside slit `j` from the truncated
/// double mode sum, including the stationary time factor `exp(-i E t / hbar)`.
pub fn in_slit_wavefunction(
    point: [f64; 3],
    t: f64,
    slit: Slit,
    trunc: &ModeTruncation,
    kin: &Kinematics,
    geo: &SlitGeometry,
    amplitude: f64,
) -> Result<Complex64> {
    let [x, y, z] = point;
    let y_local = local_width_coordinate(y, slit, geo)?;
    if !(0.0..=geo.length).contains(&x) {
        return Err(Error::domain(format!(
            "x = {x} lies outside the slit length [0, {}]",
            geo.length
        )));
    }
    if !(0.0..=geo.thickness).contains(&z) {
        return Err(Error::domain(format!(
            "z = {z} lies outside the slit thickness [0, {}]",
            geo.thickness
        )));
    }
    let psi = mode_sum(x, y_local, z, trunc, kin, geo, amplitude);
    Ok(psi * Complex64::from_polar(1.0, -kin.omega * t))
}

/// Exit-plane (`z = c`) wavefunction with the time factor stripped.
pub fn exit_plane_wavefunction(
    x0: f64,
    y0: f64,
    slit: Slit,
    trunc: &ModeTruncation,
    kin: &Kinematics,
    geo: &SlitGeometry,
    amplitude: f64,
) -> Result<Complex64> {
    in_slit_wavefunction(
        [x0, y0, geo.thickness],
        0.0,
        slit,
        trunc,
        kin,
        geo,
        amplitude,
    )
}

fn local_width_coordinate(y: f64, slit: Slit, geo: &SlitGeometry) -> Result<f64> {
    match slit {
        Slit::First => {
            if (0.0..=geo.width).contains(&y) {
                Ok(y)
            } else {
                Err(Error::domain(format!(
                    "y = {y} lies outside slit 1 [0, {}]",
                    geo.width
                )))
            }
        }
        Slit::Second => {
            let lo = geo.width + geo.gap;
            let hi = 2.0 * geo.width + geo.gap;
            if (lo..=hi).contains(&y) {
                Ok((y - geo.width - geo.gap).clamp(0.0, geo.width))
            } else {
                Err(Error::domain(format!(
                    "y = {y} lies outside slit 2 [{lo}, {hi}]"
                )))
            }
        }
    }
}

fn mode_sum(
    x: f64,
    y: f64,
    z: f64,
    trunc: &ModeTruncation,
    kin: &Kinematics,
    geo: &SlitGeometry,
    amplitude: f64,
) -> Complex64 {
    let tx = x / geo.length;
    let ty = y / geo.width;
    let sin_x: Vec<f64> = (0..trunc.length_modes())
        .map(|n| sin_pi((2 * n + 1) as f64 * tx))
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    for m in 0..=trunc.max_m {
        let sy = sin_pi((2 * m as u64 + 1) as f64 * ty);
        if sy == 0.0 {
            continue;
        }
        let mut row = Complex64::new(0.0, 0.0);
        for (n, &sx) in sin_x.iter().enumerate() {
            if sx == 0.0 {
                continue;
            }
            let idx = ModeIndex::new(m, n as u32);
            let kz = longitudinal_wavevector(idx, kin, geo);
            row += kz.phase(z) * (fourier_coefficient(idx, amplitude) * sx);
        }
        total += row * sy;
    }
    total
}
