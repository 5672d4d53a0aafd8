//! Far-field propagation of the exit-plane wavefunction to the screen.
//!
//! The free-particle propagator is reduced with the linearised path length
//! `R^2 ~ r^2 - 2 r (sin(alpha) x0 + sin(beta) y0)`, which factors the
//! aperture integral into one x and one y integral per mode. Those have a
//! closed form (`aperture_integral_closed`); an adaptive quadrature of the
//! same integrand is kept as an independent check.
//!
//! Phases of order `k r ~ 1e12` rad are never mixed into the mode sums: the
//! common factor is returned separately by [`phase_reference`] and the
//! per-mode through-slit phases are evaluated relative to `k c`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modes::{fourier_coefficient, longitudinal_wavevector, ModeIndex, ModeTruncation, Slit};
use crate::physics::{sin_beta, Kinematics, PhysicalParams, SlitGeometry};
use crate::quadrature;

/// Prefactor family applied to both slits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    /// `(1/i)^{3/2} (k / 2 pi r)^{3/2} exp(i k r / 2)`.
    #[default]
    Fresnel,
    /// `-(exp(i k R) / 4 pi R) [i k_z + (i k - 1/R) sqrt(cos^2 alpha - (s/R)^2)]`.
    Rayleigh,
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Fresnel => "fresnel",
            Kernel::Rayleigh => "rayleigh",
        })
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fresnel" => Ok(Kernel::Fresnel),
            "rayleigh" => Ok(Kernel::Rayleigh),
            other => Err(Error::validation(
                "kernel",
                format!("expected `fresnel` or `rayleigh`, got `{other}`"),
            )),
        }
    }
}

/// Observation point on the screen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenPoint {
    /// Screen coordinate along y, measured from the aperture symmetry axis.
    pub s: f64,
    pub alpha: f64,
    /// Distance from the aperture origin.
    pub r: f64,
    pub sin_beta: f64,
}

impl ScreenPoint {
    /// Point at screen coordinate `s` on a screen `l` away, with
    /// `r = sqrt(l^2 + s^2)`.
    pub fn on_screen(s: f64, l: f64, alpha: f64) -> Result<Self> {
        Ok(Self {
            s,
            alpha,
            r: l.hypot(s),
            sin_beta: sin_beta(s, l)?,
        })
    }

    /// Point with an explicitly given distance `r`.
    pub fn from_parts(s: f64, alpha: f64, r: f64, sin_beta: f64) -> Result<Self> {
        if !(r > 0.0) || !(sin_beta.abs() <= 1.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!(
                "invalid screen point r={r}, sin_beta={sin_beta}"
            )));
        }
        Ok(Self {
            s,
            alpha,
            r,
            sin_beta,
        })
    }
}

/// Free-particle propagator `(M / 2 pi i hbar dt)^{3/2} exp(i M R^2 / 2 hbar dt)`.
pub fn free_propagator(distance: f64, dt: f64, params: &PhysicalParams) -> Result<Complex64> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!(
            "propagation time must be positive, got {dt}"
        )));
    }
    let modulus = (params.mass / (2.0 * PI * params.hbar * dt)).powf(1.5);
    let phase = params.mass * distance * distance / (2.0 * params.hbar * dt);
    Ok(Complex64::from_polar(modulus, phase - 0.75 * PI))
}

/// `(1/i)^{3/2}`, principal branch.
const INV_I_POW_3_2: Complex64 = Complex64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2);

/// One evaluated aperture integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApertureIntegral {
    pub q: f64,
    pub mode: u64,
    pub extent: f64,
    pub value: Complex64,
}

impl ApertureIntegral {
    pub fn closed(q: f64, mode: u64, extent: f64) -> Self {
        Self {
            q,
            mode,
            extent,
            value: aperture_integral_closed(q, mode, extent),
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

fn mode_sign(mode: u64) -> f64 {
    if (mode / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Real weight `w` with `integral = exp(-i q L / 2) w`, free of the removable
/// singularities at `q = +-p`.
fn odd_sine_weight_stable(q: f64, p: f64, sign: f64, extent: f64) -> f64 {
    let half = 0.5 * extent;
    if q >= 0.0 {
        2.0 * p * sign * half * sinc((q - p) * half) / (q + p)
    } else {
        -2.0 * p * sign * half * sinc((q + p) * half) / (q - p)
    }
}

/// As [`odd_sine_weight_stable`] but reuses a per-point `cos(q L / 2)` away
/// from resonance.
#[inline]
fn odd_sine_weight(q: f64, p: f64, sign: f64, extent: f64, cos_half: f64) -> f64 {
    let below = q - p;
    let above = q + p;
    if (below * extent).abs() > 1e-2 && (above * extent).abs() > 1e-2 {
        -2.0 * p * cos_half / (below * above)
    } else {
        odd_sine_weight_stable(q, p, sign, extent)
    }
}

/// `(hi, lo)` with `hi + lo = a * b` exactly.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let hi = a * b;
    (hi, a.mul_add(b, -hi))
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `pi - PI` in double precision.
const PI_LO: f64 = 1.2246467991473532e-16;

/// `sin(x) / x` for `x = hi + lo` with `|lo|` below an ulp of `hi`.
fn sinc_dd(hi: f64, lo: f64) -> f64 {
    if hi.abs() < 1e-4 {
        sinc(hi + lo)
    } else {
        (hi.sin() + hi.cos() * lo) / (hi + lo)
    }
}

/// `int_0^L exp(-i q u) sin(mode pi u / L) du` for odd `mode`, in closed form.
///
/// The half phases `q L / 2` and `mode pi / 2` are carried in double-double
/// so the weight stays accurate near its zeros.
pub fn aperture_integral_closed(q: f64, mode: u64, extent: f64) -> Complex64 {
    debug_assert!(mode % 2 == 1);
    let half = 0.5 * extent;
    let n = mode as f64;
    let p = n * PI / extent;
    let (theta, theta_lo) = two_prod(q, half);
    let (nu, nu_lo) = two_prod(n, 0.5 * PI);
    let nu_lo = nu_lo + n * 0.5 * PI_LO;
    let sign = mode_sign(mode);
    let w = if q >= 0.0 {
        let (x, e) = two_sum(theta, -nu);
        2.0 * p * sign * half * sinc_dd(x, e + theta_lo - nu_lo) / (q + p)
    } else {
        let (x, e) = two_sum(theta, nu);
        -2.0 * p * sign * half * sinc_dd(x, e + theta_lo + nu_lo) / (q - p)
    };
    Complex64::from_polar(w, -(theta + theta_lo))
}

/// The same integral by adaptive Gauss-Kronrod quadrature to absolute
/// tolerance `tol * extent`. Integrand phases are rounded to about
/// `eps * |q| * extent`, so tolerances below that cannot be met.
pub fn aperture_integral_quadrature(q: f64, mode: u64, extent: f64, tol: f64) -> Result<Complex64> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "quadrature tolerance must be positive, got {tol}"
        )));
    }
    if !(extent > 0.0) || mode.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "need odd mode and positive extent, got mode={mode}, extent={extent}"
        )));
    }
    let p = mode as f64 * PI / extent;
    // about one panel per half oscillation of either factor
    let panels = ((q.abs() * extent + p * extent) / PI).ceil() as usize + 1;
    quadrature::integrate(
        |u| Complex64::from_polar((p * u).sin(), -q * u),
        0.0,
        extent,
        panels,
        tol * extent,
        64 * panels + 100_000,
    )
}

/// Common phase split off the screen amplitude: `exp(i k r / 2)` for the
/// Fresnel kernel, `exp(i k r)` for the Rayleigh kernel.
pub fn phase_reference(pt: &ScreenPoint, kin: &Kinematics, kernel: Kernel) -> Complex64 {
    let phase = match kernel {
        Kernel::Fresnel => 0.5 * kin.k * pt.r,
        Kernel::Rayleigh => kin.k * pt.r,
    };
    Complex64::from_polar(1.0, phase)
}

/// Screen amplitude of one slit, split into the common unit-modulus phase
/// and the remaining factor. `|reduced|^2` is the intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenAmplitude {
    pub reduced: Complex64,
    pub reference: Complex64,
}

impl ScreenAmplitude {
    pub fn full(&self) -> Complex64 {
        self.reduced * self.reference
    }

    pub fn intensity(&self) -> f64 {
        self.reduced.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy)]
struct WidthMode {
    p: f64,
    sign: f64,
    /// `sum_n D_mn exp(i k_z c) X_n`
    through: Complex64,
    /// `sum_n D_mn exp(i k_z c) X_n (i k_z)`; Rayleigh kernel only
    through_kz: Complex64,
}

/// Precomputed mode data for evaluating both slits' screen amplitudes at a
/// fixed out-of-plane angle `alpha`. The x-integrals and through-slit phases
/// do not depend on the screen coordinate, so the per-point cost is one pass
/// over the width modes.
#[derive(Debug, Clone)]
pub struct Diffractor {
    kernel: Kernel,
    k: f64,
    alpha: f64,
    width: f64,
    offset: f64,
    modes: Vec<WidthMode>,
    truncation: ModeTruncation,
}

impl Diffractor {
    pub fn new(
        kin: &Kinematics,
        geo: &SlitGeometry,
        alpha: f64,
        kernel: Kernel,
        trunc: &ModeTruncation,
        amplitude: f64,
    ) -> Result<Self> {
        geo.validate()?;
        trunc.validate()?;
        let qx = kin.k * alpha.sin();
        let x_integrals: Vec<Complex64> = (0..=trunc.max_n as u64)
            .map(|n| aperture_integral_closed(qx, 2 * n + 1, geo.length))
            .collect();
        let i = Complex64::i();
        let modes = (0..=trunc.max_m)
            .map(|m| {
                let mut through = Complex64::new(0.0, 0.0);
                let mut through_kz = Complex64::new(0.0, 0.0);
                for (n, x_int) in x_integrals.iter().enumerate() {
                    let idx = ModeIndex::new(m, n as u32);
                    let kz = longitudinal_wavevector(idx, kin, geo);
                    let term =
                        kz.phase(geo.thickness) * *x_int * fourier_coefficient(idx, amplitude);
                    through += term;
                    if kernel == Kernel::Rayleigh {
                        through_kz += term * (i * kz.value);
                    }
                }
                let mode = 2 * m as u64 + 1;
                WidthMode {
                    p: mode as f64 * PI / geo.width,
                    sign: mode_sign(mode),
                    through,
                    through_kz,
                }
            })
            .collect();
        Ok(Self {
            kernel,
            k: kin.k,
            alpha,
            width: geo.width,
            offset: geo.second_slit_offset(),
            modes,
            truncation: *trunc,
        })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn truncation(&self) -> &ModeTruncation {
        &self.truncation
    }

    /// Amplitudes of slit 1 and slit 2 at `pt`.
    pub fn pair(&self, pt: &ScreenPoint) -> Result<(ScreenAmplitude, ScreenAmplitude)> {
        if pt.alpha != self.alpha {
            return Err(Error::domain(format!(
                "screen point alpha {} differs from the precomputed alpha {}",
                pt.alpha, self.alpha
            )));
        }
        let q = self.k * pt.sin_beta;
        let cos_half = (0.5 * q * self.width).cos();
        let reference = match self.kernel {
            Kernel::Fresnel => Complex64::from_polar(1.0, 0.5 * self.k * pt.r),
            Kernel::Rayleigh => Complex64::from_polar(1.0, self.k * pt.r),
        };
        let sum = match self.kernel {
            Kernel::Fresnel => {
                let mut acc = Complex64::new(0.0, 0.0);
                for md in &self.modes {
                    acc += md.through * odd_sine_weight(q, md.p, md.sign, self.width, cos_half);
                }
                let scale = (self.k / (2.0 * PI * pt.r)).powf(1.5);
                acc * INV_I_POW_3_2 * scale
            }
            Kernel::Rayleigh => {
                let ratio = pt.s / pt.r;
                let radicand = pt.alpha.cos().powi(2) - ratio * ratio;
                if radicand < 0.0 {
                    return Err(Error::domain(format!(
                        "obliquity radicand cos^2(alpha) - (s/R)^2 = {radicand} is negative"
                    )));
                }
                let bracket = Complex64::new(-1.0 / pt.r, self.k) * radicand.sqrt();
                let mut acc = Complex64::new(0.0, 0.0);
                for md in &self.modes {
                    let w = odd_sine_weight(q, md.p, md.sign, self.width, cos_half);
                    acc += (md.through_kz + bracket * md.through) * w;
                }
                -acc / (4.0 * PI * pt.r)
            }
        };
        let first = sum * Complex64::from_polar(1.0, -0.5 * q * self.width);
        let second = first * Complex64::from_polar(1.0, -q * self.offset);
        Ok((
            ScreenAmplitude {
                reduced: first,
                reference,
            },
            ScreenAmplitude {
                reduced: second,
                reference,
            },
        ))
    }

    pub fn amplitude(&self, slit: Slit, pt: &ScreenPoint) -> Result<ScreenAmplitude> {
        let (first, second) = self.pair(pt)?;
        Ok(match slit {
            Slit::First => first,
            Slit::Second => second,
        })
    }
}

/// Screen amplitude of one slit at one point.
pub fn slit_screen_wavefunction(
    slit: Slit,
    pt: &ScreenPoint,
    kernel: Kernel,
    trunc: &ModeTruncation,
    kin: &Kinematics,
    geo: &SlitGeometry,
    amplitude: f64,
) -> Result<ScreenAmplitude> {
    Diffractor::new(kin, geo, pt.alpha, kernel, trunc, amplitude)?.amplitude(slit, pt)
}
