//! Physical constants, particle and geometry parameters, and the de Broglie
//! kinematics shared by the slit-mode and propagation code. All quantities
//! are SI.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Reduced Planck constant used by default [J s].
pub const HBAR: f64 = 1.055e-34;

/// Fullerene mass used for the reference runs [kg].
pub const C60_MASS: f64 = 1.4e-24;

/// Beam velocity used for the reference runs [m/s].
pub const C60_VELOCITY: f64 = 220.0;

/// Particle and model-scale parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub mass: f64,
    pub velocity: f64,
    pub hbar: f64,
    /// Incident plane-wave amplitude; a pure fit/scale parameter.
    pub amplitude: f64,
}

impl PhysicalParams {
    pub fn new(mass: f64, velocity: f64, hbar: f64, amplitude: f64) -> Result<Self> {
        let p = Self {
            mass,
            velocity,
            hbar,
            amplitude,
        };
        p.validate()?;
        Ok(p)
    }

    /// C60 beam with the default `hbar` and the given amplitude.
    pub fn c60(amplitude: f64) -> Self {
        Self {
            mass: C60_MASS,
            velocity: C60_VELOCITY,
            hbar: HBAR,
            amplitude,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("velocity", self.velocity),
            ("hbar", self.hbar),
            ("amplitude", self.amplitude),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        Self { amplitude, ..self }
    }
}

/// Derived matter-wave kinematics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    /// Wavenumber `k = M v / hbar` [rad/m].
    pub k: f64,
    /// de Broglie wavelength `2 pi / k` [m].
    pub wavelength: f64,
    /// Kinetic energy `hbar^2 k^2 / 2M` [J].
    pub energy: f64,
    /// `E / hbar` [rad/s], the angular frequency of the stationary state.
    pub omega: f64,
}

impl Kinematics {
    /// Velocity reconstructed from the wavenumber.
    pub fn velocity(&self, params: &PhysicalParams) -> f64 {
        self.k * params.hbar / params.mass
    }
}

pub fn derive_kinematics(params: &PhysicalParams) -> Result<Kinematics> {
    params.validate()?;
    let k = params.mass * params.velocity / params.hbar;
    let energy = params.hbar * params.hbar * k * k / (2.0 * params.mass);
    Ok(Kinematics {
        k,
        wavelength: 2.0 * PI / k,
        energy,
        omega: params.hbar * k * k / (2.0 * params.mass),
    })
}

/// Aperture geometry. Slit 1 spans `y in [0, a]`, slit 2 spans
/// `y in [a + d, 2a + d]`; both span `x in [0, b]` and `z in [0, c]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitGeometry {
    pub width: f64,
    pub length: f64,
    pub thickness: f64,
    /// Distance between the inner edges of the two slits.
    pub gap: f64,
}

impl SlitGeometry {
    pub fn new(width: f64, length: f64, thickness: f64, gap: f64) -> Result<Self> {
        let g = Self {
            width,
            length,
            thickness,
            gap,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("width", self.width),
            ("length", self.length),
            ("thickness", self.thickness),
            ("gap", self.gap),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "slit {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Lower edge of slit 2 (`a + d`).
    pub fn second_slit_offset(&self) -> f64 {
        self.width + self.gap
    }

    /// Centre-to-centre slit separation, which sets the fringe period.
    pub fn slit_separation(&self) -> f64 {
        self.width + self.gap
    }
}

/// Detection screen: distance from the slit exit plane, the sampled screen
/// coordinates (measured from the aperture symmetry axis) and the fixed
/// out-of-plane angle.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenGeometry {
    pub distance: f64,
    pub positions: Vec<f64>,
    pub alpha: f64,
}

impl ScreenGeometry {
    pub fn new(distance: f64, positions: Vec<f64>, alpha: f64) -> Result<Self> {
        let g = Self {
            distance,
            positions,
            alpha,
        };
        g.validate()?;
        Ok(g)
    }

    /// Uniform grid of `n` points over `[s_min, s_max]`.
    pub fn uniform(distance: f64, s_min: f64, s_max: f64, n: usize, alpha: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!(
                "screen scan needs at least 2 points, got {n}"
            )));
        }
        if !(s_min < s_max) {
            return Err(Error::invalid(format!(
                "s_min ({s_min}) must be below s_max ({s_max})"
            )));
        }
        let step = (s_max - s_min) / (n - 1) as f64;
        let positions = (0..n)
            .map(|i| {
                if i == n - 1 {
                    s_max
                } else {
                    s_min + step * i as f64
                }
            })
            .collect();
        Self::new(distance, positions, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance > 0.0 && self.distance.is_finite()) {
            return Err(Error::invalid(format!(
                "screen distance must be positive, got {}",
                self.distance
            )));
        }
        if !self.alpha.is_finite() {
            return Err(Error::invalid("alpha must be finite"));
        }
        if self.positions.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid(
                "screen positions must be strictly increasing",
            ));
        }
        Ok(())
    }
}

/// Position-to-angle map `sin(beta) = s / sqrt(l^2 + s^2)`.
pub fn sin_beta(s: f64, l: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::invalid(format!(
            "screen distance must be positive, got {l}"
        )));
    }
    Ok(s / l.hypot(s))
}
