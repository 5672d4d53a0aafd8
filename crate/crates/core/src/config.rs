//! Run configuration: a TOML document with a top-level `mode` and the
//! sections `[physics]`, `[geometry]`, `[screen]`, `[superposition]`,
//! `[decoherence]`, `[numerics]` and an optional `[fit]`.
//!
//! ```toml
//! mode = "double-decoherent"      # single | double-coherent | double-decoherent
//! kernel = "fresnel"              # fresnel | rayleigh
//! output = "pattern.csv"
//!
//! [physics]
//! mass = 1.4e-24                  # kg, default C60
//! velocity = 220.0                # m/s, default 220
//! hbar = 1.055e-34                # J s
//! amplitude = 1.69e22
//!
//! [geometry]
//! width = 0.05e-6                 # a
//! length = 0.01                   # b
//! thickness = 1.3e-6              # c
//! gap = 0.05e-6                   # d, double modes only
//!
//! [screen]
//! distance = 1.25                 # l
//! s_min = -150e-6
//! s_max = 150e-6
//! n_points = 1501
//! alpha = 0.0
//!
//! [superposition]
//! c1 = 0.565
//! c2 = 0.824
//!
//! [decoherence]
//! lambda_t = 0.5                  # or alpha_t
//!
//! [numerics]
//! max_m = 50
//! max_n = 50
//! tail_tol = 1e-6
//! adaptive = true
//!
//! [fit]
//! free = ["A", "c1", "lambda_t"]
//! a_min = 1e16
//! a_max = 1e28
//! c1_min = 0.0
//! c1_max = 1.0
//! lambda_min = 0.0
//! lambda_max = 1.0
//! max_evaluations = 2000
//! tolerance = 1e-10
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibration::{Bounds, FitParam, FitSpec, FitValues, ModelKind};
use crate::error::{Error, Result};
use crate::intensity::{DecoherenceSpec, SuperpositionSpec};
use crate::modes::ModeTruncation;
use crate::physics::{PhysicalParams, ScreenGeometry, SlitGeometry, C60_MASS, C60_VELOCITY, HBAR};
use crate::propagation::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Single,
    DoubleCoherent,
    DoubleDecoherent,
}

impl Mode {
    pub fn is_double(self) -> bool {
        self != Mode::Single
    }

    pub fn model_kind(self) -> ModelKind {
        match self {
            Mode::Single => ModelKind::Single,
            Mode::DoubleCoherent => ModelKind::DoubleCoherent,
            Mode::DoubleDecoherent => ModelKind::DoubleDecoherent,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Single => "single",
            Mode::DoubleCoherent => "double-coherent",
            Mode::DoubleDecoherent => "double-decoherent",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Mode::Single),
            "double-coherent" => Ok(Mode::DoubleCoherent),
            "double-decoherent" => Ok(Mode::DoubleDecoherent),
            other => Err(Error::validation("mode", format!("unknown mode `{other}`"))),
        }
    }
}

/// Uniform screen scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSpec {
    pub distance: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub n_points: usize,
    pub alpha: f64,
}

impl ScanSpec {
    pub fn geometry(&self) -> Result<ScreenGeometry> {
        ScreenGeometry::uniform(
            self.distance,
            self.s_min,
            self.s_max,
            self.n_points,
            self.alpha,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    pub truncation: ModeTruncation,
    /// Refine the truncation until the pattern meets `tail_tol`.
    pub adaptive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoherenceKey {
    LambdaT,
    AlphaT,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub free: Vec<FitParam>,
    pub amplitude_bounds: Bounds,
    pub c1_bounds: Bounds,
    pub lambda_bounds: Bounds,
    pub max_evaluations: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub kernel: Kernel,
    pub output: Option<PathBuf>,
    pub physics: PhysicalParams,
    pub geometry: SlitGeometry,
    pub screen: ScanSpec,
    pub superposition: Option<SuperpositionSpec>,
    pub decoherence: Option<DecoherenceSpec>,
    pub decoherence_key: DecoherenceKey,
    pub numerics: Numerics,
    pub fit: Option<FitSettings>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<String>,
    kernel: Option<String>,
    output: Option<String>,
    physics: Option<RawPhysics>,
    geometry: Option<RawGeometry>,
    screen: Option<RawScreen>,
    superposition: Option<RawSuperposition>,
    decoherence: Option<RawDecoherence>,
    numerics: Option<RawNumerics>,
    fit: Option<RawFit>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhysics {
    mass: Option<f64>,
    velocity: Option<f64>,
    hbar: Option<f64>,
    amplitude: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    width: Option<f64>,
    length: Option<f64>,
    thickness: Option<f64>,
    gap: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScreen {
    distance: Option<f64>,
    s_min: Option<f64>,
    s_max: Option<f64>,
    n_points: Option<i64>,
    alpha: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSuperposition {
    c1: Option<f64>,
    c2: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDecoherence {
    lambda_t: Option<f64>,
    alpha_t: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    max_m: Option<i64>,
    max_n: Option<i64>,
    tail_tol: Option<f64>,
    adaptive: Option<bool>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFit {
    free: Option<Vec<String>>,
    a_min: Option<f64>,
    a_max: Option<f64>,
    c1_min: Option<f64>,
    c1_max: Option<f64>,
    lambda_min: Option<f64>,
    lambda_max: Option<f64>,
    max_evaluations: Option<i64>,
    tolerance: Option<f64>,
}

pub const DEFAULT_S_MIN: f64 = -150e-6;
pub const DEFAULT_S_MAX: f64 = 150e-6;
pub const DEFAULT_N_POINTS: usize = 1501;

fn required<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| Error::MissingKey(key.to_string()))
}

fn count(value: i64, key: &str) -> Result<usize> {
    usize::try_from(value)
        .map_err(|_| Error::validation(key, format!("must be non-negative, got {value}")))
}

fn in_section<T>(key: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidParameter(message) | Error::Domain(message) => {
            Error::validation(key, message)
        }
        other => other,
    })
}

fn line_of(text: &str, offset: usize) -> u64 {
    text[..offset.min(text.len())].matches('\n').count() as u64 + 1
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let mode: Mode = required(raw.mode, "mode")?.parse()?;
        let kernel = match raw.kernel {
            Some(k) => k.parse()?,
            None => Kernel::default(),
        };

        let p = required(raw.physics, "physics")?;
        let physics = PhysicalParams {
            mass: p.mass.unwrap_or(C60_MASS),
            velocity: p.velocity.unwrap_or(C60_VELOCITY),
            hbar: p.hbar.unwrap_or(HBAR),
            amplitude: required(p.amplitude, "physics.amplitude")?,
        };
        in_section("physics", physics.validate())?;

        let g = required(raw.geometry, "geometry")?;
        let width = required(g.width, "geometry.width")?;
        let gap = if mode.is_double() {
            required(g.gap, "geometry.gap")?
        } else {
            g.gap.unwrap_or(width)
        };
        let geometry = in_section(
            "geometry",
            SlitGeometry::new(
                width,
                required(g.length, "geometry.length")?,
                required(g.thickness, "geometry.thickness")?,
                gap,
            ),
        )?;

        let s = required(raw.screen, "screen")?;
        let screen = ScanSpec {
            distance: required(s.distance, "screen.distance")?,
            s_min: s.s_min.unwrap_or(DEFAULT_S_MIN),
            s_max: s.s_max.unwrap_or(DEFAULT_S_MAX),
            n_points: match s.n_points {
                Some(n) => count(n, "screen.n_points")?,
                None => DEFAULT_N_POINTS,
            },
            alpha: s.alpha.unwrap_or(0.0),
        };
        if screen.n_points < 2 {
            return Err(Error::validation(
                "screen.n_points",
                "need at least 2 points",
            ));
        }
        if !(screen.s_min < screen.s_max) {
            return Err(Error::validation(
                "screen.s_min",
                "s_min must be below s_max",
            ));
        }
        in_section("screen", screen.geometry())?;

        let superposition = match raw.superposition {
            Some(sp) => Some(in_section(
                "superposition",
                SuperpositionSpec::new(
                    required(sp.c1, "superposition.c1")?,
                    required(sp.c2, "superposition.c2")?,
                ),
            )?),
            None if mode.is_double() => return Err(Error::MissingKey("superposition".into())),
            None => None,
        };

        let (decoherence, decoherence_key) = match raw.decoherence {
            Some(d) => match (d.lambda_t, d.alpha_t) {
                (Some(l), None) => (
                    Some(in_section(
                        "decoherence.lambda_t",
                        DecoherenceSpec::from_lambda(l),
                    )?),
                    DecoherenceKey::LambdaT,
                ),
                (None, Some(a)) => (
                    Some(in_section(
                        "decoherence.alpha_t",
                        DecoherenceSpec::from_alpha(a),
                    )?),
                    DecoherenceKey::AlphaT,
                ),
                (Some(_), Some(_)) => {
                    return Err(Error::validation(
                        "decoherence",
                        "give either lambda_t or alpha_t, not both",
                    ))
                }
                (None, None) => return Err(Error::MissingKey("decoherence.lambda_t".into())),
            },
            None if mode == Mode::DoubleDecoherent => {
                return Err(Error::MissingKey("decoherence".into()))
            }
            None => (None, DecoherenceKey::LambdaT),
        };

        let n = raw.numerics.unwrap_or_default();
        let defaults = ModeTruncation::default();
        let index = |v: Option<i64>, key: &str, default: u32| -> Result<u32> {
            match v {
                Some(v) => u32::try_from(v)
                    .map_err(|_| Error::validation(key, format!("invalid mode index {v}"))),
                None => Ok(default),
            }
        };
        let truncation = in_section(
            "numerics",
            ModeTruncation::new(
                index(n.max_m, "numerics.max_m", defaults.max_m)?,
                index(n.max_n, "numerics.max_n", defaults.max_n)?,
                n.tail_tol.unwrap_or(defaults.tail_tol),
            ),
        )?;
        let numerics = Numerics {
            truncation,
            adaptive: n.adaptive.unwrap_or(true),
        };

        let fit = raw
            .fit
            .map(|f| -> Result<FitSettings> {
                let free = f
                    .free
                    .unwrap_or_else(|| vec!["A".into()])
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<Vec<FitParam>>>()?;
                let a = physics.amplitude;
                let settings = FitSettings {
                    free,
                    amplitude_bounds: Bounds::new(
                        f.a_min.unwrap_or(a * 1e-6),
                        f.a_max.unwrap_or(a * 1e6),
                    ),
                    c1_bounds: Bounds::new(f.c1_min.unwrap_or(0.0), f.c1_max.unwrap_or(1.0)),
                    lambda_bounds: Bounds::new(
                        f.lambda_min.unwrap_or(0.0),
                        f.lambda_max.unwrap_or(1.0),
                    ),
                    max_evaluations: match f.max_evaluations {
                        Some(v) => count(v, "fit.max_evaluations")?,
                        None => 2000,
                    },
                    tolerance: f.tolerance.unwrap_or(1e-10),
                };
                if !(settings.tolerance > 0.0) {
                    return Err(Error::validation("fit.tolerance", "must be positive"));
                }
                if settings.max_evaluations == 0 {
                    return Err(Error::validation("fit.max_evaluations", "must be positive"));
                }
                Ok(settings)
            })
            .transpose()?;

        Ok(Self {
            mode,
            kernel,
            output: raw.output.map(PathBuf::from),
            physics,
            geometry,
            screen,
            superposition,
            decoherence,
            decoherence_key,
            numerics,
            fit,
        })
    }

    fn to_raw(&self) -> RawConfig {
        RawConfig {
            mode: Some(self.mode.to_string()),
            kernel: Some(self.kernel.to_string()),
            output: self.output.as_ref().map(|p| p.display().to_string()),
            physics: Some(RawPhysics {
                mass: Some(self.physics.mass),
                velocity: Some(self.physics.velocity),
                hbar: Some(self.physics.hbar),
                amplitude: Some(self.physics.amplitude),
            }),
            geometry: Some(RawGeometry {
                width: Some(self.geometry.width),
                length: Some(self.geometry.length),
                thickness: Some(self.geometry.thickness),
                gap: Some(self.geometry.gap),
            }),
            screen: Some(RawScreen {
                distance: Some(self.screen.distance),
                s_min: Some(self.screen.s_min),
                s_max: Some(self.screen.s_max),
                n_points: Some(self.screen.n_points as i64),
                alpha: Some(self.screen.alpha),
            }),
            superposition: self.superposition.map(|s| RawSuperposition {
                c1: Some(s.c1),
                c2: Some(s.c2),
            }),
            decoherence: self.decoherence.map(|d| match self.decoherence_key {
                DecoherenceKey::LambdaT => RawDecoherence {
                    lambda_t: Some(d.lambda_t),
                    alpha_t: None,
                },
                DecoherenceKey::AlphaT => RawDecoherence {
                    lambda_t: None,
                    alpha_t: Some(d.alpha_t),
                },
            }),
            numerics: Some(RawNumerics {
                max_m: Some(self.numerics.truncation.max_m as i64),
                max_n: Some(self.numerics.truncation.max_n as i64),
                tail_tol: Some(self.numerics.truncation.tail_tol),
                adaptive: Some(self.numerics.adaptive),
            }),
            fit: self.fit.as_ref().map(|f| RawFit {
                free: Some(f.free.iter().map(|p| p.to_string()).collect()),
                a_min: Some(f.amplitude_bounds.lo),
                a_max: Some(f.amplitude_bounds.hi),
                c1_min: Some(f.c1_bounds.lo),
                c1_max: Some(f.c1_bounds.hi),
                lambda_min: Some(f.lambda_bounds.lo),
                lambda_max: Some(f.lambda_bounds.hi),
                max_evaluations: Some(f.max_evaluations as i64),
                tolerance: Some(f.tolerance),
            }),
        }
    }

    /// Canonical TOML text; parsing it yields the same configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("config serializes")
    }

    /// Fit specification from `[fit]` with initial values taken from the
    /// physics, superposition and decoherence sections.
    pub fn fit_spec(&self) -> FitSpec {
        let initial = FitValues {
            amplitude: self.physics.amplitude,
            c1: self
                .superposition
                .map_or(std::f64::consts::FRAC_1_SQRT_2, |s| s.c1),
            lambda_t: self.decoherence.map_or(1.0, |d| d.lambda_t),
        };
        let mut spec = FitSpec::new(vec![FitParam::Amplitude], initial);
        if let Some(f) = &self.fit {
            spec.free = f.free.clone();
            spec.amplitude_bounds = f.amplitude_bounds;
            spec.c1_bounds = f.c1_bounds;
            spec.lambda_bounds = f.lambda_bounds;
            spec.max_evaluations = f.max_evaluations;
            spec.tolerance = f.tolerance;
        }
        spec
    }
}

/// Load and validate a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    RunConfig::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE: &str = r#"
mode = "single"

[physics]
amplitude = 2.87e14

[geometry]
width = 10e-6
length = 0.01
thickness = 1.3e-6

[screen]
distance = 2.29
"#;

    const FULL: &str = r#"
mode = "double-decoherent"
kernel = "rayleigh"
output = "out.csv"

[physics]
mass = 1.4e-24
velocity = 220.0
hbar = 1.055e-34
amplitude = 1.69e22

[geometry]
width = 5e-8
length = 0.01
thickness = 1.3e-6
gap = 5e-8

[screen]
distance = 1.25
s_min = -1e-4
s_max = 1e-4
n_points = 11
alpha = 0.0

[superposition]
c1 = 0.565
c2 = 0.824

[decoherence]
alpha_t = 0.2679491924311227

[numerics]
max_m = 20
max_n = 30
tail_tol = 1e-5
adaptive = false

[fit]
free = ["A", "c1", "lambda_t"]
a_min = 1e20
a_max = 1e24
c1_min = 0.1
c1_max = 0.9
lambda_min = 0.0
lambda_max = 1.0
max_evaluations = 500
tolerance = 1e-9
"#;

    #[test]
    fn single_block_defaults() {
        let cfg = RunConfig::parse(SINGLE).unwrap();
        assert_eq!(cfg.mode, Mode::Single);
        assert_eq!(cfg.geometry.width, 10e-6);
        assert_eq!(cfg.screen.distance, 2.29);
        assert_eq!(cfg.physics.amplitude, 2.87e14);
        assert_eq!(cfg.physics.mass, C60_MASS);
        assert_eq!(cfg.kernel, Kernel::Fresnel);
        assert_eq!(cfg.screen.n_points, DEFAULT_N_POINTS);
        assert_eq!(cfg.numerics.truncation, ModeTruncation::default());
        assert!(cfg.numerics.adaptive);
    }

    #[test]
    fn normalization_is_validated() {
        let text = FULL
            .replace("c1 = 0.565", "c1 = 0.9")
            .replace("c2 = 0.824", "c2 = 0.9");
        match RunConfig::parse(&text) {
            Err(Error::Validation { key, .. }) => assert_eq!(key, "superposition"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_file_names_mode() {
        assert!(matches!(RunConfig::parse(""), Err(Error::MissingKey(k)) if k == "mode"));
    }

    #[test]
    fn missing_keys_are_named() {
        let text = SINGLE.replace("width = 10e-6\n", "");
        assert!(
            matches!(RunConfig::parse(&text), Err(Error::MissingKey(k)) if k == "geometry.width")
        );
        let text = FULL.replace("gap = 5e-8\n", "");
        assert!(
            matches!(RunConfig::parse(&text), Err(Error::MissingKey(k)) if k == "geometry.gap")
        );
        let text = FULL.replace("[decoherence]\nalpha_t = 0.2679491924311227\n", "");
        assert!(matches!(RunConfig::parse(&text), Err(Error::MissingKey(k)) if k == "decoherence"));
    }

    #[test]
    fn invalid_values_carry_key_paths() {
        let text = SINGLE.replace("distance = 2.29", "distance = 2.29\nn_points = 1");
        assert!(
            matches!(RunConfig::parse(&text), Err(Error::Validation { key, .. }) if key == "screen.n_points")
        );
        let text = SINGLE.replace(
            "distance = 2.29",
            "distance = 2.29\ns_min = 1e-4\ns_max = -1e-4",
        );
        assert!(
            matches!(RunConfig::parse(&text), Err(Error::Validation { key, .. }) if key == "screen.s_min")
        );
        let text = SINGLE.replace("mode = \"single\"", "mode = \"triple\"");
        assert!(
            matches!(RunConfig::parse(&text), Err(Error::Validation { key, .. }) if key == "mode")
        );
        let text = SINGLE.replace("amplitude = 2.87e14", "amplitude = -1.0");
        assert!(
            matches!(RunConfig::parse(&text), Err(Error::Validation { key, .. }) if key == "physics")
        );
    }

    #[test]
    fn syntax_errors_report_lines() {
        match RunConfig::parse("mode = \"single\"\n[physics]\namplitude = = 3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            RunConfig::parse("mode = \"single\"\ncolour = 1\n"),
            Err(Error::Parse { .. })
        ));
    }

    fn keys(text: &str) -> Vec<String> {
        fn walk(prefix: &str, v: &toml::Value, out: &mut Vec<String>) {
            match v {
                toml::Value::Table(t) => {
                    for (k, v) in t {
                        walk(&format!("{prefix}{k}."), v, out);
                    }
                }
                other => out.push(format!("{prefix}={other}")),
            }
        }
        let mut out = Vec::new();
        walk("", &text.parse::<toml::Table>().unwrap().into(), &mut out);
        out.sort();
        out
    }

    #[test]
    fn full_config_round_trips_key_for_key() {
        let cfg = RunConfig::parse(FULL).unwrap();
        let written = cfg.to_toml();
        assert_eq!(keys(&written), keys(FULL));
        assert_eq!(RunConfig::parse(&written).unwrap(), cfg);
    }

    #[test]
    fn fit_spec_uses_section_initials() {
        let cfg = RunConfig::parse(FULL).unwrap();
        let spec = cfg.fit_spec();
        assert_eq!(spec.free.len(), 3);
        assert_eq!(spec.initial.c1, 0.565);
        assert!((spec.initial.lambda_t - 0.5).abs() < 1e-12);
        assert_eq!(spec.max_evaluations, 500);
    }
}
