//! Least-squares calibration of the free model parameters (amplitude `A`,
//! superposition weight `c1`, coherence degree `Lambda_t`) against measured
//! count profiles.
//!
//! The intensity is proportional to `A^2`, so for any fixed shape the best
//! amplitude follows in closed form; only `c1` and `Lambda_t` are searched,
//! first on a coarse grid over their bounds and then with a bounded
//! Nelder-Mead polish. Everything is deterministic.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::intensity::{DecoherenceSpec, Pattern, SlitFields, SuperpositionSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPoint {
    pub s: f64,
    pub counts: f64,
}

/// Measured counts against screen position.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentalSeries {
    pub points: Vec<DataPoint>,
    pub label: String,
}

/// Smallest series accepted by [`fit`].
pub const MIN_FIT_POINTS: usize = 5;

impl ExperimentalSeries {
    /// Validated series; positions must be strictly increasing and counts
    /// non-negative.
    pub fn new(points: Vec<DataPoint>, label: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("experimental series is empty"));
        }
        if points.windows(2).any(|w| !(w[0].s < w[1].s)) {
            return Err(Error::invalid(
                "experimental positions must be strictly increasing",
            ));
        }
        if let Some(p) = points
            .iter()
            .find(|p| !(p.counts >= 0.0) || !p.s.is_finite())
        {
            return Err(Error::invalid(format!(
                "invalid data point ({}, {})",
                p.s, p.counts
            )));
        }
        Ok(Self {
            points,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `sum_i (I_model(s_i) - counts_i)^2` with the model linearly interpolated.
pub fn residual_ss(model: &Pattern, data: &ExperimentalSeries) -> Result<f64> {
    data.points.iter().try_fold(0.0, |acc, p| {
        let m = model.interpolate(p.s).ok_or_else(|| {
            Error::domain(format!(
                "data point s = {} lies outside the model pattern",
                p.s
            ))
        })?;
        Ok(acc + (m - p.counts).powi(2))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FitParam {
    Amplitude,
    C1,
    LambdaT,
}

impl fmt::Display for FitParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitParam::Amplitude => "A",
            FitParam::C1 => "c1",
            FitParam::LambdaT => "lambda_t",
        })
    }
}

impl FromStr for FitParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "amplitude" => Ok(FitParam::Amplitude),
            "c1" => Ok(FitParam::C1),
            "lambda_t" => Ok(FitParam::LambdaT),
            other => Err(Error::validation(
                "fit.free",
                format!("unknown parameter `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn contains(&self, v: f64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }
}

/// Parameter values of a model evaluation. `c2` is always `sqrt(1 - c1^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitValues {
    pub amplitude: f64,
    pub c1: f64,
    pub lambda_t: f64,
}

impl FitValues {
    pub fn c2(&self) -> f64 {
        (1.0 - self.c1 * self.c1).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSpec {
    pub free: Vec<FitParam>,
    pub amplitude_bounds: Bounds,
    pub c1_bounds: Bounds,
    pub lambda_bounds: Bounds,
    pub initial: FitValues,
    pub max_evaluations: usize,
    /// Relative objective spread at which the polish stops.
    pub tolerance: f64,
}

impl FitSpec {
    /// Free `params`, starting from `initial`, with the amplitude searched
    /// over six decades either side of its initial value.
    pub fn new(free: Vec<FitParam>, initial: FitValues) -> Self {
        Self {
            free,
            amplitude_bounds: Bounds::new(initial.amplitude * 1e-6, initial.amplitude * 1e6),
            c1_bounds: Bounds::new(0.0, 1.0),
            lambda_bounds: Bounds::new(0.0, 1.0),
            initial,
            max_evaluations: 2000,
            tolerance: 1e-10,
        }
    }

    fn is_free(&self, p: FitParam) -> bool {
        self.free.contains(&p)
    }

    fn validate(&self, kind: ModelKind) -> Result<()> {
        let check = |name: &str, b: &Bounds, lo: f64, hi: f64| -> Result<()> {
            if !(b.lo <= b.hi) || b.lo < lo || b.hi > hi || !(b.lo.is_finite() && b.hi.is_finite())
            {
                return Err(Error::invalid(format!(
                    "infeasible {name} bounds [{}, {}]",
                    b.lo, b.hi
                )));
            }
            Ok(())
        };
        if !(self.amplitude_bounds.lo > 0.0) {
            return Err(Error::invalid("amplitude lower bound must be positive"));
        }
        check("amplitude", &self.amplitude_bounds, 0.0, f64::MAX)?;
        check("c1", &self.c1_bounds, 0.0, 1.0)?;
        check("lambda_t", &self.lambda_bounds, 0.0, 1.0)?;
        let init = &self.initial;
        for (p, b, v) in [
            (FitParam::Amplitude, &self.amplitude_bounds, init.amplitude),
            (FitParam::C1, &self.c1_bounds, init.c1),
            (FitParam::LambdaT, &self.lambda_bounds, init.lambda_t),
        ] {
            if self.is_free(p) && !b.contains(v) {
                return Err(Error::invalid(format!(
                    "initial {p} = {v} lies outside its bounds"
                )));
            }
        }
        if !(init.amplitude > 0.0)
            || !(0.0..=1.0).contains(&init.c1)
            || !(0.0..=1.0).contains(&init.lambda_t)
        {
            return Err(Error::invalid(
                "initial values violate A > 0, c1 in [0,1], lambda_t in [0,1]",
            ));
        }
        if self.is_free(FitParam::C1) && kind == ModelKind::Single {
            return Err(Error::invalid(
                "c1 cannot be fitted for a single-slit model",
            ));
        }
        if self.is_free(FitParam::LambdaT) && kind != ModelKind::DoubleDecoherent {
            return Err(Error::invalid(
                "lambda_t is only free for the decoherent model",
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("fit tolerance must be positive"));
        }
        if self.max_evaluations == 0 {
            return Err(Error::invalid("max_evaluations must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub values: FitValues,
    pub objective: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Single,
    DoubleCoherent,
    DoubleDecoherent,
}

/// Slit fields computed once at unit amplitude; patterns for any parameter
/// set are linear combinations of them.
#[derive(Debug, Clone)]
pub struct FitModel {
    pub kind: ModelKind,
    fields: SlitFields,
}

impl FitModel {
    /// `fields` must have been computed with amplitude 1.
    pub fn new(kind: ModelKind, fields: SlitFields) -> Self {
        Self { kind, fields }
    }

    pub fn fields(&self) -> &SlitFields {
        &self.fields
    }

    pub fn pattern(&self, values: &FitValues) -> Result<Pattern> {
        let shape = self.shape(values.c1, values.lambda_t)?;
        Ok(shape.scaled(values.amplitude * values.amplitude))
    }

    fn shape(&self, c1: f64, lambda_t: f64) -> Result<Pattern> {
        match self.kind {
            ModelKind::Single => self.fields.single(),
            ModelKind::DoubleCoherent => self.fields.coherent(&SuperpositionSpec::from_c1(c1)?),
            ModelKind::DoubleDecoherent => self.fields.decoherent(
                &SuperpositionSpec::from_c1(c1)?,
                &DecoherenceSpec::from_lambda(lambda_t)?,
            ),
        }
    }
}

struct Objective<'a> {
    model: &'a FitModel,
    data: &'a ExperimentalSeries,
    spec: &'a FitSpec,
    evaluations: usize,
}

impl Objective<'_> {
    /// Residual at `(c1, lambda_t)` with the amplitude profiled out when
    /// free. Returns (objective, amplitude).
    fn eval(&mut self, c1: f64, lambda_t: f64) -> Result<(f64, f64)> {
        self.evaluations += 1;
        let shape = self.model.shape(c1, lambda_t)?;
        let amplitude = if self.spec.is_free(FitParam::Amplitude) {
            let (mut num, mut den) = (0.0, 0.0);
            for p in &self.data.points {
                let v = shape.interpolate(p.s).ok_or_else(|| {
                    Error::domain(format!(
                        "data point s = {} lies outside the model pattern",
                        p.s
                    ))
                })?;
                num += v * p.counts;
                den += v * v;
            }
            let b = self.spec.amplitude_bounds;
            let sq = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
            sq.sqrt().clamp(b.lo, b.hi)
        } else {
            self.spec.initial.amplitude
        };
        let objective = residual_ss(&shape.scaled(amplitude * amplitude), self.data)?;
        Ok((objective, amplitude))
    }
}

/// Shape parameters being searched, in a fixed order.
fn shape_axes(spec: &FitSpec) -> Vec<(FitParam, Bounds)> {
    let mut axes = Vec::new();
    if spec.is_free(FitParam::C1) {
        axes.push((FitParam::C1, spec.c1_bounds));
    }
    if spec.is_free(FitParam::LambdaT) {
        axes.push((FitParam::LambdaT, spec.lambda_bounds));
    }
    axes
}

const GRID_POINTS: usize = 11;

/// Fit the free parameters of `spec` to `data`.
pub fn fit(model: &FitModel, data: &ExperimentalSeries, spec: &FitSpec) -> Result<FitResult> {
    spec.validate(model.kind)?;
    if data.len() < MIN_FIT_POINTS {
        return Err(Error::invalid(format!(
            "need at least {MIN_FIT_POINTS} data points to fit, got {}",
            data.len()
        )));
    }
    let mut obj = Objective {
        model,
        data,
        spec,
        evaluations: 0,
    };
    let axes = shape_axes(spec);
    let point = |x: &[f64]| -> (f64, f64) {
        let mut c1 = spec.initial.c1;
        let mut lambda_t = spec.initial.lambda_t;
        for ((param, b), &u) in axes.iter().zip(x) {
            let v = b.lo + (b.hi - b.lo) * u.clamp(0.0, 1.0);
            match param {
                FitParam::C1 => c1 = v,
                FitParam::LambdaT => lambda_t = v,
                FitParam::Amplitude => unreachable!(),
            }
        }
        (c1, lambda_t)
    };
    let to_unit = |param: FitParam, v: f64| -> f64 {
        let b = axes
            .iter()
            .find(|(p, _)| *p == param)
            .map(|(_, b)| *b)
            .unwrap();
        if b.hi > b.lo {
            (v - b.lo) / (b.hi - b.lo)
        } else {
            0.0
        }
    };
    let finish =
        |x: &[f64], objective: f64, amplitude: f64, evaluations: usize, converged: bool| {
            let (c1, lambda_t) = point(x);
            FitResult {
                values: FitValues {
                    amplitude,
                    c1,
                    lambda_t,
                },
                objective,
                evaluations,
                converged,
            }
        };

    let start: Vec<f64> = axes
        .iter()
        .map(|(p, _)| {
            let v = match p {
                FitParam::C1 => spec.initial.c1,
                _ => spec.initial.lambda_t,
            };
            to_unit(*p, v)
        })
        .collect();
    let (start_c1, start_lambda) = point(&start);
    let (f0, a0) = obj.eval(start_c1, start_lambda)?;
    if axes.is_empty() {
        return Ok(finish(&start, f0, a0, obj.evaluations, true));
    }

    // coarse grid
    let mut best = (start.clone(), f0, a0);
    let dims = axes.len();
    let total = GRID_POINTS.pow(dims as u32);
    for flat in 0..total {
        if obj.evaluations >= spec.max_evaluations {
            let (x, f, a) = best;
            return Ok(finish(&x, f, a, obj.evaluations, false));
        }
        let mut rem = flat;
        let mut x = vec![0.0; dims];
        for xi in x.iter_mut() {
            *xi = (rem % GRID_POINTS) as f64 / (GRID_POINTS - 1) as f64;
            rem /= GRID_POINTS;
        }
        let (c1, lambda_t) = point(&x);
        let (f, a) = obj.eval(c1, lambda_t)?;
        if f < best.1 {
            best = (x, f, a);
        }
    }

    // bounded Nelder-Mead polish in unit coordinates
    let step = 1.0 / (GRID_POINTS - 1) as f64;
    let mut simplex: Vec<(Vec<f64>, f64, f64)> = vec![best.clone()];
    for d in 0..dims {
        let mut x = best.0.clone();
        x[d] = if x[d] + step <= 1.0 {
            x[d] + step
        } else {
            x[d] - step
        };
        let (c1, lambda_t) = point(&x);
        let (f, a) = obj.eval(c1, lambda_t)?;
        simplex.push((x, f, a));
    }
    let clamp = |x: Vec<f64>| -> Vec<f64> { x.into_iter().map(|v| v.clamp(0.0, 1.0)).collect() };
    let converged = loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let fbest = simplex[0].1;
        let fworst = simplex[dims].1;
        let spread = fworst - fbest;
        let diameter = simplex
            .iter()
            .skip(1)
            .map(|v| {
                v.0.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= spec.tolerance * fbest.abs().max(f64::MIN_POSITIVE) || diameter < 1e-12 {
            break true;
        }
        if obj.evaluations + dims + 2 > spec.max_evaluations {
            break false;
        }
        let centroid: Vec<f64> = (0..dims)
            .map(|d| simplex[..dims].iter().map(|v| v.0[d]).sum::<f64>() / dims as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            clamp(
                centroid
                    .iter()
                    .zip(&simplex[dims].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect(),
            )
        };
        let mut try_point = |x: Vec<f64>| -> Result<(Vec<f64>, f64, f64)> {
            let (c1, lambda_t) = point(&x);
            let (f, a) = obj.eval(c1, lambda_t)?;
            Ok((x, f, a))
        };
        let reflected = try_point(along(1.0))?;
        if reflected.1 < fbest {
            let expanded = try_point(along(2.0))?;
            simplex[dims] = if expanded.1 < reflected.1 {
                expanded
            } else {
                reflected
            };
        } else if reflected.1 < simplex[dims - 1].1 {
            simplex[dims] = reflected;
        } else {
            let t = if reflected.1 < fworst { 0.5 } else { -0.5 };
            let contracted = try_point(along(t))?;
            if contracted.1 < fworst.min(reflected.1) {
                simplex[dims] = contracted;
            } else {
                let anchor = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> =
                        v.0.iter()
                            .zip(&anchor)
                            .map(|(p, b)| b + 0.5 * (p - b))
                            .collect();
                    *v = try_point(x)?;
                }
            }
        }
    };
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f, a) = simplex.swap_remove(0);
    Ok(finish(&x, f, a, obj.evaluations, converged))
}
