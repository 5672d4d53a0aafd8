//! Relative intensity patterns: single slit, coherent double slit and the
//! environment-damped double slit, plus fringe analysis.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modes::ModeTruncation;
use crate::physics::{Kinematics, ScreenGeometry, SlitGeometry};
use crate::propagation::{Diffractor, Kernel, ScreenPoint};

/// Tolerance on `c1^2 + c2^2 = 1`; loose enough for three-digit coefficients
/// such as (0.565, 0.824), whose squares sum to 0.9982.
pub const NORMALIZATION_TOL: f64 = 2e-3;

/// Weights of the two slit amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperpositionSpec {
    pub c1: f64,
    pub c2: f64,
}

impl SuperpositionSpec {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 >= 0.0 && c2 >= 0.0) {
            return Err(Error::invalid(format!(
                "superposition coefficients must be non-negative, got {c1}, {c2}"
            )));
        }
        let norm = c1 * c1 + c2 * c2;
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::invalid(format!("c1^2 + c2^2 = {norm}, expected 1")));
        }
        Ok(Self { c1, c2 })
    }

    /// Exactly normalised pair with `c2 = sqrt(1 - c1^2)`.
    pub fn from_c1(c1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c1) {
            return Err(Error::invalid(format!("c1 must lie in [0, 1], got {c1}")));
        }
        Ok(Self {
            c1,
            c2: (1.0 - c1 * c1).sqrt(),
        })
    }

    pub fn equal() -> Self {
        Self {
            c1: std::f64::consts::FRAC_1_SQRT_2,
            c2: std::f64::consts::FRAC_1_SQRT_2,
        }
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{name} must lie in [0, 1], got {v}"
        )))
    }
}

/// Coherence degree `Lambda = 2|alpha| / (1 + |alpha|^2)`.
pub fn lambda_from_alpha(alpha_t: f64) -> Result<f64> {
    check_unit("alpha_t", alpha_t)?;
    Ok(2.0 * alpha_t / (1.0 + alpha_t * alpha_t))
}

/// Root in `[0, 1]` of `2 alpha / (1 + alpha^2) = Lambda`.
pub fn alpha_from_lambda(lambda_t: f64) -> Result<f64> {
    check_unit("lambda_t", lambda_t)?;
    // (1 - sqrt(1 - L^2)) / L, rearranged to avoid cancellation at small L
    Ok(lambda_t / (1.0 + (1.0 - lambda_t * lambda_t).sqrt()))
}

/// Environment overlap `|alpha_t|` and the coherence degree it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceSpec {
    pub alpha_t: f64,
    pub lambda_t: f64,
}

impl DecoherenceSpec {
    pub fn from_alpha(alpha_t: f64) -> Result<Self> {
        Ok(Self {
            alpha_t,
            lambda_t: lambda_from_alpha(alpha_t)?,
        })
    }

    pub fn from_lambda(lambda_t: f64) -> Result<Self> {
        Ok(Self {
            alpha_t: alpha_from_lambda(lambda_t)?,
            lambda_t,
        })
    }

    /// The `(1 + |alpha|^2)` prefactor.
    pub fn prefactor(&self) -> f64 {
        1.0 + self.alpha_t * self.alpha_t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub s: f64,
    pub intensity: f64,
}

/// Intensity samples over increasing screen positions, with a snapshot of
/// the run parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Pattern {
    pub samples: Vec<Sample>,
    pub metadata: BTreeMap<String, String>,
}

impl Pattern {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[0].s < w[1].s)) {
            return Err(Error::invalid(
                "pattern positions must be strictly increasing",
            ));
        }
        if let Some(bad) = samples.iter().find(|p| !(p.intensity >= 0.0)) {
            return Err(Error::invalid(format!(
                "negative or NaN intensity {} at s = {}",
                bad.intensity, bad.s
            )));
        }
        Ok(Self {
            samples,
            metadata: BTreeMap::new(),
        })
    }

    pub fn from_pairs(positions: &[f64], intensities: &[f64]) -> Result<Self> {
        if positions.len() != intensities.len() {
            return Err(Error::invalid("position and intensity counts differ"));
        }
        Self::new(
            positions
                .iter()
                .zip(intensities)
                .map(|(&s, &intensity)| Sample { s, intensity })
                .collect(),
        )
    }

    pub fn positions(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.s).collect()
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.intensity).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_intensity(&self) -> f64 {
        self.samples.iter().map(|p| p.intensity).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|p| Sample {
                    s: p.s,
                    intensity: p.intensity * factor,
                })
                .collect(),
            metadata: self.metadata.clone(),
        }
    }

    /// Linear interpolation at `s`; `None` outside the sampled range.
    pub fn interpolate(&self, s: f64) -> Option<f64> {
        let first = self.samples.first()?;
        let last = self.samples.last()?;
        if s < first.s || s > last.s {
            return None;
        }
        let hi = self.samples.partition_point(|p| p.s < s);
        if hi == 0 {
            return Some(first.intensity);
        }
        let (a, b) = (self.samples[hi - 1], self.samples[hi]);
        if b.s == s {
            return Some(b.intensity);
        }
        let t = (s - a.s) / (b.s - a.s);
        Some(a.intensity + t * (b.intensity - a.intensity))
    }
}

/// Both slits' (phase-reduced) screen amplitudes over one scan.
#[derive(Debug, Clone)]
pub struct SlitFields {
    pub positions: Vec<f64>,
    pub first: Vec<Complex64>,
    pub second: Vec<Complex64>,
    pub kernel: Kernel,
    pub truncation: ModeTruncation,
}

impl SlitFields {
    pub fn compute(
        scan: &ScreenGeometry,
        kernel: Kernel,
        trunc: &ModeTruncation,
        kin: &Kinematics,
        geo: &SlitGeometry,
        amplitude: f64,
    ) -> Result<Self> {
        scan.validate()?;
        let diffractor = Diffractor::new(kin, geo, scan.alpha, kernel, trunc, amplitude)?;
        let pairs = scan
            .positions
            .par_iter()
            .map(|&s| {
                let pt = ScreenPoint::on_screen(s, scan.distance, scan.alpha)?;
                diffractor.pair(&pt).map(|(a, b)| (a.reduced, b.reduced))
            })
            .collect::<Result<Vec<_>>>()?;
        let (first, second) = pairs.into_iter().unzip();
        Ok(Self {
            positions: scan.positions.clone(),
            first,
            second,
            kernel,
            truncation: *trunc,
        })
    }

    fn pattern(&self, label: &str, intensities: Vec<f64>) -> Result<Pattern> {
        let mut p = Pattern::from_pairs(&self.positions, &intensities)?;
        p.metadata.insert("pattern".into(), label.into());
        p.metadata.insert("kernel".into(), self.kernel.to_string());
        p.metadata
            .insert("max_m".into(), self.truncation.max_m.to_string());
        p.metadata
            .insert("max_n".into(), self.truncation.max_n.to_string());
        Ok(p)
    }

    pub fn single_intensities(&self) -> Vec<f64> {
        self.first.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `c1^2|psi1|^2 + c2^2|psi2|^2 + 2 c1 c2 Lambda Re(psi1* psi2)`.
    pub fn mixed_intensities(&self, spec: &SuperpositionSpec, lambda_t: f64) -> Vec<f64> {
        let (c1, c2) = (spec.c1, spec.c2);
        self.first
            .iter()
            .zip(&self.second)
            .map(|(a, b)| {
                let cross = (a.conj() * b).re;
                (c1 * c1 * a.norm_sqr() + c2 * c2 * b.norm_sqr() + 2.0 * c1 * c2 * lambda_t * cross)
                    .max(0.0)
            })
            .collect()
    }

    pub fn single(&self) -> Result<Pattern> {
        self.pattern("single", self.single_intensities())
    }

    pub fn coherent(&self, spec: &SuperpositionSpec) -> Result<Pattern> {
        let mut p = self.pattern("double-coherent", self.mixed_intensities(spec, 1.0))?;
        p.metadata.insert("c1".into(), format!("{:e}", spec.c1));
        p.metadata.insert("c2".into(), format!("{:e}", spec.c2));
        Ok(p)
    }

    pub fn decoherent(&self, spec: &SuperpositionSpec, deco: &DecoherenceSpec) -> Result<Pattern> {
        let pre = deco.prefactor();
        let values = self
            .mixed_intensities(spec, deco.lambda_t)
            .into_iter()
            .map(|v| pre * v)
            .collect();
        let mut p = self.pattern("double-decoherent", values)?;
        p.metadata.insert("c1".into(), format!("{:e}", spec.c1));
        p.metadata.insert("c2".into(), format!("{:e}", spec.c2));
        p.metadata
            .insert("lambda_t".into(), format!("{:e}", deco.lambda_t));
        Ok(p)
    }
}

/// `I(s) = |psi_1(s)|^2`.
pub fn intensity_single(
    scan: &ScreenGeometry,
    kernel: Kernel,
    trunc: &ModeTruncation,
    kin: &Kinematics,
    geo: &SlitGeometry,
    amplitude: f64,
) -> Result<Pattern> {
    SlitFields::compute(scan, kernel, trunc, kin, geo, amplitude)?.single()
}

pub fn intensity_double_coherent(
    scan: &ScreenGeometry,
    spec: &SuperpositionSpec,
    kernel: Kernel,
    trunc: &ModeTruncation,
    kin: &Kinematics,
    geo: &SlitGeometry,
    amplitude: f64,
) -> Result<Pattern> {
    SlitFields::compute(scan, kernel, trunc, kin, geo, amplitude)?.coherent(spec)
}

#[allow(clippy::too_many_arguments)]
pub fn intensity_double_decoherent(
    scan: &ScreenGeometry,
    spec: &SuperpositionSpec,
    deco: &DecoherenceSpec,
    kernel: Kernel,
    trunc: &ModeTruncation,
    kin: &Kinematics,
    geo: &SlitGeometry,
    amplitude: f64,
) -> Result<Pattern> {
    SlitFields::compute(scan, kernel, trunc, kin, geo, amplitude)?.decoherent(spec, deco)
}

/// Largest mode index the refinement loop may reach.
pub const MAX_MODE_INDEX: u32 = 1 << 22;

/// Largest change between two peak-normalised intensity profiles.
pub fn profile_change(old: &[f64], new: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let (a, b) = (norm(old), norm(new));
    if a == 0.0 || b == 0.0 {
        return if a == b { 0.0 } else { f64::INFINITY };
    }
    old.iter()
        .zip(new)
        .map(|(x, y)| (x / a - y / b).abs())
        .fold(0.0, f64::max)
}

/// Mode fields refined by doubling the width and length cut-offs until the
/// peak-normalised profile `profile(fields)` changes by less than
/// `trunc.tail_tol` under a further doubling of each.
pub fn converged_fields<F>(
    scan: &ScreenGeometry,
    kernel: Kernel,
    trunc: &ModeTruncation,
    kin: &Kinematics,
    geo: &SlitGeometry,
    amplitude: f64,
    profile: F,
) -> Result<SlitFields>
where
    F: Fn(&SlitFields) -> Vec<f64>,
{
    let mut current = SlitFields::compute(scan, kernel, trunc, kin, geo, amplitude)?;
    let mut current_profile = profile(&current);
    let (mut width_done, mut length_done) = (false, false);
    while !(width_done && length_done) {
        for along_width in [true, false] {
            if (along_width && width_done) || (!along_width && length_done) {
                continue;
            }
            let mut t = current.truncation;
            if along_width {
                t.max_m = ModeTruncation::doubled(t.max_m);
            } else {
                t.max_n = ModeTruncation::doubled(t.max_n);
            }
            if t.max_m > MAX_MODE_INDEX || t.max_n > MAX_MODE_INDEX {
                return Err(Error::Convergence(format!(
                    "mode sum did not reach tail_tol {} below index {MAX_MODE_INDEX}",
                    trunc.tail_tol
                )));
            }
            let refined = SlitFields::compute(scan, kernel, &t, kin, geo, amplitude)?;
            let refined_profile = profile(&refined);
            let change = profile_change(&current_profile, &refined_profile);
            current = refined;
            current_profile = refined_profile;
            if change < trunc.tail_tol {
                if along_width {
                    width_done = true;
                } else {
                    length_done = true;
                }
            }
        }
    }
    Ok(current)
}

/// Indices of strict local maxima (`sign = 1`) or minima (`sign = -1`).
/// A flat run counts once, at its leftmost sample, when it strictly
/// dominates the samples on both sides of the run.
fn extrema(values: &[f64], sign: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < values.len() {
        let mut j = i;
        while j + 1 < values.len() && values[j + 1] == values[i] {
            j += 1;
        }
        if j + 1 < values.len() {
            let v = sign * values[i];
            if v > sign * values[i - 1] && v > sign * values[j + 1] {
                out.push(i);
            }
        }
        i = j + 1;
    }
    out
}

pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    extrema(values, 1.0)
}

pub fn local_minima(values: &[f64]) -> Vec<usize> {
    extrema(values, -1.0)
}

fn central_maximum(pattern: &Pattern, values: &[f64]) -> Result<usize> {
    let maxima = local_maxima(values);
    let mut best: Option<usize> = None;
    for i in maxima {
        if best.is_none_or(|b| values[i] > values[b]) {
            best = Some(i);
        }
    }
    best.ok_or_else(|| {
        Error::Analysis(format!(
            "no interior maximum among {} samples",
            pattern.len()
        ))
    })
}

fn contrast(max: f64, min: f64) -> f64 {
    if max + min == 0.0 {
        0.0
    } else {
        (max - min) / (max + min)
    }
}

fn nearest(
    pattern: &Pattern,
    centre: usize,
    candidates: impl Iterator<Item = usize>,
) -> Option<usize> {
    let s0 = pattern.samples[centre].s;
    let mut best: Option<(usize, f64)> = None;
    for i in candidates {
        let d = (pattern.samples[i].s - s0).abs();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Visibility `(I_max - I_min) / (I_max + I_min)` between the central
/// (highest) maximum and the local minimum nearest to it.
pub fn fringe_visibility(pattern: &Pattern) -> Result<f64> {
    let values = pattern.intensities();
    let centre = central_maximum(pattern, &values)?;
    let minimum = nearest(pattern, centre, local_minima(&values).into_iter())
        .ok_or_else(|| Error::Analysis("no local minimum beside the central maximum".into()))?;
    Ok(contrast(values[centre], values[minimum]))
}

/// Visibility of fringes near the central maximum, looking for the first
/// minimum within `window` of it. When the pattern has no minimum inside
/// the window (no fringes at that scale), the lowest sample in the window
/// stands in for `I_min`.
pub fn central_fringe_visibility(pattern: &Pattern, window: f64) -> Result<f64> {
    if !(window > 0.0) {
        return Err(Error::invalid(format!(
            "visibility window must be positive, got {window}"
        )));
    }
    let values = pattern.intensities();
    let centre = central_maximum(pattern, &values)?;
    let s0 = pattern.samples[centre].s;
    let inside = |i: &usize| *i != centre && (pattern.samples[*i].s - s0).abs() <= window;
    let minimum = match nearest(
        pattern,
        centre,
        local_minima(&values).into_iter().filter(inside),
    ) {
        Some(i) => i,
        None => (0..values.len())
            .filter(inside)
            .min_by(|&a, &b| values[a].total_cmp(&values[b]))
            .ok_or_else(|| Error::Analysis("no samples inside the visibility window".into()))?,
    };
    Ok(contrast(values[centre], values[minimum]))
}

/// Mean spacing of interference maxima after dividing out the single-slit
/// `envelope`, restricted to the contiguous region around the envelope peak
/// where the envelope exceeds `min_fraction` of its maximum.
pub fn fringe_period(pattern: &Pattern, envelope: &Pattern, min_fraction: f64) -> Result<f64> {
    if pattern.len() != envelope.len()
        || pattern
            .samples
            .iter()
            .zip(&envelope.samples)
            .any(|(a, b)| a.s != b.s)
    {
        return Err(Error::invalid(
            "pattern and envelope must share their sample positions",
        ));
    }
    let env = envelope.intensities();
    let peak = (0..env.len())
        .max_by(|&a, &b| env[a].total_cmp(&env[b]))
        .ok_or_else(|| Error::Analysis("empty envelope".into()))?;
    let floor = min_fraction * env[peak];
    let mut lo = peak;
    while lo > 0 && env[lo - 1] > floor {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < env.len() && env[hi + 1] > floor {
        hi += 1;
    }
    let ratio: Vec<f64> = (lo..=hi)
        .map(|i| pattern.samples[i].intensity / env[i])
        .collect();
    let peaks = local_maxima(&ratio);
    if peaks.len() < 2 {
        return Err(Error::Analysis(format!(
            "found {} fringe maxima, need at least 2",
            peaks.len()
        )));
    }
    let first = pattern.samples[lo + peaks[0]].s;
    let last = pattern.samples[lo + peaks[peaks.len() - 1]].s;
    Ok((last - first) / (peaks.len() - 1) as f64)
}

/// Mean spacing of the raw pattern maxima inside `[-half_width, half_width]`.
pub fn raw_peak_spacing(pattern: &Pattern, half_width: f64) -> Result<f64> {
    let values = pattern.intensities();
    let peaks: Vec<f64> = local_maxima(&values)
        .into_iter()
        .map(|i| pattern.samples[i].s)
        .filter(|s| s.abs() <= half_width)
        .collect();
    if peaks.len() < 2 {
        return Err(Error::Analysis("fewer than two maxima in range".into()));
    }
    Ok((peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(values: &[f64]) -> Pattern {
        let s: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
        Pattern::from_pairs(&s, values).unwrap()
    }

    #[test]
    fn coherence_algebra() {
        assert_eq!(lambda_from_alpha(1.0).unwrap(), 1.0);
        assert_eq!(lambda_from_alpha(0.0).unwrap(), 0.0);
        assert_eq!(alpha_from_lambda(1.0).unwrap(), 1.0);
        assert_eq!(alpha_from_lambda(0.0).unwrap(), 0.0);
        // 2 - sqrt(3)
        let a = alpha_from_lambda(0.5).unwrap();
        assert!((a - 0.267_949_192_431_122_7).abs() < 1e-15);
        assert!((lambda_from_alpha(a).unwrap() - 0.5).abs() < 1e-15);
        assert!(lambda_from_alpha(1.5).is_err());
        assert!(alpha_from_lambda(-0.1).is_err());
    }

    #[test]
    fn superposition_validation() {
        assert!(SuperpositionSpec::new(0.566, 0.824).is_ok());
        assert!(SuperpositionSpec::new(0.565, 0.824).is_ok());
        assert!(SuperpositionSpec::new(0.9, 0.9).is_err());
        assert!(SuperpositionSpec::new(-0.6, 0.8).is_err());
        let s = SuperpositionSpec::from_c1(0.6).unwrap();
        assert!((s.c2 - 0.8).abs() < 1e-15);
    }

    #[test]
    fn visibility_datum() {
        let p = pat(&[100.0, 500.0, 880.0, 600.0, 300.0, 450.0, 200.0]);
        let v = fringe_visibility(&p).unwrap();
        assert!((v - 0.491_525_423_728_813_6).abs() < 1e-12);
    }

    #[test]
    fn visibility_edge_cases() {
        assert!(matches!(
            fringe_visibility(&pat(&[5.0; 9])),
            Err(Error::Analysis(_))
        ));
        let v = fringe_visibility(&pat(&[1.0, 3.0, 10.0, 3.0, 0.0, 2.0, 1.0])).unwrap();
        assert_eq!(v, 1.0);
        // monotone pattern: no maximum at all
        assert!(fringe_visibility(&pat(&[1.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn plateau_extrema_use_leftmost_sample() {
        let v = [0.0, 2.0, 2.0, 2.0, 1.0, 1.0, 3.0, 0.0];
        assert_eq!(local_maxima(&v), vec![1, 6]);
        assert_eq!(local_minima(&v), vec![4]);
        // edge plateau is not an extremum
        assert!(local_maxima(&[3.0, 3.0, 1.0]).is_empty());
    }

    #[test]
    fn windowed_visibility_on_fringe_free_pattern() {
        let p = pat(&[0.9, 0.95, 0.99, 1.0, 0.99, 0.95, 0.9]);
        let v = central_fringe_visibility(&p, 1.5).unwrap();
        assert!((v - contrast(1.0, 0.99)).abs() < 1e-15);
        assert!(central_fringe_visibility(&p, 0.0).is_err());
    }

    #[test]
    fn interpolation() {
        let p = Pattern::from_pairs(&[0.0, 1.0], &[0.0, 2.0]).unwrap();
        assert_eq!(p.interpolate(0.5), Some(1.0));
        assert_eq!(p.interpolate(1.0), Some(2.0));
        assert_eq!(p.interpolate(0.0), Some(0.0));
        assert_eq!(p.interpolate(1.5), None);
    }

    #[test]
    fn pattern_validation() {
        assert!(Pattern::from_pairs(&[0.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(Pattern::from_pairs(&[0.0, 1.0], &[1.0, -1.0]).is_err());
    }

    #[test]
    fn profile_change_is_scale_free() {
        let a = [1.0, 2.0, 4.0];
        let b = [2.0, 4.0, 8.0];
        assert_eq!(profile_change(&a, &b), 0.0);
        assert!((profile_change(&a, &[1.0, 2.0, 2.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn period_of_synthetic_fringes() {
        let s: Vec<f64> = (0..2001).map(|i| -10.0 + 0.01 * i as f64).collect();
        let env: Vec<f64> = s.iter().map(|x| (-x * x / 50.0f64).exp()).collect();
        let fr: Vec<f64> = s
            .iter()
            .zip(&env)
            .map(|(x, e)| e * (1.0 + 0.9 * (2.0 * std::f64::consts::PI * x / 2.5).cos()))
            .collect();
        let p = Pattern::from_pairs(&s, &fr).unwrap();
        let e = Pattern::from_pairs(&s, &env).unwrap();
        let period = fringe_period(&p, &e, 0.1).unwrap();
        assert!((period - 2.5).abs() < 0.011);
    }
}
