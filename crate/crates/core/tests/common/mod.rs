#![allow(dead_code)]

use matterwave::intensity::SlitFields;
use matterwave::{
    derive_kinematics, Kernel, Kinematics, ModeTruncation, PhysicalParams, ScreenGeometry,
    SlitGeometry,
};

pub fn c60() -> Kinematics {
    derive_kinematics(&PhysicalParams::c60(1.0)).unwrap()
}

/// Single slit: a = 10 um, b = 1 cm, c = 1.3 um.
pub fn single_slit() -> SlitGeometry {
    SlitGeometry::new(10e-6, 0.01, 1.3e-6, 10e-6).unwrap()
}

/// Double slit: a = d = 0.05 um.
pub fn double_slit() -> SlitGeometry {
    SlitGeometry::new(0.05e-6, 0.01, 1.3e-6, 0.05e-6).unwrap()
}

/// Positions `+-i h`, exactly mirror-symmetric about 0.
pub fn symmetric_positions(half_width: f64, half_count: usize) -> Vec<f64> {
    let h = half_width / half_count as f64;
    let right: Vec<f64> = (1..=half_count).map(|i| i as f64 * h).collect();
    right
        .iter()
        .rev()
        .map(|s| -s)
        .chain([0.0])
        .chain(right.iter().copied())
        .collect()
}

pub fn fields(
    geo: &SlitGeometry,
    distance: f64,
    positions: Vec<f64>,
    kernel: Kernel,
    trunc: ModeTruncation,
    amplitude: f64,
) -> SlitFields {
    let scan = ScreenGeometry::new(distance, positions, 0.0).unwrap();
    SlitFields::compute(&scan, kernel, &trunc, &c60(), geo, amplitude).unwrap()
}

pub fn max_relative_difference(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).copied().fold(0.0, f64::max);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}
