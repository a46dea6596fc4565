//! Gaussian KDE of age for aligned vs. non-aligned individuals, plus the
//! aligned proportion as a function of age.

use serde::{Deserialize, Serialize};

use super::quantile::quartiles;
use super::StatsError;

pub const GRID_POINTS: usize = 256;
/// Grid extends this many bandwidths beyond the data range.
pub const GRID_PAD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum Bandwidth {
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentCurves {
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    /// Empty group gives an all-zero curve.
    pub aligned_density: Vec<f64>,
    pub non_aligned_density: Vec<f64>,
    pub proportion: Vec<f64>,
    pub n_aligned: usize,
    pub n_non_aligned: usize,
}

/// Silverman's rule of thumb. Falls back to whichever spread measure is
/// positive, and to 1.0 when the sample has none.
pub fn silverman(values: &[f64]) -> Result<f64, StatsError> {
    let n = values.len();
    if n == 0 {
        return Err(StatsError::EmptyInput);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let q = quartiles(values)?;
    let iqr = (q.q75 - q.q25) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => return Ok(1.0),
    };
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

fn gauss(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn kernel_sums(samples: &[f64], grid: &[f64], h: f64) -> Vec<f64> {
    grid.iter()
        .map(|&x| samples.iter().map(|&s| gauss((x - s) / h)).sum::<f64>())
        .collect()
}

pub fn trapezoid(grid: &[f64], y: &[f64]) -> f64 {
    grid.windows(2)
        .zip(y.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Scales `sums` to unit integral on the grid; the Gaussian tails cut off
/// at the grid edge would otherwise leave it a few thousandths short.
fn to_density(grid: &[f64], sums: &[f64]) -> Vec<f64> {
    let area = trapezoid(grid, sums);
    if area > 0.0 {
        sums.iter().map(|s| s / area).collect()
    } else {
        vec![0.0; sums.len()]
    }
}

pub fn alignment_by_age(ages: &[f64], aligned: &[bool], bandwidth: Bandwidth) -> Result<AlignmentCurves, StatsError> {
    if ages.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if ages.len() != aligned.len() {
        return Err(StatsError::LengthMismatch(ages.len(), aligned.len()));
    }
    if ages.iter().any(|a| !a.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let h = match bandwidth {
        Bandwidth::Auto => silverman(ages)?,
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => h,
        Bandwidth::Fixed(h) => return Err(StatsError::InvalidBandwidth(h)),
    };
    let lo = ages.iter().copied().fold(f64::INFINITY, f64::min) - GRID_PAD * h;
    let hi = ages.iter().copied().fold(f64::NEG_INFINITY, f64::max) + GRID_PAD * h;
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| lo + step * i as f64).collect();

    let (yes, no): (Vec<(f64, bool)>, Vec<(f64, bool)>) = ages.iter().copied().zip(aligned.iter().copied()).partition(|p| p.1);
    let yes: Vec<f64> = yes.into_iter().map(|p| p.0).collect();
    let no: Vec<f64> = no.into_iter().map(|p| p.0).collect();
    let yes_sum = kernel_sums(&yes, &grid, h);
    let no_sum = kernel_sums(&no, &grid, h);
    // density_aligned·n_aligned / density_all·n_all reduces to a ratio of
    // kernel sums when both share one bandwidth.
    let proportion = yes_sum
        .iter()
        .zip(&no_sum)
        .map(|(&a, &b)| if a + b > 0.0 { (a / (a + b)).clamp(0.0, 1.0) } else { 0.0 })
        .collect();
    Ok(AlignmentCurves {
        bandwidth: h,
        aligned_density: to_density(&grid, &yes_sum),
        non_aligned_density: to_density(&grid, &no_sum),
        grid,
        proportion,
        n_aligned: yes.len(),
        n_non_aligned: no.len(),
    })
}
