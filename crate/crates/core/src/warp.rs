//! Linear-to-log frequency warping of complex columns.
//!
//! Each display row has a target frequency on a geometric grid. Where two
//! neighbouring coefficient centers land more than one row apart the row
//! value is interpolated between them; above that switchover the nearest
//! center is copied and the rest are skipped.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::dsp::{bin_spacing, FrameSpec};
use crate::error::{Error, Result};

/// Relative magnitude below which an interpolated minimum counts as a black line.
pub const BLACK_LINE_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InterpolationMode {
    /// Componentwise lerp of real and imaginary parts.
    #[default]
    Rectangular,
    /// Lerp of magnitude and of phase along the shorter arc.
    Polar,
}

impl InterpolationMode {
    pub fn name(self) -> &'static str {
        match self {
            InterpolationMode::Rectangular => "rect",
            InterpolationMode::Polar => "polar",
        }
    }
}

impl fmt::Display for InterpolationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InterpolationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rect" | "rectangular" => Ok(InterpolationMode::Rectangular),
            "polar" => Ok(InterpolationMode::Polar),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

/// How one display row is filled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowPlan {
    /// Blend bin `lower` and `lower + 1` at fraction `t` in `[0, 1)`.
    Interpolate { lower: usize, t: f64 },
    /// Copy a single bin.
    Undersample { bin: usize },
}

/// Row-to-frequency map for a log display plus the per-row fill plan.
#[derive(Debug, Clone, PartialEq)]
pub struct LogAxisSpec {
    f_min: f64,
    f_max: f64,
    sample_rate: u32,
    fft_size: usize,
    frequencies: Vec<f64>,
    plan: Vec<RowPlan>,
}

impl LogAxisSpec {
    pub fn new(
        f_min: f64,
        f_max: f64,
        rows: usize,
        frame_spec: &FrameSpec,
        sample_rate: u32,
    ) -> Result<Self> {
        build_log_axis(f_min, f_max, rows, frame_spec, sample_rate)
    }

    pub fn rows(&self) -> usize {
        self.plan.len()
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn bin_count(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Target frequency of row `r` (row 0 is the bottom of the display).
    pub fn frequency(&self, row: usize) -> f64 {
        self.frequencies[row]
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn plan(&self) -> &[RowPlan] {
        &self.plan
    }

    /// Continuous row coordinate of frequency `f`.
    pub fn row_of(&self, f: f64) -> f64 {
        (self.rows() - 1) as f64 * (f / self.f_min).ln() / (self.f_max / self.f_min).ln()
    }

    /// Target frequency of the lowest undersampled row, if any.
    pub fn switchover_frequency(&self) -> Option<f64> {
        self.plan
            .iter()
            .position(|p| matches!(p, RowPlan::Undersample { .. }))
            .map(|r| self.frequencies[r])
    }
}

pub fn build_log_axis(
    f_min: f64,
    f_max: f64,
    rows: usize,
    frame_spec: &FrameSpec,
    sample_rate: u32,
) -> Result<LogAxisSpec> {
    let n = frame_spec.fft_size();
    let spacing = bin_spacing(sample_rate, n);
    let nyquist = sample_rate as f64 / 2.0;
    if rows < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 rows, got {rows}"
        )));
    }
    if !(f_min.is_finite() && f_max.is_finite() && f_min > 0.0 && f_min < f_max && f_max <= nyquist)
    {
        return Err(Error::InvalidParameter(format!(
            "need 0 < f_min < f_max <= {nyquist}, got {f_min}..{f_max}"
        )));
    }
    if f_min < spacing {
        return Err(Error::BelowFirstCoefficient);
    }
    let last_bin = n / 2;
    let log_span = (f_max / f_min).ln();
    let row_of = |f: f64| (rows - 1) as f64 * (f / f_min).ln() / log_span;

    let mut frequencies = Vec::with_capacity(rows);
    let mut plan = Vec::with_capacity(rows);
    for r in 0..rows {
        let f = if r == rows - 1 {
            f_max
        } else {
            f_min * (f_max / f_min).powf(r as f64 / (rows - 1) as f64)
        };
        let pos = f / spacing;
        let lower = (pos.floor() as usize).min(last_bin);
        let t = pos - lower as f64;
        let row_plan = if lower >= last_bin {
            RowPlan::Undersample { bin: last_bin }
        } else {
            let lo_f = lower as f64 * spacing;
            let hi_f = (lower + 1) as f64 * spacing;
            if row_of(hi_f) - row_of(lo_f) > 1.0 {
                RowPlan::Interpolate { lower, t }
            } else if (f / lo_f).ln() <= (hi_f / f).ln() {
                RowPlan::Undersample { bin: lower }
            } else {
                RowPlan::Undersample { bin: lower + 1 }
            }
        };
        frequencies.push(f);
        plan.push(row_plan);
    }
    Ok(LogAxisSpec {
        f_min,
        f_max,
        sample_rate,
        fft_size: n,
        frequencies,
        plan,
    })
}

fn lerp_rect(a: Complex64, b: Complex64, t: f64) -> Complex64 {
    a * (1.0 - t) + b * t
}

fn lerp_polar(a: Complex64, b: Complex64, t: f64) -> Complex64 {
    if t == 0.0 {
        return a;
    }
    let magnitude = a.norm() * (1.0 - t) + b.norm() * t;
    let mut delta = (b.arg() - a.arg() + PI).rem_euclid(TAU) - PI;
    // exact half turns go the positive way
    if delta <= -PI {
        delta = PI;
    }
    Complex64::from_polar(magnitude, a.arg() + t * delta)
}

/// Interpolates between two coefficients.
pub fn interpolate(a: Complex64, b: Complex64, t: f64, mode: InterpolationMode) -> Complex64 {
    match mode {
        InterpolationMode::Rectangular => lerp_rect(a, b, t),
        InterpolationMode::Polar => lerp_polar(a, b, t),
    }
}

/// Resamples one linear-frequency column onto the log rows of `axis`.
pub fn warp_column(
    coeffs: &[Complex64],
    axis: &LogAxisSpec,
    mode: InterpolationMode,
) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(axis.rows());
    warp_column_into(coeffs, axis, mode, &mut out)?;
    Ok(out)
}

pub fn warp_column_into(
    coeffs: &[Complex64],
    axis: &LogAxisSpec,
    mode: InterpolationMode,
    out: &mut Vec<Complex64>,
) -> Result<()> {
    if coeffs.len() != axis.bin_count() {
        return Err(Error::LengthMismatch {
            expected: axis.bin_count(),
            actual: coeffs.len(),
        });
    }
    out.clear();
    out.extend(axis.plan.iter().map(|p| match *p {
        RowPlan::Interpolate { lower, t } => interpolate(coeffs[lower], coeffs[lower + 1], t, mode),
        RowPlan::Undersample { bin } => coeffs[bin],
    }));
    Ok(())
}

/// Rows of the rectangular warp where interpolation between two bins of
/// opposing phase passes (within [`BLACK_LINE_THRESHOLD`] of the column
/// peak) through zero. Each such crossing reports the row of smallest
/// interpolated magnitude between the two bins.
pub fn locate_black_lines(coeffs: &[Complex64], axis: &LogAxisSpec) -> Result<Vec<usize>> {
    if coeffs.len() != axis.bin_count() {
        return Err(Error::LengthMismatch {
            expected: axis.bin_count(),
            actual: coeffs.len(),
        });
    }
    let peak = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(Vec::new());
    }
    let limit = BLACK_LINE_THRESHOLD * peak;
    let mut lines = Vec::new();
    let mut r = 0;
    let plan = axis.plan();
    while r < plan.len() {
        let RowPlan::Interpolate { lower, .. } = plan[r] else {
            r += 1;
            continue;
        };
        // rows sharing this bin pair
        let start = r;
        while r < plan.len()
            && matches!(plan[r], RowPlan::Interpolate { lower: l, .. } if l == lower)
        {
            r += 1;
        }
        let (a, b) = (coeffs[lower], coeffs[lower + 1]);
        if (a * b.conj()).re >= 0.0 {
            continue;
        }
        let d = b - a;
        let t_min = (-(a * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
        if lerp_rect(a, b, t_min).norm() >= limit {
            continue;
        }
        let best = (start..r)
            .min_by(|&x, &y| {
                let mx = row_magnitude(plan[x], coeffs);
                let my = row_magnitude(plan[y], coeffs);
                mx.total_cmp(&my)
            })
            .expect("group is non-empty");
        lines.push(best);
    }
    Ok(lines)
}

fn row_magnitude(plan: RowPlan, coeffs: &[Complex64]) -> f64 {
    match plan {
        RowPlan::Interpolate { lower, t } => lerp_rect(coeffs[lower], coeffs[lower + 1], t).norm(),
        RowPlan::Undersample { bin } => coeffs[bin].norm(),
    }
}
