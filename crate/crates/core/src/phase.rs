//! Frequency offsets from phase beats.
//!
//! A steady tone `delta` Hz away from a coefficient center advances that
//! coefficient's phase by `2 pi delta` radians per second, so the hue cycles
//! `delta` times a second: upward offsets run red-green-blue, downward ones
//! red-blue-green. Summing the wrapped per-slice phase steps and dividing by
//! the elapsed time recovers `delta` well below the bin spacing, as long as
//! one slice never advances more than half a turn (`|delta| < fs / 2H`).

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;

use crate::dsp::ComplexSpectrogram;
use crate::error::{Error, Result};

/// Smallest span of slice starts the estimator accepts.
pub const MIN_DURATION_SECS: f64 = 0.25;
/// Coefficient magnitude a slice needs to count as excited.
pub const NOISE_FLOOR: f64 = 1e-3;
/// Fraction of slices that must be excited.
pub const MIN_EXCITED_FRACTION: f64 = 0.9;
/// Offsets smaller than this read as a constant hue.
pub const CONSTANT_HUE_HZ: f64 = 0.05;

/// Hue rotation sense of a coefficient over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Red to green to blue: the tone sits above the reference.
    Rgb,
    /// Red to blue to green: the tone sits below the reference.
    Rbg,
    Constant,
}

impl Direction {
    pub fn from_offset(offset_hz: f64) -> Self {
        if offset_hz.abs() < CONSTANT_HUE_HZ {
            Direction::Constant
        } else if offset_hz > 0.0 {
            Direction::Rgb
        } else {
            Direction::Rbg
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Rgb => "RGB",
            Direction::Rbg => "RBG",
            Direction::Constant => "constant",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatMeasurement {
    pub bin: usize,
    /// Signed distance of the tone from the reference frequency.
    pub offset_hz: f64,
    /// Hue cycles per second, `|offset_hz|`.
    pub cycles_per_second: f64,
    pub direction: Direction,
}

impl BeatMeasurement {
    /// Seconds per hue cycle; infinite for a constant hue.
    pub fn period_secs(&self) -> f64 {
        1.0 / self.cycles_per_second
    }
}

/// Mean phase advance rate (Hz) of a coefficient sequence sampled every
/// `interval` seconds. Phases must be referenced to absolute time.
pub fn phase_drift_hz(track: &[Complex64], interval: f64) -> Result<f64> {
    if track.len() < 2 || (track.len() - 1) as f64 * interval < MIN_DURATION_SECS {
        return Err(Error::WindowTooShort);
    }
    let excited = track.iter().filter(|c| c.norm() >= NOISE_FLOOR).count();
    if (excited as f64) < MIN_EXCITED_FRACTION * track.len() as f64 {
        return Err(Error::BinNotExcited);
    }
    let total: f64 = track.windows(2).map(|w| (w[1] * w[0].conj()).arg()).sum();
    let duration = (track.len() - 1) as f64 * interval;
    Ok(total / (TAU * duration))
}

/// Offset of the dominant tone near bin `k` from that bin's center. Only
/// slices lying entirely inside the original signal are used.
pub fn estimate_offset(spec: &ComplexSpectrogram, k: usize) -> Result<BeatMeasurement> {
    if k >= spec.bin_count() {
        return Err(Error::InvalidParameter(format!("bin {k} out of range")));
    }
    let n = spec.frame_spec.fft_size();
    let complete = if spec.original_length >= n {
        (spec.original_length - n) / spec.frame_spec.hop() + 1
    } else {
        0
    };
    let mut track = spec.bin_track(k);
    track.truncate(complete);
    let offset_hz = phase_drift_hz(&track, spec.slice_interval())?;
    Ok(BeatMeasurement {
        bin: k,
        offset_hz,
        cycles_per_second: offset_hz.abs(),
        direction: Direction::from_offset(offset_hz),
    })
}
