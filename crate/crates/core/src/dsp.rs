//! Framing, forward/inverse real DFTs and single-frequency projection.
//!
//! Coefficients use an amplitude-calibrated scaling: interior bins are
//! multiplied by `2 / (N * a_ref)`, DC and Nyquist by `1 / (N * a_ref)`. With
//! `a_ref = 1` a full-scale cosine sitting on a bin center has magnitude 1.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

pub const MIN_FFT_SIZE: usize = 32;
pub const MAX_FFT_SIZE: usize = 1 << 16;

/// Largest imaginary part tolerated on DC/Nyquist before an inverse refuses.
pub const HERMITIAN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl Window {
    pub fn id(self) -> u8 {
        match self {
            Window::Rectangular => 0,
            Window::Hann => 1,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Window::Rectangular),
            1 => Some(Window::Hann),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "rectangular" | "rect" => Some(Window::Rectangular),
            "hann" => Some(Window::Hann),
            _ => None,
        }
    }

    /// Periodic window coefficients of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How a signal is cut into analysis slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameSpec {
    fft_size: usize,
    hop: usize,
    window: Window,
}

impl FrameSpec {
    pub fn new(fft_size: usize, hop: usize, window: Window) -> Result<Self> {
        if !fft_size.is_power_of_two() || !(MIN_FFT_SIZE..=MAX_FFT_SIZE).contains(&fft_size) {
            return Err(Error::InvalidFrameSpec(format!(
                "fft size {fft_size} must be a power of two in [{MIN_FFT_SIZE}, {MAX_FFT_SIZE}]"
            )));
        }
        if hop == 0 || hop > fft_size {
            return Err(Error::InvalidFrameSpec(format!(
                "hop {hop} must be in [1, {fft_size}]"
            )));
        }
        Ok(Self {
            fft_size,
            hop,
            window,
        })
    }

    /// Non-overlapping rectangular slices, the exactly invertible layout.
    pub fn invertible(fft_size: usize) -> Result<Self> {
        Self::new(fft_size, fft_size, Window::Rectangular)
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn bin_count(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn is_invertible(&self) -> bool {
        self.hop == self.fft_size && self.window == Window::Rectangular
    }

    /// Number of slices needed to cover `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        len.div_ceil(self.hop)
    }
}

/// Spacing between adjacent coefficient centers, `fs / N`.
pub fn bin_spacing(sample_rate: u32, fft_size: usize) -> f64 {
    sample_rate as f64 / fft_size as f64
}

/// Frequency exactly represented by bin `k`.
pub fn bin_center(k: usize, sample_rate: u32, fft_size: usize) -> f64 {
    k as f64 * sample_rate as f64 / fft_size as f64
}

/// Cuts `audio` into slices of `N` samples starting every `H` samples. The
/// trailing slices are zero-padded.
pub fn frame_signal(audio: &AudioBuffer, spec: &FrameSpec) -> Result<Vec<Vec<f64>>> {
    if audio.is_empty() {
        return Err(Error::EmptyInput);
    }
    let samples = audio.samples();
    let n = spec.fft_size();
    Ok((0..spec.frame_count(samples.len()))
        .map(|k| {
            let start = k * spec.hop();
            let end = (start + n).min(samples.len());
            let mut frame = Vec::with_capacity(n);
            frame.extend_from_slice(&samples[start..end]);
            frame.resize(n, 0.0);
            frame
        })
        .collect())
}

/// Planned forward and inverse real FFTs of one size.
#[derive(Clone)]
pub struct Transformer {
    fft_size: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl fmt::Debug for Transformer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transformer")
            .field("fft_size", &self.fft_size)
            .finish()
    }
}

impl Transformer {
    pub fn new(fft_size: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        Self {
            fft_size,
            forward: planner.plan_fft_forward(fft_size),
            inverse: planner.plan_fft_inverse(fft_size),
        }
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    /// Scaled one-sided spectrum of a real frame, `N/2 + 1` coefficients.
    pub fn forward(&self, frame: &[f64], a_ref: f64) -> Result<Vec<Complex64>> {
        let mut input = frame.to_vec();
        self.forward_in_place(&mut input, a_ref)
    }

    /// Like [`Transformer::forward`] but consumes `frame` as scratch.
    pub fn forward_in_place(&self, frame: &mut [f64], a_ref: f64) -> Result<Vec<Complex64>> {
        let n = self.fft_size;
        if frame.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: frame.len(),
            });
        }
        check_a_ref(a_ref)?;
        let mut out = self.forward.make_output_vec();
        self.forward
            .process(frame, &mut out)
            .expect("buffer sizes match the plan");
        let interior = 2.0 / (n as f64 * a_ref);
        let edge = 1.0 / (n as f64 * a_ref);
        let last = n / 2;
        for (k, c) in out.iter_mut().enumerate() {
            if k == 0 || k == last {
                *c = Complex64::new(c.re * edge, 0.0);
            } else {
                *c *= interior;
            }
        }
        Ok(out)
    }

    /// Exact left inverse of [`Transformer::forward`].
    pub fn inverse(&self, coeffs: &[Complex64], a_ref: f64) -> Result<Vec<f64>> {
        let n = self.fft_size;
        let bins = n / 2 + 1;
        if coeffs.len() != bins {
            return Err(Error::LengthMismatch {
                expected: bins,
                actual: coeffs.len(),
            });
        }
        check_a_ref(a_ref)?;
        let last = n / 2;
        if coeffs[0].im.abs() > HERMITIAN_TOLERANCE || coeffs[last].im.abs() > HERMITIAN_TOLERANCE {
            return Err(Error::InvalidHermitianBoundary);
        }
        // realfft's inverse is unnormalized, so the 1/N of the synthesis sum
        // cancels the N in the analysis scaling.
        let mut spectrum: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if k == 0 || k == last {
                    Complex64::new(c.re * a_ref, 0.0)
                } else {
                    c * (a_ref * 0.5)
                }
            })
            .collect();
        let mut out = self.inverse.make_output_vec();
        self.inverse
            .process(&mut spectrum, &mut out)
            .expect("buffer sizes match the plan");
        Ok(out)
    }
}

fn check_a_ref(a_ref: f64) -> Result<()> {
    if a_ref > 0.0 && a_ref.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "a_ref must be positive, got {a_ref}"
        )))
    }
}

/// One-off forward transform. Prefer [`Transformer`] for repeated calls.
pub fn forward_transform(frame: &[f64], a_ref: f64) -> Result<Vec<Complex64>> {
    Transformer::new(frame.len()).forward(frame, a_ref)
}

/// One-off inverse transform; the frame length is `2 * (len - 1)`.
pub fn inverse_transform(coeffs: &[Complex64], a_ref: f64) -> Result<Vec<f64>> {
    if coeffs.len() < 2 {
        return Err(Error::LengthMismatch {
            expected: 2,
            actual: coeffs.len(),
        });
    }
    Transformer::new(2 * (coeffs.len() - 1)).inverse(coeffs, a_ref)
}

/// Projects `frame` onto a single frequency using the Goertzel recurrence,
/// with the same `2 / (N * a_ref)` scaling as interior FFT bins. The phase is
/// referenced to the first sample of the frame.
pub fn project_frequency(
    frame: &[f64],
    freq: f64,
    sample_rate: u32,
    a_ref: f64,
) -> Result<Complex64> {
    let nyquist = sample_rate as f64 / 2.0;
    if !(freq > 0.0 && freq < nyquist) {
        return Err(Error::FrequencyOutOfRange(freq));
    }
    if frame.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_a_ref(a_ref)?;
    let omega = 2.0 * PI * freq / sample_rate as f64;
    let coeff = 2.0 * omega.cos();
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    for &x in frame {
        let s0 = x + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    // s1 - e^{-iw} s2 = sum x[n] e^{iw(N-1-n)}; rotate back to the frame start.
    let tail = Complex64::new(s1 - s2 * omega.cos(), s2 * omega.sin());
    let n = frame.len();
    let rotate = Complex64::from_polar(1.0, -omega * (n - 1) as f64);
    Ok(tail * rotate * (2.0 / (n as f64 * a_ref)))
}

/// Complex coefficients for every slice of a signal plus the framing that
/// produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    pub columns: Vec<Vec<Complex64>>,
    pub frame_spec: FrameSpec,
    pub sample_rate: u32,
    pub a_ref: f64,
    /// Sample count of the source signal, used to trim padding on decode.
    pub original_length: usize,
}

impl ComplexSpectrogram {
    /// Windows and transforms every slice of `audio`.
    pub fn analyze(audio: &AudioBuffer, spec: FrameSpec, a_ref: f64) -> Result<Self> {
        check_a_ref(a_ref)?;
        let frames = frame_signal(audio, &spec)?;
        let transformer = Transformer::new(spec.fft_size());
        let window = match spec.window() {
            Window::Rectangular => None,
            w => Some(w.coefficients(spec.fft_size())),
        };
        let columns = frames
            .into_iter()
            .map(|mut frame| {
                if let Some(w) = &window {
                    frame.iter_mut().zip(w).for_each(|(x, w)| *x *= w);
                }
                transformer.forward_in_place(&mut frame, a_ref)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            columns,
            frame_spec: spec,
            sample_rate: audio.sample_rate(),
            a_ref,
            original_length: audio.len(),
        })
    }

    pub fn frame_count(&self) -> usize {
        self.columns.len()
    }

    pub fn bin_count(&self) -> usize {
        self.frame_spec.bin_count()
    }

    pub fn bin_spacing(&self) -> f64 {
        bin_spacing(self.sample_rate, self.frame_spec.fft_size())
    }

    pub fn bin_frequency(&self, k: usize) -> f64 {
        bin_center(k, self.sample_rate, self.frame_spec.fft_size())
    }

    /// Seconds between consecutive slice starts.
    pub fn slice_interval(&self) -> f64 {
        self.frame_spec.hop() as f64 / self.sample_rate as f64
    }

    /// Coefficients of bin `k` over time, phase-referenced to absolute time
    /// instead of each slice start. With `hop == fft_size` this is the raw
    /// bin sequence.
    pub fn bin_track(&self, k: usize) -> Vec<Complex64> {
        let n = self.frame_spec.fft_size() as u64;
        let hop = self.frame_spec.hop() as u64;
        self.columns
            .iter()
            .enumerate()
            .map(|(j, col)| {
                // Integer reduction keeps the reference angle exact.
                let cycles = ((k as u64 * hop * j as u64) % n) as f64 / n as f64;
                col[k] * Complex64::from_polar(1.0, -2.0 * PI * cycles)
            })
            .collect()
    }

    /// Reassembles the time signal. Only valid for invertible framing.
    pub fn reconstruct(&self) -> Result<AudioBuffer> {
        if self.frame_spec.hop() != self.frame_spec.fft_size() {
            return Err(Error::NonInvertibleFraming(format!(
                "hop {} != fft size {}",
                self.frame_spec.hop(),
                self.frame_spec.fft_size()
            )));
        }
        if self.frame_spec.window() != Window::Rectangular {
            return Err(Error::NonInvertibleFraming(format!(
                "window {} is not rectangular",
                self.frame_spec.window()
            )));
        }
        let transformer = Transformer::new(self.frame_spec.fft_size());
        let mut samples = Vec::with_capacity(self.columns.len() * self.frame_spec.fft_size());
        for col in &self.columns {
            samples.extend(transformer.inverse(col, self.a_ref)?);
        }
        if samples.len() < self.original_length {
            return Err(Error::Malformed(format!(
                "{} frames cannot hold {} samples",
                self.columns.len(),
                self.original_length
            )));
        }
        samples.truncate(self.original_length);
        AudioBuffer::new(samples, self.sample_rate)
    }
}
