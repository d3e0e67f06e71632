//! Lossless CSPEC container and the encode/decode pipeline.
//!
//! CSPEC layout, all integers and floats little-endian:
//!
//! ```text
//! offset size field
//!      0    4 magic "CSPC"
//!      4    2 version (1)
//!      6    4 sample_rate
//!     10    4 fft_size
//!     14    4 hop
//!     18    1 window id (0 rectangular, 1 hann)
//!     19    8 original_length (samples)
//!     27    4 a_ref (f32)
//!     31    4 frame_count
//!     35    . frame_count * (fft_size/2 + 1) * (re f32, im f32)
//! ```
//!
//! Bins ascend within a frame; frames are in time order.

use std::path::Path;

use num_complex::{Complex, Complex64};

use crate::audio::AudioBuffer;
use crate::color::{hsb_to_complex, rgb_to_complex, rgb_unit_to_hsb, Rgb8};
use crate::dsp::{ComplexSpectrogram, FrameSpec, Window};
use crate::error::{Error, Result};
use crate::image::ColorImage;

pub const MAGIC: [u8; 4] = *b"CSPC";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 35;

#[derive(Debug, Clone, PartialEq)]
pub struct CspecFile {
    pub version: u16,
    pub sample_rate: u32,
    pub fft_size: u32,
    pub hop: u32,
    pub window_id: u8,
    pub original_length: u64,
    pub a_ref: f32,
    pub frame_count: u32,
    pub payload: Vec<Complex<f32>>,
}

impl CspecFile {
    pub fn from_spectrogram(spec: &ComplexSpectrogram) -> Self {
        let payload = spec
            .columns
            .iter()
            .flatten()
            .map(|c| Complex::new(c.re as f32, c.im as f32))
            .collect();
        Self {
            version: VERSION,
            sample_rate: spec.sample_rate,
            fft_size: spec.frame_spec.fft_size() as u32,
            hop: spec.frame_spec.hop() as u32,
            window_id: spec.frame_spec.window().id(),
            original_length: spec.original_length as u64,
            a_ref: spec.a_ref as f32,
            frame_count: spec.frame_count() as u32,
            payload,
        }
    }

    pub fn bins(&self) -> usize {
        self.fft_size as usize / 2 + 1
    }

    pub fn frame_spec(&self) -> Result<FrameSpec> {
        let window = Window::from_id(self.window_id)
            .ok_or_else(|| Error::Malformed(format!("unknown window id {}", self.window_id)))?;
        FrameSpec::new(self.fft_size as usize, self.hop as usize, window)
            .map_err(|e| Error::Malformed(e.to_string()))
    }

    /// Header self-consistency and payload size.
    pub fn validate(&self) -> Result<()> {
        if self.version != VERSION {
            return Err(Error::Malformed(format!(
                "unsupported version {}",
                self.version
            )));
        }
        if self.sample_rate == 0 {
            return Err(Error::Malformed("zero sample rate".into()));
        }
        let spec = self.frame_spec()?;
        if !(self.a_ref > 0.0 && self.a_ref.is_finite()) {
            return Err(Error::Malformed(format!("bad a_ref {}", self.a_ref)));
        }
        let expected_frames = spec.frame_count(self.original_length as usize);
        if self.frame_count as usize != expected_frames {
            return Err(Error::Malformed(format!(
                "frame count {} does not cover {} samples (expected {expected_frames})",
                self.frame_count, self.original_length
            )));
        }
        let expected = self.frame_count as usize * self.bins();
        if self.payload.len() != expected {
            return Err(Error::Malformed(format!(
                "payload holds {} coefficients, header implies {expected}",
                self.payload.len()
            )));
        }
        Ok(())
    }

    pub fn to_spectrogram(&self) -> Result<ComplexSpectrogram> {
        self.validate()?;
        let bins = self.bins();
        let columns = self
            .payload
            .chunks(bins)
            .map(|col| {
                col.iter()
                    .map(|c| Complex64::new(c.re as f64, c.im as f64))
                    .collect()
            })
            .collect();
        Ok(ComplexSpectrogram {
            columns,
            frame_spec: self.frame_spec()?,
            sample_rate: self.sample_rate,
            a_ref: self.a_ref as f64,
            original_length: self.original_length as usize,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len() * 8);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&self.sample_rate.to_le_bytes());
        out.extend_from_slice(&self.fft_size.to_le_bytes());
        out.extend_from_slice(&self.hop.to_le_bytes());
        out.push(self.window_id);
        out.extend_from_slice(&self.original_length.to_le_bytes());
        out.extend_from_slice(&self.a_ref.to_le_bytes());
        out.extend_from_slice(&self.frame_count.to_le_bytes());
        for c in &self.payload {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Malformed(format!(
                "{} bytes is shorter than the header",
                bytes.len()
            )));
        }
        if bytes[..4] != MAGIC {
            return Err(Error::Malformed("bad magic".into()));
        }
        let u16_at = |o: usize| u16::from_le_bytes(bytes[o..o + 2].try_into().unwrap());
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let mut file = CspecFile {
            version: u16_at(4),
            sample_rate: u32_at(6),
            fft_size: u32_at(10),
            hop: u32_at(14),
            window_id: bytes[18],
            original_length: u64::from_le_bytes(bytes[19..27].try_into().unwrap()),
            a_ref: f32_at(27),
            frame_count: u32_at(31),
            payload: Vec::new(),
        };
        let body = &bytes[HEADER_LEN..];
        if !body.len().is_multiple_of(8) {
            return Err(Error::Malformed(
                "payload is not a whole number of complex values".into(),
            ));
        }
        file.payload = body
            .chunks_exact(8)
            .map(|c| {
                Complex::new(
                    f32::from_le_bytes(c[..4].try_into().unwrap()),
                    f32::from_le_bytes(c[4..].try_into().unwrap()),
                )
            })
            .collect();
        file.validate()?;
        Ok(file)
    }
}

pub fn write_cspec(file: &CspecFile, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, file.to_bytes())?;
    Ok(())
}

pub fn read_cspec(path: impl AsRef<Path>) -> Result<CspecFile> {
    CspecFile::from_bytes(&std::fs::read(path)?)
}

/// Analyzes `audio` and packs the result. `a_ref` is rounded to f32 first so
/// the in-memory spectrogram and the file agree exactly.
pub fn encode(
    audio: &AudioBuffer,
    spec: FrameSpec,
    a_ref: f64,
) -> Result<(ComplexSpectrogram, CspecFile)> {
    let a_ref = a_ref as f32 as f64;
    let spectrogram = ComplexSpectrogram::analyze(audio, spec, a_ref)?;
    let file = CspecFile::from_spectrogram(&spectrogram);
    Ok((spectrogram, file))
}

/// Recovers the waveform. Refuses overlapping or windowed framing.
pub fn decode(file: &CspecFile) -> Result<AudioBuffer> {
    let spec = file.to_spectrogram()?;
    if !spec.frame_spec.is_invertible() {
        return Err(Error::NonInvertibleFraming(format!(
            "hop {} / window {} (need hop == fft size and rectangular window)",
            spec.frame_spec.hop(),
            spec.frame_spec.window()
        )));
    }
    spec.reconstruct()
}

/// Rebuilds coefficients from a linear-axis 8-bit image. Lossy: the colors
/// were quantized on export.
pub fn image_to_spectrogram(img: &ColorImage) -> Result<ComplexSpectrogram> {
    if !img.provenance_known() {
        return Err(Error::UnknownProvenance);
    }
    if img.meta("axis") != Some("linear") {
        return Err(Error::InvalidParameter(
            "only linear-axis images can be decoded; log warping discards coefficients".into(),
        ));
    }
    let fft_size: usize = img.meta_parse("fft_size")?;
    let hop: usize = img.meta_parse("hop")?;
    let window = Window::from_name(img.meta("window").unwrap_or("rectangular"))
        .ok_or_else(|| Error::Malformed("unknown window".into()))?;
    let frame_spec = FrameSpec::new(fft_size, hop, window)?;
    let sample_rate: u32 = img.meta_parse("sample_rate")?;
    let a_ref: f64 = img.meta_parse("a_ref")?;
    let original_length: usize = img.meta_parse("original_length")?;
    if img.height() != frame_spec.bin_count() {
        return Err(Error::Malformed(format!(
            "image height {} does not match {} bins",
            img.height(),
            frame_spec.bin_count()
        )));
    }
    if img.width() != frame_spec.frame_count(original_length) {
        return Err(Error::Malformed(
            "image width does not match frame count".into(),
        ));
    }
    let last = frame_spec.bin_count() - 1;
    let columns = (0..img.width())
        .map(|x| {
            img.column(x)
                .into_iter()
                .enumerate()
                .map(|(k, px)| {
                    let c = rgb_to_complex(px);
                    if k == 0 || k == last {
                        // boundary bins are real: keep the signed projection
                        Complex64::new(c.norm() * c.re.signum(), 0.0)
                    } else {
                        c
                    }
                })
                .collect()
        })
        .collect();
    Ok(ComplexSpectrogram {
        columns,
        frame_spec,
        sample_rate,
        a_ref,
        original_length,
    })
}

pub fn decode_image(img: &ColorImage) -> Result<AudioBuffer> {
    image_to_spectrogram(img)?.reconstruct()
}

/// Expected SNR (dB) of [`decode_image`], modelling each 8-bit channel as
/// carrying uniform rounding noise of one step and propagating it through
/// the color inverse by finite differences.
pub fn estimate_quantization_snr(img: &ColorImage) -> Result<f64> {
    let spec = image_to_spectrogram(img)?;
    let last = spec.bin_count() - 1;
    let sigma = 1.0 / (255.0 * 12f64.sqrt());
    let h = 0.25 / 255.0;
    let mut signal = 0.0;
    let mut noise = 0.0;
    for x in 0..img.width() {
        for (k, px) in img.column(x).into_iter().enumerate() {
            let weight = if k == 0 || k == last { 1.0 } else { 0.5 };
            let c = spec.columns[x][k];
            signal += weight * c.norm_sqr();
            noise += weight * pixel_noise_variance(px, h) * sigma * sigma;
        }
    }
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / noise).log10())
}

fn pixel_noise_variance(px: Rgb8, h: f64) -> f64 {
    let base = [px.r, px.g, px.b].map(|v| v as f64 / 255.0);
    let eval = |rgb: [f64; 3]| {
        let mut p = rgb_unit_to_hsb(rgb[0], rgb[1], rgb[2]).snapped();
        p.saturation = p.saturation.max(0.5 / 255.0);
        hsb_to_complex(p).unwrap_or_default()
    };
    (0..3)
        .map(|ch| {
            let mut up = base;
            let mut down = base;
            up[ch] = (up[ch] + h).min(1.0);
            down[ch] = (down[ch] - h).max(0.0);
            let span = up[ch] - down[ch];
            if span == 0.0 {
                return 0.0;
            }
            ((eval(up) - eval(down)) / span).norm_sqr()
        })
        .sum()
}
