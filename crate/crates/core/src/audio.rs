//! Mono PCM buffers and WAV input/output.

use std::io::{Read, Seek, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// A mono signal at a fixed sample rate. Samples are full-scale floats, so a
/// sine peaking at 1.0 is a full-scale tone.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidParameter(
                "sample rate must be positive".into(),
            ));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Sub-range `[start, end)` as a new buffer; bounds are clamped.
    pub fn slice(&self, start: usize, end: usize) -> AudioBuffer {
        let end = end.min(self.samples.len());
        let start = start.min(end);
        AudioBuffer {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Reads 16-bit integer or 32-bit float RIFF/WAVE. Other integer depths are
/// accepted too. Multichannel files are averaged down to mono.
pub fn read_wav_from<R: Read>(reader: R) -> Result<AudioBuffer> {
    let mut reader = hound::WavReader::new(reader)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(Error::Malformed(format!(
                    "unsupported float depth {}",
                    spec.bits_per_sample
                )));
            }
            reader
                .samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<std::result::Result<_, _>>()?
        }
        hound::SampleFormat::Int => {
            let scale = (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()?
        }
    };
    let samples = if channels > 1 {
        log::warn!("mixing {channels} channels down to mono");
        interleaved
            .chunks(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    } else {
        interleaved
    };
    AudioBuffer::new(samples, spec.sample_rate)
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    read_wav_from(file)
}

/// Writes mono 32-bit float WAV.
pub fn write_wav_to<W: Write + Seek>(audio: &AudioBuffer, writer: W) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::new(writer, spec)?;
    for &s in &audio.samples {
        w.write_sample(s as f32)?;
    }
    w.finalize()?;
    Ok(())
}

pub fn write_wav(audio: &AudioBuffer, path: impl AsRef<Path>) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_wav_to(audio, file)
}

/// Writes mono 16-bit PCM WAV, clipping to full scale.
pub fn write_wav_i16(audio: &AudioBuffer, path: impl AsRef<Path>) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for &s in &audio.samples {
        w.write_sample(f64_to_i16(s))?;
    }
    w.finalize()?;
    Ok(())
}

pub fn f64_to_i16(s: f64) -> i16 {
    (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

pub fn i16_to_f64(s: i16) -> f64 {
    s as f64 / 32768.0
}
