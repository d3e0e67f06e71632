//! Deterministic test signals.

use std::f64::consts::PI;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::note::Note;

#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    /// `amplitude * sin(2 pi f t + phase)`.
    Tone {
        freq: f64,
        amplitude: f64,
        phase: f64,
    },
    /// Sine whose instantaneous frequency is `center * (1 + depth * sin(2 pi mod_freq t))`.
    FmTone {
        center: f64,
        depth: f64,
        mod_freq: f64,
        amplitude: f64,
    },
    /// Consecutive tones of equal length, one per entry.
    Sequence { freqs: Vec<f64>, amplitude: f64 },
    /// Linear sweep from `start` to `end` Hz.
    Chirp {
        start: f64,
        end: f64,
        amplitude: f64,
    },
}

impl Signal {
    pub fn tone(freq: f64) -> Self {
        Signal::Tone {
            freq,
            amplitude: 1.0,
            phase: 0.0,
        }
    }

    /// The 10% frequency-modulated tone used for warp demonstrations.
    pub fn fm_demo(center: f64) -> Self {
        Signal::FmTone {
            center,
            depth: 0.10,
            mod_freq: 1.0,
            amplitude: 1.0,
        }
    }

    /// Ascending chromatic run of `count` notes from `first`, each detuned by
    /// the matching entry of `detune_cents` (missing entries mean in tune).
    pub fn chromatic_scale(first: Note, count: usize, a4: f64, detune_cents: &[f64]) -> Self {
        let freqs = (0..count)
            .map(|i| {
                let detune = detune_cents.get(i).copied().unwrap_or(0.0);
                first.offset(i as i32).frequency(a4) * 2f64.powf(detune / 1200.0)
            })
            .collect();
        Signal::Sequence {
            freqs,
            amplitude: 0.8,
        }
    }

    fn max_frequency(&self) -> f64 {
        match self {
            Signal::Tone { freq, .. } => *freq,
            Signal::FmTone { center, depth, .. } => center * (1.0 + depth.abs()),
            Signal::Sequence { freqs, .. } => freqs.iter().copied().fold(0.0, f64::max),
            Signal::Chirp { start, end, .. } => start.max(*end),
        }
    }

    fn min_frequency(&self) -> f64 {
        match self {
            Signal::Tone { freq, .. } => *freq,
            Signal::FmTone { center, depth, .. } => center * (1.0 - depth.abs()),
            Signal::Sequence { freqs, .. } => freqs.iter().copied().fold(f64::INFINITY, f64::min),
            Signal::Chirp { start, end, .. } => start.min(*end),
        }
    }
}

pub fn synthesize(signal: &Signal, duration_secs: f64, sample_rate: u32) -> Result<AudioBuffer> {
    if !(duration_secs > 0.0 && duration_secs.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "duration must be positive, got {duration_secs}"
        )));
    }
    if sample_rate == 0 {
        return Err(Error::InvalidParameter(
            "sample rate must be positive".into(),
        ));
    }
    let nyquist = sample_rate as f64 / 2.0;
    let top = signal.max_frequency();
    if top >= nyquist {
        return Err(Error::FrequencyOutOfRange(top));
    }
    if signal.min_frequency() < 0.0 {
        return Err(Error::FrequencyOutOfRange(signal.min_frequency()));
    }
    let len = (duration_secs * sample_rate as f64).round() as usize;
    let fs = sample_rate as f64;
    let samples: Vec<f64> = match signal {
        Signal::Tone {
            freq,
            amplitude,
            phase,
        } => (0..len)
            .map(|i| amplitude * (2.0 * PI * freq * i as f64 / fs + phase).sin())
            .collect(),
        Signal::FmTone {
            center,
            depth,
            mod_freq,
            amplitude,
        } => {
            if *mod_freq <= 0.0 {
                return Err(Error::InvalidParameter(
                    "modulation rate must be positive".into(),
                ));
            }
            (0..len)
                .map(|i| {
                    let t = i as f64 / fs;
                    // integral of the instantaneous frequency
                    let phase = 2.0
                        * PI
                        * center
                        * (t + depth * (1.0 - (2.0 * PI * mod_freq * t).cos())
                            / (2.0 * PI * mod_freq));
                    amplitude * phase.sin()
                })
                .collect()
        }
        Signal::Sequence { freqs, amplitude } => {
            if freqs.is_empty() {
                return Err(Error::EmptyInput);
            }
            let segment = len / freqs.len();
            (0..len)
                .map(|i| {
                    let idx = (i / segment.max(1)).min(freqs.len() - 1);
                    let local = (i - idx * segment) as f64 / fs;
                    amplitude * (2.0 * PI * freqs[idx] * local).sin()
                })
                .collect()
        }
        Signal::Chirp {
            start,
            end,
            amplitude,
        } => {
            let rate = (end - start) / duration_secs;
            (0..len)
                .map(|i| {
                    let t = i as f64 / fs;
                    amplitude * (2.0 * PI * (start * t + 0.5 * rate * t * t)).sin()
                })
                .collect()
        }
    };
    AudioBuffer::new(samples, sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_second_tone() {
        let a = synthesize(&Signal::tone(256.0), 1.0, 44100).unwrap();
        assert_eq!(a.len(), 44100);
        assert_eq!(a.samples()[0], 0.0);
        let peak = a.samples().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!((peak - 1.0).abs() < 1e-3);
    }

    #[test]
    fn nyquist_is_rejected() {
        assert!(matches!(
            synthesize(&Signal::tone(22050.0), 1.0, 44100),
            Err(Error::FrequencyOutOfRange(_))
        ));
        assert!(synthesize(&Signal::fm_demo(21000.0), 1.0, 44100).is_err());
        assert!(synthesize(&Signal::tone(100.0), 0.0, 44100).is_err());
    }

    #[test]
    fn fm_instantaneous_frequency() {
        let fs = 44100;
        let signal = Signal::fm_demo(256.0);
        let a = synthesize(&signal, 1.0, fs).unwrap();
        // at t = 0.25 s the modulation peaks: f = 256 * 1.1
        // estimate locally from zero crossings over a short span
        let s = a.samples();
        let centre = fs as usize / 4;
        let span = 2000;
        let crossings = (centre - span..centre + span)
            .filter(|&i| s[i] <= 0.0 && s[i + 1] > 0.0)
            .count() as f64;
        let f = crossings / (2.0 * span as f64 / fs as f64);
        assert!((f - 281.6).abs() < 12.0, "{f}");
    }

    #[test]
    fn chromatic_segments_are_equal() {
        let signal = Signal::chromatic_scale(Note(48), 24, 440.0, &[]);
        let a = synthesize(&signal, 12.0, 44100).unwrap();
        assert_eq!(a.len(), 12 * 44100);
        let Signal::Sequence { freqs, .. } = &signal else {
            unreachable!()
        };
        assert_eq!(freqs.len(), 24);
        assert!((freqs[21] - 440.0).abs() < 1e-9);
        // each segment restarts at phase zero
        assert_eq!(a.samples()[22050], 0.0);
    }

    #[test]
    fn chirp_stays_bounded() {
        let a = synthesize(
            &Signal::Chirp {
                start: 100.0,
                end: 4000.0,
                amplitude: 0.5,
            },
            0.5,
            16000,
        )
        .unwrap();
        assert!(a.samples().iter().all(|x| x.abs() <= 0.5));
    }
}
