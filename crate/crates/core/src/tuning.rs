//! Per-note tuning reports.
//!
//! Each note segment is projected onto its equal-tempered target frequency
//! slice by slice (one single-frequency transform per half step), and the
//! phase drift of those projections gives the mistuning in Hz.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::audio::AudioBuffer;
use crate::dsp::{project_frequency, Transformer, Window};
use crate::error::{Error, Result};
use crate::note::{cents, Note};
use crate::phase::{phase_drift_hz, MIN_DURATION_SECS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Sharp,
    Flat,
    InTune,
    Unmeasurable,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Sharp => "sharp",
            Verdict::Flat => "flat",
            Verdict::InTune => "in-tune",
            Verdict::Unmeasurable => "unmeasurable",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sharp" => Ok(Verdict::Sharp),
            "flat" => Ok(Verdict::Flat),
            "in-tune" => Ok(Verdict::InTune),
            "unmeasurable" => Ok(Verdict::Unmeasurable),
            _ => Err(Error::InvalidParameter(format!("unknown verdict {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoteReading {
    pub name: String,
    pub target_hz: f64,
    /// `None` when the segment could not be measured.
    pub offset_hz: Option<f64>,
    pub cents: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningReport {
    pub a4: f64,
    pub notes: Vec<NoteReading>,
}

/// Which note each segment is measured against.
#[derive(Debug, Clone, PartialEq)]
pub enum NoteSelection {
    /// Nearest equal-tempered note to each segment's dominant frequency.
    Auto,
    List(Vec<Note>),
}

/// How the signal is split into notes.
#[derive(Debug, Clone, PartialEq)]
pub enum Segmentation {
    Equal(usize),
    /// Segment start positions in samples (the first segment always starts at 0).
    Onsets(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningOptions {
    pub a4: f64,
    pub fft_size: usize,
    pub hop: usize,
    /// Largest |cents| still reported as in tune.
    pub in_tune_cents: f64,
}

impl Default for TuningOptions {
    fn default() -> Self {
        Self {
            a4: 440.0,
            fft_size: 2048,
            hop: 2048,
            in_tune_cents: 2.0,
        }
    }
}

fn segments(len: usize, segmentation: &Segmentation) -> Result<Vec<(usize, usize)>> {
    match segmentation {
        Segmentation::Equal(0) => Err(Error::InvalidParameter("need at least one segment".into())),
        Segmentation::Equal(n) => {
            let n = *n;
            Ok((0..n).map(|i| (i * len / n, (i + 1) * len / n)).collect())
        }
        Segmentation::Onsets(onsets) => {
            let mut starts: Vec<usize> = std::iter::once(0)
                .chain(onsets.iter().copied().filter(|&o| o > 0 && o < len))
                .collect();
            starts.sort_unstable();
            starts.dedup();
            let ends = starts.iter().skip(1).copied().chain(std::iter::once(len));
            Ok(starts.iter().copied().zip(ends).collect())
        }
    }
}

/// Dominant frequency of a segment from a zero-padded Hann spectrum with
/// parabolic peak refinement.
pub fn dominant_frequency(samples: &[f64], sample_rate: u32) -> Option<f64> {
    if samples.len() < 32 {
        return None;
    }
    let n = (samples.len() * 4).next_power_of_two();
    let window = Window::Hann.coefficients(samples.len());
    let mut frame: Vec<f64> = samples.iter().zip(&window).map(|(x, w)| x * w).collect();
    frame.resize(n, 0.0);
    let spectrum = Transformer::new(n).forward_in_place(&mut frame, 1.0).ok()?;
    let mags: Vec<f64> = spectrum.iter().map(|c| c.norm()).collect();
    let (peak, &peak_mag) = mags
        .iter()
        .enumerate()
        .skip(1)
        .take(mags.len() - 2)
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if peak_mag <= 1e-9 {
        return None;
    }
    let (l, c, r) = (mags[peak - 1].ln(), peak_mag.ln(), mags[peak + 1].ln());
    let denom = l - 2.0 * c + r;
    let shift = if denom.abs() > 1e-12 {
        0.5 * (l - r) / denom
    } else {
        0.0
    };
    Some((peak as f64 + shift) * sample_rate as f64 / n as f64)
}

/// Offset (Hz) of the tone in `samples` from `target_hz`.
pub fn measure_note_offset(
    samples: &[f64],
    sample_rate: u32,
    target_hz: f64,
    options: &TuningOptions,
) -> Result<f64> {
    let n = options.fft_size;
    let hop = options.hop;
    if n == 0 || hop == 0 {
        return Err(Error::InvalidParameter(
            "fft size and hop must be positive".into(),
        ));
    }
    if samples.len() < n {
        return Err(Error::WindowTooShort);
    }
    let slices = (samples.len() - n) / hop + 1;
    let omega = TAU * target_hz / sample_rate as f64;
    let track = (0..slices)
        .map(|j| {
            let start = j * hop;
            let c = project_frequency(&samples[start..start + n], target_hz, sample_rate, 1.0)?;
            // reference every slice to the segment start
            Ok(c * Complex64::from_polar(1.0, -omega * start as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    phase_drift_hz(&track, hop as f64 / sample_rate as f64)
}

pub fn tuning_report(
    audio: &AudioBuffer,
    selection: &NoteSelection,
    segmentation: &Segmentation,
    options: &TuningOptions,
) -> Result<TuningReport> {
    if audio.is_empty() {
        return Err(Error::EmptyInput);
    }
    let fs = audio.sample_rate();
    let bounds = segments(audio.len(), segmentation)?;
    if let NoteSelection::List(list) = selection {
        if list.len() != bounds.len() {
            return Err(Error::InvalidParameter(format!(
                "{} notes for {} segments",
                list.len(),
                bounds.len()
            )));
        }
    }
    let notes = bounds
        .iter()
        .enumerate()
        .map(|(i, &(start, end))| {
            let samples = &audio.samples()[start..end];
            let note = match selection {
                NoteSelection::List(list) => Some(list[i]),
                NoteSelection::Auto => {
                    dominant_frequency(samples, fs).map(|f| Note::nearest(f, options.a4))
                }
            };
            let Some(note) = note else {
                return NoteReading {
                    name: "?".into(),
                    target_hz: f64::NAN,
                    offset_hz: None,
                    cents: None,
                    verdict: Verdict::Unmeasurable,
                };
            };
            let target_hz = note.frequency(options.a4);
            let too_short = (samples.len() as f64 / fs as f64) < MIN_DURATION_SECS;
            let measured = if too_short || target_hz >= fs as f64 / 2.0 {
                None
            } else {
                measure_note_offset(samples, fs, target_hz, options).ok()
            };
            reading(note.to_string(), target_hz, measured, options.in_tune_cents)
        })
        .collect();
    Ok(TuningReport {
        a4: options.a4,
        notes,
    })
}

fn reading(
    name: String,
    target_hz: f64,
    offset_hz: Option<f64>,
    in_tune_cents: f64,
) -> NoteReading {
    match offset_hz {
        Some(offset) if target_hz + offset > 0.0 => {
            let c = cents(target_hz + offset, target_hz);
            let verdict = if c.abs() <= in_tune_cents {
                Verdict::InTune
            } else if c > 0.0 {
                Verdict::Sharp
            } else {
                Verdict::Flat
            };
            NoteReading {
                name,
                target_hz,
                offset_hz: Some(offset),
                cents: Some(c),
                verdict,
            }
        }
        _ => NoteReading {
            name,
            target_hz,
            offset_hz: None,
            cents: None,
            verdict: Verdict::Unmeasurable,
        },
    }
}

impl TuningReport {
    /// Canonical `key=value` lines: `a4`, `notes`, then `note.<i>.<field>`.
    /// Unmeasured notes omit `offset_hz` and `cents`.
    pub fn to_kv(&self) -> String {
        let mut out = format!("a4={:.6}\nnotes={}\n", self.a4, self.notes.len());
        for (i, n) in self.notes.iter().enumerate() {
            out += &format!("note.{i}.name={}\n", n.name);
            out += &format!("note.{i}.target_hz={:.6}\n", n.target_hz);
            if let (Some(offset), Some(c)) = (n.offset_hz, n.cents) {
                out += &format!("note.{i}.offset_hz={offset:.6}\n");
                out += &format!("note.{i}.cents={c:.6}\n");
            }
            out += &format!("note.{i}.verdict={}\n", n.verdict);
        }
        out
    }

    pub fn parse_kv(text: &str) -> Result<Self> {
        let map = crate::image::parse_metadata(text)?;
        let get = |k: &str| {
            map.get(k)
                .ok_or_else(|| Error::Malformed(format!("missing key {k}")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::Malformed(format!("bad number for {k}")))
        };
        let count: usize = get("notes")?
            .parse()
            .map_err(|_| Error::Malformed("bad note count".into()))?;
        let notes = (0..count)
            .map(|i| {
                let key = |f: &str| format!("note.{i}.{f}");
                Ok(NoteReading {
                    name: get(&key("name"))?.clone(),
                    target_hz: num(&key("target_hz"))?,
                    offset_hz: map.get(&key("offset_hz")).and_then(|v| v.parse().ok()),
                    cents: map.get(&key("cents")).and_then(|v| v.parse().ok()),
                    verdict: get(&key("verdict"))?.parse()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(TuningReport {
            a4: num("a4")?,
            notes,
        })
    }
}

impl fmt::Display for TuningReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "A4 = {:.2} Hz", self.a4)?;
        writeln!(
            f,
            "{:<6} {:>10} {:>10} {:>8}  verdict",
            "note", "target Hz", "offset Hz", "cents"
        )?;
        for n in &self.notes {
            match (n.offset_hz, n.cents) {
                (Some(o), Some(c)) => writeln!(
                    f,
                    "{:<6} {:>10.3} {:>+10.3} {:>+8.2}  {}",
                    n.name, n.target_hz, o, c, n.verdict
                )?,
                _ => writeln!(
                    f,
                    "{:<6} {:>10.3} {:>10} {:>8}  {}",
                    n.name, n.target_hz, "-", "-", n.verdict
                )?,
            }
        }
        Ok(())
    }
}
