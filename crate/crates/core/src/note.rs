//! Equal-tempered note names and frequencies.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

const NAMES: [&str; 12] = [
    "C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B",
];

/// A note as a MIDI number (A4 = 69).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Note(pub i32);

impl Note {
    pub const A4: Note = Note(69);

    pub fn frequency(self, a4: f64) -> f64 {
        a4 * 2f64.powf((self.0 - 69) as f64 / 12.0)
    }

    /// Nearest equal-tempered note to `freq`.
    pub fn nearest(freq: f64, a4: f64) -> Note {
        Note(69 + (12.0 * (freq / a4).log2()).round() as i32)
    }

    pub fn octave(self) -> i32 {
        self.0.div_euclid(12) - 1
    }

    pub fn offset(self, semitones: i32) -> Note {
        Note(self.0 + semitones)
    }
}

impl fmt::Display for Note {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}",
            NAMES[self.0.rem_euclid(12) as usize],
            self.octave()
        )
    }
}

impl FromStr for Note {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::InvalidParameter(format!("bad note name {s:?}"));
        let s = s.trim();
        let split = s
            .find(|c: char| c.is_ascii_digit() || c == '-')
            .ok_or_else(bad)?;
        let (pitch, octave) = s.split_at(split);
        let octave: i32 = octave.parse().map_err(|_| bad())?;
        let mut chars = pitch.chars();
        let letter = chars.next().ok_or_else(bad)?.to_ascii_uppercase();
        let base = match letter {
            'C' => 0,
            'D' => 2,
            'E' => 4,
            'F' => 5,
            'G' => 7,
            'A' => 9,
            'B' => 11,
            _ => return Err(bad()),
        };
        let accidental = match chars.as_str() {
            "" => 0,
            "#" | "♯" => 1,
            "b" | "♭" => -1,
            _ => return Err(bad()),
        };
        Ok(Note((octave + 1) * 12 + base + accidental))
    }
}

/// Signed distance in cents from `reference` to `freq`.
pub fn cents(freq: f64, reference: f64) -> f64 {
    1200.0 * (freq / reference).log2()
}
