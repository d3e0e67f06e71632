//! Synthetic beat schematic: how hue and amplitude beats depend on the
//! distance from a coefficient center.
//!
//! The vertical axis spans `coeff_spans` coefficient widths, each split into
//! `lines_per_coeff` lines; the middle row sits on a coefficient center and
//! that coefficient's edges lie an eighth of the height above and below
//! (for four spans). Every line is a steady tone at its own offset with a
//! random starting phase. Rows from the lower edge of the central coefficient
//! upward show the hue of the tone's coefficient; rows below it show the
//! grey-level amplitude beat between the tone and a note on the center. The
//! center line is drawn dashed (dimmed every other run of four slices, same
//! hue).

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::color::{complex_to_rgb, Rgb8};
use crate::image::ColorImage;

pub const DEFAULT_SEED: u64 = 141;

#[derive(Debug, Clone, PartialEq)]
pub struct SchematicParams {
    /// Time slices across the nominal one-second width.
    pub slices: usize,
    pub coeff_spans: usize,
    pub lines_per_coeff: usize,
    /// Width of one coefficient in Hz.
    pub hz_per_coeff: f64,
    pub seed: u64,
}

impl Default for SchematicParams {
    fn default() -> Self {
        Self {
            slices: 128,
            coeff_spans: 4,
            lines_per_coeff: 25,
            hz_per_coeff: 8.0,
            seed: DEFAULT_SEED,
        }
    }
}

impl SchematicParams {
    pub fn height(&self) -> usize {
        self.coeff_spans * self.lines_per_coeff
    }

    /// Row (from the bottom) on the central coefficient center.
    pub fn center_row(&self) -> usize {
        self.height() / 2
    }

    /// Tone offset of a row from the central coefficient center, in Hz.
    pub fn line_offset_hz(&self, row: usize) -> f64 {
        (row as f64 - self.center_row() as f64) / self.lines_per_coeff as f64 * self.hz_per_coeff
    }

    /// True for rows drawn as hue; the rest are amplitude beats.
    pub fn is_color_row(&self, row: usize) -> bool {
        row as f64 - self.center_row() as f64 >= -(self.lines_per_coeff as f64) / 2.0
    }
}

pub fn render_beat_schematic(params: &SchematicParams) -> ColorImage {
    let height = params.height();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let phases: Vec<f64> = (0..height).map(|_| rng.random_range(0.0..TAU)).collect();
    let mut img = ColorImage::new(params.slices, height);
    let center = params.center_row();
    for (row, &phase0) in phases.iter().enumerate() {
        let delta = params.line_offset_hz(row);
        for s in 0..params.slices {
            let t = s as f64 / params.slices as f64;
            let color = if params.is_color_row(row) {
                let dashed_gap = row == center && (s / 4) % 2 == 1;
                let amplitude = if dashed_gap { (-1.0f64).exp() } else { 1.0 };
                complex_to_rgb(Complex64::from_polar(amplitude, phase0 + TAU * delta * t))
            } else {
                let level = (PI * delta * t + phase0 / 2.0).cos().abs();
                let v = (level * 255.0).round() as u8;
                Rgb8::new(v, v, v)
            };
            img.set(s, row, color);
        }
    }
    img.set_meta("kind", "beat_schematic");
    img.set_meta("seed", params.seed);
    img.set_meta("slices", params.slices);
    img.set_meta("coeff_spans", params.coeff_spans);
    img.set_meta("lines_per_coeff", params.lines_per_coeff);
    img.set_meta("hz_per_coeff", params.hz_per_coeff);
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::{hue_difference, rgb_to_hsb};

    #[test]
    fn layout() {
        let p = SchematicParams::default();
        let img = render_beat_schematic(&p);
        assert_eq!((img.width(), img.height()), (128, 100));
        assert_eq!(p.center_row(), 50);
        assert_eq!(p.line_offset_hz(50), 0.0);
        // central coefficient spans +-12.5 rows = 1/8 of the height
        assert!(p.is_color_row(38) && !p.is_color_row(37));
        let color_rows = (0..100).filter(|&r| p.is_color_row(r)).count();
        assert_eq!(color_rows, 62);
        // amplitude rows are grey
        for x in 0..128 {
            let px = img.get(x, 10);
            assert!(px.r == px.g && px.g == px.b);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let p = SchematicParams::default();
        assert_eq!(render_beat_schematic(&p), render_beat_schematic(&p));
        let other = SchematicParams {
            seed: 7,
            ..p.clone()
        };
        assert_ne!(
            render_beat_schematic(&p).pixels(),
            render_beat_schematic(&other).pixels()
        );
    }

    #[test]
    fn center_line_keeps_its_hue() {
        let p = SchematicParams::default();
        let img = render_beat_schematic(&p);
        let hues: Vec<f64> = (0..128).map(|x| rgb_to_hsb(img.get(x, 50)).hue).collect();
        for h in &hues {
            assert!(hue_difference(*h, hues[0]).abs() <= 2.0 / 255.0);
        }
        // and it is dashed
        assert_ne!(img.get(0, 50), img.get(4, 50));
    }

    #[test]
    fn cycle_count_matches_offset() {
        let p = SchematicParams::default();
        let img = render_beat_schematic(&p);
        for row in (38..100).filter(|&r| r != 50) {
            let delta = p.line_offset_hz(row);
            let cycles: f64 = (1..128)
                .map(|x| {
                    hue_difference(
                        rgb_to_hsb(img.get(x, row)).hue,
                        rgb_to_hsb(img.get(x - 1, row)).hue,
                    )
                })
                .sum();
            assert!(
                (cycles - delta).abs() <= 0.5,
                "row {row}: {cycles} vs {delta}"
            );
        }
    }
}
