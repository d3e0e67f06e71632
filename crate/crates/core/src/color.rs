//! Complex coefficient <-> color mapping.
//!
//! Phase picks the hue, the log of the magnitude picks brightness (below the
//! unit reference) or saturation (above it):
//!
//! ```text
//! hue        = phi / 2pi                       phi in [0, 2pi)
//! saturation = 1               if A <= 1,   1 / (1 + ln A)  otherwise
//! brightness = 1 / (1 - ln A)  if A <= 1,   1               otherwise
//! ```
//!
//! Both branches are invertible, so the map is a bijection from the complex
//! plane onto the reachable colors (one of saturation or brightness equals 1).

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hue, saturation and brightness, each in `[0, 1]` (hue in `[0, 1)`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Hsb {
    pub hue: f64,
    pub saturation: f64,
    pub brightness: f64,
}

impl Hsb {
    pub const fn new(hue: f64, saturation: f64, brightness: f64) -> Self {
        Self {
            hue,
            saturation,
            brightness,
        }
    }

    /// True when the color lies on the image of [`complex_to_hsb`].
    pub fn is_reachable(&self) -> bool {
        self.saturation >= 1.0 || self.brightness >= 1.0
    }

    /// Nearest reachable color: when both saturation and brightness are
    /// below 1 (e.g. after 8-bit rounding), the channel closer to 1 is set
    /// to 1.
    pub fn snapped(self) -> Self {
        if self.is_reachable() {
            return self;
        }
        if self.saturation >= self.brightness {
            Hsb {
                saturation: 1.0,
                ..self
            }
        } else {
            Hsb {
                brightness: 1.0,
                ..self
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Rgb8 {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb8 {
    pub const BLACK: Rgb8 = Rgb8::new(0, 0, 0);
    pub const WHITE: Rgb8 = Rgb8::new(255, 255, 255);

    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub fn to_array(self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }
}

pub fn complex_to_hsb(c: Complex64) -> Result<Hsb> {
    if !(c.re.is_finite() && c.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let amplitude = c.norm();
    if amplitude == 0.0 {
        return Ok(Hsb::new(0.0, 1.0, 0.0));
    }
    let mut phase = c.im.atan2(c.re);
    if phase < 0.0 {
        phase += TAU;
    }
    let mut hue = phase / TAU;
    if hue >= 1.0 {
        hue = 0.0;
    }
    let log_a = amplitude.ln();
    let (saturation, brightness) = if amplitude <= 1.0 {
        (1.0, 1.0 / (1.0 - log_a))
    } else {
        (1.0 / (1.0 + log_a), 1.0)
    };
    Ok(Hsb::new(hue, saturation, brightness))
}

pub fn hsb_to_complex(p: Hsb) -> Result<Complex64> {
    let Hsb {
        hue,
        saturation,
        brightness,
    } = p;
    let in_unit = |v: f64| (0.0..=1.0).contains(&v);
    if !(in_unit(hue) && in_unit(saturation) && in_unit(brightness)) {
        return Err(Error::InvalidParameter(format!(
            "color out of range: {p:?}"
        )));
    }
    if !p.is_reachable() {
        return Err(Error::UnreachableColor);
    }
    if brightness == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let amplitude = if brightness < 1.0 {
        (1.0 - 1.0 / brightness).exp()
    } else if saturation < 1.0 {
        if saturation == 0.0 {
            return Err(Error::NonFinite);
        }
        (1.0 / saturation - 1.0).exp()
    } else {
        1.0
    };
    Ok(Complex64::from_polar(amplitude, TAU * hue))
}

/// HSV to 8-bit RGB. Hue 0 is red and increasing hue passes green at 1/3
/// and blue at 2/3. Out-of-range inputs are clamped and flagged.
pub fn hsb_to_rgb_clamped(p: Hsb) -> (Rgb8, bool) {
    let clamp = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    let hue_in = if p.hue.is_finite() {
        p.hue.rem_euclid(1.0)
    } else {
        0.0
    };
    let s = clamp(p.saturation);
    let v = clamp(p.brightness);
    let clamped = hue_in != p.hue || s != p.saturation || v != p.brightness;
    let (r, g, b) = hsv_to_rgb_unit(hue_in, s, v);
    let q = |x: f64| (x * 255.0).round() as u8;
    (Rgb8::new(q(r), q(g), q(b)), clamped)
}

pub fn hsb_to_rgb(p: Hsb) -> Rgb8 {
    hsb_to_rgb_clamped(p).0
}

fn hsv_to_rgb_unit(h: f64, s: f64, v: f64) -> (f64, f64, f64) {
    let h6 = h * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - f * s);
    let t = v * (1.0 - (1.0 - f) * s);
    match sector as i32 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    }
}

pub fn rgb_to_hsb(q: Rgb8) -> Hsb {
    rgb_unit_to_hsb(q.r as f64 / 255.0, q.g as f64 / 255.0, q.b as f64 / 255.0)
}

/// Continuous RGB (channels in `[0, 1]`) to HSV.
pub fn rgb_unit_to_hsb(r: f64, g: f64, b: f64) -> Hsb {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if max <= 0.0 {
        return Hsb::new(0.0, 1.0, 0.0);
    }
    let saturation = delta / max;
    if delta <= 0.0 {
        return Hsb::new(0.0, saturation, max);
    }
    let sector = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let mut hue = sector / 6.0;
    if hue >= 1.0 {
        hue -= 1.0;
    }
    Hsb::new(hue, saturation, max)
}

pub fn complex_to_rgb(c: Complex64) -> Rgb8 {
    match complex_to_hsb(c) {
        Ok(p) => hsb_to_rgb(p),
        Err(_) => Rgb8::BLACK,
    }
}

/// Best-effort inverse of [`complex_to_rgb`] for quantized pixels.
/// Gray pixels (zero saturation) are read as half a quantization step of
/// saturation instead of an infinite amplitude.
pub fn rgb_to_complex(q: Rgb8) -> Complex64 {
    let mut p = rgb_to_hsb(q).snapped();
    p.saturation = p.saturation.max(0.5 / 255.0);
    hsb_to_complex(p).unwrap_or_default()
}

/// One pixel per coefficient, index 0 = lowest frequency (bottom row).
/// Non-finite coefficients render black.
pub fn render_column(coeffs: &[Complex64]) -> Vec<Rgb8> {
    coeffs.iter().map(|&c| complex_to_rgb(c)).collect()
}

/// Phase angle in `[0, 2pi)` carried by a hue.
pub fn hue_to_phase(hue: f64) -> f64 {
    (hue * TAU).rem_euclid(TAU)
}

/// Signed smallest difference between two hues, in cycles, in `[-0.5, 0.5)`.
pub fn hue_difference(a: f64, b: f64) -> f64 {
    (a - b + 0.5).rem_euclid(1.0) - 0.5
}
