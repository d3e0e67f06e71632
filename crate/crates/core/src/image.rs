//! RGB rasters of rendered spectrograms and their PNG container.

use std::collections::BTreeMap;
use std::io::{BufRead, Cursor, Seek, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::color::{render_column, Rgb8};
use crate::dsp::ComplexSpectrogram;
use crate::error::{Error, Result};
use crate::warp::{warp_column_into, InterpolationMode, LogAxisSpec};

/// tEXt keyword holding the rendering parameters.
pub const METADATA_KEYWORD: &str = "cspec:params";

/// An RGB raster. Row 0 of the pixel buffer is the top of the image; the
/// column accessors work bottom-to-top (lowest frequency first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    pixels: Vec<Rgb8>,
    metadata: BTreeMap<String, String>,
    provenance_known: bool,
}

impl ColorImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![Rgb8::BLACK; width * height],
            metadata: BTreeMap::new(),
            provenance_known: true,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Pixels in PNG order: top row first, left to right.
    pub fn pixels(&self) -> &[Rgb8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, row_from_bottom: usize) -> Rgb8 {
        self.pixels[self.index(x, row_from_bottom)]
    }

    pub fn set(&mut self, x: usize, row_from_bottom: usize, color: Rgb8) {
        let i = self.index(x, row_from_bottom);
        self.pixels[i] = color;
    }

    fn index(&self, x: usize, row_from_bottom: usize) -> usize {
        assert!(
            x < self.width && row_from_bottom < self.height,
            "pixel out of bounds"
        );
        (self.height - 1 - row_from_bottom) * self.width + x
    }

    /// Column `x`, bottom row first.
    pub fn column(&self, x: usize) -> Vec<Rgb8> {
        (0..self.height).map(|r| self.get(x, r)).collect()
    }

    pub fn set_column(&mut self, x: usize, column: &[Rgb8]) {
        assert_eq!(column.len(), self.height, "column height");
        for (r, &c) in column.iter().enumerate() {
            self.set(x, r, c);
        }
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    /// Typed metadata lookup.
    pub fn meta_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .meta(key)
            .ok_or_else(|| Error::Malformed(format!("missing metadata key {key}")))?;
        raw.parse()
            .map_err(|_| Error::Malformed(format!("bad metadata value {key}={raw}")))
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        assert!(
            !key.is_empty() && !key.contains(['=', '\n']) && !value.contains('\n'),
            "metadata entries must be single-line key=value"
        );
        self.metadata.insert(key, value);
    }

    /// False when the image was imported without a parameter chunk.
    pub fn provenance_known(&self) -> bool {
        self.provenance_known
    }

    /// Canonical `key=value` lines, keys sorted.
    pub fn metadata_text(&self) -> String {
        format_metadata(&self.metadata)
    }

    pub fn to_rgb_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(|p| p.to_array()).collect()
    }
}

pub fn format_metadata(map: &BTreeMap<String, String>) -> String {
    map.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

pub fn parse_metadata(text: &str) -> Result<BTreeMap<String, String>> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|line| {
            line.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Malformed(format!("metadata line without '=': {line:?}")))
        })
        .collect()
}

pub fn write_png_to<W: Write>(img: &ColorImage, writer: W) -> Result<()> {
    let mut encoder = png::Encoder::new(writer, img.width as u32, img.height as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    if !img.metadata.is_empty() {
        encoder.add_text_chunk(METADATA_KEYWORD.to_string(), img.metadata_text())?;
    }
    let mut w = encoder.write_header()?;
    w.write_image_data(&img.to_rgb_bytes())?;
    w.finish()?;
    Ok(())
}

pub fn encode_png(img: &ColorImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_png_to(img, &mut out)?;
    Ok(out)
}

pub fn export_png(img: &ColorImage, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_png(img)?)?;
    Ok(())
}

pub fn read_png_from<R: BufRead + Seek>(reader: R) -> Result<ColorImage> {
    let mut decoder = png::Decoder::new(reader);
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info()?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Malformed("png too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader.next_frame(&mut buf)?;
    let (width, height) = (info.width as usize, info.height as usize);
    let channels = info.color_type.samples();
    let pixels: Vec<Rgb8> = buf[..info.buffer_size()]
        .chunks(info.line_size)
        .flat_map(|line| {
            line[..width * channels]
                .chunks(channels)
                .map(|px| match px.len() {
                    1 | 2 => Rgb8::new(px[0], px[0], px[0]),
                    _ => Rgb8::new(px[0], px[1], px[2]),
                })
        })
        .collect();
    let text = reader
        .info()
        .uncompressed_latin1_text
        .iter()
        .find(|c| c.keyword == METADATA_KEYWORD)
        .map(|c| c.text.clone());
    let (metadata, provenance_known) = match text {
        Some(t) => (parse_metadata(&t)?, true),
        None => (BTreeMap::new(), false),
    };
    Ok(ColorImage {
        width,
        height,
        pixels,
        metadata,
        provenance_known,
    })
}

pub fn decode_png(bytes: &[u8]) -> Result<ColorImage> {
    read_png_from(Cursor::new(bytes))
}

pub fn import_png(path: impl AsRef<Path>) -> Result<ColorImage> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    read_png_from(file)
}

/// Vertical axis of a rendered spectrogram.
#[derive(Debug, Clone, PartialEq)]
pub enum DisplayAxis {
    /// One row per bin.
    Linear,
    Log {
        axis: LogAxisSpec,
        mode: InterpolationMode,
    },
}

impl DisplayAxis {
    pub fn kind(&self) -> &'static str {
        match self {
            DisplayAxis::Linear => "linear",
            DisplayAxis::Log { .. } => "log",
        }
    }
}

/// Turns coefficient columns into pixel columns for a fixed axis. Shared by
/// file rendering and the live stream so both produce identical bytes.
#[derive(Debug, Clone)]
pub struct ColumnRenderer {
    axis: DisplayAxis,
    bins: usize,
}

impl ColumnRenderer {
    pub fn new(axis: DisplayAxis, bins: usize) -> Result<Self> {
        if let DisplayAxis::Log { axis, .. } = &axis {
            if axis.bin_count() != bins {
                return Err(Error::LengthMismatch {
                    expected: bins,
                    actual: axis.bin_count(),
                });
            }
        }
        Ok(Self { axis, bins })
    }

    pub fn axis(&self) -> &DisplayAxis {
        &self.axis
    }

    pub fn rows(&self) -> usize {
        match &self.axis {
            DisplayAxis::Linear => self.bins,
            DisplayAxis::Log { axis, .. } => axis.rows(),
        }
    }

    /// Pixel column, bottom row first.
    pub fn render(&self, coeffs: &[Complex64]) -> Result<Vec<Rgb8>> {
        if coeffs.len() != self.bins {
            return Err(Error::LengthMismatch {
                expected: self.bins,
                actual: coeffs.len(),
            });
        }
        match &self.axis {
            DisplayAxis::Linear => Ok(render_column(coeffs)),
            DisplayAxis::Log { axis, mode } => {
                let mut warped = Vec::with_capacity(axis.rows());
                warp_column_into(coeffs, axis, *mode, &mut warped)?;
                Ok(render_column(&warped))
            }
        }
    }
}

/// Parameters recorded with every rendered image.
pub fn spectrogram_metadata(
    spec: &ComplexSpectrogram,
    axis: &DisplayAxis,
) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        m.insert(k.to_string(), v);
    };
    put("format_version", "1".into());
    put("sample_rate", spec.sample_rate.to_string());
    put("fft_size", spec.frame_spec.fft_size().to_string());
    put("hop", spec.frame_spec.hop().to_string());
    put("window", spec.frame_spec.window().name().into());
    put("a_ref", spec.a_ref.to_string());
    put("scaling", "unit_full_scale_sine".into());
    put("original_length", spec.original_length.to_string());
    put("frame_count", spec.frame_count().to_string());
    put("axis", axis.kind().into());
    if let DisplayAxis::Log { axis, mode } = axis {
        put("mode", mode.name().into());
        put("fmin", axis.f_min().to_string());
        put("fmax", axis.f_max().to_string());
        put("rows", axis.rows().to_string());
    }
    m
}

/// Renders every column of `spec` onto the chosen axis.
pub fn render_spectrogram(spec: &ComplexSpectrogram, axis: &DisplayAxis) -> Result<ColorImage> {
    let renderer = ColumnRenderer::new(axis.clone(), spec.bin_count())?;
    let mut img = ColorImage::new(spec.frame_count(), renderer.rows());
    for (x, col) in spec.columns.iter().enumerate() {
        img.set_column(x, &renderer.render(col)?);
    }
    img.metadata = spectrogram_metadata(spec, axis);
    Ok(img)
}
