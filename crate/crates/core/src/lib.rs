//! Complex spectrograms rendered as color: magnitude drives saturation and
//! brightness, phase drives hue, and the mapping inverts exactly.

pub mod audio;
pub mod codec;
pub mod color;
pub mod dsp;
pub mod error;
pub mod image;
pub mod note;
pub mod phase;
pub mod schematic;
pub mod stream;
pub mod synth;
pub mod tuning;
pub mod warp;

pub use num_complex::Complex64;

pub use audio::AudioBuffer;
pub use codec::CspecFile;
pub use color::{Hsb, Rgb8};
pub use dsp::{ComplexSpectrogram, FrameSpec, Transformer, Window};
pub use error::{Error, Result};
pub use image::{ColorImage, ColumnRenderer, DisplayAxis};
pub use note::Note;
pub use phase::{BeatMeasurement, Direction};
pub use tuning::{TuningOptions, TuningReport, Verdict};
pub use warp::{InterpolationMode, LogAxisSpec};
