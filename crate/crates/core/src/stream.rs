//! Live streaming: a line of JSON configures the session, the client then
//! sends length-prefixed PCM and the server answers with framed columns and
//! periodic tuning analyses.
//!
//! Server to client, every integer little-endian:
//!
//! ```text
//! u32 length (of everything after this field)
//! u8  type    1 column, 2 analysis, 3 config-ack, 4 error
//! u32 seq     strictly increasing within a session
//! ..  payload column: u16 rows, then rows * (r, g, b) bottom to top
//!             analysis / config-ack / error: UTF-8 text
//! ```
//!
//! Client to server after the handshake line: `u32 byte_length` followed by
//! that many bytes of s16le mono PCM. A zero length ends the stream.

use std::io::{BufRead, BufReader, ErrorKind, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::audio::{i16_to_f64, AudioBuffer};
use crate::color::Rgb8;
use crate::dsp::{FrameSpec, Transformer, Window};
use crate::error::{Error, Result};
use crate::image::{ColumnRenderer, DisplayAxis};
use crate::note::Note;
use crate::tuning::{tuning_report, NoteSelection, Segmentation, TuningOptions};
use crate::warp::{build_log_axis, InterpolationMode};

pub const MAX_HANDSHAKE_LEN: usize = 64 * 1024;
pub const MAX_PCM_CHUNK: usize = 4 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FrameType {
    Column = 1,
    Analysis = 2,
    ConfigAck = 3,
    Error = 4,
}

impl FrameType {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            1 => Some(FrameType::Column),
            2 => Some(FrameType::Analysis),
            3 => Some(FrameType::ConfigAck),
            4 => Some(FrameType::Error),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamFrame {
    pub kind: FrameType,
    pub seq: u32,
    pub payload: Vec<u8>,
}

impl StreamFrame {
    pub fn column(seq: u32, pixels: &[Rgb8]) -> Self {
        let rows = u16::try_from(pixels.len()).expect("column taller than u16::MAX rows");
        let mut payload = Vec::with_capacity(2 + 3 * pixels.len());
        payload.extend_from_slice(&rows.to_le_bytes());
        for p in pixels {
            payload.extend_from_slice(&p.to_array());
        }
        Self {
            kind: FrameType::Column,
            seq,
            payload,
        }
    }

    pub fn text(kind: FrameType, seq: u32, text: &str) -> Self {
        Self {
            kind,
            seq,
            payload: text.as_bytes().to_vec(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let len = (5 + self.payload.len()) as u32;
        let mut out = Vec::with_capacity(4 + len as usize);
        out.extend_from_slice(&len.to_le_bytes());
        out.push(self.kind as u8);
        out.extend_from_slice(&self.seq.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Reads one frame; `Ok(None)` on a clean end of stream.
    pub fn read_from<R: Read>(reader: &mut R) -> Result<Option<Self>> {
        let Some(len) = read_u32_or_eof(reader)? else {
            return Ok(None);
        };
        let len = len as usize;
        if len < 5 {
            return Err(Error::Protocol(format!("frame length {len} is too short")));
        }
        let mut body = vec![0u8; len];
        reader.read_exact(&mut body)?;
        let kind = FrameType::from_u8(body[0])
            .ok_or_else(|| Error::Protocol(format!("unknown frame type {}", body[0])))?;
        let seq = u32::from_le_bytes(body[1..5].try_into().unwrap());
        Ok(Some(Self {
            kind,
            seq,
            payload: body[5..].to_vec(),
        }))
    }

    /// Pixels of a column frame, bottom row first.
    pub fn column_pixels(&self) -> Result<Vec<Rgb8>> {
        if self.kind != FrameType::Column || self.payload.len() < 2 {
            return Err(Error::Protocol("not a column frame".into()));
        }
        let rows = u16::from_le_bytes([self.payload[0], self.payload[1]]) as usize;
        let body = &self.payload[2..];
        if body.len() != rows * 3 {
            return Err(Error::Protocol(format!(
                "column claims {rows} rows but carries {} bytes",
                body.len()
            )));
        }
        Ok(body
            .chunks_exact(3)
            .map(|c| Rgb8::new(c[0], c[1], c[2]))
            .collect())
    }

    pub fn text_payload(&self) -> Result<&str> {
        std::str::from_utf8(&self.payload)
            .map_err(|_| Error::Protocol("payload is not UTF-8".into()))
    }
}

fn read_u32_or_eof<R: Read>(reader: &mut R) -> Result<Option<u32>> {
    let mut buf = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        match reader.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => {
                return Err(Error::Protocol(
                    "stream ended inside a length prefix".into(),
                ))
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Some(u32::from_le_bytes(buf)))
}

/// Client handshake. Missing fields fall back to the server defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fft_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hop: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fmin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fmax: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_ref: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a4: Option<f64>,
    /// `"auto"` or a note name such as `"A4"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

/// Plain parameter set a session is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamParams {
    pub sample_rate: u32,
    pub fft_size: usize,
    pub hop: usize,
    pub axis: String,
    pub mode: String,
    pub fmin: f64,
    pub fmax: f64,
    pub rows: usize,
    pub a_ref: f64,
    pub a4: f64,
    pub target: String,
}

impl Default for StreamParams {
    fn default() -> Self {
        Self {
            sample_rate: 44100,
            fft_size: 2048,
            hop: 2048,
            axis: "linear".into(),
            mode: "rect".into(),
            fmin: 27.5,
            fmax: 4186.0,
            rows: 512,
            a_ref: 1.0,
            a4: 440.0,
            target: "auto".into(),
        }
    }
}

impl StreamParams {
    /// Overrides defaults with whatever the client specified. A hop left
    /// unspecified follows the requested FFT size.
    pub fn merged(&self, hs: &Handshake) -> Self {
        let fft_size = hs.fft_size.unwrap_or(self.fft_size);
        let hop = hs.hop.unwrap_or(if hs.fft_size.is_some() {
            fft_size
        } else {
            self.hop
        });
        Self {
            sample_rate: hs.sample_rate.unwrap_or(self.sample_rate),
            fft_size,
            hop,
            axis: hs.axis.clone().unwrap_or_else(|| self.axis.clone()),
            mode: hs.mode.clone().unwrap_or_else(|| self.mode.clone()),
            fmin: hs.fmin.unwrap_or(self.fmin),
            fmax: hs.fmax.unwrap_or(self.fmax),
            rows: hs.rows.unwrap_or(self.rows),
            a_ref: hs.a_ref.unwrap_or(self.a_ref),
            a4: hs.a4.unwrap_or(self.a4),
            target: hs.target.clone().unwrap_or_else(|| self.target.clone()),
        }
    }

    pub fn resolve(&self) -> Result<SessionConfig> {
        if self.sample_rate == 0 {
            return Err(Error::InvalidParameter(
                "sample rate must be positive".into(),
            ));
        }
        if !(self.a_ref > 0.0 && self.a_ref.is_finite()) {
            return Err(Error::InvalidParameter("a_ref must be positive".into()));
        }
        let frame_spec = FrameSpec::new(self.fft_size, self.hop, Window::Rectangular)?;
        let display = match self.axis.as_str() {
            "linear" => DisplayAxis::Linear,
            "log" => {
                let axis = build_log_axis(
                    self.fmin,
                    self.fmax,
                    self.rows,
                    &frame_spec,
                    self.sample_rate,
                )?;
                DisplayAxis::Log {
                    axis,
                    mode: self.mode.parse::<InterpolationMode>()?,
                }
            }
            other => return Err(Error::InvalidParameter(format!("unknown axis {other:?}"))),
        };
        let target = match self.target.as_str() {
            "auto" => NoteSelection::Auto,
            name => NoteSelection::List(vec![name.parse::<Note>()?]),
        };
        let renderer = ColumnRenderer::new(display, frame_spec.bin_count())?;
        if renderer.rows() > u16::MAX as usize {
            return Err(Error::InvalidParameter(
                "too many rows for a column frame".into(),
            ));
        }
        Ok(SessionConfig {
            params: self.clone(),
            frame_spec,
            renderer,
            target,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub params: StreamParams,
    pub frame_spec: FrameSpec,
    pub renderer: ColumnRenderer,
    pub target: NoteSelection,
}

impl SessionConfig {
    /// Canonical `key=value` description sent in the config-ack frame.
    pub fn ack_text(&self) -> String {
        let p = &self.params;
        let mut out = format!(
            "a4={}\na_ref={}\naxis={}\nfft_size={}\nhop={}\nrows={}\nsample_rate={}\ntarget={}\n",
            p.a4,
            p.a_ref,
            p.axis,
            p.fft_size,
            p.hop,
            self.renderer.rows(),
            p.sample_rate,
            p.target
        );
        if p.axis == "log" {
            out += &format!("fmax={}\nfmin={}\nmode={}\n", p.fmax, p.fmin, p.mode);
        }
        out
    }
}

/// Incremental PCM-to-frames pipeline for one connection.
#[derive(Debug)]
pub struct StreamSession {
    config: SessionConfig,
    transformer: Transformer,
    window: Option<Vec<f64>>,
    /// Unconsumed samples starting at absolute index `buffer_start`.
    buffer: Vec<f64>,
    buffer_start: usize,
    next_frame: usize,
    received: usize,
    recent: Vec<f64>,
    next_analysis: usize,
    seq: u32,
}

impl StreamSession {
    pub fn new(config: SessionConfig) -> Self {
        let n = config.frame_spec.fft_size();
        let window = match config.frame_spec.window() {
            Window::Rectangular => None,
            w => Some(w.coefficients(n)),
        };
        let second = config.params.sample_rate as usize;
        Self {
            transformer: Transformer::new(n),
            window,
            buffer: Vec::new(),
            buffer_start: 0,
            next_frame: 0,
            received: 0,
            recent: Vec::with_capacity(second),
            next_analysis: second,
            seq: 0,
            config,
        }
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    fn next_seq(&mut self) -> u32 {
        let s = self.seq;
        self.seq += 1;
        s
    }

    pub fn ack(&mut self) -> StreamFrame {
        let text = self.config.ack_text();
        let seq = self.next_seq();
        StreamFrame::text(FrameType::ConfigAck, seq, &text)
    }

    pub fn error(&mut self, message: &str) -> StreamFrame {
        let seq = self.next_seq();
        StreamFrame::text(FrameType::Error, seq, message)
    }

    /// Samples received so far that have not yet completed a column.
    pub fn buffered(&self) -> usize {
        self.received - self.next_frame.min(self.received)
    }

    /// Feeds PCM and returns every frame it completes, in order.
    pub fn push_pcm(&mut self, pcm: &[i16]) -> Result<Vec<StreamFrame>> {
        let mut out = Vec::new();
        let n = self.config.frame_spec.fft_size();
        let hop = self.config.frame_spec.hop();
        let second = self.config.params.sample_rate as usize;
        for chunk in pcm.chunks(second.max(1)) {
            let samples: Vec<f64> = chunk.iter().map(|&s| i16_to_f64(s)).collect();
            self.buffer.extend_from_slice(&samples);
            self.received += samples.len();
            self.recent.extend_from_slice(&samples);
            if self.recent.len() > second {
                let excess = self.recent.len() - second;
                self.recent.drain(..excess);
            }

            while self.next_frame + n <= self.received {
                let offset = self.next_frame - self.buffer_start;
                let mut frame = self.buffer[offset..offset + n].to_vec();
                if let Some(w) = &self.window {
                    frame.iter_mut().zip(w).for_each(|(x, w)| *x *= w);
                }
                let coeffs = self
                    .transformer
                    .forward_in_place(&mut frame, self.config.params.a_ref)?;
                let pixels = self.config.renderer.render(&coeffs)?;
                let seq = self.next_seq();
                out.push(StreamFrame::column(seq, &pixels));
                self.next_frame += hop;
            }
            let keep_from = self.next_frame.min(self.received);
            if keep_from > self.buffer_start {
                self.buffer.drain(..keep_from - self.buffer_start);
                self.buffer_start = keep_from;
            }

            while self.received >= self.next_analysis {
                let text = self.analysis_text();
                let seq = self.next_seq();
                out.push(StreamFrame::text(FrameType::Analysis, seq, &text));
                self.next_analysis += second;
            }
        }
        Ok(out)
    }

    fn analysis_text(&self) -> String {
        let p = &self.config.params;
        let options = TuningOptions {
            a4: p.a4,
            fft_size: p.fft_size,
            hop: p.fft_size,
            ..TuningOptions::default()
        };
        let report = AudioBuffer::new(self.recent.clone(), p.sample_rate).and_then(|audio| {
            tuning_report(
                &audio,
                &self.config.target,
                &Segmentation::Equal(1),
                &options,
            )
        });
        match report {
            Ok(r) => r.to_kv(),
            Err(e) => format!("error={e}\n"),
        }
    }
}

fn read_handshake<R: BufRead>(reader: &mut R) -> Result<Handshake> {
    let mut line = Vec::new();
    let mut limited = reader.take(MAX_HANDSHAKE_LEN as u64);
    limited.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Protocol("handshake line missing or too long".into()));
    }
    serde_json::from_slice(&line).map_err(|e| Error::Protocol(format!("malformed handshake: {e}")))
}

/// Runs one session: handshake, then PCM in and frames out until the client
/// sends a zero-length chunk or disconnects. Protocol violations are
/// reported to the client as an error frame before returning.
pub fn handle_session<R: BufRead, W: Write>(
    reader: &mut R,
    writer: &mut W,
    defaults: &StreamParams,
) -> Result<()> {
    let config = read_handshake(reader).and_then(|hs| defaults.merged(&hs).resolve());
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            writer.write_all(&StreamFrame::text(FrameType::Error, 0, &e.to_string()).encode())?;
            writer.flush()?;
            return Err(e);
        }
    };
    let mut session = StreamSession::new(config);
    writer.write_all(&session.ack().encode())?;
    writer.flush()?;
    loop {
        let len = match read_u32_or_eof(reader)? {
            None | Some(0) => break,
            Some(len) => len as usize,
        };
        if len % 2 != 0 || len > MAX_PCM_CHUNK {
            let err = session.error(&format!("bad PCM chunk length {len}"));
            writer.write_all(&err.encode())?;
            writer.flush()?;
            return Err(Error::Protocol(format!("bad PCM chunk length {len}")));
        }
        let mut bytes = vec![0u8; len];
        reader.read_exact(&mut bytes)?;
        let pcm: Vec<i16> = bytes
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]))
            .collect();
        for frame in session.push_pcm(&pcm)? {
            writer.write_all(&frame.encode())?;
        }
        writer.flush()?;
    }
    Ok(())
}

pub fn handle_connection(stream: TcpStream, defaults: &StreamParams) -> Result<()> {
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    handle_session(&mut reader, &mut writer, defaults)
}

/// Accepts connections forever, one thread per session.
pub fn serve(listener: TcpListener, defaults: StreamParams) -> Result<()> {
    let defaults = Arc::new(defaults);
    for conn in listener.incoming() {
        let stream = match conn {
            Ok(s) => s,
            Err(e) => {
                log::warn!("accept failed: {e}");
                continue;
            }
        };
        let defaults = Arc::clone(&defaults);
        std::thread::spawn(move || {
            let peer = stream.peer_addr().ok();
            if let Err(e) = handle_connection(stream, &defaults) {
                log::warn!("session {peer:?} ended with error: {e}");
            }
        });
    }
    Ok(())
}

/// Client side helpers.
pub mod client {
    use super::*;

    pub fn send_handshake<W: Write>(writer: &mut W, hs: &Handshake) -> Result<()> {
        let mut line = serde_json::to_vec(hs).map_err(|e| Error::Protocol(e.to_string()))?;
        line.push(b'\n');
        writer.write_all(&line)?;
        Ok(())
    }

    pub fn send_pcm<W: Write>(writer: &mut W, pcm: &[i16]) -> Result<()> {
        let len = (pcm.len() * 2) as u32;
        writer.write_all(&len.to_le_bytes())?;
        let bytes: Vec<u8> = pcm.iter().flat_map(|s| s.to_le_bytes()).collect();
        writer.write_all(&bytes)?;
        Ok(())
    }

    pub fn send_end<W: Write>(writer: &mut W) -> Result<()> {
        writer.write_all(&0u32.to_le_bytes())?;
        writer.flush()?;
        Ok(())
    }

    /// Streams `pcm` in chunks of `chunk` samples and collects every frame
    /// the server sends until it closes the connection.
    pub fn stream_pcm(
        addr: impl std::net::ToSocketAddrs,
        hs: &Handshake,
        pcm: &[i16],
        chunk: usize,
    ) -> Result<Vec<StreamFrame>> {
        let stream = TcpStream::connect(addr)?;
        let mut reader = BufReader::new(stream.try_clone()?);
        let mut writer = stream;
        let sender = {
            let hs = hs.clone();
            let pcm = pcm.to_vec();
            let mut writer = writer.try_clone()?;
            std::thread::spawn(move || -> Result<()> {
                send_handshake(&mut writer, &hs)?;
                for part in pcm.chunks(chunk.max(1)) {
                    send_pcm(&mut writer, part)?;
                }
                send_end(&mut writer)
            })
        };
        let mut frames = Vec::new();
        while let Some(f) = StreamFrame::read_from(&mut reader)? {
            frames.push(f);
        }
        // the server may close early (error frame) while we are still sending
        let _ = sender.join();
        writer.flush().ok();
        Ok(frames)
    }
}
