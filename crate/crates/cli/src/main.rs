use std::fs::File;
use std::io::Read;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use logcolor::audio::{f64_to_i16, read_wav, write_wav};
use logcolor::codec::{
    self, decode_image, estimate_quantization_snr, read_cspec, write_cspec, MAGIC,
};
use logcolor::image::{export_png, import_png, render_spectrogram, ColorImage, DisplayAxis};
use logcolor::schematic::{render_beat_schematic, SchematicParams, DEFAULT_SEED};
use logcolor::stream::{self, client, FrameType, Handshake, StreamParams};
use logcolor::synth::{synthesize, Signal};
use logcolor::tuning::{tuning_report, NoteSelection, Segmentation, TuningOptions};
use logcolor::warp::build_log_axis;
use logcolor::{FrameSpec, InterpolationMode, Note, Window};

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

#[derive(Parser)]
#[command(
    name = "logcolor",
    version,
    about = "Invertible complex color spectrograms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a WAV file to CSPEC and optionally render a PNG
    Encode(EncodeArgs),
    /// Reconstruct a WAV file from CSPEC or from a linear-axis PNG
    Decode(DecodeArgs),
    /// Tuning report: per-note offsets in Hz and cents
    Analyze(AnalyzeArgs),
    /// Render the beat schematic
    Schematic(SchematicArgs),
    /// Run the live streaming service
    Serve(ServeArgs),
    /// Stream a WAV file to a running service and collect the columns
    Send(SendArgs),
    /// Write a synthetic test signal
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisKind {
    Linear,
    Log,
}

impl AxisKind {
    fn name(self) -> &'static str {
        match self {
            AxisKind::Linear => "linear",
            AxisKind::Log => "log",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Rect,
    Polar,
}

impl From<ModeArg> for InterpolationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Rect => InterpolationMode::Rectangular,
            ModeArg::Polar => InterpolationMode::Polar,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Rect,
    Hann,
}

#[derive(Args, Clone)]
struct DisplayArgs {
    #[arg(long, value_enum, default_value = "linear")]
    axis: AxisKind,
    /// Interpolation between coefficients on the log axis
    #[arg(long, value_enum, default_value = "rect")]
    mode: ModeArg,
    #[arg(long, default_value_t = 27.5)]
    fmin: f64,
    #[arg(long, default_value_t = 4186.0)]
    fmax: f64,
    #[arg(long, default_value_t = 512)]
    rows: usize,
}

#[derive(Args)]
struct EncodeArgs {
    input: PathBuf,
    output: PathBuf,
    png: Option<PathBuf>,
    #[arg(long, default_value_t = 2048)]
    fft_size: usize,
    /// Defaults to the FFT size
    #[arg(long)]
    hop: Option<usize>,
    #[arg(long, value_enum, default_value = "rect")]
    window: WindowArg,
    /// Amplitude that maps to full brightness and saturation
    #[arg(long, default_value_t = 1.0)]
    aref: f64,
    #[command(flatten)]
    display: DisplayArgs,
}

#[derive(Args)]
struct DecodeArgs {
    input: PathBuf,
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Kv,
}

#[derive(Args)]
struct AnalyzeArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 440.0)]
    a4: f64,
    /// `auto`, or comma-separated note names, one per segment
    #[arg(long, default_value = "auto")]
    notes: String,
    /// Number of equal-length segments (defaults to the number of listed notes)
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long, default_value_t = 2048)]
    fft_size: usize,
    #[arg(long, value_enum, default_value = "table")]
    format: ReportFormat,
}

#[derive(Args)]
struct SchematicArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 7878)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    #[arg(long, default_value_t = 44100)]
    sample_rate: u32,
    #[arg(long, default_value_t = 2048)]
    fft_size: usize,
    #[arg(long)]
    hop: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    aref: f64,
    #[arg(long, default_value_t = 440.0)]
    a4: f64,
    #[command(flatten)]
    display: DisplayArgs,
}

#[derive(Args)]
struct SendArgs {
    input: PathBuf,
    #[arg(long, default_value = "127.0.0.1:7878")]
    addr: String,
    /// Write the received columns as a PNG
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    fft_size: Option<usize>,
    #[arg(long)]
    hop: Option<usize>,
    #[arg(long, value_enum)]
    axis: Option<AxisKind>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long, default_value_t = 4096)]
    chunk: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Tone,
    Fm,
    Chromatic,
    Chirp,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(value_enum)]
    kind: SynthKind,
    #[arg(long)]
    out: PathBuf,
    /// Tone frequency, FM center, or chirp start
    #[arg(long, default_value_t = 440.0)]
    freq: f64,
    /// Chirp end frequency
    #[arg(long, default_value_t = 4000.0)]
    end: f64,
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    #[arg(long, default_value_t = 0.8)]
    amplitude: f64,
    #[arg(long, default_value_t = 44100)]
    rate: u32,
    /// First note of the chromatic scale
    #[arg(long, default_value = "C3")]
    first: String,
    #[arg(long, default_value_t = 24)]
    count: usize,
    /// Comma-separated per-note detunes in cents
    #[arg(long)]
    detune: Option<String>,
}

enum CliError {
    Usage(String),
    Data(logcolor::Error),
}

impl From<logcolor::Error> for CliError {
    fn from(e: logcolor::Error) -> Self {
        CliError::Data(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.into())
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn frame_spec(fft_size: usize, hop: Option<usize>, window: Window) -> CliResult<FrameSpec> {
    FrameSpec::new(fft_size, hop.unwrap_or(fft_size), window).map_err(usage)
}

fn display_axis(args: &DisplayArgs, spec: &FrameSpec, sample_rate: u32) -> CliResult<DisplayAxis> {
    Ok(match args.axis {
        AxisKind::Linear => DisplayAxis::Linear,
        AxisKind::Log => DisplayAxis::Log {
            axis: build_log_axis(args.fmin, args.fmax, args.rows, spec, sample_rate)
                .map_err(usage)?,
            mode: args.mode.into(),
        },
    })
}

fn encode(args: EncodeArgs) -> CliResult {
    let window = match args.window {
        WindowArg::Rect => Window::Rectangular,
        WindowArg::Hann => Window::Hann,
    };
    let spec = frame_spec(args.fft_size, args.hop, window)?;
    if !(args.aref > 0.0 && args.aref.is_finite()) {
        return Err(usage("--aref must be positive"));
    }
    let audio = read_wav(&args.input)?;
    let axis = match &args.png {
        Some(_) => Some(display_axis(&args.display, &spec, audio.sample_rate())?),
        None => None,
    };
    let start = Instant::now();
    let (spectrogram, file) = codec::encode(&audio, spec, args.aref)?;
    write_cspec(&file, &args.output)?;
    if let (Some(path), Some(axis)) = (&args.png, &axis) {
        export_png(&render_spectrogram(&spectrogram, axis)?, path)?;
    }
    let secs = start.elapsed().as_secs_f64();
    if !spec.is_invertible() {
        eprintln!("warning: overlapping or windowed framing; this CSPEC cannot be decoded");
    }
    println!(
        "encoded {} samples ({:.2} s of audio) into {} columns in {:.3} s: {:.0} samples/s, {:.1}x real time",
        audio.len(),
        audio.duration_secs(),
        file.frame_count,
        secs,
        audio.len() as f64 / secs,
        audio.duration_secs() / secs
    );
    Ok(())
}

fn sniff(path: &Path) -> CliResult<[u8; 8]> {
    let mut head = [0u8; 8];
    let mut f = File::open(path)?;
    let mut read = 0;
    while read < head.len() {
        match f.read(&mut head[read..])? {
            0 => break,
            n => read += n,
        }
    }
    Ok(head)
}

fn decode(args: DecodeArgs) -> CliResult {
    let head = sniff(&args.input)?;
    let audio = if head[..4] == MAGIC {
        codec::decode(&read_cspec(&args.input)?)?
    } else if head == PNG_SIGNATURE {
        let img = import_png(&args.input)?;
        if !img.provenance_known() {
            return Err(logcolor::Error::UnknownProvenance.into());
        }
        let snr = estimate_quantization_snr(&img)?;
        eprintln!("warning: decoding from an 8-bit image is lossy; use the CSPEC file for exact reconstruction");
        println!("estimated SNR: {snr:.1} dB");
        decode_image(&img)?
    } else {
        return Err(logcolor::Error::Malformed("neither a CSPEC nor a PNG file".into()).into());
    };
    write_wav(&audio, &args.output)?;
    println!(
        "wrote {} samples at {} Hz",
        audio.len(),
        audio.sample_rate()
    );
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> CliResult {
    let (selection, listed) = if args.notes == "auto" {
        (NoteSelection::Auto, None)
    } else {
        let notes = args
            .notes
            .split(',')
            .map(|s| s.trim().parse::<Note>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(usage)?;
        let n = notes.len();
        (NoteSelection::List(notes), Some(n))
    };
    let segments = args.segments.or(listed).unwrap_or(1);
    if segments == 0 {
        return Err(usage("--segments must be at least 1"));
    }
    if listed.is_some_and(|n| n != segments) {
        return Err(usage(format!(
            "{} notes listed for {segments} segments",
            listed.unwrap()
        )));
    }
    if !(args.a4 > 0.0 && args.a4.is_finite()) {
        return Err(usage("--a4 must be positive"));
    }
    let options = TuningOptions {
        a4: args.a4,
        fft_size: args.fft_size,
        hop: args.fft_size,
        ..TuningOptions::default()
    };
    frame_spec(args.fft_size, None, Window::Rectangular)?;
    let audio = read_wav(&args.input)?;
    let report = tuning_report(&audio, &selection, &Segmentation::Equal(segments), &options)?;
    match args.format {
        ReportFormat::Table => print!("{report}"),
        ReportFormat::Kv => print!("{}", report.to_kv()),
    }
    Ok(())
}

fn schematic(args: SchematicArgs) -> CliResult {
    let params = SchematicParams {
        seed: args.seed,
        ..SchematicParams::default()
    };
    let img = render_beat_schematic(&params);
    export_png(&img, &args.out)?;
    println!(
        "wrote {}x{} schematic (seed {})",
        img.width(),
        img.height(),
        args.seed
    );
    Ok(())
}

fn serve(args: ServeArgs) -> CliResult {
    let params = StreamParams {
        sample_rate: args.sample_rate,
        fft_size: args.fft_size,
        hop: args.hop.unwrap_or(args.fft_size),
        axis: args.display.axis.name().into(),
        mode: InterpolationMode::from(args.display.mode).name().into(),
        fmin: args.display.fmin,
        fmax: args.display.fmax,
        rows: args.display.rows,
        a_ref: args.aref,
        a4: args.a4,
        target: "auto".into(),
    };
    params.resolve().map_err(usage)?;
    let listener = TcpListener::bind((args.bind.as_str(), args.port))?;
    println!("listening on {}", listener.local_addr()?);
    stream::serve(listener, params)?;
    Ok(())
}

fn send(args: SendArgs) -> CliResult {
    let audio = read_wav(&args.input)?;
    let pcm: Vec<i16> = audio.samples().iter().map(|&s| f64_to_i16(s)).collect();
    let hs = Handshake {
        sample_rate: Some(audio.sample_rate()),
        fft_size: args.fft_size,
        hop: args.hop,
        axis: args.axis.map(|a| a.name().to_string()),
        mode: args
            .mode
            .map(|m| InterpolationMode::from(m).name().to_string()),
        rows: args.rows,
        ..Handshake::default()
    };
    let frames = client::stream_pcm(args.addr.as_str(), &hs, &pcm, args.chunk)?;
    let mut columns = Vec::new();
    for f in &frames {
        match f.kind {
            FrameType::Column => columns.push(f.column_pixels()?),
            FrameType::Analysis => {
                let text = f.text_payload()?;
                println!(
                    "analysis seq {}: {}",
                    f.seq,
                    text.lines().collect::<Vec<_>>().join(" ")
                );
            }
            FrameType::ConfigAck => println!(
                "config: {}",
                f.text_payload()?.lines().collect::<Vec<_>>().join(" ")
            ),
            FrameType::Error => {
                return Err(logcolor::Error::Protocol(f.text_payload()?.to_string()).into());
            }
        }
    }
    println!("received {} columns", columns.len());
    if let Some(out) = args.out {
        let rows = columns.first().map_or(0, Vec::len);
        if rows == 0 {
            return Err(logcolor::Error::EmptyInput.into());
        }
        let mut img = ColorImage::new(columns.len(), rows);
        for (x, c) in columns.iter().enumerate() {
            img.set_column(x, c);
        }
        export_png(&img, out)?;
    }
    Ok(())
}

fn synth(args: SynthArgs) -> CliResult {
    let signal = match args.kind {
        SynthKind::Tone => Signal::Tone {
            freq: args.freq,
            amplitude: args.amplitude,
            phase: 0.0,
        },
        SynthKind::Fm => match Signal::fm_demo(args.freq) {
            Signal::FmTone {
                center,
                depth,
                mod_freq,
                ..
            } => Signal::FmTone {
                center,
                depth,
                mod_freq,
                amplitude: args.amplitude,
            },
            other => other,
        },
        SynthKind::Chirp => Signal::Chirp {
            start: args.freq,
            end: args.end,
            amplitude: args.amplitude,
        },
        SynthKind::Chromatic => {
            let first: Note = args.first.parse().map_err(usage)?;
            let detunes = match &args.detune {
                Some(list) => list
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(usage)?,
                None => Vec::new(),
            };
            Signal::chromatic_scale(first, args.count, 440.0, &detunes)
        }
    };
    let audio = synthesize(&signal, args.duration, args.rate).map_err(usage)?;
    write_wav(&audio, &args.out)?;
    println!(
        "wrote {} samples at {} Hz",
        audio.len(),
        audio.sample_rate()
    );
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Encode(a) => encode(a),
        Command::Decode(a) => decode(a),
        Command::Analyze(a) => analyze(a),
        Command::Schematic(a) => schematic(a),
        Command::Serve(a) => serve(a),
        Command::Send(a) => send(a),
        Command::Synth(a) => synth(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
