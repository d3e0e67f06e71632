//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Set `LOGCOLOR_BLESS=1` to (re)write golden
//! fixtures instead of comparing against them.

use std::f64::consts::TAU;
use std::net::TcpListener;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use logcolor::audio::{f64_to_i16, i16_to_f64};
use logcolor::codec::{self, CspecFile};
use logcolor::color::{complex_to_hsb, hsb_to_complex};
use logcolor::dsp::{bin_center, ComplexSpectrogram, FrameSpec, Window};
use logcolor::image::{encode_png, render_spectrogram, DisplayAxis};
use logcolor::note::Note;
use logcolor::phase::{estimate_offset, Direction};
use logcolor::schematic::{render_beat_schematic, SchematicParams};
use logcolor::stream::{self, client, FrameType, Handshake, StreamParams};
use logcolor::synth::{synthesize, Signal};
use logcolor::tuning::{tuning_report, NoteSelection, Segmentation, TuningOptions};
use logcolor::warp::{
    build_log_axis, interpolate, locate_black_lines, warp_column, InterpolationMode,
};
use logcolor::{AudioBuffer, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FS: u32 = 44100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn color_map_bijection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let mag = 10f64.powf(rng.random_range(-8.0..8.0));
        let z = Complex64::from_polar(mag, rng.random_range(-TAU..TAU));
        let back = hsb_to_complex(complex_to_hsb(z).unwrap()).unwrap();
        worst = worst.max((back - z).norm() / z.norm());
    }
    let at_one = complex_to_hsb(Complex64::new(1.0, 0.0)).unwrap();
    let exact = at_one.saturation == 1.0 && at_one.brightness == 1.0;
    let below = complex_to_hsb(Complex64::new(1.0 - 1e-12, 0.0)).unwrap();
    let above = complex_to_hsb(Complex64::new(1.0 + 1e-12, 0.0)).unwrap();
    let continuous = (below.brightness - 1.0).abs() < 1e-11
        && below.saturation == 1.0
        && (above.saturation - 1.0).abs() < 1e-11
        && above.brightness == 1.0;
    outcome(
        worst <= 1e-12 && exact && continuous,
        format!("worst relative error {worst:.2e} over 1e5 values, A=1 exact: {exact}, continuous: {continuous}"),
    )
}

fn fit_phase(samples: &[f64], freq: f64) -> f64 {
    // least squares x ~ a cos + b sin, so x = r sin(wt + atan2(a, b))
    let (mut cc, mut ss, mut cs, mut xc, mut xs) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &x) in samples.iter().enumerate() {
        let w = TAU * freq * i as f64 / FS as f64;
        let (s, c) = w.sin_cos();
        cc += c * c;
        ss += s * s;
        cs += c * s;
        xc += x * c;
        xs += x * s;
    }
    let det = cc * ss - cs * cs;
    let a = (xc * ss - xs * cs) / det;
    let b = (xs * cc - xc * cs) / det;
    a.atan2(b)
}

fn round_trip(audio: &AudioBuffer) -> AudioBuffer {
    let (_, file) = codec::encode(audio, FrameSpec::invertible(2048).unwrap(), 1.0).unwrap();
    let file = CspecFile::from_bytes(&file.to_bytes()).unwrap();
    codec::decode(&file).unwrap()
}

fn lossless_reconstruction() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let len = rng.random_range(1000..60000);
        let samples: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let audio = AudioBuffer::new(samples, FS).unwrap();
        let back = round_trip(&audio);
        assert_eq!(back.len(), audio.len());
        for (a, b) in audio.samples().iter().zip(back.samples()) {
            worst = worst.max((a - b).abs());
        }
    }
    let fm = synthesize(&Signal::fm_demo(440.0), 3.0, FS).unwrap();
    let back = round_trip(&fm);
    let fm_err = fm
        .samples()
        .iter()
        .zip(back.samples())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut worst_phase = 0.0f64;
    for _ in 0..20 {
        let freq = rng.random_range(50.0..5000.0);
        let phase = rng.random_range(0.0..TAU);
        let tone = Signal::Tone {
            freq,
            amplitude: 0.7,
            phase,
        };
        let back = round_trip(&synthesize(&tone, 1.0, FS).unwrap());
        let got = fit_phase(back.samples(), freq);
        let diff = (got - phase).rem_euclid(TAU);
        worst_phase = worst_phase.max(diff.min(TAU - diff));
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-6 && fm_err <= 1e-6 && worst_phase <= 1e-3 && elapsed < Duration::from_secs(10),
        format!(
            "random max error {worst:.2e}, FM tone {fm_err:.2e}, phase {worst_phase:.2e} rad, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn beat_law() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec = FrameSpec::invertible(2048).unwrap();
    let mut worst = 0.0f64;
    let mut directions_ok = true;
    for _ in 0..50 {
        let k = rng.random_range(5..600);
        let magnitude = rng.random_range(0.5..9.0);
        let delta = if rng.random_bool(0.5) {
            magnitude
        } else {
            -magnitude
        };
        let tone = Signal::Tone {
            freq: bin_center(k, FS, 2048) + delta,
            amplitude: 0.5,
            phase: rng.random_range(0.0..TAU),
        };
        let audio = synthesize(&tone, 2.0, FS).unwrap();
        let m =
            estimate_offset(&ComplexSpectrogram::analyze(&audio, spec, 1.0).unwrap(), k).unwrap();
        worst = worst.max((m.offset_hz - delta).abs());
        let expected = if delta > 0.0 {
            Direction::Rgb
        } else {
            Direction::Rbg
        };
        directions_ok &= m.direction == expected;
    }
    let centered = synthesize(&Signal::tone(bin_center(12, FS, 2048)), 2.0, FS).unwrap();
    let c = estimate_offset(
        &ComplexSpectrogram::analyze(&centered, spec, 1.0).unwrap(),
        12,
    )
    .unwrap();
    let constant = c.direction == Direction::Constant;
    let elapsed = start.elapsed();
    outcome(
        worst <= 0.1 && directions_ok && constant && elapsed < Duration::from_secs(30),
        format!(
            "max offset error {worst:.4} Hz, directions ok: {directions_ok}, delta=0 constant: {constant}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn coefficient_spacing() -> Outcome {
    let table_exact = (0..=1024).all(|k| bin_center(k, FS, 2048) == k as f64 * 44100.0 / 2048.0);
    let f = bin_center(12, FS, 2048);
    let audio = synthesize(&Signal::tone(f), 20.0 * 2048.0 / FS as f64, FS).unwrap();
    assert_eq!(audio.len(), 20 * 2048);
    let spec =
        ComplexSpectrogram::analyze(&audio, FrameSpec::invertible(2048).unwrap(), 1.0).unwrap();
    let mut excited = std::collections::BTreeSet::new();
    let mut leak = 0.0f64;
    for column in &spec.columns {
        for (k, c) in column.iter().enumerate() {
            if c.norm() > 1e-9 {
                excited.insert(k);
            } else {
                leak = leak.max(c.norm());
            }
        }
    }
    let only_12 = excited.len() == 1 && excited.contains(&12);
    outcome(
        table_exact && only_12 && (f - 258.398).abs() < 1e-3,
        format!("table exact: {table_exact}, bin 12 at {f} Hz, bins above 1e-9: {excited:?}, largest other {leak:.1e}"),
    )
}

fn rectangular_warp_artifact() -> Outcome {
    let a = Complex64::from_polar(0.8, 0.4);
    let b = -a;
    let rect_mid = interpolate(a, b, 0.5, InterpolationMode::Rectangular).norm();
    let polar_mid = interpolate(a, b, 0.5, InterpolationMode::Polar).norm();

    // through a full warp: rows land between bins 20 and 21
    let spec = FrameSpec::invertible(2048).unwrap();
    let axis = build_log_axis(100.0, 20000.0, 4096, &spec, FS).unwrap();
    let mut column = vec![Complex64::new(0.0, 0.0); 1025];
    column[20] = a;
    column[21] = b;
    let lines = locate_black_lines(&column, &axis).unwrap();
    let rect = warp_column(&column, &axis, InterpolationMode::Rectangular).unwrap();
    let polar = warp_column(&column, &axis, InterpolationMode::Polar).unwrap();
    let (lo, hi) = (
        axis.row_of(bin_center(20, FS, 2048)),
        axis.row_of(bin_center(21, FS, 2048)),
    );
    let between: Vec<usize> = (lo.ceil() as usize..=hi.floor() as usize).collect();
    let polar_min = between
        .iter()
        .map(|&r| polar[r].norm())
        .fold(f64::INFINITY, f64::min);
    let rect_min = between
        .iter()
        .map(|&r| rect[r].norm())
        .fold(f64::INFINITY, f64::min);
    let line_found = lines.len() == 1 && between.contains(&lines[0]);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut monotone = true;
    for _ in 0..1000 {
        let n = 1usize << rng.random_range(8..14);
        let fs = [22050u32, 44100, 48000, 96000][rng.random_range(0..4)];
        let spec = FrameSpec::invertible(n).unwrap();
        let lowest = fs as f64 / n as f64;
        let fmin = rng.random_range(lowest..fs as f64 / 4.0);
        let fmax = rng.random_range(fmin * 1.01..fs as f64 / 2.0);
        let rows = rng.random_range(2..2000);
        let axis = build_log_axis(fmin, fmax, rows, &spec, fs).unwrap();
        monotone &= axis.frequencies().windows(2).all(|w| w[1] > w[0]);
    }
    outcome(
        rect_mid == 0.0 && (polar_mid - 0.8).abs() < 1e-12 && line_found && polar_min > 0.79 && monotone,
        format!(
            "t=0.5 rect {rect_mid:.1e} polar {polar_mid:.3}; warped rows between bins: rect min {rect_min:.2e}, polar min {polar_min:.3}, black line found: {line_found}; 1000 axes monotone: {monotone}"
        ),
    )
}

fn tuning_report_accuracy() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let first = Note(48);
    let count = 24;
    let detunes: Vec<f64> = (0..count).map(|_| rng.random_range(-8.0..8.0)).collect();
    let audio = synthesize(
        &Signal::chromatic_scale(first, count, 440.0, &detunes),
        12.0,
        FS,
    )
    .unwrap();
    let notes: Vec<Note> = (0..count).map(|i| first.offset(i as i32)).collect();
    let report = tuning_report(
        &audio,
        &NoteSelection::List(notes),
        &Segmentation::Equal(count),
        &TuningOptions::default(),
    )
    .unwrap();
    let mut worst = 0.0f64;
    let mut all_measured = true;
    for (reading, truth) in report.notes.iter().zip(&detunes) {
        match reading.cents {
            Some(c) => worst = worst.max((c - truth).abs()),
            None => all_measured = false,
        }
    }
    let elapsed = start.elapsed();
    outcome(
        all_measured && worst <= 1.0 && elapsed < Duration::from_secs(20),
        format!(
            "{count} notes C3..B4, max cents error {worst:.3}, all measured: {all_measured}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn real_time_budget() -> (Outcome, Outcome) {
    let a = synthesize(&Signal::fm_demo(440.0), 10.0, FS).unwrap();
    let b = synthesize(
        &Signal::Chirp {
            start: 80.0,
            end: 8000.0,
            amplitude: 0.3,
        },
        10.0,
        FS,
    )
    .unwrap();
    let mixed: Vec<f64> = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| 0.6 * x + y)
        .collect();
    let audio = AudioBuffer::new(mixed, FS).unwrap();
    let frame_spec = FrameSpec::invertible(2048).unwrap();
    let start = Instant::now();
    let (spec, file) = codec::encode(&audio, frame_spec, 1.0).unwrap();
    let bytes = file.to_bytes();
    let axis = DisplayAxis::Log {
        axis: build_log_axis(27.5, 4186.0, 512, &frame_spec, FS).unwrap(),
        mode: InterpolationMode::Rectangular,
    };
    let png = encode_png(&render_spectrogram(&spec, &axis).unwrap()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "encode + log render + PNG of 10 s took {secs:.3} s ({} cspec bytes, {} PNG bytes)",
        bytes.len(),
        png.len()
    );
    (
        outcome(secs <= 3.3, detail.clone()),
        outcome(secs <= 10.0, detail),
    )
}

fn offline_online_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let tones = synthesize(&Signal::fm_demo(330.0), 3.0, FS).unwrap();
    let pcm: Vec<i16> = tones
        .samples()
        .iter()
        .map(|s| f64_to_i16(0.7 * s + rng.random_range(-0.05..0.05)))
        .collect();
    let audio = AudioBuffer::new(pcm.iter().map(|&s| i16_to_f64(s)).collect(), FS).unwrap();

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || stream::serve(listener, StreamParams::default()));

    let cases = [
        Handshake::default(),
        Handshake {
            fft_size: Some(4096),
            hop: Some(1024),
            axis: Some("log".into()),
            mode: Some("polar".into()),
            rows: Some(300),
            ..Default::default()
        },
        Handshake {
            axis: Some("log".into()),
            ..Default::default()
        },
    ];
    let mut compared = 0;
    for hs in &cases {
        let params = StreamParams::default().merged(hs);
        let frame_spec = FrameSpec::new(params.fft_size, params.hop, Window::Rectangular).unwrap();
        let axis = if params.axis == "log" {
            DisplayAxis::Log {
                axis: build_log_axis(params.fmin, params.fmax, params.rows, &frame_spec, FS)
                    .unwrap(),
                mode: params.mode.parse().unwrap(),
            }
        } else {
            DisplayAxis::Linear
        };
        let spec = ComplexSpectrogram::analyze(&audio, frame_spec, 1.0).unwrap();
        let offline = render_spectrogram(&spec, &axis).unwrap();
        let complete = (audio.len() - params.fft_size) / params.hop + 1;

        let frames = client::stream_pcm(addr, hs, &pcm, 1500).unwrap();
        let columns: Vec<_> = frames
            .iter()
            .filter(|f| f.kind == FrameType::Column)
            .collect();
        if columns.len() != complete {
            return outcome(
                false,
                format!("{} streamed columns, expected {complete}", columns.len()),
            );
        }
        if !frames.windows(2).all(|w| w[0].seq < w[1].seq) {
            return outcome(false, "sequence numbers not increasing");
        }
        for (x, frame) in columns.iter().enumerate() {
            let online: Vec<u8> = frame
                .column_pixels()
                .unwrap()
                .iter()
                .flat_map(|p| p.to_array())
                .collect();
            let expect: Vec<u8> = offline
                .column(x)
                .iter()
                .flat_map(|p| p.to_array())
                .collect();
            if online != expect {
                return outcome(false, format!("column {x} differs for {hs:?}"));
            }
            compared += 1;
        }
    }

    let golden = fixture("beat_schematic_seed141.png");
    let png = encode_png(&render_beat_schematic(&SchematicParams::default())).unwrap();
    if std::env::var_os("LOGCOLOR_BLESS").is_some() {
        std::fs::write(&golden, &png).unwrap();
    }
    let schematic_ok = std::fs::read(&golden).map(|g| g == png).unwrap_or(false);
    outcome(
        schematic_ok,
        format!("{compared} streamed columns byte-identical over 3 configurations; schematic matches golden: {schematic_ok}"),
    )
}

fn main() {
    let (target, floor) = real_time_budget();
    let results = [
        ("color-map bijection", color_map_bijection()),
        ("lossless reconstruction", lossless_reconstruction()),
        ("beat law", beat_law()),
        ("coefficient spacing", coefficient_spacing()),
        ("rectangular warp artifact", rectangular_warp_artifact()),
        ("tuning report", tuning_report_accuracy()),
        ("real-time budget (<= 3.3 s)", target),
        ("real-time budget CI floor (<= 10 s)", floor),
        ("offline/online equivalence", offline_online_equivalence()),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        println!(
            "{} {name}: {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.detail
        );
        failed += usize::from(!r.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
