use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use logcolor::audio::{read_wav, write_wav, write_wav_i16};
use logcolor::image::import_png;
use logcolor::synth::{synthesize, Signal};
use logcolor::{AudioBuffer, Rgb8};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_logcolor"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fm_wav(dir: &Path) -> PathBuf {
    let path = dir.join("fm.wav");
    let o = run(&[
        "synth",
        "fm",
        "--freq",
        "440",
        "--duration",
        "1.5",
        "--out",
        s(&path),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    path
}

#[test]
fn encode_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let wav = fm_wav(dir.path());
    let cspec = dir.path().join("fm.cspec");
    let png = dir.path().join("fm.png");
    let o = run(&["encode", s(&wav), s(&cspec), s(&png)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("samples/s"));
    let out = dir.path().join("back.wav");
    let o = run(&["decode", s(&cspec), s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = read_wav(&wav).unwrap();
    let b = read_wav(&out).unwrap();
    assert_eq!(a.len(), b.len());
    let err = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-6, "{err}");
}

#[test]
fn rectangular_and_polar_log_images() {
    let dir = tempfile::tempdir().unwrap();
    let wav = fm_wav(dir.path());
    let mut images = Vec::new();
    for mode in ["rect", "polar"] {
        let png = dir.path().join(format!("{mode}.png"));
        let cspec = dir.path().join(format!("{mode}.cspec"));
        let o = run(&[
            "encode",
            s(&wav),
            s(&cspec),
            s(&png),
            "--axis",
            "log",
            "--mode",
            mode,
            "--rows",
            "300",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let img = import_png(&png).unwrap();
        assert_eq!(img.height(), 300);
        assert_eq!(img.meta("mode"), Some(mode));
        images.push(img);
    }
    assert_ne!(images[0].pixels(), images[1].pixels());
}

#[test]
fn silence_renders_black() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("silence.wav");
    write_wav(&AudioBuffer::new(vec![0.0; 10000], 44100).unwrap(), &wav).unwrap();
    let png = dir.path().join("silence.png");
    let o = run(&["encode", s(&wav), s(&dir.path().join("s.cspec")), s(&png)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let img = import_png(&png).unwrap();
    assert!(img.pixels().iter().all(|&p| p == Rgb8::BLACK));
}

#[test]
fn png_decode_warns_and_reports_snr() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("tone.wav");
    let o = run(&[
        "synth",
        "tone",
        "--freq",
        "1000",
        "--amplitude",
        "0.5",
        "--out",
        s(&wav),
    ]);
    assert!(o.status.success());
    let png = dir.path().join("tone.png");
    assert!(
        run(&["encode", s(&wav), s(&dir.path().join("t.cspec")), s(&png)])
            .status
            .success()
    );
    let o = run(&["decode", s(&png), s(&dir.path().join("back.wav"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("estimated SNR"));
    assert!(stderr(&o).contains("lossy"));
}

#[test]
fn png_without_metadata_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let png = dir.path().join("plain.png");
    let file = std::fs::File::create(&png).unwrap();
    let mut enc = png::Encoder::new(std::io::BufWriter::new(file), 2, 2);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    enc.write_header()
        .unwrap()
        .write_image_data(&[0u8; 12])
        .unwrap();
    let o = run(&["decode", s(&png), s(&dir.path().join("x.wav"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown provenance"));
}

#[test]
fn overlapping_cspec_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let wav = fm_wav(dir.path());
    let cspec = dir.path().join("overlap.cspec");
    let o = run(&["encode", s(&wav), s(&cspec), "--hop", "512"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["decode", s(&cspec), s(&dir.path().join("x.wav"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("invertible"), "{}", stderr(&o));
}

#[test]
fn usage_and_data_errors_have_distinct_codes() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let wav = fm_wav(dir.path());
    let o = run(&[
        "encode",
        s(&wav),
        s(&dir.path().join("x.cspec")),
        "--fft-size",
        "1000",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let garbage = dir.path().join("garbage.wav");
    std::fs::write(&garbage, b"not a wav file at all").unwrap();
    let o = run(&["encode", s(&garbage), s(&dir.path().join("x.cspec"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["decode", s(&garbage), s(&dir.path().join("x.wav"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(run(&["--help"]).status.success());
}

#[test]
fn encode_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let wav = fm_wav(dir.path());
    let mut outputs = Vec::new();
    for i in 0..2 {
        let cspec = dir.path().join(format!("{i}.cspec"));
        let png = dir.path().join(format!("{i}.png"));
        assert!(
            run(&["encode", s(&wav), s(&cspec), s(&png), "--axis", "log"])
                .status
                .success()
        );
        outputs.push((std::fs::read(cspec).unwrap(), std::fs::read(png).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn analyze_pure_tone_and_scale() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("a4.wav");
    assert!(run(&["synth", "tone", "--freq", "440", "--out", s(&wav)])
        .status
        .success());
    let o = run(&["analyze", s(&wav), "--format", "kv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("notes=1\n"), "{text}");
    assert!(text.contains("note.0.name=A4\n"));
    assert!(text.contains("note.0.verdict=in-tune\n"));

    let scale = dir.path().join("scale.wav");
    let o = run(&[
        "synth",
        "chromatic",
        "--first",
        "C3",
        "--count",
        "24",
        "--duration",
        "12",
        "--detune",
        "5,-5",
        "--out",
        s(&scale),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["analyze", s(&scale), "--segments", "24"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    let rows: Vec<&str> = table.lines().skip(2).collect();
    assert_eq!(rows.len(), 24, "{table}");
    assert!(
        rows[0].starts_with("C3") && rows[0].ends_with("sharp"),
        "{}",
        rows[0]
    );
    assert!(
        rows[1].starts_with("C#3") && rows[1].ends_with("flat"),
        "{}",
        rows[1]
    );
    assert!(rows[2].ends_with("in-tune"), "{}", rows[2]);
}

#[test]
fn analyze_short_note_is_unmeasurable() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("short.wav");
    assert!(
        run(&["synth", "tone", "--duration", "0.1", "--out", s(&wav)])
            .status
            .success()
    );
    let o = run(&["analyze", s(&wav), "--notes", "A4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("unmeasurable"));
    let o = run(&["analyze", s(&wav), "--notes", "A4,B4", "--segments", "3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn schematic_matches_golden_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("schematic.png");
    let o = run(&["schematic", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures/beat_schematic_seed141.png");
    assert_eq!(std::fs::read(out).unwrap(), std::fs::read(golden).unwrap());
    let img = import_png(dir.path().join("schematic.png")).unwrap();
    assert_eq!((img.width(), img.height()), (128, 100));
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn start_server(extra: &[&str]) -> (Server, String) {
    let mut child = bin()
        .args(["serve", "--port", "0"])
        .args(extra)
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on ")
        .expect("listen line")
        .to_string();
    (Server(child), addr)
}

#[test]
fn served_columns_equal_encoded_columns() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("pcm.wav");
    let audio = synthesize(&Signal::fm_demo(500.0), 2.0, 44100).unwrap();
    write_wav_i16(&audio, &wav).unwrap();
    let (_server, addr) = start_server(&[]);
    for extra in [
        &[][..],
        &["--axis", "log", "--mode", "polar", "--rows", "256"][..],
    ] {
        let png = dir.path().join("offline.png");
        let o = bin()
            .args(["encode", s(&wav), s(&dir.path().join("o.cspec")), s(&png)])
            .args(extra)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        let streamed = dir.path().join("streamed.png");
        let o = bin()
            .args([
                "send",
                s(&wav),
                "--addr",
                &addr,
                "--out",
                s(&streamed),
                "--chunk",
                "1000",
            ])
            .args(extra)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(stdout(&o).contains("analysis seq"));
        let offline = import_png(&png).unwrap();
        let online = import_png(&streamed).unwrap();
        let complete = (audio.len() - 2048) / 2048 + 1;
        assert_eq!(online.width(), complete);
        assert_eq!(online.height(), offline.height());
        for x in 0..complete {
            assert_eq!(online.column(x), offline.column(x), "column {x}");
        }
    }
}

#[test]
fn serve_rejects_bad_handshake() {
    let (_server, addr) = start_server(&[]);
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("pcm.wav");
    write_wav_i16(&synthesize(&Signal::tone(300.0), 0.2, 44100).unwrap(), &wav).unwrap();
    let o = run(&["send", s(&wav), "--addr", &addr, "--fft-size", "3000"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("power of two"), "{}", stderr(&o));
}
