//! End-to-end runs of the `sphwav` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use sphere_wavelets::io::{read_header, read_map, write_map};
use sphere_wavelets::mollweide::read_ppm;
use sphere_wavelets::{BandLimit, HarmonicCoeffs, SamplingScheme, ShtPlan, SphereMap};

fn sphwav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sphwav"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Random real band-limited map written to `dir/name`.
fn write_random(dir: &Path, name: &str, scheme: SamplingScheme, l: usize, seed: u64) -> PathBuf {
    let plan = ShtPlan::for_scheme(scheme, BandLimit::new(l).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flm = HarmonicCoeffs::gaussian(plan.grid().band_limit(), 1.0, true, &mut rng);
    let path = dir.join(name);
    write_map(&path, &plan.synthesize(&flm, true).unwrap()).unwrap();
    path
}

fn parse_eps(text: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with("eps = ")).expect(text);
    line["eps = ".len()..].trim().parse().unwrap()
}

#[test]
fn analyze_writes_one_file_per_scale() {
    let dir = TempDir::new().unwrap();
    let input = write_random(dir.path(), "f.s2wm", SamplingScheme::GL, 128, 1);
    let prefix = dir.path().join("w");
    let o = sphwav(&[
        "analyze",
        "--in",
        p(&input),
        "--lambda",
        "3",
        "--jmin",
        "2",
        "--out-prefix",
        p(&prefix),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("J = 5"), "{}", stdout(&o));
    assert!(dir.path().join("w_scal.s2wm").exists());
    let wavs: Vec<_> = (0..8)
        .filter(|j| dir.path().join(format!("w_wav_{j}.s2wm")).exists())
        .collect();
    assert_eq!(wavs, vec![2, 3, 4, 5]);
}

#[test]
fn lowest_scale_must_be_below_top() {
    let dir = TempDir::new().unwrap();
    let input = write_random(dir.path(), "f.s2wm", SamplingScheme::GL, 16, 1);
    let o = sphwav(&[
        "analyze",
        "--in",
        p(&input),
        "--jmin",
        "4",
        "--out-prefix",
        p(&dir.path().join("w")),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("0 <= J0 < J"), "{}", stderr(&o));
}

#[test]
fn analyze_synthesize_round_trip() {
    for (scheme, multires) in [
        (SamplingScheme::GL, false),
        (SamplingScheme::GL, true),
        (SamplingScheme::MW, false),
        (SamplingScheme::MW, true),
    ] {
        let dir = TempDir::new().unwrap();
        let input = write_random(dir.path(), "f.s2wm", scheme, 48, 7);
        let prefix = dir.path().join("w");
        let mut args = vec![
            "analyze",
            "--in",
            p(&input),
            "--family",
            "needlet",
            "--out-prefix",
            p(&prefix),
        ];
        if multires {
            args.push("--multires");
        }
        let o = sphwav(&args);
        assert!(o.status.success(), "{}", stderr(&o));

        let rec = dir.path().join("rec.s2wm");
        let o = sphwav(&[
            "synthesize",
            "--in-prefix",
            p(&prefix),
            "--family",
            "needlet",
            "--bandlimit",
            "48",
            "--out",
            p(&rec),
            "--reference",
            p(&input),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let eps = parse_eps(&stdout(&o));
        assert!(eps <= 1e-10, "{scheme} multires={multires}: {eps}");
        assert_eq!(
            read_map(&rec).unwrap().grid(),
            read_map(&input).unwrap().grid()
        );
    }
}

#[test]
fn multires_files_are_smaller() {
    let dir = TempDir::new().unwrap();
    let input = write_random(dir.path(), "f.s2wm", SamplingScheme::GL, 64, 2);
    let full = dir.path().join("full");
    let multi = dir.path().join("multi");
    assert!(
        sphwav(&["analyze", "--in", p(&input), "--out-prefix", p(&full)])
            .status
            .success()
    );
    assert!(sphwav(&[
        "analyze",
        "--in",
        p(&input),
        "--multires",
        "--out-prefix",
        p(&multi)
    ])
    .status
    .success());
    let size = |prefix: &str, j: usize| {
        std::fs::metadata(dir.path().join(format!("{prefix}_wav_{j}.s2wm")))
            .unwrap()
            .len()
    };
    assert!(size("multi", 0) < size("full", 0));
    assert_eq!(size("multi", 6), size("full", 6));
    assert!(
        read_header(dir.path().join("multi_scal.s2wm"))
            .unwrap()
            .band_limit
            < 64
    );
}

#[test]
fn synthesize_reports_missing_and_mismatched_inputs() {
    let dir = TempDir::new().unwrap();
    let input = write_random(dir.path(), "f.s2wm", SamplingScheme::GL, 32, 3);
    let prefix = dir.path().join("w");
    assert!(
        sphwav(&["analyze", "--in", p(&input), "--out-prefix", p(&prefix)])
            .status
            .success()
    );
    let out = dir.path().join("rec.s2wm");

    let o = sphwav(&[
        "synthesize",
        "--in-prefix",
        p(&prefix),
        "--lambda",
        "3",
        "--bandlimit",
        "32",
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));

    std::fs::remove_file(dir.path().join("w_wav_2.s2wm")).unwrap();
    let o = sphwav(&[
        "synthesize",
        "--in-prefix",
        p(&prefix),
        "--bandlimit",
        "32",
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn corrupted_magic_is_a_format_error() {
    let dir = TempDir::new().unwrap();
    let input = write_random(dir.path(), "f.s2wm", SamplingScheme::GL, 8, 4);
    let mut bytes = std::fs::read(&input).unwrap();
    bytes[0] ^= 0xff;
    std::fs::write(&input, bytes).unwrap();
    let o = sphwav(&[
        "analyze",
        "--in",
        p(&input),
        "--out-prefix",
        p(&dir.path().join("w")),
    ]);
    assert_eq!(o.status.code(), Some(3));

    let o = sphwav(&[
        "analyze",
        "--in",
        p(&dir.path().join("missing.s2wm")),
        "--out-prefix",
        "x",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn denoise_without_threshold_returns_the_input() {
    let dir = TempDir::new().unwrap();
    let input = write_random(dir.path(), "f.s2wm", SamplingScheme::MW, 32, 5);
    let out = dir.path().join("d.s2wm");
    let o = sphwav(&[
        "denoise",
        "--in",
        p(&input),
        "--sigma",
        "0.5",
        "--factor",
        "0",
        "--out",
        p(&out),
        "--reference",
        p(&input),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("SNR(d) = "), "{}", stdout(&o));
    let (a, b) = (read_map(&input).unwrap(), read_map(&out).unwrap());
    let diff = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    assert!(diff < 1e-10, "{diff}");
}

#[test]
fn denoise_rejects_negative_sigma() {
    let dir = TempDir::new().unwrap();
    let input = write_random(dir.path(), "f.s2wm", SamplingScheme::GL, 8, 6);
    let o = sphwav(&[
        "denoise",
        "--in",
        p(&input),
        "--sigma=-1",
        "--out",
        p(&dir.path().join("d.s2wm")),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn plot_writes_ppm() {
    let dir = TempDir::new().unwrap();
    let plan = ShtPlan::for_scheme(SamplingScheme::GL, BandLimit::new(8).unwrap());
    let constant = dir.path().join("c.s2wm");
    write_map(
        &constant,
        &SphereMap::constant(plan.grid().clone(), Complex64::new(2.0, 0.0)),
    )
    .unwrap();
    let img = dir.path().join("c.ppm");
    let o = sphwav(&[
        "plot",
        "--in",
        p(&constant),
        "--out",
        p(&img),
        "--width",
        "16",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let image = read_ppm(&img).unwrap();
    assert_eq!((image.width(), image.height()), (16, 8));
    let (cx, cy) = (8, 4);
    let centre = image.pixel(cx, cy);
    assert!(image
        .pixels()
        .iter()
        .all(|px| *px == centre || *px == [255, 255, 255]));
    assert_eq!(image.pixel(0, 0), [255, 255, 255]);

    let o = sphwav(&[
        "plot",
        "--in",
        p(&constant),
        "--out",
        p(&img),
        "--width",
        "8",
    ]);
    assert_eq!(o.status.code(), Some(1));

    let complex = dir.path().join("z.s2wm");
    write_map(
        &complex,
        &SphereMap::constant(plan.grid().clone(), Complex64::new(1.0, 1.0)),
    )
    .unwrap();
    let o = sphwav(&["plot", "--in", p(&complex), "--out", p(&img)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn kernels_table_shape() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("k.tsv");
    let o = sphwav(&[
        "kernels",
        "--bandlimit",
        "64",
        "--lambda",
        "2",
        "--jmin",
        "2",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split('\t').collect())
        .collect();
    assert_eq!(rows.len(), 64);
    assert!(rows.iter().all(|r| r.len() == 2 + (6 - 2 + 1)));
    let residual: f64 = text
        .lines()
        .last()
        .unwrap()
        .split('\t')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual <= 1e-10);
    for row in &rows {
        let vals: Vec<f64> = row[1..].iter().map(|v| v.parse().unwrap()).collect();
        let l: f64 = row[0].parse().unwrap();
        let weight = 4.0 * std::f64::consts::PI / (2.0 * l + 1.0);
        let sum: f64 = weight * vals.iter().map(|v| v * v).sum::<f64>();
        assert!((sum - 1.0).abs() < 1e-10, "l = {l}: {sum}");
    }
}

#[test]
fn bench_report_fields() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("b.json");
    let o = sphwav(&[
        "bench",
        "--lmax-exp",
        "4",
        "--reps",
        "1",
        "--report",
        p(&report),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let records = json["records"].as_array().unwrap();
    assert_eq!(
        records
            .iter()
            .map(|r| r["L"].as_u64().unwrap())
            .collect::<Vec<_>>(),
        vec![4, 8, 16]
    );
    for r in records {
        assert!(r["eps_full"].as_f64().unwrap() < 1e-10);
        assert!(r["eps_multi"].as_f64().unwrap() < 1e-10);
        assert!(r["t_full_ms"].as_f64().unwrap() >= 0.0);
        assert!(r["t_multi_ms"].as_f64().unwrap() >= 0.0);
    }

    let o = sphwav(&["bench", "--lmax-exp", "13", "--report", p(&report)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_flag_exits_one() {
    assert_eq!(sphwav(&["analyze", "--bogus"]).status.code(), Some(1));
    assert!(sphwav(&["--help"]).status.success());
}
