//! Behavioral tests for the `radkit` binary: pipeline wiring, determinism,
//! config precedence, and the exit-code contract.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use radkit_core::mapalgebra::{save_stack, BBox, BinaryMask2D};
use radkit_core::metrics::{localization_sweep, LOCALIZATION_THRESHOLDS};
use radkit_core::projector::load_radiograph_raw;
use radkit_core::volume::{save_volume, CtVolume, Grid3};
use radkit_core::HeatMap64;

const PHANTOM_TOML: &str = r#"
dims = [48, 48, 48]
spacing_mm = [2.0, 2.0, 2.0]
time_points = 3

[body]
center_mm = [0.0, 0.0, 0.0]
radii_mm = [40.0, 30.0, 44.0]

[lungs.left]
center_mm = [-18.0, 0.0, 6.0]
radii_mm = [14.0, 18.0, 28.0]

[lungs.right]
center_mm = [18.0, 0.0, 6.0]
radii_mm = [14.0, 18.0, 28.0]

[[bones]]
kind = "cylinder"
center_mm = [0.0, 20.0, 0.0]
radius_mm = 4.0
half_len_mm = 30.0
axis = "z"

[[lesions]]
center_mm = [-18.0, 0.0, 6.0]
radius_mm = 7.0
growth = 1.25

[bed]
min_mm = [-46.0, 34.0, -46.0]
max_mm = [46.0, 38.0, 46.0]
"#;

fn radkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radkit")).args(args).output().expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

/// Writes the shared phantom spec and generates its time series.
fn make_phantom(dir: &Path) -> PathBuf {
    let spec = dir.join("phantom.toml");
    fs::write(&spec, PHANTOM_TOML).unwrap();
    let out = dir.join("ph");
    assert_success(&radkit(&[
        "phantom",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    out
}

fn drr_args<'a>(volume: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "drr",
        "--volume",
        volume,
        "--detector-width",
        "64",
        "--detector-height",
        "64",
        "--pixel-mm",
        "2.0",
        "--out",
        out,
    ]
}

#[test]
fn pa_and_ap_views_are_horizontal_mirrors_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let ph = make_phantom(tmp.path());
    let out = tmp.path().join("drr");
    let vol = ph.join("vol_t0.raw");
    assert_success(&radkit(&drr_args(vol.to_str().unwrap(), out.to_str().unwrap())));

    let (w, h, pa) = load_radiograph_raw(&out.join("drr_pa.raw")).unwrap();
    let (w2, h2, ap) = load_radiograph_raw(&out.join("drr_ap.raw")).unwrap();
    assert_eq!((w, h), (64, 64));
    assert_eq!((w2, h2), (64, 64));

    let mut asymmetric = false;
    for y in 0..h {
        for x in 0..w {
            let a = ap[y * w + x] as f64;
            let p = pa[y * w + (w - 1 - x)] as f64;
            assert!((a - p).abs() <= 1e-6 * p.abs().max(1.0), "({x},{y}): {a} vs {p}");
            if (a - pa[y * w + x] as f64).abs() > 1e-3 * p.abs().max(1.0) {
                asymmetric = true;
            }
        }
    }
    assert!(asymmetric, "the lesion should break left-right symmetry");
}

#[test]
fn all_air_volume_renders_a_uniform_unattenuated_image() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = Grid3::new((32, 32, 32), (2.0, 2.0, 2.0), (-31.0, -31.0, -31.0)).unwrap();
    let vol_path = tmp.path().join("air.raw");
    save_volume(&CtVolume::filled(grid, -1000), &vol_path).unwrap();

    // Mono 60 keV spectrum and a vacuum-air table make the expectation exact.
    let spectrum = tmp.path().join("spectrum.tsv");
    fs::write(&spectrum, "energy_kev\tphotons\n60\t100000\n").unwrap();
    let attenuation = tmp.path().join("att.tsv");
    fs::write(
        &attenuation,
        "density\t0\t1.0\t1.92\nenergy_kev\tair\tsoft\tbone\n10\t0.15\t0.2\t0.3\n150\t0.15\t0.2\t0.3\n",
    )
    .unwrap();

    let out = tmp.path().join("out");
    let mut args = drr_args(vol_path.to_str().unwrap(), out.to_str().unwrap());
    args.extend(["--spectrum", spectrum.to_str().unwrap(), "--attenuation", attenuation.to_str().unwrap()]);
    assert_success(&radkit(&args));

    let (_, _, values) = load_radiograph_raw(&out.join("drr_pa.raw")).unwrap();
    let i0 = 60.0 * 1e5;
    for v in values {
        assert!((v as f64 - i0).abs() <= 1e-6 * i0, "{v} vs {i0}");
    }
}

#[test]
fn detection_gate_below_threshold_writes_a_negative_zero_record() {
    let tmp = tempfile::tempdir().unwrap();
    let lungs = tmp.path().join("lungs.pgm");
    BinaryMask2D::from_fn(32, 32, |x, y| (4..28).contains(&x) && (8..24).contains(&y))
        .save_pgm(&lungs)
        .unwrap();
    let lesion = tmp.path().join("lesion.pgm");
    BinaryMask2D::from_fn(32, 32, |x, y| (4..16).contains(&x) && (8..16).contains(&y))
        .save_pgm(&lesion)
        .unwrap();

    let out = tmp.path().join("score");
    let run = radkit(&[
        "score",
        "--lesion-mask",
        lesion.to_str().unwrap(),
        "--lungs",
        lungs.to_str().unwrap(),
        "--detection-score",
        "0.5",
        "--patient-id",
        "n1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_success(&run);
    assert!(String::from_utf8_lossy(&run.stdout).contains("negative"));
    let csv = fs::read_to_string(out.join("severity.csv")).unwrap();
    assert_eq!(
        csv,
        "patient_id,time,ratio_total,ratio_left,ratio_right,level_left,level_right,total_score\n\
         n1,0,0.000000,0.000000,0.000000,0,0,0\n"
    );

    // The same inputs at detection score 0.7 pass the 0.62 gate and score.
    let out2 = tmp.path().join("score2");
    let run2 = radkit(&[
        "score",
        "--lesion-mask",
        lesion.to_str().unwrap(),
        "--lungs",
        lungs.to_str().unwrap(),
        "--detection-score",
        "0.7",
        "--patient-id",
        "n1",
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert_success(&run2);
    let csv2 = fs::read_to_string(out2.join("severity.csv")).unwrap();
    // Lesion covers 12·8 of the 24·16 lung pixels: 25% overall, 50% left.
    assert!(csv2.contains("n1,0,25.000000,50.000000,0.000000,3,0,3"), "{csv2}");
}

#[test]
fn monitor_output_is_invariant_to_input_row_order() {
    let tmp = tempfile::tempdir().unwrap();
    let header = "patient_id,time,ratio_total,ratio_left,ratio_right,level_left,level_right,total_score,ratio_3d";
    let rows = [
        "a,0,5.000000,5.0,5.0,1,1,2,4.000000",
        "a,1,8.000000,8.0,8.0,1,1,2,9.000000",
        "a,2,12.000000,12.0,12.0,1,1,2,14.000000",
        "b,0,10.000000,10.0,10.0,1,1,2,12.000000",
        "b,1,6.000000,6.0,6.0,1,1,2,5.000000",
    ];
    let ordered = tmp.path().join("ordered.csv");
    fs::write(&ordered, format!("{header}\n{}\n", rows.join("\n"))).unwrap();
    let shuffled = tmp.path().join("shuffled.csv");
    let mixed = [rows[3], rows[1], rows[4], rows[0], rows[2]];
    fs::write(&shuffled, format!("{header}\n{}\n", mixed.join("\n"))).unwrap();

    let run_monitor = |input: &Path, out: &Path| {
        assert_success(&radkit(&[
            "monitor",
            input.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]));
    };
    let out1 = tmp.path().join("m1");
    let out2 = tmp.path().join("m2");
    run_monitor(&ordered, &out1);
    run_monitor(&shuffled, &out2);

    for name in ["summary.csv", "profile_a.csv", "profile_b.csv"] {
        let a = fs::read(out1.join(name)).unwrap();
        let b = fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} depends on input order");
    }
    // Both patients trend consistently, so pooled agreement is 1.
    let summary = fs::read_to_string(out1.join("summary.csv")).unwrap();
    assert!(summary.contains("a,3,1.000000,"), "{summary}");
    assert!(summary.contains("b,2,1.000000,"), "{summary}");
    assert!(summary.contains("pooled,5,1.000000,"), "{summary}");
}

#[test]
fn eval_scores_perfect_predictions_at_map_one() {
    let tmp = tempfile::tempdir().unwrap();
    let boxes = tmp.path().join("boxes.tsv");
    fs::write(&boxes, "# id\tx\ty\tw\th\nimg1\t4\t4\t10\t10\nimg1\t20\t4\t6\t6\nimg2\t0\t0\t5\t5\n").unwrap();
    let out = tmp.path().join("eval");
    let run = radkit(&[
        "eval",
        "--pred",
        boxes.to_str().unwrap(),
        "--gt",
        boxes.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_success(&run);
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(csv, "metric,threshold,value\nmap,,1.000000000\n");
}

#[test]
fn eval_sweep_matches_the_library_computation() {
    let tmp = tempfile::tempdir().unwrap();
    // Three maps with one hot blob each, at different activations.
    let blob = |cx: usize, cy: usize, v: f64| {
        HeatMap64::from_fn(32, 32, move |x, y| {
            let (dx, dy) = (x as f64 - cx as f64, y as f64 - cy as f64);
            if dx * dx + dy * dy <= 25.0 {
                v
            } else {
                0.1
            }
        })
    };
    let maps = vec![blob(8, 8, 0.95), blob(20, 16, 0.75), blob(16, 24, 0.55)];
    let stack = tmp.path().join("stack.raw");
    save_stack(&maps, &stack).unwrap();

    let gt = tmp.path().join("gt.tsv");
    fs::write(&gt, "0\t3\t3\t11\t11\n1\t15\t11\t11\t11\n2\t11\t19\t11\t11\n").unwrap();
    let out = tmp.path().join("eval");
    assert_success(&radkit(&[
        "eval",
        "--maps",
        stack.to_str().unwrap(),
        "--gt",
        gt.to_str().unwrap(),
        "--sweep",
        "--out",
        out.to_str().unwrap(),
    ]));

    let gts: Vec<Vec<BBox>> = vec![
        vec![BBox::new(3, 3, 11, 11).unwrap()],
        vec![BBox::new(15, 11, 11, 11).unwrap()],
        vec![BBox::new(11, 19, 11, 11).unwrap()],
    ];
    // Reload the stack, since saving quantized the maps to f32.
    let maps32: Vec<HeatMap64> = radkit_core::mapalgebra::load_stack(&stack).unwrap();
    let expected = localization_sweep(&maps32, &gts, &LOCALIZATION_THRESHOLDS).unwrap();

    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("metric,threshold,value"));
    let parsed: Vec<(f64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f[0], "localization_map");
            (f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    assert_eq!(parsed.len(), expected.len());
    for ((t_csv, v_csv), (t_lib, v_lib)) in parsed.iter().zip(&expected) {
        assert_eq!(t_csv, t_lib);
        assert!((v_csv - v_lib).abs() <= 1e-9, "{v_csv} vs {v_lib} at {t_lib}");
    }
    // The sweep must degrade as the threshold climbs past the weakest blob.
    assert!(parsed[0].1 > 0.0);
    assert!(parsed.last().unwrap().1 <= parsed[0].1);
}

#[test]
fn score_overlay_differs_from_the_input_image() {
    let tmp = tempfile::tempdir().unwrap();
    let ph = make_phantom(tmp.path());
    let out = tmp.path().join("drr");
    let vol = ph.join("vol_t0.raw");
    let mut args = drr_args(vol.to_str().unwrap(), out.to_str().unwrap());
    let lungs3d = ph.join("lungs_t0.raw");
    let lesion3d = ph.join("lesion_t0.raw");
    args.extend([
        "--lungs-mask",
        lungs3d.to_str().unwrap(),
        "--lesion-mask",
        lesion3d.to_str().unwrap(),
    ]);
    assert_success(&radkit(&args));

    let score_out = tmp.path().join("score");
    assert_success(&radkit(&[
        "score",
        "--lesion-mask",
        out.join("lesion_pa.pgm").to_str().unwrap(),
        "--lungs",
        out.join("lungs_pa.pgm").to_str().unwrap(),
        "--image",
        out.join("drr_pa.pgm").to_str().unwrap(),
        "--out",
        score_out.to_str().unwrap(),
    ]));
    let overlay = fs::read(score_out.join("overlay.pgm")).unwrap();
    let original = fs::read(out.join("drr_pa.pgm")).unwrap();
    assert_ne!(overlay, original, "contour must change the image");
    assert_eq!(overlay.len(), original.len(), "same format and dimensions");
}

#[test]
fn config_file_applies_and_flags_override_it() {
    let tmp = tempfile::tempdir().unwrap();
    let ph = make_phantom(tmp.path());
    let vol = ph.join("vol_t0.raw");
    let cfg = tmp.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# render settings\nvolume = {}\ndetector_width = 32\ndetector_height = 32\npixel_mm = 4.0\nviews = pa\n",
            vol.display()
        ),
    )
    .unwrap();

    // Config alone drives the run.
    let out1 = tmp.path().join("c1");
    assert_success(&radkit(&["drr", "--config", cfg.to_str().unwrap(), "--out", out1.to_str().unwrap()]));
    let (w, h, _) = load_radiograph_raw(&out1.join("drr_pa.raw")).unwrap();
    assert_eq!((w, h), (32, 32));
    assert!(!out1.join("drr_ap.raw").exists(), "views=pa should skip AP");

    // A flag overrides the file.
    let out2 = tmp.path().join("c2");
    assert_success(&radkit(&[
        "drr",
        "--config",
        cfg.to_str().unwrap(),
        "--detector-width",
        "16",
        "--out",
        out2.to_str().unwrap(),
    ]));
    let (w2, h2, _) = load_radiograph_raw(&out2.join("drr_pa.raw")).unwrap();
    assert_eq!((w2, h2), (16, 32));

    // Unknown keys are rejected rather than ignored.
    let bad = tmp.path().join("bad.cfg");
    fs::write(&bad, "detector_widht = 32\n").unwrap();
    let run = radkit(&["drr", "--config", bad.to_str().unwrap(), "--volume", vol.to_str().unwrap()]);
    assert_eq!(exit_code(&run), 2);
}

#[test]
fn exit_codes_distinguish_usage_data_and_success() {
    let tmp = tempfile::tempdir().unwrap();

    // 0: help and version.
    assert_eq!(exit_code(&radkit(&["--help"])), 0);
    assert_eq!(exit_code(&radkit(&["--version"])), 0);

    // 1: unknown flags, missing required inputs, bad flag combinations.
    assert_eq!(exit_code(&radkit(&["drr", "--bogus"])), 1);
    assert_eq!(exit_code(&radkit(&["score"])), 1);
    assert_eq!(exit_code(&radkit(&["monitor"])), 1);
    assert_eq!(exit_code(&radkit(&["eval", "--sweep"])), 1);

    // 2: well-formed invocation, broken data.
    let missing = tmp.path().join("nope.raw");
    assert_eq!(exit_code(&radkit(&["drr", "--volume", missing.to_str().unwrap()])), 2);
    let bad_spec = tmp.path().join("bad.toml");
    fs::write(&bad_spec, "dims = \"not numbers\"").unwrap();
    let out = tmp.path().join("never");
    let run = radkit(&["phantom", "--spec", bad_spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(exit_code(&run), 2);
    assert!(!out.exists(), "failed phantom run must leave no partial output");
}

#[test]
fn invalid_spec_after_partial_generation_leaves_no_output() {
    let tmp = tempfile::tempdir().unwrap();
    // Valid TOML, valid first two time points, but --times beyond the spec
    // range is rejected before anything lands in the output directory.
    let spec = tmp.path().join("phantom.toml");
    fs::write(&spec, PHANTOM_TOML).unwrap();
    let out = tmp.path().join("ph");
    let run = radkit(&[
        "phantom",
        "--spec",
        spec.to_str().unwrap(),
        "--times",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&run), 1);
    assert!(!out.exists());
    // No stray staging directories either.
    let leftovers: Vec<_> = fs::read_dir(tmp.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().contains("partial"))
        .collect();
    assert!(leftovers.is_empty(), "staging directories leaked: {leftovers:?}");
}
