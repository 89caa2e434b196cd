use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;

use manipctl::cli::{EXIT_DIVERGENCE, EXIT_OK, EXIT_PARSE, EXIT_USAGE};
use manipctl::control::{ControlLaw, JointWave, TrajectorySpec, WaveShape};
use manipctl::scenario::{
    preset, ControllerSection, DisturbanceSection, Gain, ModelSection, OutputSection, Scenario,
    SimSection, PRESETS,
};

fn manipctl(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_manipctl"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn files_in(dir: &Path) -> Vec<PathBuf> {
    std::fs::read_dir(dir)
        .map(|rd| rd.map(|e| e.unwrap().path()).collect())
        .unwrap_or_default()
}

#[test]
fn shipped_scenario_files_match_presets() {
    for name in PRESETS {
        let from_file = Scenario::from_path(&scenario_dir().join(format!("{name}.toml"))).unwrap();
        assert_eq!(from_file, preset(name).unwrap(), "{name}");
    }
}

#[test]
fn simulate_preset_writes_csv_with_one_row_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = manipctl(
        &[
            "simulate",
            "fig7",
            "--out-dir",
            "out",
            "--duration",
            "2",
            "--dt",
            "0.01",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", stderr(&out));
    assert!(stdout(&out).contains("scenario        fig7"));
    assert!(stdout(&out).contains("stable (margin 1.000000)"));

    let mut reader = csv::Reader::from_path(dir.path().join("out/fig7.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header.len(), 1 + 5 * 2);
    assert_eq!(
        header,
        ["t", "q1", "q2", "qd1", "qd2", "e1", "e2", "u1", "u2", "d1", "d2"]
    );
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 1 + 200);
    assert_eq!(rows[0][0], 0.0);
    assert!((rows[200][0] - 2.0).abs() < 1e-12);
    // e = q_d − q, d is the constant tremor.
    for r in &rows {
        assert!((r[5] - (r[3] - r[1])).abs() < 1e-12);
        assert_eq!((r[9], r[10]), (1.0, 0.5));
    }
}

#[test]
fn stride_thins_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.toml");
    let text = std::fs::read_to_string(scenario_dir().join("fig8.toml"))
        .unwrap()
        .replace("stride = 1", "stride = 7")
        .replace("duration = 60.0", "duration = 1.0");
    std::fs::write(&file, text).unwrap();
    let out = manipctl(&["simulate", "s.toml", "--out-dir", "."], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", stderr(&out));
    let body = std::fs::read_to_string(dir.path().join("fig8.csv")).unwrap();
    // 1000 steps, stride 7: samples 0, 7, …, 994 plus the header.
    assert_eq!(body.lines().count(), 1 + (1 + 1000 / 7));
}

#[test]
fn csv_values_carry_at_least_twelve_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    let out = manipctl(
        &["simulate", "fig6", "--out-dir", ".", "--duration", "0.01"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", stderr(&out));
    let body = std::fs::read_to_string(dir.path().join("fig6.csv")).unwrap();
    let field = body.lines().nth(2).unwrap().split(',').nth(1).unwrap();
    let mantissa = field.split('e').next().unwrap().replace(['-', '.'], "");
    assert!(mantissa.len() >= 12, "{field}");
}

#[test]
fn missing_controller_section_is_a_parse_error_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario_dir().join("fig7.toml")).unwrap();
    let start = text.find("[controller]").unwrap();
    let end = text.find("[disturbance]").unwrap();
    let broken = format!("{}{}", &text[..start], &text[end..]);
    std::fs::write(dir.path().join("broken.toml"), broken).unwrap();

    let out = manipctl(&["simulate", "broken.toml", "--out-dir", "out"], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_PARSE));
    assert!(stderr(&out).contains("controller"), "{}", stderr(&out));
    assert!(files_in(&dir.path().join("out")).is_empty());
}

#[test]
fn unknown_key_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario_dir().join("fig7.toml"))
        .unwrap()
        .replace("ki = 1.0", "ki = 1.0\nkf = 2.0");
    std::fs::write(dir.path().join("typo.toml"), text).unwrap();
    let out = manipctl(&["simulate", "typo.toml"], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_PARSE));
    assert!(stderr(&out).contains("kf"), "{}", stderr(&out));
}

#[test]
fn unknown_scenario_name_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = manipctl(&["simulate", "fig99"], dir.path());
    assert_ne!(out.status.code(), Some(EXIT_OK));
    assert!(stderr(&out).contains("fig99"));
}

#[test]
fn diverging_run_exits_with_blow_up_time() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario_dir().join("fig7.toml"))
        .unwrap()
        .replace("kp = 2.4", "kp = 0.5")
        .replace("kd = 4.2", "kd = 0.5");
    std::fs::write(dir.path().join("unstable.toml"), text).unwrap();
    let out = manipctl(
        &["simulate", "unstable.toml", "--out-dir", "out"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(EXIT_DIVERGENCE));
    assert!(stderr(&out).contains("diverged"), "{}", stderr(&out));
    assert!(files_in(&dir.path().join("out")).is_empty());
}

#[test]
fn analyze_reports_verdicts_and_poles() {
    let dir = tempfile::tempdir().unwrap();

    let out = manipctl(&["analyze", "4.2", "2.4", "1"], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let text = stdout(&out);
    assert!(text.contains("verdict         stable"));
    assert!(text.contains("final value     0 (unit delta)"));

    let out = manipctl(&["analyze", "0.5", "0.5", "1"], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let text = stdout(&out);
    assert!(text.contains("verdict         unstable"));
    assert!(text.contains("inapplicable"));

    let out = manipctl(&["analyze", "3", "3", "1", "--out-dir", "."], dir.path());
    let text = stdout(&out);
    assert_eq!(text.matches("-1.000000000").count(), 3, "{text}");
    let body = std::fs::read_to_string(dir.path().join("analysis.csv")).unwrap();
    assert!(body.lines().count() > 1);
}

#[test]
fn reproduce_writes_deterministic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["reproduce", "fig9", "--out-dir", "o", "--duration", "20"];
    let first = manipctl(&args, dir.path());
    assert_eq!(first.status.code(), Some(EXIT_OK), "{}", stderr(&first));
    let text = stdout(&first);
    assert!(text.contains("control_energy high gain"));
    assert!(text.contains("control_energy low gain"));
    assert!(text.contains("control_energy(high) > control_energy(low): true"));
    let high = std::fs::read(dir.path().join("o/fig9_high_gain.csv")).unwrap();
    let low = std::fs::read(dir.path().join("o/fig9_low_gain.csv")).unwrap();

    let second = manipctl(&args, dir.path());
    assert_eq!(second.status.code(), Some(EXIT_OK));
    assert_eq!(
        std::fs::read(dir.path().join("o/fig9_high_gain.csv")).unwrap(),
        high
    );
    assert_eq!(
        std::fs::read(dir.path().join("o/fig9_low_gain.csv")).unwrap(),
        low
    );
}

#[test]
fn reproduce_fig8_settles_faster_than_fig7() {
    let dir = tempfile::tempdir().unwrap();
    let out = manipctl(&["reproduce", "fig8", "--out-dir", "."], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", stderr(&out));
    assert!(
        stdout(&out).contains("high gain settles faster: true"),
        "{}",
        stdout(&out)
    );
    assert!(dir.path().join("fig8.csv").exists() && dir.path().join("fig7.csv").exists());
}

#[test]
fn reproduce_fig6_tracks_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = manipctl(
        &["reproduce", "fig6", "--out-dir", ".", "--duration", "5"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", stderr(&out));
    assert!(
        stdout(&out).contains("settling_time   0.000 s"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn unknown_figure_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = manipctl(&["reproduce", "fig10"], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(stderr(&out).contains("fig10"));
}

#[test]
fn verify_passes_on_a_fresh_build() {
    let dir = tempfile::tempdir().unwrap();
    let out = manipctl(&["verify"], dir.path());
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", stdout(&out));
    let text = stdout(&out);
    for name in [
        "mass_matrix_positive_definite",
        "skew_symmetry",
        "regressor_identity",
        "forward_inverse_round_trip",
        "cancellation",
        "passive_energy_drift",
        "integrator_order",
        "final_value_limit",
    ] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
    assert!(text.contains("all 8 checks passed"));
}

fn finite(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    lo..hi
}

fn gain() -> impl Strategy<Value = Gain> {
    prop_oneof![
        finite(0.1, 30.0).prop_map(Gain::Uniform),
        prop::collection::vec(finite(0.1, 30.0), 2).prop_map(Gain::PerJoint),
    ]
}

fn scenario() -> impl Strategy<Value = Scenario> {
    let controller = (any::<bool>(), gain(), gain(), prop::option::of(gain())).prop_map(
        |(integral, kp, kd, ki)| ControllerSection {
            law: if integral {
                ControlLaw::IdIntegral
            } else {
                ControlLaw::Pd
            },
            kp,
            kd,
            ki,
        },
    );
    let wave = (
        any::<bool>(),
        finite(-2.0, 2.0),
        finite(0.0, 5.0),
        finite(-3.0, 3.0),
        finite(-1.0, 1.0),
    )
        .prop_map(|(sin, amplitude, frequency, phase, offset)| JointWave {
            shape: if sin { WaveShape::Sin } else { WaveShape::Cos },
            amplitude,
            frequency,
            phase,
            offset,
        });
    let disturbance = prop_oneof![
        Just(DisturbanceSection::Zero),
        prop::collection::vec(finite(-3.0, 3.0), 2)
            .prop_map(|value| DisturbanceSection::Constant { value }),
        (
            prop::collection::vec(finite(-3.0, 3.0), 2),
            finite(0.0, 20.0)
        )
            .prop_map(|(amplitude, frequency)| DisturbanceSection::Sinusoid {
                amplitude,
                frequency
            }),
    ];
    let sim = (
        finite(1e-4, 1e-1),
        finite(0.1, 100.0),
        1usize..50,
        prop::option::of(prop::collection::vec(finite(-3.0, 3.0), 2)),
    )
        .prop_map(|(dt, duration, stride, initial_q)| SimSection {
            dt,
            duration,
            stride,
            initial_q,
            ..SimSection::default()
        });
    (
        "[a-z][a-z0-9_-]{0,12}",
        finite(0.0, 20.0),
        controller,
        prop::collection::vec(wave, 2),
        disturbance,
        sim,
        prop::option::of("[a-z]{1,8}\\.csv"),
    )
        .prop_map(
            |(name, gravity, controller, joints, disturbance, sim, csv)| Scenario {
                name,
                model: ModelSection {
                    gravity,
                    ..ModelSection::default()
                },
                controller,
                trajectory: TrajectorySpec { joints },
                disturbance,
                sim,
                output: OutputSection { dir: None, csv },
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn scenario_round_trips_through_text(s in scenario()) {
        let text = s.to_toml_string();
        let back = Scenario::from_toml_str(&text, "round trip").unwrap();
        prop_assert_eq!(back, s);
    }
}
