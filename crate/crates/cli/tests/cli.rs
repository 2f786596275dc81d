use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ems(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ems"))
        .args(args)
        .env_remove("EMS_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn presets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p
}

const SHORT: &str = r#"
[vehicle]
kind = "phev"

[cycle]
truncate = 120

[env]
pdem_points = 7
soc_points = 7
action_points = 5

[algorithm]
name = "qlearning"
episodes = 6
eval_every = 2
seed = 3
"#;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn zero_speed_cycle_burns_no_fuel() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cycle = String::from("time_s,speed_kph\n");
    for t in 0..30 {
        cycle += &format!("{t},0\n");
    }
    fs::write(tmp.path().join("idle.csv"), cycle).unwrap();
    let cfg = write_config(tmp.path(), "[vehicle]\nkind = \"phev\"\n[cycle]\npath = \"idle.csv\"\n");
    let out = tmp.path().join("sim");
    let o = ems(&["simulate", "--config", s(&cfg), "--fixed", "0", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("simulation.json")).unwrap()).unwrap();
    assert_eq!(report["fuel_g"], 0.0);
    assert_eq!(report["steps"], 30);
    assert!(out.join("soc_trajectory.csv").exists());
    assert!(out.join("operating_points.csv").exists());
}

#[test]
fn qtable_replay_matches_training_evaluation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SHORT);
    let train_dir = tmp.path().join("train");
    let o = ems(&["train", "--config", s(&cfg), "--out", s(&train_dir)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sim_dir = tmp.path().join("replay");
    let q = train_dir.join("qtable.csv");
    let o = ems(&["simulate", "--config", s(&cfg), "--qtable", s(&q), "--out", s(&sim_dir)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["soc_trajectory.csv", "operating_points.csv"] {
        assert_eq!(fs::read(train_dir.join(f)).unwrap(), fs::read(sim_dir.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn train_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SHORT);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let o = ems(&["train", "--config", s(&cfg), "--out", s(d), "--seed", "9"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
    let run: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["seed"], 9);
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &SHORT.replace("\"qlearning\"", "\"sarsa_lambda\""));
    let o = ems(&["train", "--config", s(&cfg), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("algorithm.lambda"), "{}", stderr(&o));

    let cfg = write_config(tmp.path(), &SHORT.replace("seed = 3", "seed = 3\nepsilon = 2.0"));
    let o = ems(&["train", "--config", s(&cfg), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("algorithm.epsilon"));

    let o = ems(&["train", "--config", s(&tmp.path().join("absent.toml"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_data_file_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &SHORT.replace("kind = \"phev\"", "kind = \"phev\"\nbattery = \"maps/no_such_battery.csv\""),
    );
    let o = ems(&["simulate", "--config", s(&cfg), "--fixed", "1", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("no_such_battery.csv"), "{}", stderr(&o));
}

#[test]
fn oracle_check_passes() {
    let o = ems(&["oracle-check"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    let chain = text.lines().find(|l| l.contains("q-learning max_a Q vs V*")).unwrap();
    assert!(chain.starts_with("PASS"));
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5);
}

#[test]
fn sweep_writes_report_and_handles_empty_axes() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), SHORT);
    let sweep = tmp.path().join("sweep.toml");
    fs::write(
        &sweep,
        "base = \"run.toml\"\nmaster_seed = 5\n[[axes]]\npath = \"algorithm.alpha_lr\"\nvalues = [0.1, 0.3]\n",
    )
    .unwrap();
    let out = tmp.path().join("report");
    let o = ems(&["sweep", "--config", s(&sweep), "--out", s(&out), "--workers", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.lines().next().unwrap().contains("algorithm.alpha_lr"));
    assert!(out.join("availability.csv").exists());
    assert!(out.join("manifest.json").exists());

    fs::write(&sweep, "base = \"run.toml\"\n").unwrap();
    let out = tmp.path().join("single");
    let o = ems(&["sweep", "--config", s(&sweep), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(out.join("summary.csv")).unwrap().lines().count(), 2);
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SHORT}\n[output]\ndir = \"named\"\n"));
    let o = Command::new(env!("CARGO_BIN_EXE_ems"))
        .args(["simulate", "--config", s(&cfg), "--fixed", "1"])
        .env("EMS_OUTPUT_ROOT", tmp.path().join("root"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(tmp.path().join("root/named/simulation.json").exists());
}

#[test]
fn shipped_presets_parse() {
    let dir = presets();
    for name in ["phev_base.toml", "fcev_base.toml", "smoke.toml"] {
        let o = ems(&[
            "simulate",
            "--config",
            s(&dir.join(name)),
            "--out",
            s(&tempfile::tempdir().unwrap().path().join("x")),
        ]);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
    }
}

#[test]
fn smoke_train_is_fast() {
    let tmp = tempfile::tempdir().unwrap();
    let started = std::time::Instant::now();
    let o = ems(&["train", "--config", s(&presets().join("smoke.toml")), "--out", s(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(started.elapsed().as_secs_f64() < 10.0);
}
