use std::path::Path;
use std::process::{Command, Output};

fn permeq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permeq"))
        .args(args)
        .current_dir(dir)
        .env_remove("PERMEQ_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gen_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "gen", "--dist", "uniform", "--shape", "2x2", "--count", "10", "--seed", "7",
    ];
    let a = permeq(dir.path(), &[&args[..], &["--out-dir", "a"]].concat());
    let b = permeq(dir.path(), &[&args[..], &["--out-dir", "b"]].concat());
    assert!(a.status.success(), "{}", stderr(&a));
    assert!(b.status.success());
    let name = "games_uniform_2x2_seed7.json";
    let fa = std::fs::read(dir.path().join("a").join(name)).unwrap();
    let fb = std::fs::read(dir.path().join("b").join(name)).unwrap();
    assert_eq!(fa, fb);
    let other = permeq(
        dir.path(),
        &[
            "gen",
            "--shape",
            "2x2",
            "--count",
            "10",
            "--seed",
            "8",
            "--out-dir",
            "a",
        ],
    );
    assert!(other.status.success());
    assert_ne!(
        fa,
        std::fs::read(dir.path().join("a/games_uniform_2x2_seed8.json")).unwrap()
    );
}

#[test]
fn output_dir_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_permeq"))
        .args(["gen", "--dist", "named", "--id", "identity2x2", "--count", "2"])
        .current_dir(dir.path())
        .env("PERMEQ_OUT_DIR", "from_env")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("from_env/games_named_2x2_seed0.json").exists());
}

#[test]
fn swr_prints_the_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let o = permeq(dir.path(), &["swr", "--eps", "0.05"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let ratio: f64 = out
        .split_whitespace()
        .skip_while(|w| *w != "ratio")
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((ratio - 0.05).abs() <= 1e-6, "{out}");
}

#[test]
fn verify_quick_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = permeq(dir.path(), &["verify", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}\n{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("checks passed"));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn bad_input_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = permeq(dir.path(), &["swr", "--eps", "0.7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[invalid]"));

    std::fs::write(dir.path().join("bad.toml"), "[train]\nbatch_sise = 3\n").unwrap();
    let o = permeq(dir.path(), &["train", "--config", "bad.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[parse]"), "{}", stderr(&o));

    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"version":1,"num_players":2,"action_counts":[2,2],"payoffs":[[[1,0],[0,1.5]],[[1,0],[0,1]]]}"#,
    )
    .unwrap();
    std::fs::write(dir.path().join("nothing.json"), "{}").unwrap();
    let o = permeq(
        dir.path(),
        &["eval", "--checkpoint", "nothing.json", "--games", "bad.json"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn capacity_errors_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("big.toml"),
        "[experiment]\nkind = \"orbit_benefit\"\nvariant = \"joint_cce\"\nshape = \"9x9\"\ncount = 1\n",
    )
    .unwrap();
    let o = permeq(dir.path(), &["run", "--config", "big.toml", "--out-dir", "o"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error[capacity]"));
}

#[test]
fn train_then_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        r#"
seed = 5
[distribution]
kind = "orbit_uniform"
shape = "2x2"
count = 20
[model]
hidden = [8]
mode = "both"
[train]
iterations = 20
batch_size = 4
eval_every = 10
"#,
    )
    .unwrap();
    let o = permeq(dir.path(), &["train", "--config", "run.toml", "--out-dir", "out"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = std::fs::read_to_string(dir.path().join("out/trace_seed5.csv")).unwrap();
    assert!(trace.starts_with("step,loss,eval_mean,equivariance_dev,wall_seconds\n"));
    assert_eq!(trace.lines().count(), 21);

    let g = permeq(
        dir.path(),
        &[
            "gen",
            "--shape",
            "2x2",
            "--count",
            "4",
            "--seed",
            "1",
            "--out-dir",
            "out",
        ],
    );
    assert!(g.status.success());
    let e = permeq(
        dir.path(),
        &[
            "eval",
            "--checkpoint",
            "out/checkpoint_seed5.json",
            "--games",
            "out/games_uniform_2x2_seed1.json",
        ],
    );
    assert!(e.status.success(), "{}", stderr(&e));
    let v: serde_json::Value = serde_json::from_str(&stdout(&e)).unwrap();
    assert_eq!(v["summary"]["count"], 4);
    assert_eq!(v["concept"], "ne");
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "seed = 1\n[distribution]\nkind = \"uniform\"\nshape = \"2x2\"\ncount = 5\n[model]\nhidden = [4]\n[train]\niterations = 2\n",
    )
    .unwrap();
    let o = permeq(
        dir.path(),
        &["train", "--config", "run.toml", "--seed", "9", "--out-dir", "out"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("out/checkpoint_seed9.json").exists());
}

#[test]
fn run_writes_experiment_reports() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.toml"),
        "output_dir = \"reports\"\n[experiment]\nkind = \"swr\"\neps = [0.1]\n",
    )
    .unwrap();
    let o = permeq(dir.path(), &["run", "--config", "exp.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("swr holds ratio_matches"));
    assert!(dir.path().join("reports/swr_seed0.json").exists());
    assert!(dir.path().join("reports/swr_seed0.csv").exists());
}

#[test]
fn demo_prints_both_strategies() {
    let dir = tempfile::tempdir().unwrap();
    let o = permeq(dir.path(), &["demo"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("both player 0"));
    assert!(out.contains("pe joint"));
    assert!(!out.contains("FAILS"));
}
