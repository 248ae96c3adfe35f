//! End-to-end runs of the `imlsbm` binary and the detection pipeline.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use imlsbm::{balanced_assignment, sample_imlsbm, ModelParams};
use imlsbm_cli::experiment::RUNS_HEADER;
use imlsbm_cli::pipeline::{detect, losses, Method, ParamsSource, PipelineOptions};

fn imlsbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imlsbm")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn generate(dir: &Path, seed: &str) {
    let out = imlsbm(&[
        "generate", "--n", "60", "--layers", "6", "--c", "4", "--replications", "2", "--seed", seed, "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generate_is_byte_identical_for_equal_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    generate(&a, "7");
    generate(&b, "7");
    generate(&c, "8");
    for name in ["instance_0000.txt", "instance_0001.txt"] {
        let x = fs::read(a.join(name)).unwrap();
        assert_eq!(x, fs::read(b.join(name)).unwrap(), "{name}");
        assert_ne!(x, fs::read(c.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn detect_rate_and_estimate_on_a_generated_instance() {
    let tmp = tempfile::tempdir().unwrap();
    generate(tmp.path(), "3");
    let inst = tmp.path().join("instance_0000.txt");
    let inst = inst.to_str().unwrap();

    for method in ["spectral", "generic", "provable", "coreg"] {
        let out = imlsbm(&["detect", inst, "--method", method, "--params", "estimated"]);
        assert!(out.status.success(), "{method}: {}", String::from_utf8_lossy(&out.stderr));
        let text = stdout(&out);
        assert!(text.starts_with(&format!("method {method}\n")), "{text}");
        let loss: f64 = text
            .lines()
            .find_map(|l| l.strip_prefix("loss_global "))
            .expect("loss_global line")
            .parse()
            .unwrap();
        assert!((0.0..=0.5).contains(&loss));
    }

    let rate = imlsbm(&["rate", inst]);
    assert!(rate.status.success());
    assert!(stdout(&rate).lines().any(|l| l.starts_with("global.min_snr = ")));

    let est = imlsbm(&["estimate", inst]);
    assert!(est.status.success());
    let text = stdout(&est);
    assert!(text.starts_with("layer,p,q,p_tilde,q_tilde,p_moment,p_plugin,q_plugin,swapped,fallback\n"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn exit_codes() {
    let out = imlsbm(&["detect", "missing.txt", "--method", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = imlsbm(&["detect", "does/not/exist.txt"]);
    assert_eq!(out.status.code(), Some(3));
    let out = imlsbm(&["--help"]);
    assert_eq!(out.status.code(), Some(0));

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "scenario = \"compare-algs\"\nunknown_key = 1\n").unwrap();
    let out = imlsbm(&["experiment", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.toml");
    let out_dir = tmp.path().join("out");
    fs::write(
        &cfg,
        format!(
            "scenario = \"baseline-compare\"\nn = 80\nlayers = 10\nc = [3.0, 5.0]\nreplications = 2\nout = \"{}\"\n",
            out_dir.display()
        ),
    )
    .unwrap();
    let out = imlsbm(&["experiment", "--config", cfg.to_str().unwrap(), "--jobs", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let runs = fs::read_to_string(out_dir.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().next().unwrap(), RUNS_HEADER);
    // 2 c values x 2 replications x 2 methods x 3 layer groups; L = 10 gives
    // 3 weak, 6 intermediate and 1 strong layer.
    assert_eq!(runs.lines().count() - 1, 2 * 2 * 2 * 3);
    for name in ["summary.csv", "plot.csv", "config.toml"] {
        assert!(out_dir.join(name).is_file(), "{name}");
    }
    assert!(!out_dir.join("failures.csv").exists());
}

#[test]
fn coreg_on_one_layer_matches_spectral_clustering() {
    for (seed, (p, q)) in [(1u64, (0.1, 0.04)), (2, (0.2, 0.05)), (3, (0.08, 0.03))] {
        let n = 300;
        let params = ModelParams::new(n, 0.0, vec![p], vec![q]).unwrap();
        let record = sample_imlsbm(&params, &balanced_assignment(n).unwrap(), seed).unwrap();
        let opts = PipelineOptions::new(ParamsSource::True, 0.0, seed);
        let spectral = detect(&record, Method::Spectral, &opts).unwrap();
        let coreg = detect(&record, Method::Coreg, &opts).unwrap();
        let a = losses(&record, &spectral.result).unwrap().global;
        let b = losses(&record, &coreg.result).unwrap().global;
        assert_eq!(a, b, "seed {seed}: spectral {a} vs coreg {b}");
    }
}
