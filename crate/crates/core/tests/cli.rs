use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bosonic_vmc::cli::commands::{cmd_optimize, file_sha256, parse_trace_row, OptimizeOptions};
use bosonic_vmc::cli::exit;

const BIN: &str = env!("CARGO_BIN_EXE_bosonic-vmc");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

const SMOKE: &str = r#"
[model]
lattice = "chain"
size = 4
interaction = 4.0

[ansatz]
depth = 2
channels = 2
kernel_radius = 1

[sampler]
n_chains = 4
burn_in_sweeps = 20
sweeps_per_sample = 1
samples_total = 256
seed = 5

[optimizer]
learning_rate = 0.02
solver = "auto"
cg_tolerance = 1e-10
cg_max_iter = 500
divergence_window = 0
divergence_factor = 0.5

[[optimizer.stages]]
params = "jastrow"
steps = 4
diag_shift = 1e-3

[[optimizer.stages]]
params = "all"
steps = 4
diag_shift = 1e-3

[output]
directory = "unused"
checkpoint_interval = 3
"#;

#[test]
fn ed_two_sites_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ed.toml");
    fs::write(&cfg, "[model]\nlattice = \"open_chain\"\nsize = 2\nn_particles = 2\nhopping = 1.0\ninteraction = 3.0\n").unwrap();
    let out = dir.path().join("ed.json");
    let o = run(&["ed", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    let (u, j) = (3.0f64, 1.0f64);
    let exact = (u - (u * u + 16.0 * j * j).sqrt()) / 2.0;
    assert!((r["ground_energy"].as_f64().unwrap() - exact).abs() < 1e-12);
    assert_eq!(r["dimension"].as_u64().unwrap(), 3);
}

#[test]
fn fit_recovers_bundled_synthetic_scaling() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit.json");
    let input = data("scaling_synthetic.csv");
    let before = file_sha256(&input).unwrap();
    let o = run(&["fit", "scaling", input.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    let pooled = &r["pooled"];
    for (key, planted) in [("a", 50.0), ("b", 0.06), ("c", 0.7)] {
        let v = pooled[key].as_f64().unwrap();
        assert!(((v - planted) / planted).abs() < 0.01, "{key} = {v}");
    }
    assert_eq!(r["curves"].as_array().unwrap().len(), 4);
    assert_eq!(file_sha256(&input).unwrap(), before);

    let collapse = dir.path().join("collapse.json");
    let o = run(&["fit", "collapse", input.to_str().unwrap(), "-o", collapse.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(json(&collapse)["quality"].as_f64().unwrap().is_finite());

    let entropy = dir.path().join("entropy.json");
    let input = data("entropy_synthetic.csv");
    let o = run(&["fit", "entropy", input.to_str().unwrap(), "-o", entropy.to_str().unwrap()]);
    assert!(o.status.success());
    let a = json(&entropy)["a"].as_f64().unwrap();
    assert!((a - 0.35).abs() / 0.35 < 0.01);
}

#[test]
fn malformed_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    for (text, code) in [
        ("[model\nsize = 4", exit::CONFIG),
        ("[model]\nsize = 4\ninteraction = 1.0\n[ansatz]\ndepth = 3\nchannels = 2\nkernel_radius = 1\n", exit::CONFIG),
        ("[model]\nsize = 4\ninteraction = 1.0\nfilling = 0.3\n", exit::CONFIG),
        ("mode = \"ed\"\n[model]\nsize = 4\ninteraction = 1.0\n", exit::CONFIG),
    ] {
        let cfg = dir.path().join("bad.toml");
        fs::write(&cfg, text).unwrap();
        let o = run(&["optimize", cfg.to_str().unwrap(), "--output", run_dir.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(code), "{text}");
        assert!(!run_dir.exists());
    }
}

#[test]
fn distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    assert_eq!(run(&["ed", missing.to_str().unwrap()]).status.code(), Some(exit::MISSING_FILE));

    let big = dir.path().join("big.toml");
    fs::write(&big, "[model]\nsize = 6\ninteraction = 1.0\n").unwrap();
    let out = dir.path().join("big.json");
    let o = run(&["ed", big.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::DIMENSION));
    assert!(!out.exists());

    assert_eq!(run(&["frobnicate"]).status.code(), Some(exit::USAGE));
    let codes = [
        exit::CONFIG,
        exit::MISSING_FILE,
        exit::IO,
        exit::DIMENSION,
        exit::DIVERGENCE,
        exit::CHECKPOINT,
        exit::NUMERICAL,
    ];
    for (k, a) in codes.iter().enumerate() {
        assert!(codes[k + 1..].iter().all(|b| a != b));
    }
}

#[test]
fn defaults_parse_back() {
    let o = run(&["defaults"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let cfg = bosonic_vmc::cli::config::ExperimentConfig::from_toml(&text).unwrap();
    assert_eq!(cfg.sampler.samples_total, 8192);
    assert_eq!(cfg.optimizer.learning_rate, 1e-3);
}

#[test]
fn optimize_smoke_writes_artifacts_and_measures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("smoke.toml");
    fs::write(&cfg, SMOKE).unwrap();
    let before = file_sha256(&cfg).unwrap();
    let run_dir = dir.path().join("run");
    let o = run(&["optimize", cfg.to_str().unwrap(), "--output", run_dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(file_sha256(&cfg).unwrap(), before);
    assert_eq!(fs::read_to_string(run_dir.join("config.toml")).unwrap(), SMOKE);
    let manifest = json(&run_dir.join("manifest.json"));
    assert_eq!(manifest["config_sha256"].as_str().unwrap(), before);
    assert_eq!(manifest["seed"].as_u64().unwrap(), 5);
    let trace = fs::read_to_string(run_dir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 9);
    let summary = json(&run_dir.join("summary.json"));
    assert_eq!(summary["steps"].as_u64().unwrap(), 8);
    for stem in ["step_00000002", "step_00000005", "step_00000007"] {
        assert!(run_dir.join("checkpoints").join(format!("{stem}.ckpt")).exists());
        assert!(run_dir.join("checkpoints").join(format!("{stem}.chains.json")).exists());
    }

    // A second run into the same directory is refused.
    let o = run(&["optimize", cfg.to_str().unwrap(), "--output", run_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(exit::CONFIG));

    let out = dir.path().join("measure.json");
    let ckpt = run_dir.join("checkpoints/step_00000007.ckpt");
    let o = run(&["measure", cfg.to_str().unwrap(), ckpt.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&out);
    let rho0 = m["condensate_fraction"]["mean"].as_f64().unwrap();
    assert!(rho0 > 0.0 && rho0 <= 1.0 + 1e-12);
    assert_eq!(m["obdm"].as_array().unwrap().len(), 4);
    assert!(m["renyi2_half"].is_null());
}

fn comparable(trace: &str) -> Vec<String> {
    // Everything except the wall-clock column.
    trace
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect()
}

#[test]
fn resume_matches_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("smoke.toml");
    fs::write(&cfg, SMOKE).unwrap();
    let full = dir.path().join("full");
    let part = dir.path().join("part");
    let opts = |d: &Path, resume| OptimizeOptions {
        config: cfg.clone(),
        output: Some(d.to_path_buf()),
        resume,
    };
    cmd_optimize(&opts(&full, false)).unwrap();
    cmd_optimize(&opts(&part, false)).unwrap();
    // Pretend the run died after step 2: drop the later checkpoints.
    for stem in ["step_00000005", "step_00000007"] {
        fs::remove_file(part.join("checkpoints").join(format!("{stem}.ckpt"))).unwrap();
        fs::remove_file(part.join("checkpoints").join(format!("{stem}.chains.json"))).unwrap();
    }
    cmd_optimize(&opts(&part, true)).unwrap();
    let a = fs::read_to_string(full.join("trace.csv")).unwrap();
    let b = fs::read_to_string(part.join("trace.csv")).unwrap();
    assert_eq!(comparable(&a), comparable(&b));
    let next_full = parse_trace_row(a.lines().nth(4).unwrap()).unwrap();
    let next_part = parse_trace_row(b.lines().nth(4).unwrap()).unwrap();
    assert_eq!(next_full.step, 3);
    assert_eq!(next_full.energy.to_bits(), next_part.energy.to_bits());
    assert_eq!(json(&part.join("manifest.json"))["resumed_at"][0].as_u64(), Some(3));
    assert_eq!(
        fs::read(full.join("checkpoints/step_00000007.ckpt")).unwrap(),
        fs::read(part.join("checkpoints/step_00000007.ckpt")).unwrap()
    );

    // Resuming with an edited configuration is refused.
    fs::write(&cfg, SMOKE.replace("seed = 5", "seed = 6")).unwrap();
    assert!(cmd_optimize(&opts(&part, true)).is_err());
}
