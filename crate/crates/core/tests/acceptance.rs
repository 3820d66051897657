//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when a gating criterion fails.
//!
//! `cargo test --test acceptance -- [ids...] [--stretch]` runs a subset;
//! the stretch criterion 7 only runs with `--stretch`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use bosonic_vmc::ansatz::{AnsatzShape, BackflowJastrow};
use bosonic_vmc::cli::commands::{cmd_optimize, OptimizeOptions};
use bosonic_vmc::constructions::{
    build_confinement_cnn, build_gutzwiller_cnn, confinement_direct, gutzwiller_direct, ConfinementSpec, PatchSpec,
};
use bosonic_vmc::estimators::{
    fit_entropy_scaling, fit_scaling_function, renyi2_swap, scaling_function, vscore, CriticalExponents,
    EntropyPoint, LogTerm, ScalingPoint,
};
use bosonic_vmc::fock::FockBasis;
use bosonic_vmc::hamiltonian::{one_body_density_matrix, BoseHubbard, TableAnsatz};
use bosonic_vmc::lattice::Lattice;
use bosonic_vmc::optimizer::{train, SampleBatch, SrConfig, StageConfig, StageParams};
use bosonic_vmc::oracle::{exact_obdm, exact_renyi2, solve};
use bosonic_vmc::sampler::{hop_transition_probability, initial_configuration, run_sampling, Sampler, SamplerConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Criterion = fn() -> Outcome;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let stretch = args.iter().any(|a| a == "--stretch");
    let wanted: Vec<&str> = args.iter().filter(|a| !a.starts_with('-')).map(String::as_str).collect();
    let criteria: [(&str, &str, Criterion, bool); 10] = [
        ("1", "gradient vs finite differences", c1_gradient, true),
        ("2", "estimator exactness with a table ansatz", c2_table_ansatz, true),
        ("3", "detailed balance", c3_detailed_balance, true),
        ("4", "VMC vs ED on a 5-site chain", c4_vmc_vs_ed, true),
        ("5", "appendix constructions", c5_constructions, true),
        ("6", "bare Jastrow on 8x8 at U/J = 16.8", c6_table2_jastrow, true),
        ("7", "stretch: depth improves the V-score on 8x8", c7_stretch, false),
        ("8", "fit recovery", c8_fit_recovery, true),
        ("9", "determinism", c9_determinism, true),
        ("smoke", "one SR step at L = 16, D = 2", smoke_l16, true),
    ];
    let mut failed = 0;
    for (id, name, f, gating) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        if id == "7" && !stretch {
            println!("criterion 7 ({name}): SKIP (stretch, not gating; pass --stretch)");
            continue;
        }
        let t = Instant::now();
        let o = f();
        let secs = t.elapsed().as_secs_f64();
        let label = if id == "smoke" { "smoke test".to_string() } else { format!("criterion {id}") };
        let status = if o.pass { "PASS" } else if gating { "FAIL" } else { "FAIL (not gating)" };
        println!("{label} ({name}): {status} [{secs:.1} s] {}", o.detail);
        if !o.pass && gating {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} gating criteria failed");
        std::process::exit(1);
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Criterion 1: central differences with step 1e-5 on 100 random pairs.
/// Error per pair is `max_k |g_k - fd_k| / max_k |fd_k|`.
fn c1_gradient() -> Outcome {
    let lattice = Lattice::square(3).unwrap();
    let mut r = rng(1);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let mut worst: f64 = 0.0;
    for depth in [2, 4] {
        let model = BackflowJastrow::new(lattice.clone(), 9, AnsatzShape::backflow(depth, 4, 1)).unwrap();
        for _ in 0..50 {
            let mut params = model.init_params(&mut r, None).unwrap();
            params.iter_mut().for_each(|p| *p += noise.sample(&mut r));
            let occ = initial_configuration(9, 9, &mut r);
            let grad = model.log_grad(&params, &occ).unwrap();
            let h = 1e-5;
            let mut num = 0.0f64;
            let mut den = 0.0f64;
            let mut p = params.clone();
            for k in 0..params.len() {
                p[k] = params[k] + h;
                let up = model.log_psi(&p, &occ).unwrap();
                p[k] = params[k] - h;
                let dn = model.log_psi(&p, &occ).unwrap();
                p[k] = params[k];
                let fd = (up - dn) / (2.0 * h);
                num = num.max((grad[k] - fd).abs());
                den = den.max(fd.abs());
            }
            worst = worst.max(num / den);
        }
    }
    outcome(worst < 1e-6, format!("max relative error {worst:.2e} over 100 pairs (limit 1e-6)"))
}

/// Ground state of the periodic 4-site chain at unit filling, U/J = 4.
fn table_ground_state() -> (BoseHubbard, TableAnsatz, bosonic_vmc::oracle::EdResult) {
    let h = BoseHubbard::new(Lattice::chain(4).unwrap(), 1.0, 4.0).unwrap();
    let (_, ed) = solve(&h, 4).unwrap();
    let table = TableAnsatz::from_amplitudes(ed.basis.clone(), &ed.ground_vector).unwrap();
    (h, table, ed)
}

fn c2_table_ansatz() -> Outcome {
    let (h, table, ed) = table_ground_state();
    let lattice = h.lattice().clone();
    let basis = &ed.basis;
    let probs: Vec<f64> = ed.ground_vector.iter().map(|x| x * x).collect();
    let mut notes = Vec::new();

    // (a)
    let e_loc: Vec<f64> = basis.iter().map(|occ| h.local_energy(&table, occ).unwrap()).collect();
    let mean: f64 = probs.iter().zip(&e_loc).map(|(p, e)| p * e).sum();
    let var: f64 = probs.iter().zip(&e_loc).map(|(p, e)| p * (e - mean).powi(2)).sum();
    let pass_a = var < 1e-18;
    notes.push(format!("(a) Var = {var:.1e} {}", mark(pass_a)));

    // (b) 16 chains x (100 + 6250 x 10) sweeps, every 10th kept.
    let cfg = SamplerConfig {
        n_chains: 16,
        burn_in_sweeps: 100,
        sweeps_per_sample: 10,
        samples_total: 100_000,
        seed: 2,
        warm_start_sweeps: 0,
        born_exponent: 1.0,
    };
    let set = run_sampling(&cfg, &table, &lattice, 4, None).unwrap();
    let mut counts = vec![0.0; basis.dim()];
    for occ in &set.configs {
        counts[basis.index_of(occ).unwrap()] += 1.0;
    }
    let n = set.len() as f64;
    // Bins with fewer than 5 expected counts are pooled.
    let (mut chi2, mut bins, mut pooled_o, mut pooled_e) = (0.0, 0usize, 0.0, 0.0);
    for (o, p) in counts.iter().zip(&probs) {
        let e = n * p;
        if e < 5.0 {
            pooled_o += o;
            pooled_e += e;
        } else {
            chi2 += (o - e).powi(2) / e;
            bins += 1;
        }
    }
    if pooled_e > 0.0 {
        chi2 += (pooled_o - pooled_e).powi(2) / pooled_e;
        bins += 1;
    }
    let p_value = ChiSquared::new((bins - 1) as f64).unwrap().sf(chi2);
    let pass_b = p_value > 0.01;
    notes.push(format!("(b) chi2 = {chi2:.1}, {} dof, p = {p_value:.3} {}", bins - 1, mark(pass_b)));

    // (c)
    let a_sites = lattice.half_partition();
    let exact_s2 = exact_renyi2(&ed, &a_sites).unwrap();
    let swap_cfg = SamplerConfig {
        n_chains: 16,
        burn_in_sweeps: 100,
        sweeps_per_sample: 2,
        samples_total: 1 << 16,
        seed: 3,
        warm_start_sweeps: 0,
        born_exponent: 1.0,
    };
    let s2 = renyi2_swap(&table, &lattice, 4, &a_sites, &swap_cfg).unwrap();
    let pass_c = (s2.s2 - exact_s2).abs() <= 3.0 * s2.error;
    notes.push(format!(
        "(c) S2 = {:.4} +- {:.4} vs {exact_s2:.4} {}",
        s2.s2,
        s2.error,
        mark(pass_c)
    ));

    // (d)
    let est = one_body_density_matrix(&lattice, &table, &set.configs, set.n_chains).unwrap();
    let exact = exact_obdm(&lattice, basis, &ed.ground_vector);
    let ns = lattice.n_sites();
    let mut worst_z: f64 = 0.0;
    for (k, e) in est.by_displacement.iter().enumerate() {
        let v = lattice.displacement(0, k);
        let g: f64 = (0..ns).map(|j| exact[lattice.translate(j, v) * ns + j]).sum::<f64>() / ns as f64;
        let z = if e.error > 0.0 { (e.mean - g).abs() / e.error } else if (e.mean - g).abs() < 1e-12 { 0.0 } else { f64::INFINITY };
        worst_z = worst_z.max(z);
    }
    let pass_d = worst_z <= 3.0;
    notes.push(format!("(d) OBDM max deviation {worst_z:.2} sigma {}", mark(pass_d)));

    outcome(pass_a && pass_b && pass_c && pass_d, notes.join("; "))
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

fn c3_detailed_balance() -> Outcome {
    let lattice = Lattice::chain(4).unwrap();
    let basis = FockBasis::new(4, 2).unwrap();
    let mut r = rng(4);
    let amps: Vec<f64> = (0..basis.dim()).map(|_| r.random_range(0.1..1.0)).collect();
    let z: f64 = amps.iter().map(|a| a * a).sum();
    let table = TableAnsatz::from_amplitudes(basis.clone(), &amps).unwrap();
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for (k, occ) in basis.iter().enumerate() {
        for src in 0..4 {
            if occ[src] == 0 {
                continue;
            }
            let mut dsts = lattice.neighbors(src).to_vec();
            dsts.sort_unstable();
            dsts.dedup();
            for dst in dsts {
                let mut next = occ.to_vec();
                next[src] -= 1;
                next[dst] += 1;
                let k2 = basis.index_of(&next).unwrap();
                let forward = amps[k] * amps[k] / z * hop_transition_probability(&table, &lattice, occ, src, dst);
                let backward = amps[k2] * amps[k2] / z * hop_transition_probability(&table, &lattice, &next, dst, src);
                worst = worst.max((forward - backward).abs());
                pairs += 1;
            }
        }
    }
    outcome(worst < 1e-12, format!("{pairs} one-hop pairs, max |flow imbalance| {worst:.1e}"))
}

/// Exact `<H>` and variance of a trained model over the full basis.
fn exact_energy(model: &BackflowJastrow, params: &[f64], h: &BoseHubbard, basis: &FockBasis) -> (f64, f64) {
    let b = SampleBatch::exact(model, params, h, basis).unwrap();
    (b.energy_mean(), b.energy_variance())
}

fn c4_vmc_vs_ed() -> Outcome {
    let lattice = Lattice::chain(5).unwrap();
    let basis = FockBasis::new(5, 5).unwrap();
    let mut pass = true;
    let mut notes = Vec::new();
    for u in [4.0, 8.0, 20.0] {
        let t = Instant::now();
        let h = BoseHubbard::new(lattice.clone(), 1.0, u).unwrap();
        let (_, ed) = solve(&h, 5).unwrap();
        let model = BackflowJastrow::new(lattice.clone(), 5, AnsatzShape::backflow(2, 4, 1)).unwrap();
        let params = model.init_params(&mut rng(5), None).unwrap();
        let sampler_cfg = SamplerConfig {
            n_chains: 16,
            burn_in_sweeps: 100,
            sweeps_per_sample: 1,
            samples_total: 4096,
            seed: 6,
            warm_start_sweeps: 5,
            born_exponent: 0.5,
        };
        let mut sampler = Sampler::new(sampler_cfg, &model.bind(&params).unwrap(), 5, None).unwrap();
        let sr = c4_schedule();
        let result = train(&model, &h, params, &mut sampler, &sr, 0, &mut ()).unwrap();
        let (e, var) = exact_energy(&model, &result.params, &h, &basis);
        let rel = ((e - ed.ground_energy) / ed.ground_energy).abs();
        let v = vscore(e, var, h.mean_field_energy(1.0), 5).unwrap_or(f64::NAN);
        let ok = rel < 1e-3 && v < 1e-3;
        pass &= ok;
        notes.push(format!(
            "U/J={u}: rel err {rel:.1e}, vscore {v:.1e} {} ({:.0} s)",
            mark(ok),
            t.elapsed().as_secs_f64()
        ));
    }
    outcome(pass, notes.join("; "))
}

fn c4_schedule() -> SrConfig {
    SrConfig {
        learning_rate: 1e-2,
        stages: vec![
            StageConfig {
                params: StageParams::Jastrow,
                steps: 300,
                diag_shift: 5e-4,
            },
            StageConfig {
                params: StageParams::All,
                steps: 1500,
                diag_shift: 1e-3,
            },
        ],
        ..SrConfig::default()
    }
}

fn c5_constructions() -> Outcome {
    let l3 = Lattice::square(3).unwrap();
    let patches = [
        PatchSpec {
            offsets: vec![[0, 0]],
            targets: vec![2.0],
            strength: 1.3,
            delta_x: 3.0,
            center: 0.0,
            xi: 0.0,
        },
        PatchSpec {
            offsets: vec![[0, 0], [1, 0]],
            targets: vec![-1.0, 1.0],
            strength: -0.8,
            delta_x: 3.5,
            center: 1.0,
            xi: 2.0,
        },
        PatchSpec {
            offsets: vec![[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1]],
            targets: vec![-1.0, 0.0, 0.0, 0.0, 0.0],
            strength: 0.45,
            delta_x: 2.5,
            center: 1.0,
            xi: 1.5,
        },
    ];
    let mut worst_g: f64 = 0.0;
    for p in &patches {
        let cnn = build_gutzwiller_cnn(p).unwrap();
        let mut occ = vec![0u32; 9];
        for code in 0..3usize.pow(9) {
            let mut c = code;
            for o in occ.iter_mut() {
                *o = (c % 3) as u32;
                c /= 3;
            }
            worst_g = worst_g.max((gutzwiller_direct(p, &l3, &occ) - cnn.evaluate(&l3, &occ)).abs());
        }
    }
    let l5 = Lattice::square(5).unwrap();
    let mut worst_c: f64 = 0.0;
    let mut configs = 0;
    for potential in [vec![-0.9], vec![-0.9, -0.35]] {
        let spec = ConfinementSpec { potential };
        let cnn = build_confinement_cnn(&spec, &l5).unwrap();
        for hole in 0..25 {
            for doublon in 0..25 {
                if hole == doublon || l5.distance(hole, doublon) as usize > spec.range() {
                    continue;
                }
                let mut occ = vec![1u32; 25];
                occ[hole] = 0;
                occ[doublon] = 2;
                let d = confinement_direct(&spec, &l5, &occ).unwrap();
                worst_c = worst_c.max((d - cnn.evaluate(&l5, &occ)).abs());
                configs += 1;
            }
        }
    }
    outcome(
        worst_g < 1e-10 && worst_c < 1e-10,
        format!(
            "Gutzwiller: 3 patches x 3^9 configs, max |diff| {worst_g:.1e}; confinement: {configs} single pairs (R = 1, 2), max |diff| {worst_c:.1e}"
        ),
    )
}

fn c6_table2_jastrow() -> Outcome {
    let lattice = Lattice::square(8).unwrap();
    let h = BoseHubbard::new(lattice.clone(), 1.0, 16.8).unwrap();
    let model = BackflowJastrow::new(lattice.clone(), 64, AnsatzShape::bare_jastrow()).unwrap();
    let params = vec![0.0; model.n_params()];
    let sampler_cfg = SamplerConfig {
        seed: 7,
        ..SamplerConfig::default()
    };
    let mut sampler = Sampler::new(sampler_cfg.clone(), &model.bind(&params).unwrap(), 64, None).unwrap();
    let sr = SrConfig {
        stages: vec![StageConfig {
            params: StageParams::Jastrow,
            steps: 2000,
            diag_shift: 5e-4,
        }],
        ..SrConfig::default()
    };
    let result = train(&model, &h, params, &mut sampler, &sr, 0, &mut ()).unwrap();
    // Fresh evaluation with persistent chains.
    let wf = model.bind(&result.params).unwrap();
    let set = sampler.sample(&wf, &lattice).unwrap();
    let batch = SampleBatch::from_samples(&model, &result.params, &h, &set).unwrap();
    let e = batch.energy_estimate();
    let per_site = e.mean / 64.0;
    let v = vscore(e.mean, e.variance, h.mean_field_energy(1.0), 64).unwrap_or(f64::NAN);
    let e_ok = (per_site + 0.452).abs() <= 0.010;
    let v_ok = v > 8.4e-2 / 2.0 && v < 8.4e-2 * 2.0;
    outcome(
        e_ok && v_ok,
        format!(
            "E/JL^2 = {per_site:.4} +- {:.4} (target -0.452 +- 0.010) {}; vscore = {v:.3e} (target 8.4e-2 within x2) {}",
            e.error / 64.0,
            mark(e_ok),
            mark(v_ok)
        ),
    )
}

fn c7_stretch() -> Outcome {
    let lattice = Lattice::square(8).unwrap();
    let h = BoseHubbard::new(lattice.clone(), 1.0, 8.5).unwrap();
    let mut scores = Vec::new();
    let mut energies = Vec::new();
    for depth in [0, 2, 4] {
        let shape = if depth == 0 {
            AnsatzShape::bare_jastrow()
        } else {
            AnsatzShape::backflow(depth, 4, 1)
        };
        let model = BackflowJastrow::new(lattice.clone(), 64, shape).unwrap();
        let params = model.init_params(&mut rng(8), None).unwrap();
        let cfg = SamplerConfig {
            samples_total: 2048,
            seed: 9,
            ..SamplerConfig::default()
        };
        let mut sampler = Sampler::new(cfg, &model.bind(&params).unwrap(), 64, None).unwrap();
        let sr = SrConfig {
            learning_rate: 1e-2,
            stages: vec![
                StageConfig {
                    params: StageParams::Jastrow,
                    steps: 300,
                    diag_shift: 5e-4,
                },
                StageConfig {
                    params: StageParams::All,
                    steps: if depth == 0 { 0 } else { 300 },
                    diag_shift: 1e-3,
                },
            ],
            ..SrConfig::default()
        };
        let result = train(&model, &h, params, &mut sampler, &sr, 0, &mut ()).unwrap();
        let set = sampler.sample(&model.bind(&result.params).unwrap(), &lattice).unwrap();
        let e = SampleBatch::from_samples(&model, &result.params, &h, &set).unwrap().energy_estimate();
        energies.push(e.mean / 64.0);
        scores.push(vscore(e.mean, e.variance, h.mean_field_energy(1.0), 64).unwrap_or(f64::NAN));
        eprintln!(
            "  criterion 7: D = {depth}: E/JL^2 = {:.4}, vscore = {:.3e}",
            energies[energies.len() - 1],
            scores[scores.len() - 1]
        );
    }
    let monotone = scores.windows(2).all(|w| w[1] < w[0]);
    outcome(
        monotone,
        format!(
            "reduced budget (alpha = 4, 2048 samples, 600 steps): E/JL^2 = {energies:?} for D = 0, 2, 4 (paper -1.5447 at full scale), vscore = {scores:?}"
        ),
    )
}

fn c8_fit_recovery() -> Outcome {
    let mut r = rng(10);
    let noise = Normal::new(0.0, 1e-3).unwrap();
    let exps = CriticalExponents::default();
    let (a, b, c) = (50.0, 0.06, 0.7);
    let mut points = Vec::new();
    for l in [8.0f64, 12.0, 16.0, 20.0] {
        for k in 0..13 {
            let g = 0.03 + 0.005 * k as f64;
            let y = scaling_function(a, b, c, g) / l.powf(exps.beta_over_nu);
            points.push(ScalingPoint {
                l,
                coupling: g,
                value: y * (1.0 + noise.sample(&mut r)),
                error: 1e-3 * y,
            });
        }
    }
    let fit = fit_scaling_function(&points, exps).unwrap();
    let mut worst_scaling: f64 = 0.0;
    for f in fit.curves.iter().chain(std::iter::once(&fit.pooled)) {
        for (got, want) in [(f.a, a), (f.b, b), (f.c, c)] {
            worst_scaling = worst_scaling.max(((got - want) / want).abs());
        }
    }

    let (ea, eb, ec) = (0.35, 0.5, 0.8);
    let entropy: Vec<EntropyPoint> = (2..=64)
        .map(|l| {
            let l = l as f64;
            let s = ea * l + eb * l.ln() + ec;
            EntropyPoint {
                l,
                s2: s * (1.0 + noise.sample(&mut r)),
                error: 1e-3 * s,
            }
        })
        .collect();
    let ef = fit_entropy_scaling(&entropy, LogTerm::Free).unwrap();
    let dev = [((ef.a - ea) / ea).abs(), ((ef.b - eb) / eb).abs(), ((ef.c - ec) / ec).abs()];
    let worst_entropy = dev.iter().copied().fold(0.0, f64::max);
    outcome(
        worst_scaling < 0.01 && worst_entropy < 0.01,
        format!(
            "scaling (a, b, c) max relative deviation {worst_scaling:.2e} over 4 curves + pooled; entropy (a, b, c) deviations {:.1e}, {:.1e}, {:.1e}",
            dev[0], dev[1], dev[2]
        ),
    )
}

const DETERMINISM_CONFIG: &str = r#"
[model]
lattice = "square"
size = 3
interaction = 6.0

[ansatz]
depth = 2
channels = 3
kernel_radius = 1

[sampler]
n_chains = 4
burn_in_sweeps = 10
sweeps_per_sample = 1
samples_total = 512
seed = 11

[optimizer]
learning_rate = 0.01
solver = "auto"
cg_tolerance = 1e-10
cg_max_iter = 500
divergence_window = 0
divergence_factor = 0.5

[[optimizer.stages]]
params = "jastrow"
steps = 5
diag_shift = 5e-4

[[optimizer.stages]]
params = "all"
steps = 10
diag_shift = 1e-3

[output]
directory = "unused"
checkpoint_interval = 5
"#;

fn c9_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, DETERMINISM_CONFIG).unwrap();
    let mut traces = Vec::new();
    let mut ckpts = Vec::new();
    for name in ["first", "second"] {
        let out = dir.path().join(name);
        cmd_optimize(&OptimizeOptions {
            config: cfg.clone(),
            output: Some(out.clone()),
            resume: false,
        })
        .unwrap();
        let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
        // wall_time is the last column.
        traces.push(trace.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect::<Vec<_>>());
        ckpts.push(std::fs::read(out.join("checkpoints/step_00000014.ckpt")).unwrap());
    }
    let same = traces[0] == traces[1] && ckpts[0] == ckpts[1];
    outcome(
        same,
        format!(
            "{} trace rows and final parameters {} bit for bit (wall_time excluded)",
            traces[0].len() - 1,
            if same { "identical" } else { "DIFFER" }
        ),
    )
}

fn smoke_l16() -> Outcome {
    let lattice = Lattice::square(16).unwrap();
    let h = BoseHubbard::new(lattice.clone(), 1.0, 16.8).unwrap();
    let model = BackflowJastrow::new(lattice.clone(), 256, AnsatzShape::backflow(2, 12, 1)).unwrap();
    let params = model.init_params(&mut rng(12), None).unwrap();
    let cfg = SamplerConfig {
        n_chains: 8,
        burn_in_sweeps: 5,
        sweeps_per_sample: 1,
        samples_total: 256,
        seed: 13,
        warm_start_sweeps: 1,
        born_exponent: 1.0,
    };
    let mut sampler = Sampler::new(cfg, &model.bind(&params).unwrap(), 256, None).unwrap();
    let sr = SrConfig {
        stages: vec![StageConfig {
            params: StageParams::All,
            steps: 1,
            diag_shift: 1e-3,
        }],
        ..SrConfig::default()
    };
    match train(&model, &h, params, &mut sampler, &sr, 0, &mut ()) {
        Ok(r) => {
            let row = &r.trace[0];
            let finite = r.params.iter().all(|p| p.is_finite());
            outcome(
                finite && row.energy.is_finite(),
                format!(
                    "{} parameters, E/JL^2 = {:.4}, solver residual {:.1e}",
                    model.n_params(),
                    row.energy / 256.0,
                    row.solver_residual
                ),
            )
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}
