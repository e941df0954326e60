//! Acceptance criteria for the simulator, preprocessing, network and
//! diagnosis pipeline. Every test prints one `PASS` / `FAIL` line before
//! asserting; run with `--nocapture` to see them.

mod support;

use std::sync::OnceLock;
use std::time::Instant;

use pwrdiag::pipeline::{diagnose, evaluate, train_diagnoser, DiagnoserConfig, DiagnosisModel, TargetScaler};
use pwrdiag::plantsim::{
    channel_index, generate_corpus, run_scenario, steady_values, reference_scenarios, write_corpus_csv, FaultKind,
    PlantConfig, ScenarioSpec,
};
use pwrdiag::preprocess::{matrix_from_rows, Normalizer, PcaModel, DEFAULT_CUTOFF};
use pwrdiag::rbfn::{solve_output_weights, train, RbfnConfig, RbfnModel, StopReason};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::*;

fn verdict(name: &str, ok: bool, detail: impl AsRef<str>) {
    println!("{} {name}: {}", if ok { "PASS" } else { "FAIL" }, detail.as_ref());
    assert!(ok, "{name}: {}", detail.as_ref());
}

struct Trained {
    model: DiagnosisModel,
    wall_s: f64,
}

/// Reference corpus (six runs, 5446 frames, noise 0.01, seed 0) and the
/// model trained on it with goal 0.04, spread 1.0, at most 400 neurons.
fn reference() -> &'static Trained {
    static T: OnceLock<Trained> = OnceLock::new();
    T.get_or_init(|| {
        let start = Instant::now();
        let corpus = generate_corpus(&reference_scenarios(5446, 0.01, 0), &PlantConfig::default()).unwrap();
        assert_eq!(corpus.len(), 5446);
        let cfg = DiagnoserConfig {
            rbfn: RbfnConfig { mse_goal: 0.04, spread: 1.0, max_neurons: 400, ..RbfnConfig::default() },
            ..DiagnoserConfig::default()
        };
        let model = train_diagnoser(&corpus, &cfg).unwrap();
        Trained { model, wall_s: start.elapsed().as_secs_f64() }
    })
}

#[test]
fn end_to_end_training() {
    let t = reference();
    let tr = &t.model.training;
    let mse = t.model.metrics.splits["train"].mse;
    let ok = tr.stop_reason == StopReason::GoalMet && mse <= 0.04 && t.wall_s <= 60.0;
    verdict(
        "end-to-end training",
        ok,
        format!(
            "stop {:?}, train mse {mse:.5} (<= 0.04), {} neurons, wall {:.2} s (<= 60)",
            tr.stop_reason,
            t.model.network.hidden_count(),
            t.wall_s
        ),
    );
}

#[test]
fn unlabelled_rupture_windows() {
    let model = &reference().model;
    let cases = [(FaultKind::SgtrA, 40.0, 1), (FaultKind::SgtrB, 40.0, 2), (FaultKind::SgtrA, 50.0, 1), (FaultKind::SgtrB, 50.0, 2)];
    let mut ok = true;
    let mut lines = Vec::new();
    for (i, &(kind, sev, loc)) in cases.iter().enumerate() {
        let s = ScenarioSpec::new(kind, sev).with_steps(1000).with_noise(0.01).with_seed(10_000 + i as u64);
        let frames = run_scenario(&s, &PlantConfig::default()).unwrap().frames;
        let d = diagnose(model, &frames).unwrap();
        let rms = pwrdiag::pipeline::case_rms(&d.raw_output, &[sev, f64::from(loc)]);
        let case_ok = (d.predicted_size - sev).abs() <= 2.0 && d.predicted_location == loc && rms <= 0.15;
        ok &= case_ok;
        lines.push(format!(
            "{kind:?} {sev}%: output ({:.2}, {:.2}) -> ({:.2}, {}), rms {rms:.3} [{}]",
            d.raw_output[0],
            d.raw_output[1],
            d.predicted_size,
            d.predicted_location,
            if case_ok { "ok" } else { "miss" }
        ));
    }
    verdict("unlabelled rupture windows", ok, lines.join("; "));
}

#[test]
fn regression_quality() {
    let m = &reference().model.metrics;
    let rs: Vec<(String, f64)> = ["train", "val", "test"].iter().map(|s| (s.to_string(), m.splits[*s].regression_r)).collect();
    let ok = rs.iter().all(|(_, r)| *r >= 0.95);
    let detail: Vec<String> = rs.iter().map(|(s, r)| format!("{s} R {r:.4}")).collect();
    verdict("regression quality", ok, format!("{} (each >= 0.95)", detail.join(", ")));
}

fn same_up_to_sign(a: &[f64], b: &[f64]) -> f64 {
    let plus = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let minus = a.iter().zip(b).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
    plus.min(minus)
}

#[test]
fn pca_oracle_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_loading, mut worst_identity, mut worst_ortho) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(1..=10);
        let m = rng.random_range(n + 1..=50);
        let x = center_columns(&random_matrix(&mut rng, m, n));
        let xm = matrix_from_rows(&x);
        let p = PcaModel::fit(&xm, DEFAULT_CUTOFF).unwrap();
        let (_, vecs) = jacobi_eigen(&sample_covariance(&x));
        for k in 0..n {
            worst_loading = worst_loading.max(same_up_to_sign(&p.loadings[k], &vecs[k]));
            for j in 0..n {
                let d: f64 = p.loadings[k].iter().zip(&p.loadings[j]).map(|(a, b)| a * b).sum();
                worst_ortho = worst_ortho.max((d - f64::from(u8::from(j == k))).abs());
            }
        }
        // Projection onto the retained oracle eigenvectors.
        let l = p.retained_count;
        let (x_hat, e) = p.residual(&xm).unwrap();
        for (i, row) in x.iter().enumerate() {
            for c in 0..n {
                let oracle: f64 = (0..l).map(|k| row.iter().zip(&vecs[k]).map(|(a, b)| a * b).sum::<f64>() * vecs[k][c]).sum();
                worst_identity = worst_identity.max((x_hat[(i, c)] - oracle).abs());
                worst_identity = worst_identity.max((x_hat[(i, c)] + e[(i, c)] - row[c]).abs());
            }
        }
    }
    let ok = worst_loading <= 1e-8 && worst_identity <= 1e-8 && worst_ortho <= 1e-9;
    verdict(
        "pca oracle suite",
        ok,
        format!("100 matrices: loadings {worst_loading:.1e} (1e-8), X = X_hat + E {worst_identity:.1e} (1e-8), orthonormality {worst_ortho:.1e} (1e-9)"),
    );
}

fn mse(model: &RbfnModel, x: &Mat, t: &Mat) -> f64 {
    let mut s = 0.0;
    for (xi, ti) in x.iter().zip(t) {
        s += model.predict(xi).unwrap().iter().zip(ti).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    s / (x.len() * t[0].len()) as f64
}

#[test]
fn rbfn_property_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);

    let mut worst_interp = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(2..=50);
        let d = rng.random_range(3..=5);
        let x: Mat = (0..n).map(|_| (0..d).map(|_| rng.random_range(0.0..8.0)).collect()).collect();
        let t = random_matrix(&mut rng, n, 2);
        let w = solve_output_weights(&x, 1.0, &x, &t, 0.0).unwrap();
        worst_interp = worst_interp.max(mse(&RbfnModel::new(x.clone(), 1.0, w).unwrap(), &x, &t));
    }

    let mut monotone = true;
    for _ in 0..20 {
        let n = rng.random_range(5..=60);
        let d = rng.random_range(1..=4);
        let x = random_matrix(&mut rng, n, d);
        let t = random_matrix(&mut rng, n, 2);
        let cfg = RbfnConfig { mse_goal: 1e-9, spread: rng.random_range(0.2..2.0), ..RbfnConfig::default() };
        let (_, trace) = train(&x, &t, &cfg).unwrap();
        monotone &= trace.steps.windows(2).all(|w| w[1].training_mse <= w[0].training_mse);
    }

    let mut worst_solve = 0.0f64;
    for _ in 0..20 {
        let x = random_matrix(&mut rng, 10, 2);
        let c: Mat = x[..3].to_vec();
        let t = random_matrix(&mut rng, 10, 2);
        let w = solve_output_weights(&c, 0.9, &x, &t, 0.0).unwrap();
        worst_solve = worst_solve.max(max_abs_diff(&w, &normal_equations(&gaussian_design(&c, 0.9, &x), &t)));
    }

    let mut worst_half = 0.0f64;
    for sigma in [0.05, 0.3, 1.0, 2.5, 10.0] {
        let m = RbfnModel::new(vec![vec![0.0, 0.0, 0.0]], sigma, vec![vec![0.0], vec![1.0]]).unwrap();
        let r = sigma * (2.0 * std::f64::consts::LN_2).sqrt();
        let phi = m.basis(&[r / 3f64.sqrt(), r / 3f64.sqrt(), r / 3f64.sqrt()]).unwrap()[0];
        worst_half = worst_half.max((phi - 0.5).abs());
    }

    let ok = worst_interp <= 1e-8 && monotone && worst_solve <= 1e-8 && worst_half <= 1e-12;
    verdict(
        "rbfn property suite",
        ok,
        format!(
            "interpolation mse {worst_interp:.1e} (1e-8), monotone traces on 20 problems: {monotone}, \
             normal-equations gap {worst_solve:.1e} (1e-8), half response {worst_half:.1e} (1e-12)"
        ),
    );
}

#[test]
fn simulator_properties() {
    let cfg = PlantConfig::default();
    let ss = steady_values(&cfg);
    let idx = |l: &str| channel_index(l).unwrap();

    let mut monotone = true;
    for kind in [FaultKind::SgtrA, FaultKind::SgtrB] {
        let dev: Vec<f64> = [15.0, 30.0, 45.0, 60.0]
            .iter()
            .map(|&sev| {
                let s = ScenarioSpec::new(kind, sev).with_noise(0.0).with_steps(501);
                let v = &run_scenario(&s, &cfg).unwrap().frames[500].values;
                v.iter().zip(&ss).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
            })
            .collect();
        monotone &= dev.windows(2).all(|w| w[1] > w[0]);
    }

    let a = run_scenario(&ScenarioSpec::new(FaultKind::SgtrA, 45.0).with_noise(0.0), &cfg).unwrap();
    let localized = a.frames.iter().all(|f| f.values[idx("WTRB")] == 0.0)
        && a.frames.iter().any(|f| f.values[idx("WTRA")] > 0.0);

    let lr = ScenarioSpec::new(FaultKind::LockedRotorPump1, 100.0).with_noise(0.0);
    let rec = run_scenario(&lr, &cfg).unwrap();
    let onset = lr.onset_time as usize;
    let wrca = idx("WRCA");
    let min_flow = rec.frames[onset..=onset + 20].iter().map(|f| f.values[wrca]).fold(f64::INFINITY, f64::min);
    let rotor = min_flow <= 0.5 * ss[wrca];

    let render = || {
        let ds = generate_corpus(&reference_scenarios(5446, 0.01, 3), &cfg).unwrap();
        let mut buf = Vec::new();
        write_corpus_csv(&ds, &mut buf).unwrap();
        buf
    };
    let identical = render() == render();

    let ok = monotone && localized && rotor && identical;
    verdict(
        "simulator properties",
        ok,
        format!(
            "severity monotone: {monotone}, A-fault keeps WTRB at 0: {localized}, \
             WRCA min within 20 s {:.1}% of steady: {rotor}, byte-identical CSV: {identical}",
            100.0 * min_flow / ss[wrca]
        ),
    );
}

#[test]
fn noise_filtering() {
    let cfg = PlantConfig::default();
    let noisy_corpus = generate_corpus(&reference_scenarios(5446, 0.05, 0), &cfg).unwrap();
    let x = matrix_from_rows(&noisy_corpus.features);
    let norm = Normalizer::fit(&x).unwrap();
    let pca = PcaModel::fit(&norm.apply(&x).unwrap(), DEFAULT_CUTOFF).unwrap();

    let mut ok = true;
    let mut lines = Vec::new();
    for s in reference_scenarios(5446, 0.05, 100).into_iter().filter(|s| s.fault_kind != FaultKind::Normal) {
        let noisy = run_scenario(&s, &cfg).unwrap();
        let clean = run_scenario(&s.clone().with_noise(0.0), &cfg).unwrap();
        let rows = |r: &pwrdiag::plantsim::TransientRecord| -> Vec<Vec<f64>> { r.frames.iter().map(|f| f.values.clone()).collect() };
        let zn = norm.apply(&matrix_from_rows(&rows(&noisy))).unwrap();
        let zc = norm.apply(&matrix_from_rows(&rows(&clean))).unwrap();
        let (recon, _) = pca.residual(&zn).unwrap();
        let size = zn.len() as f64;
        let raw_mse = (&zn - &zc).norm_squared() / size;
        let pca_mse = (&recon - &zc).norm_squared() / size;
        ok &= pca_mse < raw_mse;
        lines.push(format!("{}: pca {pca_mse:.4} vs raw {raw_mse:.4}", s.case_name()));
    }
    verdict("noise filtering", ok, lines.join("; "));
}

#[test]
fn case_rms_convention() {
    // A model whose every output is exactly (40.0, 0.99) in label units.
    let corpus = generate_corpus(&reference_scenarios(300, 0.01, 0), &PlantConfig::default()).unwrap();
    let mut model = train_diagnoser(&corpus, &DiagnoserConfig::default()).unwrap();
    model.target_scaler = TargetScaler { min: vec![0.0, 0.0], max: vec![100.0, 3.0] };
    let k = model.pca.retained_count;
    model.network = RbfnModel::new(vec![vec![0.0; k]], 1.0, vec![vec![0.40, 0.33], vec![0.0, 0.0]]).unwrap();

    let ds = generate_corpus(&[ScenarioSpec::new(FaultKind::SgtrA, 40.0).with_seed(5)], &PlantConfig::default()).unwrap();
    let metrics = evaluate(&model, &ds).unwrap();
    let case = &metrics.cases[0];
    let ok = (case.rms_error - 0.007).abs() <= 5e-4;
    verdict(
        "case rms convention",
        ok,
        format!(
            "output ({:.2}, {:.2}) vs target ({:.2}, {:.2}) -> rms {:.5} (0.007 +/- 5e-4)",
            case.output_avg[0], case.output_avg[1], case.target[0], case.target[1], case.rms_error
        ),
    );
}
