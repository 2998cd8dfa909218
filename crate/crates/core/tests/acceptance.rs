//! End-to-end acceptance checks. Each test prints one PASS/FAIL line to
//! stderr (uncaptured) before asserting.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use secure_sensing::channels::{
    depolarize_asymmetric, ghz, to_slot_order, AsymmetricGhzElements,
};
use secure_sensing::control::{ControlPulse, Scenario};
use secure_sensing::dynamics::NoiseModel;
use secure_sensing::entanglement::tripartite_negativity;
use secure_sensing::metrology::{cfi, qfi, sld_residual};
use secure_sensing::protocol::{encode, run_protocol, AttackModel, ProtocolConfig, Verdict};
use secure_sensing::quantum::{
    hermitize, max_abs_diff, partial_trace, pauli_x, pauli_y, pauli_z, trace_norm_matrix, CMatrix,
    DensityMatrix, QubitRegister, StateDiagnostics, C64,
};
use secure_sensing::runner::{cli_main, sweep_fisher, EvolutionNoise, FisherPoint, ScenarioSpec};

fn report(n: u32, title: &str, pass: bool, detail: impl std::fmt::Display) -> bool {
    let mark = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr().lock(), "[{mark}] criterion {n:>2}: {title} ({detail})");
    pass
}

fn physical(rho: &DensityMatrix) -> bool {
    StateDiagnostics::of(rho.data()).within(1e-12, 1e-9, -1e-8)
}

struct Anchor {
    t: f64,
    rho: DensityMatrix,
    qfi: f64,
    cfi: f64,
}

fn noiseless_anchor() -> &'static Vec<Anchor> {
    static CELL: OnceLock<Vec<Anchor>> = OnceLock::new();
    CELL.get_or_init(|| {
        (1..=5)
            .map(|t| {
                let t = t as f64;
                let sc = Scenario::new(ghz(3).unwrap(), NoiseModel::noiseless(), 1.0, t).unwrap();
                let (rho, drho) = sc.evolve(None).unwrap();
                let q = qfi(&rho, &drho).unwrap();
                let f = cfi(&rho, &drho, sc.povm()).unwrap();
                Anchor { t, rho, qfi: q, cfi: f }
            })
            .collect()
    })
}

struct TableRun {
    spec: ScenarioSpec,
    points: Vec<FisherPoint>,
}

fn table_sweeps() -> &'static Vec<TableRun> {
    static CELL: OnceLock<Vec<TableRun>> = OnceLock::new();
    CELL.get_or_init(|| {
        ScenarioSpec::table()
            .unwrap()
            .into_iter()
            .map(|spec| {
                let points = sweep_fisher(&spec).unwrap();
                TableRun { spec, points }
            })
            .collect()
    })
}

#[test]
fn criterion_01_noiseless_heisenberg_anchor() {
    let anchors = noiseless_anchor();
    let mut worst: f64 = 0.0;
    for a in anchors {
        worst = worst.max((a.qfi - 4.0 * a.t * a.t).abs()).max((a.cfi - a.qfi).abs());
    }
    let pass = report(1, "noiseless QFI = 4T² and CFI = QFI for T = 1..5", worst <= 1e-6, format!("max deviation {worst:.2e}"));
    assert!(pass);
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn kraus_oracle(rho: &CMatrix, gamma: f64) -> CMatrix {
    let id = CMatrix::identity(2, 2);
    let ks = [
        &id * c((1.0 - 0.75 * gamma).sqrt(), 0.0),
        pauli_x() * c((gamma / 4.0).sqrt(), 0.0),
        pauli_y() * c((gamma / 4.0).sqrt(), 0.0),
        pauli_z() * c((gamma / 4.0).sqrt(), 0.0),
    ];
    let mut out = CMatrix::zeros(8, 8);
    for ki in &ks {
        for kj in &ks {
            let k = id.kronecker(ki).kronecker(kj);
            out += &k * rho * k.adjoint();
        }
    }
    out
}

#[test]
fn criterion_02_asymmetric_channel_closed_forms() {
    let g = ghz(3).unwrap();
    let mut worst_closed: f64 = 0.0;
    let mut worst_kraus: f64 = 0.0;
    for gamma in [0.0, 0.06, 0.5, 1.0] {
        let out = depolarize_asymmetric(&g, gamma).unwrap();
        let closed = AsymmetricGhzElements::new(gamma).slot_matrix();
        worst_closed = worst_closed.max(max_abs_diff(&to_slot_order(out.data()), &closed));
        worst_kraus = worst_kraus.max(max_abs_diff(out.data(), &kraus_oracle(g.data(), gamma)));
    }
    let pass = report(
        2,
        "asymmetric depolarization matches closed forms and Kraus sum",
        worst_closed <= 1e-12 && worst_kraus <= 1e-12,
        format!("closed form {worst_closed:.1e}, Kraus {worst_kraus:.1e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_03_negativity_anchors_and_monotonicity() {
    let ghz_n = tripartite_negativity(&ghz(3).unwrap()).unwrap();
    let mixed = tripartite_negativity(&DensityMatrix::maximally_mixed(QubitRegister::split(1, 2).unwrap())).unwrap();
    let mut bad = Vec::new();
    let mut all_physical = true;
    for spec in ScenarioSpec::table().unwrap() {
        let traj = spec.uncontrolled_negativity(&spec.negativity_grid).unwrap();
        if !traj.is_non_increasing(1e-9) {
            bad.push(spec.tag());
        }
        all_physical &= traj.values().iter().all(|v| v.is_finite());
    }
    let pass = (ghz_n - 0.5).abs() <= 1e-9 && mixed == 0.0 && bad.is_empty() && all_physical;
    let pass = report(
        3,
        "tripartite negativity anchors and monotone decay over nine trajectories",
        pass,
        format!("GHZ {ghz_n:.12}, I/8 {mixed}, non-monotone {bad:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_04_depolarizing_death_by_t10() {
    let mut deaths = Vec::new();
    let mut all_dead = true;
    let mut final_times_ok = true;
    for spec in ScenarioSpec::table().unwrap() {
        if spec.evolution_noise != EvolutionNoise::Dp {
            continue;
        }
        final_times_ok &= spec.t_final == 8.0 && spec.t_grid.last() == Some(&8.0);
        let traj = spec.uncontrolled_negativity(&spec.negativity_grid).unwrap();
        let first = traj
            .times()
            .iter()
            .zip(traj.values())
            .find(|(_, v)| **v < 1e-6)
            .map(|(t, _)| *t);
        all_dead &= matches!(first, Some(t) if t <= 10.0);
        let at10 = traj.values()[traj.times().iter().position(|t| *t == 10.0).unwrap()];
        deaths.push(format!("{}: first < 1e-6 at {first:?}, N(10) = {at10:.2e}", spec.tag()));
    }
    let pass = report(
        4,
        "DP, DP+DP, ADP+DP negativity < 1e-6 by T = 10; DP sweeps end at T = 8",
        all_dead && final_times_ok,
        deaths.join("; "),
    );
    assert!(pass);
}

#[test]
fn criterion_05_control_never_loses() {
    let runs = table_sweeps();
    let mut failures = Vec::new();
    let mut gains = Vec::new();
    for run in runs {
        let mut best_gain: f64 = 0.0;
        for p in &run.points {
            let r = p.record;
            if r.c_qfi < r.uc_qfi - 1e-9 || r.c_cfi < r.uc_cfi - 1e-9 {
                failures.push(format!("{} T={}", run.spec.tag(), r.t));
            }
            best_gain = best_gain.max(r.c_qfi - r.uc_qfi);
        }
        gains.push(format!("{} +{best_gain:.2}", run.spec.tag()));
    }
    let pass = report(
        5,
        "optimized QFI/CFI >= uncontrolled for all nine scenarios and times",
        failures.is_empty(),
        format!("violations {failures:?}; max QFI gain {}", gains.join(", ")),
    );
    assert!(pass);
}

#[test]
fn criterion_06_cfi_below_qfi() {
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for a in noiseless_anchor() {
        worst = worst.max(a.cfi - a.qfi);
        count += 1;
    }
    for run in table_sweeps() {
        for p in &run.points {
            let sc = run.spec.scenario_at(p.record.t).unwrap();
            let mut pulses = vec![None];
            if let (Some(q), Some(c)) = (&p.qfi_report, &p.cfi_report) {
                pulses.push(Some(q.best_pulse.clone()));
                pulses.push(Some(c.best_pulse.clone()));
            }
            for pulse in pulses {
                let (rho, drho) = sc.evolve(pulse.as_ref()).unwrap();
                let q = qfi(&rho, &drho).unwrap();
                let f = cfi(&rho, &drho, sc.povm()).unwrap();
                worst = worst.max(f - q);
                count += 1;
            }
        }
    }
    let pass = report(6, "CFI <= QFI + 1e-9 on every propagated state", worst <= 1e-9, format!("{count} states, max CFI - QFI = {worst:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_07_sld_residual() {
    let table = ScenarioSpec::table().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for draw in 0..100 {
        let spec = &table[rng.random_range(0..table.len())];
        let t = rng.random_range(0.1..spec.t_final);
        let sc = spec.scenario_at(t).unwrap();
        let pulse = if draw % 2 == 0 {
            None
        } else {
            let m = spec.segments_at(t);
            let amps = (0..6 * m).map(|_| rng.random_range(-2.0..2.0)).collect();
            Some(ControlPulse::from_amplitudes(t, m, 2, amps).unwrap())
        };
        let (rho, drho) = sc.evolve(pulse.as_ref()).unwrap();
        worst = worst.max(sld_residual(rho.data(), drho.data()).unwrap());
    }
    let pass = report(7, "SLD residual on support over 100 random draws", worst <= 1e-8, format!("max residual {worst:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_08_propagated_states_physical() {
    let mut states: Vec<DensityMatrix> = Vec::new();
    let mut check = |rho: &DensityMatrix| states.push(rho.clone());
    for a in noiseless_anchor() {
        check(&a.rho);
    }
    for run in table_sweeps() {
        for p in &run.points {
            check(&p.uncontrolled_state);
            if let Some((q, c)) = &p.controlled_states {
                check(q);
                check(c);
            }
        }
    }
    let mut raw_ok = Vec::new();
    for spec in ScenarioSpec::table().unwrap() {
        let init = spec.initial_state().unwrap();
        check(&init);
        let ev = secure_sensing::dynamics::LocalEvolution::new(3, vec![1, 2], spec.noise_model().unwrap()).unwrap();
        for &t in &spec.negativity_grid {
            let raw = ev.evolve_matrix(init.data(), spec.omega, None, t, spec.dt).unwrap();
            raw_ok.push(StateDiagnostics::of(&raw).within(1e-12, 1e-9, -1e-8));
        }
    }
    let count = states.len() + raw_ok.len();
    let bad = states.iter().filter(|r| !physical(r)).count() + raw_ok.iter().filter(|ok| !**ok).count();
    let pass = report(8, "trace, Hermiticity and positivity of propagated states", bad == 0, format!("{bad} of {count} states out of tolerance"));
    assert!(pass);
}

#[test]
fn criterion_09_security_statistics() {
    let trials = 2000u64;
    let attacked = |seed| ProtocolConfig {
        attack: AttackModel::InterceptResendZ { fraction: 1.0 },
        ..ProtocolConfig::ideal(20, 20, 1.0, PI / 4.0, seed)
    };
    let aborts = (0..trials)
        .filter(|&s| run_protocol(&attacked(s)).unwrap().security.verdict == Verdict::Abort)
        .count() as f64;
    let freq = aborts / trials as f64;
    let p = 1.0 - 2f64.powi(-10);
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    let accepts = (0..trials)
        .filter(|&s| run_protocol(&ProtocolConfig::ideal(20, 20, 1.0, PI / 4.0, s)).unwrap().security.verdict == Verdict::Accept)
        .count();
    let pass = (freq - p).abs() <= 3.0 * sigma && accepts == trials as usize;
    let pass = report(
        9,
        "intercept-resend abort rate and clean-channel acceptance",
        pass,
        format!("abort {freq:.4} vs {p:.4} ± {:.4}; clean accepts {accepts}/{trials}", 3.0 * sigma),
    );
    assert!(pass);
}

fn mse(p_s: usize, seeds: u64, omega: f64, t_s: f64) -> f64 {
    (0..seeds)
        .map(|seed| {
            let est = run_protocol(&ProtocolConfig::ideal(p_s, 0, t_s, omega, seed))
                .unwrap()
                .estimation
                .unwrap();
            (est.omega_hat - omega).powi(2)
        })
        .sum::<f64>()
        / seeds as f64
}

#[test]
fn criterion_10_estimator_reaches_bound() {
    let (n_s, t_s) = (2.0, 1.0);
    let omega = PI / 2.0 / (n_s * t_s);
    let p_s = 10_000;
    let bound = 1.0 / (p_s as f64 * n_s * n_s * t_s * t_s);
    let ratio = mse(p_s, 500, omega, t_s) / bound;
    let xs: Vec<f64> = [100usize, 1000, 10_000].iter().map(|&p| (p as f64).ln()).collect();
    let ys: Vec<f64> = [100usize, 1000, 10_000].iter().map(|&p| mse(p, 500, omega, t_s).ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 3.0, ys.iter().sum::<f64>() / 3.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let pass = (1.0..=1.15).contains(&ratio) && (slope + 1.0).abs() <= 0.1;
    let pass = report(
        10,
        "estimator MSE within [1, 1.15] of the bound and 1/p_s scaling",
        pass,
        format!("MSE/bound = {ratio:.4}, slope = {slope:.4}"),
    );
    assert!(pass);
}

#[test]
fn criterion_11_bob_learns_nothing() {
    let mut worst: f64 = 0.0;
    for spec in ScenarioSpec::table().unwrap().iter().filter(|s| s.evolution_noise == EvolutionNoise::Ppd) {
        let init = spec.initial_state().unwrap();
        let (omega, t_s) = (1.0, 1.0);
        let a = encode(&init, omega, t_s, None, None).unwrap();
        let b = encode(&init, omega + 0.37, t_s, None, None).unwrap();
        let ra = partial_trace(&a, &[1, 2]).unwrap();
        let rb = partial_trace(&b, &[1, 2]).unwrap();
        worst = worst.max(trace_norm_matrix(&hermitize(&(ra.data() - rb.data()))) / 2.0);
    }
    let pass = report(11, "Bob's reduced state independent of ω", worst <= 1e-12, format!("max trace distance {worst:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_12_byte_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut same = Vec::new();
    for (name, json) in [
        ("gpd", r#"{"evolution_noise":"gpd"}"#),
        ("ppd", r#"{"evolution_noise":"ppd","channel":"dp"}"#),
        ("dp", r#"{"evolution_noise":"dp","channel":"adp"}"#),
    ] {
        let cfg = dir.path().join(format!("{name}.json"));
        std::fs::write(&cfg, json).unwrap();
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{name}-{run}.csv"));
            let code = cli_main([
                "secure-sensing",
                "sweep-fisher",
                "--config",
                cfg.to_str().unwrap(),
                "--seed",
                "7",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_eq!(code, 0);
            let meta = std::fs::read(secure_sensing::runner::meta_path(&out)).unwrap();
            outputs.push((std::fs::read(&out).unwrap(), meta));
        }
        same.push((name, outputs[0] == outputs[1]));
    }
    let pass = report(12, "repeated sweeps give byte-identical CSV and metadata", same.iter().all(|(_, s)| *s), format!("{same:?}"));
    assert!(pass);
}
