//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints its own PASS/FAIL line; exits nonzero if any fails.

use std::time::{Duration, Instant};

use qmed::cluster::purity;
use qmed::experiment::{
    bounds_check, run_cluster_experiment, sample_noise_model, DistanceKind, ExperimentConfig,
};
use qmed::incompat::{disturbance_overlap, gmed, med, ncom, ncom_via_choi, ncom_via_dilation};
use qmed::quantum::{
    bell_measurement_channel, bloch_to_pvm, coarse_grain, dephasing_channel, noisy_instrument,
    product_measurement_channel, BlochObservable, DensityMatrix, ProjectorFamily,
};
use qmed::random::{
    haar_unitary, random_channel, random_coarse_map, random_density, random_diagonal_density,
    random_partition, random_pvm, random_unit_vector3, random_von_neumann,
};
use qmed::switch::{
    apply_switch, build_switch, control_marginal, estimate_med_sequential, estimate_ncom_switch,
    exact_p_minus, hoeffding_shots, minus_expectation, plus_state,
};
use qmed::RandomStream;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn xpvm() -> ProjectorFamily {
    bloch_to_pvm(&BlochObservable::new([1.0, 0.0, 0.0]).unwrap())
}

fn zpvm() -> ProjectorFamily {
    bloch_to_pvm(&BlochObservable::new([0.0, 0.0, 1.0]).unwrap())
}

fn mub_maximality() -> Outcome {
    let xz = med(&xpvm(), &zpvm()).unwrap();
    let mut worst = (xz - SQRT_HALF).abs();
    let mut ok = worst <= 1e-12;
    for d in [2usize, 3, 5] {
        let m = med(
            &ProjectorFamily::computational(d),
            &ProjectorFamily::fourier(d),
        )
        .unwrap();
        let err = (m - (1.0 - 1.0 / d as f64).sqrt()).abs();
        worst = worst.max(err);
        ok &= err <= 1e-10;
    }
    outcome(ok, format!("max error {worst:.2e}"))
}

fn ncom_equals_med() -> Outcome {
    let mut rng = RandomStream::new(2002);
    let mut worst: f64 = 0.0;
    let mut worst_raw: f64 = 0.0;
    for t in 0..500 {
        let d = 2 + t % 2;
        let a = random_pvm(d, &mut rng);
        let b = random_pvm(d, &mut rng);
        let rho = random_density(d, &mut rng);
        let n = ncom(&dephasing_channel(&a), &dephasing_channel(&b), &rho).unwrap();
        worst = worst.max((n - gmed(&a, &b, &rho).unwrap()).abs());
        // independent check against the defining overlap, compared on the
        // squared scale where it has no cancellation amplification
        let raw = 1.0 - disturbance_overlap(&a, &b, &rho).unwrap().re;
        worst_raw = worst_raw.max((n * n - raw).abs());
    }
    outcome(
        worst <= 1e-10 && worst_raw <= 1e-10,
        format!("max |ncom - gmed| {worst:.2e}, max |ncom^2 - (1 - overlap)| {worst_raw:.2e}"),
    )
}

fn three_paths() -> Outcome {
    let mut rng = RandomStream::new(3003);
    let mut worst: f64 = 0.0;
    for t in 0..200 {
        let d = 2 + t % 3;
        let kc = 1 + rng.index(4);
        let kd = 1 + rng.index(4);
        let c = random_channel(d, kc, &mut rng);
        let e = random_channel(d, kd, &mut rng);
        let rho = random_density(d, &mut rng);
        let direct = ncom(&c, &e, &rho).unwrap();
        let choi = ncom_via_choi(&c, &e, &rho).unwrap();
        let dil = ncom_via_dilation(&c, &e, &rho).unwrap();
        worst = worst
            .max((direct - choi).abs())
            .max((direct - dil).abs())
            .max((choi - dil).abs());
    }
    outcome(
        worst <= 1e-8,
        format!("max pairwise disagreement {worst:.2e}"),
    )
}

fn metric_axioms() -> Outcome {
    let mut rng = RandomStream::new(4004);
    let mut worst_triangle = f64::NEG_INFINITY;
    let mut faithful = true;
    for t in 0..1000 {
        let d = 2 + t % 2;
        let a = random_von_neumann(d, &mut rng);
        let b = random_von_neumann(d, &mut rng);
        let c = random_von_neumann(d, &mut rng);
        let rho = random_density(d, &mut rng);
        let ab = gmed(&a, &b, &rho).unwrap();
        let bc = gmed(&b, &c, &rho).unwrap();
        let ac = gmed(&a, &c, &rho).unwrap();
        worst_triangle = worst_triangle.max(ac - ab - bc);

        // the same projectors listed in another order are at distance zero;
        // distinct random bases are not
        let mut perm: Vec<usize> = (0..d).collect();
        perm.rotate_left(1 + rng.index(d - 1));
        let shuffled =
            ProjectorFamily::new(perm.iter().map(|&i| a.projectors()[i].clone()).collect())
                .unwrap();
        let same = gmed(&a, &shuffled, &rho).unwrap();
        faithful &= same <= 1e-10 && a.same_projectors(&shuffled, 1e-9);
        faithful &= ab > 1e-6 && !a.same_projectors(&b, 1e-9);
    }
    outcome(
        worst_triangle <= 1e-9 && faithful,
        format!(
            "max triangle excess {worst_triangle:.2e}, faithfulness {}",
            if faithful { "ok" } else { "violated" }
        ),
    )
}

fn coarse_graining() -> Outcome {
    let mut rng = RandomStream::new(5005);
    let mut worst = f64::NEG_INFINITY;
    for t in 0..500 {
        let d = 2 + rng.index(5);
        let u = haar_unitary(d, &mut rng);
        let k = 1 + rng.index(d);
        let a = ProjectorFamily::from_basis_groups(&u, &random_partition(d, k, &mut rng)).unwrap();
        let b = random_pvm(d, &mut rng);
        let rho = if t % 2 == 0 {
            DensityMatrix::maximally_mixed(d)
        } else {
            random_diagonal_density(&u, &mut rng)
        };
        let f = random_coarse_map(a.len(), &mut rng);
        let coarse = coarse_grain(&a, &f).unwrap();
        worst = worst.max(gmed(&coarse, &b, &rho).unwrap() - gmed(&a, &b, &rho).unwrap());
    }
    outcome(worst <= 1e-10, format!("max increase {worst:.2e}"))
}

fn upper_bound() -> Outcome {
    let report = bounds_check(&[2, 3, 4, 5, 6], 1000, 6006).unwrap();
    let bell = bell_measurement_channel(2, 2).unwrap();
    let product = product_measurement_channel(2, 2).unwrap();
    let bp = ncom(&bell, &product, &DensityMatrix::maximally_mixed(4)).unwrap();
    let ok = report.violations == 0
        && report.max_violation <= 1e-10
        && (bp - SQRT_HALF).abs() <= 1e-10
        && bp >= (1.0 - 0.5f64).sqrt() - 1e-10;
    outcome(
        ok,
        format!(
            "max med - bound {:.2e} over 5000 pairs, Bell vs product ncom {bp:.12}",
            report.max_violation
        ),
    )
}

fn switch_statistics() -> Outcome {
    let c = dephasing_channel(&xpvm());
    let d = dephasing_channel(&zpvm());
    let rho = DensityMatrix::maximally_mixed(2);
    let exact = exact_p_minus(&c, &d, &rho).unwrap();
    let sw = build_switch(&c, &d).unwrap();
    let out = apply_switch(&sw, &rho, &plus_state()).unwrap();
    let marginal = minus_expectation(&control_marginal(&out).unwrap());
    let ok = (exact - 0.25).abs() <= 1e-12 && (marginal - exact).abs() <= 1e-10;
    outcome(
        ok,
        format!("exact p- {exact:.15}, control marginal {marginal:.15}"),
    )
}

fn hoeffding_plan() -> Outcome {
    let plan = hoeffding_shots(0.01, 0.05).unwrap();
    let c = dephasing_channel(&xpvm());
    let d = dephasing_channel(&zpvm());
    let rho = DensityMatrix::maximally_mixed(2);
    let root = RandomStream::new(8008);
    let runs = 1000;
    let hits = (0..runs)
        .filter(|&r| {
            let est = estimate_ncom_switch(&c, &d, &rho, &plan, &mut root.split(r)).unwrap();
            (est.p_minus_hat - 0.25).abs() < 0.01
        })
        .count();
    let rate = hits as f64 / runs as f64;
    outcome(
        plan.shots == 18445 && rate >= 0.95,
        format!("shots {}, {hits}/{runs} runs within 0.01", plan.shots),
    )
}

fn sequential_estimator() -> Outcome {
    let root = RandomStream::new(9009);
    let runs = 200;
    let hits = (0..runs)
        .filter(|&r| {
            let est =
                estimate_med_sequential(&xpvm(), &zpvm(), 100_000, &mut root.split(r)).unwrap();
            (est.ncom_hat - SQRT_HALF).abs() < 0.01
        })
        .count();
    outcome(
        hits as f64 >= 0.95 * runs as f64,
        format!("{hits}/{runs} runs within 0.01"),
    )
}

fn cluster_purity(cfg: &ExperimentConfig, seeds: u64) -> usize {
    (0..seeds)
        .filter(|&s| {
            let out = run_cluster_experiment(&ExperimentConfig {
                seed: 1_000 + s,
                ..cfg.clone()
            })
            .unwrap();
            debug_assert_eq!(purity(&out.result.labels, &out.truth).unwrap(), out.purity);
            out.purity == 1.0
        })
        .count()
}

fn fig1() -> Outcome {
    let perfect = cluster_purity(&ExperimentConfig::default(), 50);
    outcome(
        perfect >= 49,
        format!("purity 1.0 on {perfect}/50 master seeds"),
    )
}

fn fig2() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for eta in [0.25, 0.5, 0.75] {
        let cfg = ExperimentConfig {
            noise_eta: eta,
            distance: DistanceKind::Ncom,
            ..Default::default()
        };
        let perfect = cluster_purity(&cfg, 50);
        ok &= perfect >= 48;
        parts.push(format!("eta {eta}: {perfect}/50"));
    }
    outcome(ok, parts.join(", "))
}

fn noise_robustness() -> Outcome {
    let mut rng = RandomStream::new(1212);
    let rho = DensityMatrix::maximally_mixed(2);
    let mut smallest = f64::INFINITY;
    let mut n = 0;
    while n < 200 {
        let a = BlochObservable::new(random_unit_vector3(&mut rng)).unwrap();
        let b = BlochObservable::new(random_unit_vector3(&mut rng)).unwrap();
        let (pa, pb) = (bloch_to_pvm(&a), bloch_to_pvm(&b));
        let comm = pa.projectors()[0].commutator(&pb.projectors()[0]).unwrap();
        if comm.frobenius_norm() <= 1e-8 {
            continue;
        }
        let na = noisy_instrument(&pa, &sample_noise_model(2, 0.9, &mut rng).unwrap()).unwrap();
        let nb = noisy_instrument(&pb, &sample_noise_model(2, 0.9, &mut rng).unwrap()).unwrap();
        smallest = smallest.min(ncom(&na, &nb, &rho).unwrap());
        n += 1;
    }
    outcome(
        smallest >= 1e-3,
        format!("min noisy ncom {smallest:.3e} over {n} pairs"),
    )
}

fn main() {
    let criteria: Vec<(&str, Duration, fn() -> Outcome)> = vec![
        ("MUB maximality", Duration::from_secs(1), mub_maximality),
        (
            "NCOM equals generalized MED",
            Duration::from_secs(10),
            ncom_equals_med,
        ),
        (
            "three-path NCOM agreement",
            Duration::from_secs(60),
            three_paths,
        ),
        ("metric axioms", Duration::from_secs(30), metric_axioms),
        (
            "coarse-graining monotonicity",
            Duration::MAX,
            coarse_graining,
        ),
        ("incompatibility upper bound", Duration::MAX, upper_bound),
        ("switch statistics", Duration::MAX, switch_statistics),
        ("Hoeffding plan", Duration::from_secs(30), hoeffding_plan),
        ("sequential estimator", Duration::MAX, sequential_estimator),
        ("noiseless clustering purity", Duration::from_secs(60), fig1),
        ("noisy clustering purity", Duration::from_secs(300), fig2),
        ("noise robustness", Duration::MAX, noise_robustness),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let res = check();
        let elapsed = start.elapsed();
        let in_time = elapsed < limit;
        let pass = res.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = if limit == Duration::MAX {
            String::new()
        } else {
            format!(" (limit {:.0} s)", limit.as_secs_f64())
        };
        println!(
            "criterion {:>2} {}: {} [{}; {:.2} s{}]",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            res.detail,
            elapsed.as_secs_f64(),
            budget
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
