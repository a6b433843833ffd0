//! Clustering experiments on random qubit observables and incompatibility
//! bound checks.
//!
//! A master seed drives everything through split streams: observables use
//! split 0, noise models split 1, estimated distances split 2 and the
//! clustering restarts split 3.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{best_of_restarts, purity, ClusterResult, DistanceMatrix};
use crate::error::{Error, Result};
use crate::incompat::{med, med_upper_bound, ncom};
use crate::quantum::{
    bell_measurement_channel, bloch_to_pvm, dephasing_channel, noisy_instrument,
    product_measurement_channel, BlochObservable, DensityMatrix, KrausChannel, NoiseModel,
    ProjectorFamily,
};
use crate::random::{random_pvm, random_simplex, random_unit_vector3};
use crate::rng::RandomStream;
use crate::switch::{estimate_ncom_switch, hoeffding_shots};

const SPLIT_OBSERVABLES: u64 = 0;
const SPLIT_NOISE: u64 = 1;
const SPLIT_DISTANCES: u64 = 2;
const SPLIT_CLUSTERING: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    /// Exact MED of the sharp observables.
    Med,
    /// Exact NCOM of the (possibly noisy) instruments at `ρ = I/2`.
    Ncom,
    /// Switch-estimated NCOM using the configured `(epsilon, delta)` plan.
    NcomEstimated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_observables: usize,
    pub k: usize,
    pub restarts: usize,
    pub base_axes: Vec<[f64; 3]>,
    pub max_angle_deg: f64,
    pub noise_eta: f64,
    pub distance: DistanceKind,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_observables: 100,
            k: 2,
            restarts: 50,
            base_axes: vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
            max_angle_deg: 22.5,
            noise_eta: 0.0,
            distance: DistanceKind::Med,
            epsilon: 0.01,
            delta: 0.05,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.base_axes.is_empty() {
            return bad("base_axes must not be empty".into());
        }
        for a in &self.base_axes {
            BlochObservable::new(*a)?;
        }
        if self.n_observables == 0 || !self.n_observables.is_multiple_of(self.base_axes.len()) {
            return bad(format!(
                "n_observables = {} must be a positive multiple of the {} base axes",
                self.n_observables,
                self.base_axes.len()
            ));
        }
        if self.k == 0 || self.k > self.n_observables {
            return bad(format!(
                "k = {} must lie in 1..={}",
                self.k, self.n_observables
            ));
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1".into());
        }
        if !(self.max_angle_deg >= 0.0 && self.max_angle_deg <= 180.0) {
            return bad(format!(
                "max_angle_deg = {} outside [0, 180]",
                self.max_angle_deg
            ));
        }
        check_eta(self.noise_eta)?;
        if self.distance == DistanceKind::NcomEstimated {
            hoeffding_shots(self.epsilon, self.delta)?;
        }
        Ok(())
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!(
            "noise eta = {eta} outside [0, 1]"
        )));
    }
    Ok(())
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Rodrigues rotation of `v` by `theta` about the unit vector `axis`.
pub fn rotate(v: [f64; 3], axis: [f64; 3], theta: f64) -> [f64; 3] {
    let (s, c) = theta.sin_cos();
    let kxv = cross(axis, v);
    let kv = dot(axis, v);
    [
        v[0] * c + kxv[0] * s + axis[0] * kv * (1.0 - c),
        v[1] * c + kxv[1] * s + axis[1] * kv * (1.0 - c),
        v[2] * c + kxv[2] * s + axis[2] * kv * (1.0 - c),
    ]
}

/// Observables scattered around each base axis, `n / |axes|` per axis, with
/// the index of the base axis as ground-truth label.
pub fn gen_observables(
    cfg: &ExperimentConfig,
    rng: &mut RandomStream,
) -> Result<Vec<(BlochObservable, usize)>> {
    cfg.validate()?;
    let per_axis = cfg.n_observables / cfg.base_axes.len();
    let max = cfg.max_angle_deg.to_radians();
    let mut out = Vec::with_capacity(cfg.n_observables);
    for (label, &base) in cfg.base_axes.iter().enumerate() {
        let base = BlochObservable::new(base)?.vector();
        for _ in 0..per_axis {
            let axis = random_unit_vector3(rng);
            let theta = (2.0 * rng.uniform() - 1.0) * max;
            out.push((BlochObservable::new(rotate(base, axis, theta))?, label));
        }
    }
    Ok(out)
}

/// `λ = η R`, then the trivial distribution and both coefficient rows drawn
/// uniformly from simplices with the required sums.
pub fn sample_noise_model(outcomes: usize, eta: f64, rng: &mut RandomStream) -> Result<NoiseModel> {
    check_eta(eta)?;
    let lambda = eta * rng.uniform();
    let p = random_simplex(outcomes, rng);
    let a = (0..outcomes)
        .map(|_| {
            random_simplex(outcomes, rng)
                .into_iter()
                .map(|x| x * (1.0 - lambda))
                .collect()
        })
        .collect();
    let b = p
        .iter()
        .map(|&pi| {
            random_simplex(outcomes, rng)
                .into_iter()
                .map(|x| x * lambda * pi)
                .collect()
        })
        .collect();
    NoiseModel::new(lambda, p, a, b)
}

/// One noisy instrument per observable; observable `l` draws its noise model
/// from `rng.split(l)`.
pub fn gen_noisy_instruments(
    observables: &[BlochObservable],
    eta: f64,
    rng: &RandomStream,
) -> Result<Vec<(KrausChannel, NoiseModel)>> {
    check_eta(eta)?;
    observables
        .iter()
        .enumerate()
        .map(|(l, obs)| {
            let pvm = bloch_to_pvm(obs);
            let nm = sample_noise_model(pvm.len(), eta, &mut rng.split(l as u64))?;
            Ok((noisy_instrument(&pvm, &nm)?, nm))
        })
        .collect()
}

pub fn med_distances(pvms: &[ProjectorFamily]) -> Result<DistanceMatrix> {
    DistanceMatrix::try_from_fn(pvms.len(), |i, j| med(&pvms[i], &pvms[j]))
}

pub fn ncom_distances(channels: &[KrausChannel], rho: &DensityMatrix) -> Result<DistanceMatrix> {
    DistanceMatrix::try_from_fn(channels.len(), |i, j| ncom(&channels[i], &channels[j], rho))
}

/// Switch-estimated NCOM for every pair; pair `(i, j)` with `i < j` uses
/// `rng.split(i * n + j)`.
pub fn estimated_ncom_distances(
    channels: &[KrausChannel],
    rho: &DensityMatrix,
    epsilon: f64,
    delta: f64,
    rng: &RandomStream,
) -> Result<DistanceMatrix> {
    let plan = hoeffding_shots(epsilon, delta)?;
    let n = channels.len();
    DistanceMatrix::try_from_fn(n, |i, j| {
        let mut s = rng.split((i * n + j) as u64);
        Ok(estimate_ncom_switch(&channels[i], &channels[j], rho, &plan, &mut s)?.ncom_hat)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub observables: Vec<BlochObservable>,
    pub truth: Vec<usize>,
    pub distances: DistanceMatrix,
    pub result: ClusterResult,
    pub purity: f64,
}

pub fn run_cluster_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let root = RandomStream::new(cfg.seed);
    let labelled = gen_observables(cfg, &mut root.split(SPLIT_OBSERVABLES))?;
    let (observables, truth): (Vec<_>, Vec<_>) = labelled.into_iter().unzip();
    let rho = DensityMatrix::maximally_mixed(2);
    let distances = match cfg.distance {
        DistanceKind::Med => {
            let pvms: Vec<_> = observables.iter().map(bloch_to_pvm).collect();
            med_distances(&pvms)?
        }
        DistanceKind::Ncom | DistanceKind::NcomEstimated => {
            let channels: Vec<KrausChannel> = if cfg.noise_eta == 0.0 {
                observables
                    .iter()
                    .map(|o| dephasing_channel(&bloch_to_pvm(o)))
                    .collect()
            } else {
                gen_noisy_instruments(&observables, cfg.noise_eta, &root.split(SPLIT_NOISE))?
                    .into_iter()
                    .map(|(ch, _)| ch)
                    .collect()
            };
            if cfg.distance == DistanceKind::Ncom {
                ncom_distances(&channels, &rho)?
            } else {
                estimated_ncom_distances(
                    &channels,
                    &rho,
                    cfg.epsilon,
                    cfg.delta,
                    &root.split(SPLIT_DISTANCES),
                )?
            }
        }
    };
    let result = best_of_restarts(
        &distances,
        cfg.k,
        cfg.restarts,
        &root.split(SPLIT_CLUSTERING),
    )?;
    let purity = purity(&result.labels, &truth)?;
    Ok(ExperimentOutcome {
        observables,
        truth,
        distances,
        result: ClusterResult {
            seed: cfg.seed,
            ..result
        },
        purity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MubCheck {
    pub dim: usize,
    pub med: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Largest `med − bound` seen; negative when every pair is strictly below.
    pub max_violation: f64,
    pub violations: usize,
    pub bell_product_ncom: f64,
    pub bell_product_lower_bound: f64,
    pub mub: Vec<MubCheck>,
    pub passed: bool,
}

pub const BOUND_TOL: f64 = 1e-10;

/// Samples `trials` random PVM pairs per dimension and compares their MED to
/// `√(1 − 1/min(k_A, k_B))`; also evaluates the Bell-versus-product fixture
/// and the computational/Fourier pair in each dimension.
pub fn bounds_check(dims: &[usize], trials: usize, seed: u64) -> Result<BoundsReport> {
    if dims.is_empty() || dims.iter().any(|&d| !(2..=6).contains(&d)) {
        return Err(Error::InvalidArgument(format!(
            "dims {dims:?} must be a nonempty subset of 2..=6"
        )));
    }
    let root = RandomStream::new(seed);
    let per_dim: Vec<(f64, usize)> = dims
        .par_iter()
        .enumerate()
        .map(|(slot, &d)| {
            let mut rng = root.split(slot as u64);
            let mut worst = f64::NEG_INFINITY;
            let mut count = 0;
            for _ in 0..trials {
                let a = random_pvm(d, &mut rng);
                let b = random_pvm(d, &mut rng);
                let gap = med(&a, &b)? - med_upper_bound(a.len(), b.len());
                worst = worst.max(gap);
                if gap > BOUND_TOL {
                    count += 1;
                }
            }
            Ok((worst, count))
        })
        .collect::<Result<_>>()?;
    let max_violation = per_dim
        .iter()
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let violations = per_dim.iter().map(|p| p.1).sum();

    let bell = bell_measurement_channel(2, 2)?;
    let product = product_measurement_channel(2, 2)?;
    let bell_product_ncom = ncom(&bell, &product, &DensityMatrix::maximally_mixed(4))?;
    let bell_product_lower_bound = med_upper_bound(2, 2);

    let mub: Vec<MubCheck> = dims
        .iter()
        .map(|&d| {
            Ok(MubCheck {
                dim: d,
                med: med(
                    &ProjectorFamily::computational(d),
                    &ProjectorFamily::fourier(d),
                )?,
                expected: med_upper_bound(d, d),
            })
        })
        .collect::<Result<_>>()?;

    let passed = violations == 0
        && bell_product_ncom >= bell_product_lower_bound - BOUND_TOL
        && mub.iter().all(|m| (m.med - m.expected).abs() <= BOUND_TOL);
    Ok(BoundsReport {
        dims: dims.to_vec(),
        trials,
        seed,
        max_violation: if trials == 0 { 0.0 } else { max_violation },
        violations,
        bell_product_ncom,
        bell_product_lower_bound,
        mub,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::apply_channel;
    use crate::random::random_density;

    fn angle_deg(a: [f64; 3], b: [f64; 3]) -> f64 {
        dot(a, b).clamp(-1.0, 1.0).acos().to_degrees()
    }

    #[test]
    fn zero_angle_reproduces_axes() {
        let cfg = ExperimentConfig {
            max_angle_deg: 0.0,
            n_observables: 10,
            ..Default::default()
        };
        let obs = gen_observables(&cfg, &mut RandomStream::new(1)).unwrap();
        for (o, l) in obs {
            let v = o.vector();
            assert!(angle_deg(v, cfg.base_axes[l]) < 1e-6);
        }
    }

    #[test]
    fn observables_within_max_angle() {
        let cfg = ExperimentConfig::default();
        let obs = gen_observables(&cfg, &mut RandomStream::new(2)).unwrap();
        assert_eq!(obs.len(), 100);
        assert_eq!(obs.iter().filter(|o| o.1 == 0).count(), 50);
        for (o, l) in obs {
            assert!(angle_deg(o.vector(), cfg.base_axes[l]) <= 22.5 + 1e-9);
        }
    }

    #[test]
    fn sphere_axis_mean_is_zero() {
        let mut rng = RandomStream::new(3);
        let n = 10_000;
        let mut m = [0.0; 3];
        for _ in 0..n {
            let v = random_unit_vector3(&mut rng);
            for k in 0..3 {
                m[k] += v[k] / n as f64;
            }
        }
        // each coordinate of a uniform unit vector has variance 1/3
        let sigma = (1.0 / 3.0 / n as f64).sqrt();
        assert!(m.iter().all(|x| x.abs() < 3.0 * sigma), "{m:?}");
    }

    #[test]
    fn rotation_preserves_norm_and_angle() {
        let v = rotate(
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            std::f64::consts::FRAC_PI_2,
        );
        assert!((v[1] - 1.0).abs() < 1e-15 && v[0].abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.n_observables = 99;
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            noise_eta: 1.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let parsed: ExperimentConfig =
            serde_json::from_str(r#"{"noise_eta": 0.5, "distance": "ncom"}"#).unwrap();
        assert_eq!(parsed.n_observables, 100);
        assert_eq!(parsed.distance, DistanceKind::Ncom);
    }

    #[test]
    fn noiseless_instruments_act_as_dephasing() {
        let mut g = RandomStream::new(8);
        let obs: Vec<_> = (0..5)
            .map(|_| BlochObservable::new(random_unit_vector3(&mut g)).unwrap())
            .collect();
        let chans = gen_noisy_instruments(&obs, 0.0, &RandomStream::new(4)).unwrap();
        let mut rng = RandomStream::new(5);
        for ((ch, nm), o) in chans.iter().zip(&obs) {
            assert_eq!(nm.lambda, 0.0);
            let rho = random_density(2, &mut rng);
            let lhs = apply_channel(ch, &rho).unwrap();
            let rhs = apply_channel(&dephasing_channel(&bloch_to_pvm(o)), &rho).unwrap();
            assert!(lhs.matrix().approx_eq(rhs.matrix(), 1e-12));
        }
    }

    #[test]
    fn noisy_instruments_respect_eta_and_completeness() {
        let mut g = RandomStream::new(6);
        let obs: Vec<_> = (0..50)
            .map(|_| BlochObservable::new(random_unit_vector3(&mut g)).unwrap())
            .collect();
        for eta in [0.25, 0.5, 1.0] {
            for (ch, nm) in gen_noisy_instruments(&obs, eta, &RandomStream::new(7)).unwrap() {
                assert!(nm.lambda <= eta);
                let mut sum = crate::linalg::ComplexMatrix::zeros(2, 2);
                for k in ch.kraus() {
                    sum = &sum + &k.dagger().matmul(k).unwrap();
                }
                assert!(sum.approx_eq(&crate::linalg::ComplexMatrix::identity(2), 1e-8));
            }
        }
        assert!(gen_noisy_instruments(&obs, -0.1, &RandomStream::new(7)).is_err());
    }

    #[test]
    fn med_and_ncom_distances_agree_without_noise() {
        let base = ExperimentConfig {
            n_observables: 20,
            restarts: 5,
            seed: 11,
            ..Default::default()
        };
        let a = run_cluster_experiment(&base).unwrap();
        let b = run_cluster_experiment(&ExperimentConfig {
            distance: DistanceKind::Ncom,
            ..base.clone()
        })
        .unwrap();
        for i in 0..20 {
            for j in 0..20 {
                assert!((a.distances.get(i, j) - b.distances.get(i, j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn four_points_without_scatter_pick_base_axes() {
        let cfg = ExperimentConfig {
            n_observables: 4,
            max_angle_deg: 0.0,
            restarts: 3,
            ..Default::default()
        };
        let out = run_cluster_experiment(&cfg).unwrap();
        assert_eq!(out.purity, 1.0);
        let mut medoid_axes: Vec<usize> =
            out.result.medoids.iter().map(|&m| out.truth[m]).collect();
        medoid_axes.sort();
        assert_eq!(medoid_axes, vec![0, 1]);
        for &m in &out.result.medoids {
            let v = out.observables[m].vector();
            assert!(angle_deg(v, cfg.base_axes[out.truth[m]]) < 1e-6);
        }
    }

    #[test]
    fn experiment_is_reproducible() {
        let cfg = ExperimentConfig {
            n_observables: 20,
            restarts: 4,
            distance: DistanceKind::NcomEstimated,
            epsilon: 0.05,
            noise_eta: 0.3,
            seed: 5,
            ..Default::default()
        };
        assert_eq!(
            run_cluster_experiment(&cfg).unwrap(),
            run_cluster_experiment(&cfg).unwrap()
        );
    }

    #[test]
    fn bounds_check_small() {
        let r = bounds_check(&[2, 3], 100, 1).unwrap();
        assert!(r.passed);
        assert_eq!(r.violations, 0);
        assert!((r.bell_product_ncom - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
        assert!((r.mub[1].med - (2.0f64 / 3.0).sqrt()).abs() < 1e-10);
        assert!(bounds_check(&[7], 1, 1).is_err());
    }
}
