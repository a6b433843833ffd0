//! Quantum-switch experiment: coherent superposition of the two orders of a
//! pair of channels, exact control-qubit statistics, and shot-level
//! estimators.
//!
//! Tensor ordering is system ⊗ control, with the control qubit as the last
//! factor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::incompat;
use crate::linalg::{kron, matmul, partial_trace, re, ComplexMatrix};
use crate::quantum::{DensityMatrix, KrausChannel, ProjectorFamily};
use crate::rng::RandomStream;

/// Kraus operators `S_ij = C_i D_j ⊗ |0><0| + D_j C_i ⊗ |1><1|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchChannel {
    system_dim: usize,
    kraus: Vec<ComplexMatrix>,
}

impl SwitchChannel {
    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// The switch as an ordinary channel on system ⊗ control.
    pub fn as_channel(&self) -> Result<KrausChannel> {
        KrausChannel::new(self.kraus.clone())
    }
}

fn control_projector(bit: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2, 2);
    m[(bit, bit)] = re(1.0);
    m
}

pub fn build_switch(c: &KrausChannel, d: &KrausChannel) -> Result<SwitchChannel> {
    if !c.is_square() || !d.is_square() || c.dim() != d.dim() {
        return Err(Error::DimensionMismatch(format!(
            "switch needs two channels on the same system, got {} and {}",
            c.dim(),
            d.dim()
        )));
    }
    let p0 = control_projector(0);
    let p1 = control_projector(1);
    let mut kraus = Vec::with_capacity(c.kraus().len() * d.kraus().len());
    for ci in c.kraus() {
        for dj in d.kraus() {
            let cd = matmul(ci, dj)?;
            let dc = matmul(dj, ci)?;
            kraus.push(&kron(&cd, &p0) + &kron(&dc, &p1));
        }
    }
    Ok(SwitchChannel {
        system_dim: c.dim(),
        kraus,
    })
}

/// `Σ_ij S_ij (ρ ⊗ ω) S_ij†` on system ⊗ control.
pub fn apply_switch(
    sw: &SwitchChannel,
    rho: &DensityMatrix,
    omega: &DensityMatrix,
) -> Result<DensityMatrix> {
    if rho.dim() != sw.system_dim {
        return Err(Error::DimensionMismatch(format!(
            "system state is {}-dimensional, switch acts on {}",
            rho.dim(),
            sw.system_dim
        )));
    }
    if omega.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "control state must be a qubit, got dimension {}",
            omega.dim()
        )));
    }
    let joint = kron(rho.matrix(), omega.matrix());
    let mut out = ComplexMatrix::zeros(joint.rows(), joint.cols());
    for s in &sw.kraus {
        out = &out + &matmul(&matmul(s, &joint)?, &s.dagger())?;
    }
    Ok(DensityMatrix::new_unchecked(out))
}

/// Reduced state of the control qubit.
pub fn control_marginal(state: &DensityMatrix) -> Result<ComplexMatrix> {
    let n = state.dim();
    if !n.is_multiple_of(2) {
        return Err(Error::DimensionMismatch(
            "state has no control qubit".into(),
        ));
    }
    partial_trace(state.matrix(), &[n / 2, 2], &[0])
}

/// Reduced state of the target system.
pub fn system_marginal(state: &DensityMatrix) -> Result<ComplexMatrix> {
    let n = state.dim();
    if !n.is_multiple_of(2) {
        return Err(Error::DimensionMismatch(
            "state has no control qubit".into(),
        ));
    }
    partial_trace(state.matrix(), &[n / 2, 2], &[1])
}

/// `|+><+|` on the control qubit.
pub fn plus_state() -> DensityMatrix {
    DensityMatrix::new_unchecked(ComplexMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]))
}

/// `<−| σ |−>` for a qubit operator.
pub fn minus_expectation(control: &ComplexMatrix) -> f64 {
    0.5 * (control[(0, 0)] - control[(0, 1)] - control[(1, 0)] + control[(1, 1)]).re
}

/// Exact probability of the `−` outcome with control prepared in `|+>`.
pub fn exact_p_minus(c: &KrausChannel, d: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    incompat::p_minus(c, d, rho)
}

/// Number of repetitions guaranteeing `|p̂ − p| < ε` with probability
/// at least `1 − δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub epsilon: f64,
    pub delta: f64,
    pub shots: u64,
}

/// `n(ε, δ) = ⌈ −ln(δ/2) / (2ε²) ⌉`.
pub fn hoeffding_shots(epsilon: f64, delta: f64) -> Result<SamplingPlan> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let n = (-(delta / 2.0).ln() / (2.0 * epsilon * epsilon)).ceil();
    if n > u64::MAX as f64 {
        return Err(Error::InvalidArgument(
            "plan needs more than 2^64 shots".into(),
        ));
    }
    Ok(SamplingPlan {
        epsilon,
        delta,
        shots: (n as u64).max(1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub p_minus_hat: f64,
    pub ncom_hat: f64,
    pub shots: u64,
    pub seed: u64,
    pub exact_p_minus: Option<f64>,
}

/// Runs the switch experiment `plan.shots` times with control in `|+>` and
/// counts `−` outcomes on the control qubit.
///
/// `p₋` is computed exactly first; every shot is then an independent
/// Bernoulli draw with that probability, which has the same statistics as
/// measuring the control qubit of a freshly prepared switch.
pub fn estimate_ncom_switch(
    c: &KrausChannel,
    d: &KrausChannel,
    rho: &DensityMatrix,
    plan: &SamplingPlan,
    rng: &mut RandomStream,
) -> Result<EstimationResult> {
    let p = exact_p_minus(c, d, rho)?;
    let minus = (0..plan.shots).filter(|_| rng.bernoulli(p)).count() as u64;
    let p_hat = minus as f64 / plan.shots as f64;
    Ok(EstimationResult {
        p_minus_hat: p_hat,
        ncom_hat: (2.0 * p_hat).sqrt(),
        shots: plan.shots,
        seed: rng.seed(),
        exact_p_minus: Some(p),
    })
}

/// Prepare–measure–measure estimator of the MED: the maximally mixed state
/// is measured with `a`, then `b`, then `a` again, and the frequency of equal
/// outcomes of the two `a` measurements estimates `1 − MED²`.
///
/// Each trajectory is sampled outcome by outcome with Lüders updates. Inside
/// a degenerate eigenspace the post-measurement state `P_i / rank(P_i)` is
/// used, which has the same downstream statistics as a uniformly random
/// eigenstate.
pub fn estimate_med_sequential(
    a: &ProjectorFamily,
    b: &ProjectorFamily,
    shots: u64,
    rng: &mut RandomStream,
) -> Result<EstimationResult> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "measurement dimensions: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    if shots == 0 {
        return Err(Error::InvalidArgument("need at least one shot".into()));
    }
    let d = a.dim() as f64;
    let ranks = a.ranks();
    let first: Vec<f64> = ranks.iter().map(|&r| r as f64 / d).collect();

    // second[i][j] = Tr[Q_j P_i] / rank_i
    // third[i][j][k] = Tr[P_k Q_j P_i Q_j] / Tr[Q_j P_i]
    let mut second = vec![vec![0.0; b.len()]; a.len()];
    let mut third = vec![vec![vec![0.0; a.len()]; b.len()]; a.len()];
    for (i, p) in a.projectors().iter().enumerate() {
        for (j, q) in b.projectors().iter().enumerate() {
            let qp = matmul(q, p)?;
            let weight = qp.trace()?.re.max(0.0);
            second[i][j] = weight / ranks[i] as f64;
            if weight <= 1e-15 {
                continue;
            }
            let post = matmul(&qp, q)?;
            for (k, pk) in a.projectors().iter().enumerate() {
                third[i][j][k] = (crate::linalg::trace_product(pk, &post)?.re / weight).max(0.0);
            }
        }
    }

    let mut same = 0u64;
    for _ in 0..shots {
        let i = rng.categorical(&first).expect("ranks sum to d");
        let j = rng
            .categorical(&second[i])
            .expect("Born weights sum to one");
        let k = rng
            .categorical(&third[i][j])
            .expect("Born weights sum to one");
        if i == k {
            same += 1;
        }
    }
    let prob_hat = same as f64 / shots as f64;
    let exact = incompat::med(a, b)?.powi(2);
    Ok(EstimationResult {
        p_minus_hat: (1.0 - prob_hat) / 2.0,
        ncom_hat: (1.0 - prob_hat).max(0.0).sqrt(),
        shots,
        seed: rng.seed(),
        exact_p_minus: Some((exact / 2.0).max(0.0)),
    })
}
