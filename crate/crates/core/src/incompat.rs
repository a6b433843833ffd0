//! Mutual eigenspace disturbance (MED) and channel noncommutativity (NCOM).
//!
//! NCOM is evaluated along three independent routes:
//!
//! * [`ncom`]: the commutator sum `Σ_ij Tr(ρ |[C_i, D_j]|²) / 2`,
//! * [`ncom_via_choi`]: `1 − Re Tr[D Č (I ⊗ ρᵀ)]` built from the transfer
//!   operator of one channel and the Choi operator of the other,
//! * [`ncom_via_dilation`]: the overlap of the two pure states obtained by
//!   running Stinespring dilations of the channels in both orders on a
//!   purification of `ρ`.
//!
//! Vectorisation is row-major throughout: `|X>> = Σ_mn X_mn |m>|n>`, so that
//! `(A ⊗ B)|X>> = |A X Bᵀ>>`.

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, inner, kron, matmul, partial_trace, psd_sqrt, re, trace_product, vec_norm,
    Complex, ComplexMatrix,
};
use crate::quantum::{dephasing_channel, DensityMatrix, KrausChannel, ProjectorFamily};

/// Largest joint state `d·|E|·|F|·d_R` the dilation route will build.
pub const DILATION_BUDGET: usize = 4096;

fn check_dims(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

#[inline]
fn clamped_sqrt(x: f64) -> f64 {
    x.max(0.0).sqrt()
}

/// `Σ_ij Tr[ρ P_i Q_j P_i Q_j]` as a complex number. The real part is what
/// enters the generalized MED; the imaginary part vanishes whenever `ρ`
/// commutes with one of the two measurements.
pub fn disturbance_overlap(
    a: &ProjectorFamily,
    b: &ProjectorFamily,
    rho: &DensityMatrix,
) -> Result<Complex> {
    check_dims(a.dim(), b.dim(), "measurement dimensions")?;
    check_dims(a.dim(), rho.dim(), "state dimension")?;
    let mut acc = Complex::new(0.0, 0.0);
    for p in a.projectors() {
        let rho_p = matmul(rho.matrix(), p)?;
        for q in b.projectors() {
            let pq = matmul(p, q)?;
            let rho_pq = matmul(&rho_p, q)?;
            acc += trace_product(&rho_pq, &pq)?;
        }
    }
    Ok(acc)
}

/// Probability that an eigenstate of `A` stays in its eigenspace after a
/// Lüders measurement of `B`: `(1/d) Σ_ij Tr[P_i Q_j P_i Q_j]`.
pub fn prob_same_eigenspace(a: &ProjectorFamily, b: &ProjectorFamily) -> Result<f64> {
    check_dims(a.dim(), b.dim(), "measurement dimensions")?;
    let mut acc = 0.0;
    for p in a.projectors() {
        for q in b.projectors() {
            let pq = matmul(p, q)?;
            acc += trace_product(&pq, &pq)?.re;
        }
    }
    Ok(acc / a.dim() as f64)
}

/// `Σ_ij Tr(ρ |[P_i, Q_j]|²)`, which equals `2 (1 − Re Σ_ij Tr[ρ P_i Q_j P_i Q_j])`.
/// As a sum of nonnegative terms it keeps full relative precision when the
/// measurements nearly commute, where `1 − overlap` would cancel.
fn projector_commutator_mass(
    a: &ProjectorFamily,
    b: &ProjectorFamily,
    rho: Option<&DensityMatrix>,
) -> Result<f64> {
    check_dims(a.dim(), b.dim(), "measurement dimensions")?;
    if let Some(rho) = rho {
        check_dims(a.dim(), rho.dim(), "state dimension")?;
    }
    let mut acc = 0.0;
    for p in a.projectors() {
        for q in b.projectors() {
            let comm = p.commutator(q)?;
            acc += match rho {
                Some(rho) => trace_product(rho.matrix(), &matmul(&comm.dagger(), &comm)?)?.re,
                None => comm.frobenius_norm().powi(2),
            };
        }
    }
    Ok(acc)
}

/// `√(1 − Prob(A, B))`, evaluated as `√(Σ_ij ‖[P_i, Q_j]‖² / 2d)`.
pub fn med(a: &ProjectorFamily, b: &ProjectorFamily) -> Result<f64> {
    Ok(clamped_sqrt(
        projector_commutator_mass(a, b, None)? / (2.0 * a.dim() as f64),
    ))
}

/// `√(1 − Re Σ_ij Tr[ρ P_i Q_j P_i Q_j])`, evaluated through the commutator
/// sum for the same reason as [`med`].
pub fn gmed(a: &ProjectorFamily, b: &ProjectorFamily, rho: &DensityMatrix) -> Result<f64> {
    Ok(clamped_sqrt(
        projector_commutator_mass(a, b, Some(rho))? / 2.0,
    ))
}

/// `Σ_ij Tr(ρ |[C_i, D_j]|²)`.
fn commutator_mass(c: &KrausChannel, d: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    check_dims(c.dim(), d.dim(), "channel dimensions")?;
    check_dims(c.dim(), rho.dim(), "state dimension")?;
    let mut acc = 0.0;
    for ci in c.kraus() {
        for dj in d.kraus() {
            let comm = ci.commutator(dj)?;
            let sq = matmul(&comm.dagger(), &comm)?;
            acc += trace_product(rho.matrix(), &sq)?.re;
        }
    }
    Ok(acc)
}

/// `√(Σ_ij Tr(ρ |[C_i, D_j]|²) / 2)`.
pub fn ncom(c: &KrausChannel, d: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    Ok(clamped_sqrt(commutator_mass(c, d, rho)? / 2.0))
}

/// Probability of the `−` outcome on the control qubit of the switch:
/// `¼ Σ_ij Tr(ρ |[C_i, D_j]|²)`.
pub fn p_minus(c: &KrausChannel, d: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    Ok((commutator_mass(c, d, rho)? / 4.0).clamp(0.0, 1.0))
}

/// Matrix `Č` with `Č|X>> = |C(X)>>`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOperator {
    system_dim: usize,
    matrix: ComplexMatrix,
}

impl TransferOperator {
    /// Dimension `d²` of the operator.
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Applies the channel to `x` through its vectorisation.
    pub fn act(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_dims(x.rows(), self.system_dim, "operator dimension")?;
        let out = self.matrix.apply(&x.vectorize())?;
        ComplexMatrix::unvectorize(&out, self.system_dim, self.system_dim)
    }
}

/// `Č = Σ_i C_i ⊗ C̄_i`.
pub fn build_transfer(c: &KrausChannel) -> TransferOperator {
    let n = c.dim_out() * c.dim_out();
    let m = c.dim_in() * c.dim_in();
    let mut matrix = ComplexMatrix::zeros(n, m);
    for k in c.kraus() {
        matrix = &matrix + &kron(k, &k.conj());
    }
    TransferOperator {
        system_dim: c.dim(),
        matrix,
    }
}

/// Choi operator `Σ_mn C(|m><n|) ⊗ |m><n|`, output factor first.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiOperator {
    dim_in: usize,
    dim_out: usize,
    matrix: ComplexMatrix,
}

impl ChoiOperator {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Checks Hermiticity (1e-9), positivity (1e-8) and that tracing out the
    /// output leaves the identity on the input (1e-8).
    pub fn validate(&self) -> Result<()> {
        let dev = self.matrix.hermitian_deviation();
        if dev > 1e-9 {
            return Err(Error::InvalidChannel(format!(
                "Choi operator not Hermitian ({dev:e})"
            )));
        }
        let min = hermitian_eig(&self.matrix)?.eigenvalues[0];
        if min < -1e-8 {
            return Err(Error::InvalidChannel(format!(
                "Choi operator not PSD ({min:e})"
            )));
        }
        let reduced = partial_trace(&self.matrix, &[self.dim_out, self.dim_in], &[0])?;
        if !reduced.approx_eq(&ComplexMatrix::identity(self.dim_in), 1e-8) {
            return Err(Error::InvalidChannel(
                "Choi operator is not trace preserving".into(),
            ));
        }
        Ok(())
    }
}

/// `Σ_j |D_j>><<D_j|`.
pub fn build_choi(c: &KrausChannel) -> ChoiOperator {
    let n = c.dim_out() * c.dim_in();
    let mut matrix = ComplexMatrix::zeros(n, n);
    for k in c.kraus() {
        let v = k.vectorize();
        matrix = &matrix + &ComplexMatrix::outer(&v, &v);
    }
    ChoiOperator {
        dim_in: c.dim_in(),
        dim_out: c.dim_out(),
        matrix,
    }
}

/// `√(1 − Re Tr[D Č (I ⊗ ρᵀ)])` with `Č` from `c` and Choi operator `D` of `d`.
pub fn ncom_via_choi(c: &KrausChannel, d: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    check_dims(c.dim(), d.dim(), "channel dimensions")?;
    check_dims(c.dim(), rho.dim(), "state dimension")?;
    let transfer = build_transfer(c);
    let choi = build_choi(d);
    let weight = kron(&ComplexMatrix::identity(c.dim()), &rho.matrix().transpose());
    let dc = matmul(choi.matrix(), transfer.matrix())?;
    let value = trace_product(&dc, &weight)?;
    Ok(clamped_sqrt(1.0 - value.re))
}

/// Unitary on system ⊗ environment whose action on `|ψ>|0>` is
/// `Σ_i K_i|ψ>|i>`. The remaining columns are an orthonormal completion
/// obtained by modified Gram-Schmidt over the standard basis.
pub fn stinespring_unitary(ch: &KrausChannel) -> Result<ComplexMatrix> {
    if !ch.is_square() {
        return Err(Error::InvalidChannel(
            "dilation needs a square channel".into(),
        ));
    }
    let d = ch.dim();
    let env = ch.kraus().len();
    let n = d * env;
    let mut cols: Vec<Vec<Complex>> = Vec::with_capacity(n);
    for s in 0..d {
        let mut v = vec![re(0.0); n];
        for (i, k) in ch.kraus().iter().enumerate() {
            for sp in 0..d {
                v[sp * env + i] = k[(sp, s)];
            }
        }
        cols.push(v);
    }
    let mut extra = Vec::with_capacity(n - d);
    for cand in 0..n {
        if cols.len() + extra.len() == n {
            break;
        }
        let mut v = vec![re(0.0); n];
        v[cand] = re(1.0);
        // two passes of MGS for numerical orthogonality
        for _ in 0..2 {
            for u in cols.iter().chain(extra.iter()) {
                let proj = inner(u, &v);
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= proj * y;
                }
            }
        }
        let norm = vec_norm(&v);
        if norm < 1e-8 {
            continue;
        }
        extra.push(v.into_iter().map(|z| z / norm).collect::<Vec<_>>());
    }
    if cols.len() + extra.len() != n {
        return Err(Error::InvalidChannel(
            "could not complete the isometry".into(),
        ));
    }
    // column order: (s, e = 0) holds the isometry, the rest fill in order
    let mut u = ComplexMatrix::zeros(n, n);
    let mut extra_iter = extra.into_iter();
    for s in 0..d {
        for e in 0..env {
            let col = if e == 0 {
                cols[s].clone()
            } else {
                extra_iter.next().expect("count checked")
            };
            for (r, z) in col.into_iter().enumerate() {
                u[(r, s * env + e)] = z;
            }
        }
    }
    Ok(u)
}

/// Layout of the joint state S ⊗ E ⊗ F ⊗ R used by the dilation route.
struct JointLayout {
    s: usize,
    e: usize,
    f: usize,
    r: usize,
}

impl JointLayout {
    #[inline]
    fn index(&self, s: usize, e: usize, f: usize, r: usize) -> usize {
        ((s * self.e + e) * self.f + f) * self.r + r
    }

    fn len(&self) -> usize {
        self.s * self.e * self.f * self.r
    }

    /// Applies `u` acting on S ⊗ E (S most significant).
    fn apply_se(&self, u: &ComplexMatrix, psi: &[Complex]) -> Vec<Complex> {
        let mut out = vec![re(0.0); psi.len()];
        for s in 0..self.s {
            for e in 0..self.e {
                let row = s * self.e + e;
                for s2 in 0..self.s {
                    for e2 in 0..self.e {
                        let w = u[(row, s2 * self.e + e2)];
                        if w.re == 0.0 && w.im == 0.0 {
                            continue;
                        }
                        for f in 0..self.f {
                            for r in 0..self.r {
                                out[self.index(s, e, f, r)] += w * psi[self.index(s2, e2, f, r)];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Applies `v` acting on S ⊗ F (S most significant).
    fn apply_sf(&self, v: &ComplexMatrix, psi: &[Complex]) -> Vec<Complex> {
        let mut out = vec![re(0.0); psi.len()];
        for s in 0..self.s {
            for f in 0..self.f {
                let row = s * self.f + f;
                for s2 in 0..self.s {
                    for f2 in 0..self.f {
                        let w = v[(row, s2 * self.f + f2)];
                        if w.re == 0.0 && w.im == 0.0 {
                            continue;
                        }
                        for e in 0..self.e {
                            for r in 0..self.r {
                                out[self.index(s, e, f, r)] += w * psi[self.index(s2, e, f2, r)];
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// `√(1 − Re<Λ₀|Λ₁>)` where `Λ₀` runs the dilation of `d` then `c`, and `Λ₁`
/// runs them in the opposite order, both on a purification of `ρ`.
pub fn ncom_via_dilation(c: &KrausChannel, d: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    check_dims(c.dim(), d.dim(), "channel dimensions")?;
    check_dims(c.dim(), rho.dim(), "state dimension")?;
    let eig = hermitian_eig(rho.matrix())?;
    let support: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&k| eig.eigenvalues[k] > 1e-12)
        .collect();
    let layout = JointLayout {
        s: c.dim(),
        e: c.kraus().len(),
        f: d.kraus().len(),
        r: support.len().max(1),
    };
    if layout.len() > DILATION_BUDGET {
        return Err(Error::DilationBudget(layout.len(), DILATION_BUDGET));
    }
    let u = stinespring_unitary(c)?;
    let v = stinespring_unitary(d)?;

    // |Ψ> = Σ_k √λ_k |v_k>|k>, environments in |0>
    let mut psi = vec![re(0.0); layout.len()];
    for (slot, &k) in support.iter().enumerate() {
        let w = eig.eigenvalues[k].sqrt();
        for s in 0..layout.s {
            psi[layout.index(s, 0, 0, slot)] = eig.eigenvectors[(s, k)] * w;
        }
    }

    let lambda0 = layout.apply_se(&u, &layout.apply_sf(&v, &psi));
    let lambda1 = layout.apply_sf(&v, &layout.apply_se(&u, &psi));
    Ok(clamped_sqrt(1.0 - inner(&lambda0, &lambda1).re))
}

/// `√(1 − 1/min(k_A, k_B))`.
pub fn med_upper_bound(k_a: usize, k_b: usize) -> f64 {
    let k = k_a.min(k_b).max(1) as f64;
    clamped_sqrt(1.0 - 1.0 / k)
}

/// `(1/√2) ‖(τ_A − τ_B)(√ρ ⊗ I)‖₂` for two von Neumann measurements.
pub fn metric_distance_form(
    a: &ProjectorFamily,
    b: &ProjectorFamily,
    rho: &DensityMatrix,
) -> Result<f64> {
    check_dims(a.dim(), b.dim(), "measurement dimensions")?;
    check_dims(a.dim(), rho.dim(), "state dimension")?;
    if !a.is_von_neumann() || !b.is_von_neumann() {
        return Err(Error::InvalidProjectorFamily(
            "metric form requires rank-1 projectors".into(),
        ));
    }
    let tau_a = build_choi(&dephasing_channel(a));
    let tau_b = build_choi(&dephasing_channel(b));
    let diff = tau_a.matrix() - tau_b.matrix();
    let weight = kron(&psd_sqrt(rho.matrix())?, &ComplexMatrix::identity(a.dim()));
    Ok(matmul(&diff, &weight)?.frobenius_norm() / std::f64::consts::SQRT_2)
}

/// `max_ij ‖[P_i, Q_j]‖₂`.
pub fn max_commutator_norm(a: &ProjectorFamily, b: &ProjectorFamily) -> Result<f64> {
    check_dims(a.dim(), b.dim(), "measurement dimensions")?;
    let mut worst: f64 = 0.0;
    for p in a.projectors() {
        for q in b.projectors() {
            worst = worst.max(p.commutator(q)?.frobenius_norm());
        }
    }
    Ok(worst)
}
