//! Observables, projective measurements, states and channels.

use crate::error::{Error, Result};
use crate::linalg::{
    c, hermitian_eig, kron, matmul, psd_sqrt, re, Complex, ComplexMatrix, DEGENERACY_TOL,
};

/// Tolerance for projector idempotence, orthogonality and completeness.
pub const PROJECTOR_TOL: f64 = 1e-9;
/// Tolerance for Kraus completeness `Σ K†K = I`.
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Tolerance for the density-matrix invariants.
pub const DENSITY_TOL: f64 = 1e-10;

const DROP_KRAUS_BELOW: f64 = 1e-14;

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_vec(2, 2, vec![re(0.0), c(0.0, -1.0), c(0.0, 1.0), re(0.0)]).unwrap()
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

/// Complete family of mutually orthogonal projectors (a PVM).
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorFamily {
    dim: usize,
    projectors: Vec<ComplexMatrix>,
    labels: Option<Vec<String>>,
}

impl ProjectorFamily {
    pub fn new(projectors: Vec<ComplexMatrix>) -> Result<Self> {
        let first = projectors
            .first()
            .ok_or_else(|| Error::InvalidProjectorFamily("no projectors".into()))?;
        let dim = first.rows();
        for (i, p) in projectors.iter().enumerate() {
            if p.rows() != dim || p.cols() != dim {
                return Err(Error::InvalidProjectorFamily(format!(
                    "projector {i} is {}x{}, expected {dim}x{dim}",
                    p.rows(),
                    p.cols()
                )));
            }
            if !p.is_hermitian(PROJECTOR_TOL) {
                return Err(Error::InvalidProjectorFamily(format!(
                    "projector {i} is not Hermitian"
                )));
            }
            let p2 = matmul(p, p)?;
            if !p2.approx_eq(p, PROJECTOR_TOL) {
                return Err(Error::InvalidProjectorFamily(format!(
                    "projector {i} is not idempotent (‖P²−P‖ = {:e})",
                    p2.distance(p)
                )));
            }
        }
        for i in 0..projectors.len() {
            for j in (i + 1)..projectors.len() {
                let pq = matmul(&projectors[i], &projectors[j])?;
                if pq.frobenius_norm() > PROJECTOR_TOL {
                    return Err(Error::InvalidProjectorFamily(format!(
                        "projectors {i} and {j} are not orthogonal"
                    )));
                }
            }
        }
        let sum = projectors
            .iter()
            .fold(ComplexMatrix::zeros(dim, dim), |acc, p| &acc + p);
        if !sum.approx_eq(&ComplexMatrix::identity(dim), PROJECTOR_TOL) {
            return Err(Error::InvalidProjectorFamily(format!(
                "projectors do not sum to the identity (‖ΣP−I‖ = {:e})",
                sum.distance(&ComplexMatrix::identity(dim))
            )));
        }
        Ok(Self {
            dim,
            projectors,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.projectors.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} projectors",
                labels.len(),
                self.projectors.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// PVM from orthonormal columns of `basis`, grouping columns as given.
    pub fn from_basis_groups(basis: &ComplexMatrix, groups: &[Vec<usize>]) -> Result<Self> {
        let projectors = groups
            .iter()
            .map(|g| {
                let mut p = ComplexMatrix::zeros(basis.rows(), basis.rows());
                for &k in g {
                    let v = basis.column(k);
                    p = &p + &ComplexMatrix::outer(&v, &v);
                }
                p
            })
            .collect();
        Self::new(projectors)
    }

    /// Rank-1 PVM onto the columns of a unitary.
    pub fn from_basis(basis: &ComplexMatrix) -> Result<Self> {
        let groups: Vec<Vec<usize>> = (0..basis.cols()).map(|k| vec![k]).collect();
        Self::from_basis_groups(basis, &groups)
    }

    pub fn computational(dim: usize) -> Self {
        Self::from_basis(&ComplexMatrix::identity(dim)).expect("identity is unitary")
    }

    /// Rank-1 PVM onto the discrete Fourier basis `|f_k> = Σ_j ω^{jk}|j>/√d`.
    /// Together with [`ProjectorFamily::computational`] it forms a pair of
    /// mutually unbiased bases.
    pub fn fourier(dim: usize) -> Self {
        Self::from_basis(&fourier_matrix(dim)).expect("Fourier matrix is unitary")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of outcomes.
    #[inline]
    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.projectors
            .iter()
            .map(|p| (0..self.dim).map(|i| p[(i, i)].re).sum::<f64>().round() as usize)
            .collect()
    }

    /// All projectors rank 1 (non-degenerate observable).
    pub fn is_von_neumann(&self) -> bool {
        self.ranks().iter().all(|&r| r == 1)
    }

    /// Observable `Σ_i values[i] P_i`.
    pub fn observable(&self, values: &[f64]) -> Result<ComplexMatrix> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} eigenvalues for {} projectors",
                values.len(),
                self.len()
            )));
        }
        Ok(self
            .projectors
            .iter()
            .zip(values)
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, (p, &v)| {
                &acc + &p.scale_real(v)
            }))
    }

    /// Same projector set up to ordering, within `tol` (Frobenius).
    pub fn same_projectors(&self, other: &Self, tol: f64) -> bool {
        if self.dim != other.dim || self.len() != other.len() {
            return false;
        }
        let mut used = vec![false; other.len()];
        'outer: for p in &self.projectors {
            for (j, q) in other.projectors.iter().enumerate() {
                if !used[j] && p.approx_eq(q, tol) {
                    used[j] = true;
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }
}

pub fn fourier_matrix(dim: usize) -> ComplexMatrix {
    let mut f = ComplexMatrix::zeros(dim, dim);
    let norm = 1.0 / (dim as f64).sqrt();
    for j in 0..dim {
        for k in 0..dim {
            let phase = 2.0 * std::f64::consts::PI * ((j * k) % dim) as f64 / dim as f64;
            f[(j, k)] = Complex::from_polar(norm, phase);
        }
    }
    f
}

/// Positive unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidDensityMatrix(format!(
                "not square: {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let dev = matrix.hermitian_deviation();
        if dev > DENSITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {dev:e})"
            )));
        }
        let tr = matrix.trace()?;
        if (tr - re(1.0)).norm() > DENSITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace is {} not 1",
                tr.re
            )));
        }
        let min = hermitian_eig(&matrix)?.eigenvalues[0];
        if min < -DENSITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(Self { matrix })
    }

    pub(crate) fn new_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    /// `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// `|ψ><ψ|` for a nonzero vector (normalised here).
    pub fn pure(psi: &[Complex]) -> Result<Self> {
        let n = crate::linalg::vec_norm(psi);
        if !(n > 0.0) {
            return Err(Error::InvalidDensityMatrix("zero state vector".into()));
        }
        let v: Vec<Complex> = psi.iter().map(|z| z / n).collect();
        Ok(Self {
            matrix: ComplexMatrix::outer(&v, &v),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eig(&self.matrix)
            .map(|e| e.eigenvalues[0])
            .unwrap_or(f64::NAN)
    }
}

/// Completely positive trace-preserving map given by Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        let (dim_out, dim_in) = (first.rows(), first.cols());
        if kraus
            .iter()
            .any(|k| k.rows() != dim_out || k.cols() != dim_in)
        {
            return Err(Error::InvalidChannel(
                "Kraus operators of unequal shape".into(),
            ));
        }
        let sum = kraus
            .iter()
            .fold(ComplexMatrix::zeros(dim_in, dim_in), |acc, k| {
                &acc + &matmul(&k.dagger(), k).expect("shapes checked")
            });
        let dev = sum.distance(&ComplexMatrix::identity(dim_in));
        if dev > COMPLETENESS_TOL {
            return Err(Error::InvalidChannel(format!(
                "Kraus operators are not complete (‖ΣK†K − I‖ = {dev:e})"
            )));
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim_in: dim,
            dim_out: dim,
            kraus: vec![ComplexMatrix::identity(dim)],
        }
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// System dimension of a square channel.
    pub fn dim(&self) -> usize {
        self.dim_in
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn is_square(&self) -> bool {
        self.dim_in == self.dim_out
    }

    /// `Σ_i K_i X K_i†` for an arbitrary operator `X`.
    pub fn apply_operator(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.dim_in || x.cols() != self.dim_in {
            return Err(Error::DimensionMismatch(format!(
                "channel input is {0}x{0}, operator is {1}x{2}",
                self.dim_in,
                x.rows(),
                x.cols()
            )));
        }
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out = &out + &matmul(&matmul(k, x)?, &k.dagger())?;
        }
        Ok(out)
    }

    /// Sequential composition: `self` after `first`.
    pub fn compose(&self, first: &KrausChannel) -> Result<KrausChannel> {
        if first.dim_out != self.dim_in {
            return Err(Error::DimensionMismatch("cannot compose channels".into()));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * first.kraus.len());
        for a in &self.kraus {
            for b in &first.kraus {
                kraus.push(matmul(a, b)?);
            }
        }
        Ok(KrausChannel {
            dim_in: first.dim_in,
            dim_out: self.dim_out,
            kraus,
        })
    }
}

/// `ρ ↦ Σ_i K_i ρ K_i†`.
pub fn apply_channel(ch: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    Ok(DensityMatrix::new_unchecked(
        ch.apply_operator(rho.matrix())?,
    ))
}

/// Unit Bloch vector of a qubit observable `b·σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochObservable {
    bloch: [f64; 3],
}

impl BlochObservable {
    /// Accepts vectors whose norm is within 1e-9 of one and renormalises them.
    pub fn new(bloch: [f64; 3]) -> Result<Self> {
        if bloch.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite Bloch vector".into()));
        }
        let n = (bloch[0] * bloch[0] + bloch[1] * bloch[1] + bloch[2] * bloch[2]).sqrt();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "Bloch vector has norm {n}, expected 1"
            )));
        }
        Ok(Self {
            bloch: [bloch[0] / n, bloch[1] / n, bloch[2] / n],
        })
    }

    pub fn vector(&self) -> [f64; 3] {
        self.bloch
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.bloch
            .iter()
            .zip(&other.bloch)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `b_x X + b_y Y + b_z Z`.
    pub fn observable(&self) -> ComplexMatrix {
        let [x, y, z] = self.bloch;
        &(&pauli_x().scale_real(x) + &pauli_y().scale_real(y)) + &pauli_z().scale_real(z)
    }
}

/// Eigenprojectors of a Hermitian matrix, grouped by degenerate eigenvalue
/// and ordered by ascending eigenvalue.
pub fn pvm_from_observable(a: &ComplexMatrix) -> Result<ProjectorFamily> {
    let eig = hermitian_eig(a)?;
    let groups = eig.degenerate_groups(DEGENERACY_TOL);
    ProjectorFamily::from_basis_groups(&eig.eigenvectors, &groups)
}

/// `{(I − b·σ)/2, (I + b·σ)/2}`, minus-projector first.
pub fn bloch_to_pvm(b: &BlochObservable) -> ProjectorFamily {
    let i = ComplexMatrix::identity(2);
    let s = b.observable();
    let minus = (&i - &s).scale_real(0.5);
    let plus = (&i + &s).scale_real(0.5);
    ProjectorFamily::new(vec![minus, plus]).expect("unit Bloch vector gives a PVM")
}

/// Lüders channel `ρ ↦ Σ_i P_i ρ P_i`.
pub fn dephasing_channel(p: &ProjectorFamily) -> KrausChannel {
    KrausChannel::new(p.projectors().to_vec()).expect("a PVM is a complete Kraus set")
}

/// Merges outcomes: `P'_k = Σ_{i: f(i) = k} P_i`. `f` must map onto `0..k'`.
pub fn coarse_grain(p: &ProjectorFamily, f: &[usize]) -> Result<ProjectorFamily> {
    if f.len() != p.len() {
        return Err(Error::InvalidArgument(format!(
            "map has {} entries for {} outcomes",
            f.len(),
            p.len()
        )));
    }
    let k = f.iter().max().map_or(0, |m| m + 1);
    let mut hit = vec![false; k];
    for &t in f {
        hit[t] = true;
    }
    if let Some(missing) = hit.iter().position(|h| !h) {
        return Err(Error::InvalidArgument(format!(
            "coarse-graining map is not surjective: outcome {missing} is never hit"
        )));
    }
    let mut merged = vec![ComplexMatrix::zeros(p.dim(), p.dim()); k];
    for (proj, &t) in p.projectors().iter().zip(f) {
        merged[t] = &merged[t] + proj;
    }
    ProjectorFamily::new(merged)
}

/// Noisy version of a projective measurement: mixture with a trivial
/// measurement of outcome distribution `trivial_probs`, together with the
/// Kraus coefficients `a_ij`, `b_ij` of the instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub lambda: f64,
    pub trivial_probs: Vec<f64>,
    pub a_coeffs: Vec<Vec<f64>>,
    pub b_coeffs: Vec<Vec<f64>>,
}

impl NoiseModel {
    const TOL: f64 = 1e-10;

    pub fn new(
        lambda: f64,
        trivial_probs: Vec<f64>,
        a_coeffs: Vec<Vec<f64>>,
        b_coeffs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let nm = Self {
            lambda,
            trivial_probs,
            a_coeffs,
            b_coeffs,
        };
        nm.validate()?;
        Ok(nm)
    }

    /// Noiseless model with `a_ij = δ_ij`.
    pub fn noiseless(outcomes: usize) -> Self {
        let a = (0..outcomes)
            .map(|i| {
                (0..outcomes)
                    .map(|j| if i == j { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        Self {
            lambda: 0.0,
            trivial_probs: vec![1.0 / outcomes as f64; outcomes],
            a_coeffs: a,
            b_coeffs: vec![vec![0.0; outcomes]; outcomes],
        }
    }

    pub fn outcomes(&self) -> usize {
        self.trivial_probs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidNoiseModel(m));
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda = {} outside [0, 1]", self.lambda));
        }
        let k = self.trivial_probs.len();
        if k == 0 {
            return bad("no outcomes".into());
        }
        if self.trivial_probs.iter().any(|&p| !(p >= 0.0)) {
            return bad("trivial-measurement probabilities must be nonnegative".into());
        }
        let ps: f64 = self.trivial_probs.iter().sum();
        if (ps - 1.0).abs() > Self::TOL {
            return bad(format!("trivial-measurement probabilities sum to {ps}"));
        }
        if self.a_coeffs.len() != k || self.b_coeffs.len() != k {
            return bad("coefficient matrices need one row per outcome".into());
        }
        let cols = self.a_coeffs[0].len();
        if cols == 0
            || self.a_coeffs.iter().any(|r| r.len() != cols)
            || self.b_coeffs.iter().any(|r| r.len() != cols)
        {
            return bad("coefficient matrices must be rectangular with equal shape".into());
        }
        for i in 0..k {
            if self.a_coeffs[i]
                .iter()
                .chain(&self.b_coeffs[i])
                .any(|&x| !(x >= 0.0))
            {
                return bad(format!("negative coefficient in row {i}"));
            }
            let sa: f64 = self.a_coeffs[i].iter().sum();
            if (sa - (1.0 - self.lambda)).abs() > Self::TOL {
                return bad(format!("Σ_j a_{i}j = {sa}, expected {}", 1.0 - self.lambda));
            }
            let sb: f64 = self.b_coeffs[i].iter().sum();
            let want = self.lambda * self.trivial_probs[i];
            if (sb - want).abs() > Self::TOL {
                return bad(format!("Σ_j b_{i}j = {sb}, expected {want}"));
            }
        }
        Ok(())
    }
}

/// Instrument with Kraus operators `N_ij = √(a_ij P_i + b_ij I)`.
pub fn noisy_instrument(p: &ProjectorFamily, nm: &NoiseModel) -> Result<KrausChannel> {
    nm.validate()?;
    if nm.outcomes() != p.len() {
        return Err(Error::InvalidNoiseModel(format!(
            "noise model has {} outcomes, measurement has {}",
            nm.outcomes(),
            p.len()
        )));
    }
    let id = ComplexMatrix::identity(p.dim());
    let mut kraus = Vec::new();
    for (i, proj) in p.projectors().iter().enumerate() {
        for (&a, &b) in nm.a_coeffs[i].iter().zip(&nm.b_coeffs[i]) {
            if a + b < DROP_KRAUS_BELOW {
                continue;
            }
            let op = &proj.scale_real(a) + &id.scale_real(b);
            kraus.push(psd_sqrt(&op)?);
        }
    }
    KrausChannel::new(kraus)
}

/// Bell states `Φ+, Φ−, Ψ+, Ψ−` as vectors in the computational basis.
pub fn bell_states() -> [[Complex; 4]; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (z, p, m) = (re(0.0), re(s), re(-s));
    [[p, z, z, p], [p, z, z, m], [z, p, p, z], [z, p, m, z]]
}

/// Lüders channel of the two-qubit Bell measurement.
pub fn bell_measurement_channel(d1: usize, d2: usize) -> Result<KrausChannel> {
    if (d1, d2) != (2, 2) {
        return Err(Error::InvalidArgument(format!(
            "Bell measurement fixture only exists for 2x2, got {d1}x{d2}"
        )));
    }
    let kraus = bell_states()
        .iter()
        .map(|v| ComplexMatrix::outer(v, v))
        .collect();
    KrausChannel::new(kraus)
}

/// Lüders channel of the two-qubit computational-basis product measurement.
pub fn product_measurement_channel(d1: usize, d2: usize) -> Result<KrausChannel> {
    if (d1, d2) != (2, 2) {
        return Err(Error::InvalidArgument(format!(
            "product measurement fixture only exists for 2x2, got {d1}x{d2}"
        )));
    }
    let z = ProjectorFamily::computational(2);
    let mut kraus = Vec::new();
    for a in z.projectors() {
        for b in z.projectors() {
            kraus.push(kron(a, b));
        }
    }
    KrausChannel::new(kraus)
}
