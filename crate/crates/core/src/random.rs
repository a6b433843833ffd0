//! Random quantum objects for tests and experiments.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::linalg::{c, inner, Complex, ComplexMatrix};
use crate::quantum::{DensityMatrix, KrausChannel, ProjectorFamily};
use crate::rng::RandomStream;

pub fn standard_normal(rng: &mut RandomStream) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex Gaussian with `E|z|² = 1`.
pub fn complex_normal(rng: &mut RandomStream) -> Complex {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    c(s * standard_normal(rng), s * standard_normal(rng))
}

/// Ginibre matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre(rows: usize, cols: usize, rng: &mut RandomStream) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| complex_normal(rng)).collect();
    ComplexMatrix::from_vec(rows, cols, data).expect("finite Gaussian entries")
}

/// Haar-distributed unitary: Gram–Schmidt on the columns of a Ginibre
/// matrix (equivalent to QR with a positive diagonal in `R`).
pub fn haar_unitary(d: usize, rng: &mut RandomStream) -> ComplexMatrix {
    loop {
        let g = ginibre(d, d, rng);
        let mut cols: Vec<Vec<Complex>> = Vec::with_capacity(d);
        let mut ok = true;
        for k in 0..d {
            let mut v = g.column(k);
            for _ in 0..2 {
                for u in &cols {
                    let proj = inner(u, &v);
                    for (x, y) in v.iter_mut().zip(u) {
                        *x -= proj * y;
                    }
                }
            }
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if n < 1e-10 {
                ok = false;
                break;
            }
            v.iter_mut().for_each(|x| *x /= n);
            cols.push(v);
        }
        if ok {
            let mut u = ComplexMatrix::zeros(d, d);
            for (k, col) in cols.iter().enumerate() {
                for (r, &z) in col.iter().enumerate() {
                    u[(r, k)] = z;
                }
            }
            return u;
        }
    }
}

/// Rank-1 PVM onto a Haar-random basis.
pub fn random_von_neumann(d: usize, rng: &mut RandomStream) -> ProjectorFamily {
    ProjectorFamily::from_basis(&haar_unitary(d, rng))
        .expect("Haar unitary columns are orthonormal")
}

/// Random partition of `0..d` into `k` nonempty groups.
pub fn random_partition(d: usize, k: usize, rng: &mut RandomStream) -> Vec<Vec<usize>> {
    assert!(k >= 1 && k <= d);
    let mut perm: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        perm.swap(i, rng.index(i + 1));
    }
    // the first k shuffled elements seed one group each; the rest land anywhere
    let mut groups: Vec<Vec<usize>> = perm[..k].iter().map(|&x| vec![x]).collect();
    for &x in &perm[k..] {
        groups[rng.index(k)].push(x);
    }
    groups
}

/// PVM on a Haar-random basis with a random number of outcomes in `1..=d`
/// and random degeneracies.
pub fn random_pvm(d: usize, rng: &mut RandomStream) -> ProjectorFamily {
    let k = 1 + rng.index(d);
    random_pvm_with_outcomes(d, k, rng)
}

pub fn random_pvm_with_outcomes(d: usize, k: usize, rng: &mut RandomStream) -> ProjectorFamily {
    let u = haar_unitary(d, rng);
    let groups = random_partition(d, k, rng);
    ProjectorFamily::from_basis_groups(&u, &groups).expect("Haar unitary columns are orthonormal")
}

/// `G G† / Tr(G G†)` for a square Ginibre `G`; full rank almost surely.
pub fn random_density(d: usize, rng: &mut RandomStream) -> DensityMatrix {
    loop {
        let g = ginibre(d, d, rng);
        let m = g.matmul(&g.dagger()).expect("square");
        let t = m.trace().expect("square").re;
        let rho = m.scale_real(1.0 / t);
        // keep the state comfortably invertible
        if let Ok(dm) = DensityMatrix::new(rho) {
            if dm.min_eigenvalue() > 1e-6 {
                return dm;
            }
        }
    }
}

/// Diagonal state in the eigenbasis of `basis` with random full-support
/// weights.
pub fn random_diagonal_density(basis: &ComplexMatrix, rng: &mut RandomStream) -> DensityMatrix {
    let d = basis.rows();
    let w = loop {
        let w = random_simplex(d, rng);
        if w.iter().all(|&x| x > 1e-6) {
            break w;
        }
    };
    let mut m = ComplexMatrix::zeros(d, d);
    for (k, &wk) in w.iter().enumerate() {
        let v = basis.column(k);
        m = &m + &ComplexMatrix::outer(&v, &v).scale_real(wk);
    }
    DensityMatrix::new(m).expect("convex mixture of pure states")
}

/// Channel with `kraus_count` operators: blocks of a random isometry
/// `V: C^d → C^{K d}`.
pub fn random_channel(d: usize, kraus_count: usize, rng: &mut RandomStream) -> KrausChannel {
    let big = haar_unitary(d * kraus_count, rng);
    let kraus = (0..kraus_count)
        .map(|b| {
            let mut k = ComplexMatrix::zeros(d, d);
            for r in 0..d {
                for col in 0..d {
                    k[(r, col)] = big[(b * d + r, col)];
                }
            }
            k
        })
        .collect();
    KrausChannel::new(kraus).expect("isometry blocks are complete")
}

/// Uniform point on the unit sphere.
pub fn random_unit_vector3(rng: &mut RandomStream) -> [f64; 3] {
    loop {
        let v = [
            standard_normal(rng),
            standard_normal(rng),
            standard_normal(rng),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Uniform point on the probability simplex with `k` vertices.
pub fn random_simplex(k: usize, rng: &mut RandomStream) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = e.iter().sum();
    if s > 0.0 {
        e.into_iter().map(|x| x / s).collect()
    } else {
        vec![1.0 / k as f64; k]
    }
}

/// Random coarse-graining map from `n` outcomes onto `1..=n` outcomes.
pub fn random_coarse_map(n: usize, rng: &mut RandomStream) -> Vec<usize> {
    let k = 1 + rng.index(n);
    let mut f = vec![0; n];
    for (g, members) in random_partition(n, k, rng).into_iter().enumerate() {
        for m in members {
            f[m] = g;
        }
    }
    f
}

/// Haar-random pure state vector.
pub fn random_unit_vector(d: usize, rng: &mut RandomStream) -> Vec<Complex> {
    let v: Vec<Complex> = (0..d).map(|_| complex_normal(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}
