//! Seeded random matrices, states and measurements.
//!
//! All samplers take an explicit RNG so every caller controls reproducibility.
//! Density matrices are drawn as `V·diag(w)·V†` with `V` Haar-distributed and `w`
//! uniform on the probability simplex.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::numerics::{self, c, CMatrix};
use crate::povm::{PovmKind, PovmSpec};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent child seed for task `index` (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard complex normal: real and imaginary parts N(0, 1/2).
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<Complex64> {
    DVector::from_fn(dim, |_, _| complex_normal(rng))
}

/// Matrix with i.i.d. standard complex normal entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-random unitary (Gram–Schmidt of a Ginibre matrix).
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let mut q = ginibre(dim, dim, rng);
    for k in 0..dim {
        let mut v = q.column(k).into_owned();
        for _ in 0..2 {
            for j in 0..k {
                let overlap = q.column(j).dotc(&v);
                v.axpy(-overlap, &q.column(j), numerics::ONE);
            }
        }
        let norm = v.norm();
        q.set_column(k, &(v / c(norm, 0.0)));
    }
    q
}

/// Point drawn uniformly from the probability simplex.
pub fn simplex_weights<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

pub fn random_density_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let v = haar_unitary(dim, rng);
    let w = simplex_weights(dim, rng);
    numerics::hermitian_part(&(&v * numerics::diag_real(&w) * v.adjoint()))
}

pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let v = gaussian_vector(dim, rng);
    let v = &v / c(v.norm(), 0.0);
    &v * v.adjoint()
}

/// Kraus operators read off the first `m` columns of a Haar unitary on `n·m` dims.
pub fn random_kraus_povm<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> PovmSpec {
    let u = haar_unitary(n * m, rng);
    let matrices = (0..n)
        .map(|i| numerics::block(&u, i * m, 0, m, m))
        .collect();
    PovmSpec::new(
        PovmKind::Kraus,
        matrices,
        format!("random kraus m={m} n={n}"),
    )
    .expect("blocks are square and uniform")
}

/// Effects `S^{-1/2} G_i S^{-1/2}` with `G_i` random full-rank PSD and `S = Σ G_i`.
pub fn random_effects_povm<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> PovmSpec {
    let seeds: Vec<CMatrix> = (0..n)
        .map(|_| {
            let a = ginibre(m, m, rng);
            &a * a.adjoint()
        })
        .collect();
    let total = seeds.iter().fold(CMatrix::zeros(m, m), |acc, g| acc + g);
    let norm = numerics::hermitian_inv_sqrt(&total).expect("sum of PSD matrices is PSD");
    let matrices = seeds
        .iter()
        .map(|g| numerics::hermitian_part(&(&norm * g * &norm)))
        .collect();
    PovmSpec::new(
        PovmKind::Effects,
        matrices,
        format!("random effects m={m} n={n}"),
    )
    .expect("effects are square and uniform")
}
