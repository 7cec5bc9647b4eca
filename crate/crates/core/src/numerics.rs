//! Dense complex matrix kernel.
//!
//! SVD and Hermitian eigendecomposition come from `nalgebra`; everything built on top
//! (phase-fixed SVD, PSD square roots, Gram–Schmidt completion, cosine–sine
//! decomposition, pseudo-inverse) lives here so the rest of the crate only sees
//! [`CMatrix`] values and the contracts below.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tol;

pub type CMatrix = DMatrix<Complex64>;

/// Entries smaller than this are skipped when fixing the SVD phase convention.
const PHASE_PIVOT: f64 = 1e-12;
/// Projected vectors shorter than this carry no usable direction.
const DIRECTION_FLOOR: f64 = 1e-13;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    let mut d = CMatrix::zeros(values.len(), values.len());
    for (k, v) in values.iter().enumerate() {
        d[(k, k)] = c(*v, 0.0);
    }
    d
}

/// Largest absolute entry.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Max-norm of `A†A − I`, i.e. how far the columns are from orthonormal.
pub fn isometry_residual(a: &CMatrix) -> f64 {
    max_abs_diff(&(a.adjoint() * a), &identity(a.ncols()))
}

/// Max-norm of `U†U − I`; infinite for non-square input.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    isometry_residual(u)
}

pub fn hermiticity_residual(a: &CMatrix) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Copy of the `rows × cols` block whose top-left corner is `(r0, c0)`.
pub fn block(a: &CMatrix, r0: usize, c0: usize, rows: usize, cols: usize) -> CMatrix {
    a.view((r0, c0), (rows, cols)).into_owned()
}

pub fn set_block(a: &mut CMatrix, r0: usize, c0: usize, b: &CMatrix) {
    a.view_mut((r0, c0), b.shape()).copy_from(b);
}

pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    set_block(&mut out, 0, 0, a);
    set_block(&mut out, a.nrows(), a.ncols(), b);
    out
}

/// Singular value decomposition `a = left · diag(singulars) · right†`.
///
/// Thin for rectangular input, full for square input. Singular values are sorted in
/// descending order, and every left singular vector has its first non-negligible entry
/// real and non-negative (the right vector gets the same phase), which makes the
/// factors unique for distinct singular values.
#[derive(Debug, Clone)]
pub struct Svd {
    pub left: CMatrix,
    pub singulars: Vec<f64>,
    pub right: CMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> CMatrix {
        &self.left * diag_real(&self.singulars) * self.right.adjoint()
    }
}

pub fn svd(a: &CMatrix) -> Result<Svd> {
    if !is_finite(a) {
        return Err(Error::NonFinite);
    }
    let scale = max_abs(a).max(1.0);
    let fa = to_faer(a);
    let raw = if a.is_square() {
        fa.svd()
    } else {
        fa.thin_svd()
    }
    .map_err(|e| Error::NumericFailure {
        context: format!("svd did not converge: {e:?}"),
        residual: f64::INFINITY,
    })?;
    let u = from_faer(raw.U());
    let v = from_faer(raw.V());
    let k = a.nrows().min(a.ncols());
    let sv: Vec<f64> = (0..k).map(|i| raw.S().column_vector()[i].re).collect();
    let (u, v) = (u.columns(0, k).into_owned(), v.columns(0, k).into_owned());

    let mut order: Vec<usize> = (0..sv.len()).collect();
    // stable: equal singular values keep their relative order
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));

    let mut left = CMatrix::zeros(u.nrows(), sv.len());
    let mut right = CMatrix::zeros(v.nrows(), sv.len());
    let mut singulars = Vec::with_capacity(sv.len());
    for (dst, &src) in order.iter().enumerate() {
        let mut ucol = u.column(src).into_owned();
        let mut vcol = v.column(src).into_owned();
        if let Some(pivot) = ucol.iter().find(|z| z.norm() > PHASE_PIVOT) {
            let phase = pivot.conj() / pivot.norm();
            ucol *= phase;
            vcol *= phase;
        }
        left.set_column(dst, &ucol);
        right.set_column(dst, &vcol);
        singulars.push(sv[src].max(0.0));
    }
    let out = Svd {
        left,
        singulars,
        right,
    };
    let residual = max_abs_diff(&out.reconstruct(), a);
    if residual > 1e-9 * scale {
        return Err(Error::NumericFailure {
            context: "svd reconstruction".into(),
            residual,
        });
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigh(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !is_finite(a) {
        return Err(Error::NonFinite);
    }
    let residual = hermiticity_residual(a);
    if residual > tol::HERM {
        return Err(Error::NotHermitian { residual });
    }
    let eig = to_faer(&hermitian_part(a))
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::NumericFailure {
            context: format!("eigendecomposition did not converge: {e:?}"),
            residual: f64::INFINITY,
        })?;
    let values = (0..a.nrows())
        .map(|i| eig.S().column_vector()[i].re)
        .collect();
    Ok((values, from_faer(eig.U())))
}

fn to_faer(a: &CMatrix) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, Complex64>) -> CMatrix {
    CMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Apply `f` to the (clamped, non-negative) spectrum of a PSD matrix.
fn psd_function(e: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigh(e)?;
    if let Some(&lowest) = values.first() {
        if lowest < -tol::PSD {
            return Err(Error::NotPositive { eigenvalue: lowest });
        }
    }
    // eigenvalues within rounding of zero are zero, so √E keeps the rank of E
    let top = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let floor = 8.0 * f64::EPSILON * values.len() as f64 * top;
    let mapped: Vec<f64> = values
        .iter()
        .map(|&v| f(if v > floor { v } else { 0.0 }))
        .collect();
    let out = &vectors * diag_real(&mapped) * vectors.adjoint();
    Ok(hermitian_part(&out))
}

/// Unique positive-semidefinite square root. Eigenvalues in `[-PSD, 0)` are clamped.
pub fn hermitian_sqrt(e: &CMatrix) -> Result<CMatrix> {
    psd_function(e, f64::sqrt)
}

/// `e^{-1/2}` restricted to the support of `e`.
pub fn hermitian_inv_sqrt(e: &CMatrix) -> Result<CMatrix> {
    psd_function(e, |v| if v > tol::RANK { 1.0 / v.sqrt() } else { 0.0 })
}

/// Moore–Penrose pseudo-inverse; singular values `<= rank_tol` count as zero.
pub fn pinv(a: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    let f = svd(a)?;
    let inv: Vec<f64> = f
        .singulars
        .iter()
        .map(|&s| if s > rank_tol { 1.0 / s } else { 0.0 })
        .collect();
    Ok(&f.right * diag_real(&inv) * f.left.adjoint())
}

/// Closest unitary in Frobenius norm (`U V†` from the SVD).
pub fn polar_unitary(a: &CMatrix) -> Result<CMatrix> {
    let f = svd(a)?;
    Ok(&f.left * f.right.adjoint())
}

/// Orthogonalize `v` against the first `count` columns of `basis` (two MGS passes).
fn project_out(basis: &CMatrix, count: usize, v: &mut nalgebra::DVector<Complex64>) {
    for _ in 0..2 {
        for j in 0..count {
            let q = basis.column(j);
            let overlap = q.dotc(v);
            v.axpy(-overlap, &q, ONE);
        }
    }
}

/// Fill columns `start..` of `basis` with unit vectors orthogonal to everything before.
///
/// Candidates come from `next_candidate`; a candidate whose projection is too short is
/// discarded and another one drawn.
fn fill_orthonormal(
    basis: &mut CMatrix,
    start: usize,
    mut next_candidate: impl FnMut() -> nalgebra::DVector<Complex64>,
) {
    let mut k = start;
    while k < basis.ncols() {
        let mut v = next_candidate();
        project_out(basis, k, &mut v);
        let norm = v.norm();
        if norm > 1e-6 {
            basis.set_column(k, &(v / c(norm, 0.0)));
            k += 1;
        }
    }
}

/// Complete `basis` columns `start..` deterministically with projected canonical vectors.
fn fill_canonical(basis: &mut CMatrix, start: usize) {
    let dim = basis.nrows();
    for k in start..basis.ncols() {
        let mut best: Option<(f64, nalgebra::DVector<Complex64>)> = None;
        for e in 0..dim {
            let mut v = nalgebra::DVector::from_element(dim, ZERO);
            v[e] = ONE;
            project_out(basis, k, &mut v);
            let norm = v.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b + 1e-12) {
                best = Some((norm, v));
            }
        }
        let (norm, v) = best.expect("dimension is at least one");
        basis.set_column(k, &(v / c(norm, 0.0)));
    }
}

/// Extend an isometry (orthonormal columns) to a square unitary.
///
/// The leading columns are copied unchanged; the rest come from seeded complex Gaussian
/// vectors passed through modified Gram–Schmidt with one re-orthogonalization pass.
pub fn complete_to_unitary(block_column: &CMatrix, seed: u64) -> Result<CMatrix> {
    let (rows, cols) = block_column.shape();
    if cols > rows || cols == 0 {
        return Err(Error::Shape(format!(
            "cannot complete a {rows}x{cols} block column to a unitary"
        )));
    }
    if !is_finite(block_column) {
        return Err(Error::NonFinite);
    }
    let residual = isometry_residual(block_column);
    if residual > tol::UNITARY {
        return Err(Error::InvalidIsometry { residual });
    }
    let mut u = CMatrix::zeros(rows, rows);
    set_block(&mut u, 0, 0, block_column);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fill_orthonormal(&mut u, cols, || {
        crate::random::gaussian_vector(rows, &mut rng)
    });
    // the completion must not touch the supplied columns
    set_block(&mut u, 0, 0, block_column);
    Ok(u)
}

/// Cosine–sine decomposition of a `(p+q)×(p+q)` unitary with `p <= q`:
///
/// ```text
/// U = diag(l_top, l_bot) · [[C, −S, 0], [S, C, 0], [0, 0, I]] · diag(r_top†, r_bot†)
/// ```
///
/// with `C = diag(cos θ)`, `S = diag(sin θ)` on the leading `p` rows/columns.
#[derive(Debug, Clone)]
pub struct Csd {
    pub l_top: CMatrix,
    pub l_bot: CMatrix,
    pub theta: Vec<f64>,
    pub r_top: CMatrix,
    pub r_bot: CMatrix,
}

/// The equal-block (`p = q = m`) case of [`Csd`].
pub type CsdBlocks = Csd;

/// `[[C, −S], [S, C]] ⊕ I_{extra}` for the given angles.
pub fn cs_matrix(theta: &[f64], extra: usize) -> CMatrix {
    let p = theta.len();
    let mut out = identity(2 * p + extra);
    for (k, t) in theta.iter().enumerate() {
        let (s, co) = t.sin_cos();
        out[(k, k)] = c(co, 0.0);
        out[(k, p + k)] = c(-s, 0.0);
        out[(p + k, k)] = c(s, 0.0);
        out[(p + k, p + k)] = c(co, 0.0);
    }
    out
}

impl Csd {
    pub fn reassemble(&self) -> CMatrix {
        let p = self.theta.len();
        let q = self.l_bot.nrows();
        let left = direct_sum(&self.l_top, &self.l_bot);
        let right = direct_sum(&self.r_top, &self.r_bot).adjoint();
        left * cs_matrix(&self.theta, q - p) * right
    }
}

/// General cosine–sine decomposition splitting off the top `p` rows and columns.
pub fn csd(u: &CMatrix, p: usize) -> Result<Csd> {
    let n = u.nrows();
    if !u.is_square() || p == 0 || 2 * p > n {
        return Err(Error::Shape(format!(
            "csd needs a square matrix with 0 < p <= n/2, got {}x{} with p={p}",
            u.nrows(),
            u.ncols()
        )));
    }
    if !is_finite(u) {
        return Err(Error::NonFinite);
    }
    let residual = unitarity_residual(u);
    if residual > tol::UNITARY {
        return Err(Error::InvalidUnitary { residual });
    }
    let q = n - p;
    let u11 = block(u, 0, 0, p, p);
    let u21 = block(u, p, 0, q, p);
    let u12 = block(u, 0, p, p, q);
    let u22 = block(u, p, p, q, q);

    let top = svd(&u11)?;
    let cosines: Vec<f64> = top.singulars.iter().map(|s| s.min(1.0)).collect();
    let l_top = top.left;
    let r_top = top.right;

    // columns of u21·r_top are mutually orthogonal with norms sin θ
    let x = &u21 * &r_top;
    let sines: Vec<f64> = (0..p).map(|k| x.column(k).norm()).collect();
    let theta: Vec<f64> = (0..p).map(|k| sines[k].atan2(cosines[k])).collect();

    // normalize the induced bottom factor, largest sines first
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| sines[j].total_cmp(&sines[i]));
    let mut l_bot = CMatrix::zeros(q, q);
    let mut filled = vec![false; p];
    let mut accepted = CMatrix::zeros(q, p);
    let mut count = 0;
    for &k in &order {
        let mut v = x.column(k).into_owned();
        project_out(&accepted, count, &mut v);
        let norm = v.norm();
        if norm > DIRECTION_FLOOR {
            let unit = v / c(norm, 0.0);
            accepted.set_column(count, &unit);
            l_bot.set_column(k, &unit);
            filled[k] = true;
            count += 1;
        }
    }
    // zero-sine columns and the trailing q−p columns are free: complete canonically
    let mut basis = CMatrix::zeros(q, q);
    set_block(&mut basis, 0, 0, &block(&accepted, 0, 0, q, count));
    fill_canonical(&mut basis, count);
    let mut spare = count;
    for (k, _) in filled.iter().enumerate().filter(|(_, f)| !**f) {
        l_bot.set_column(k, &basis.column(spare));
        spare += 1;
    }
    for k in p..q {
        l_bot.set_column(k, &basis.column(spare));
        spare += 1;
    }

    // rows of r_bot† from whichever of −S⁻¹L_top†u12 or C⁻¹L_bot†u22 is better conditioned
    let from_top = l_top.adjoint() * &u12;
    let from_bot = l_bot.adjoint() * &u22;
    let mut r_bot_dag = CMatrix::zeros(q, q);
    for k in 0..q {
        let row = if k < p && sines[k] >= cosines[k] {
            from_top.row(k) * c(-1.0 / sines[k], 0.0)
        } else if k < p {
            from_bot.row(k) * c(1.0 / cosines[k], 0.0)
        } else {
            from_bot.row(k).into_owned()
        };
        r_bot_dag.set_row(k, &row);
    }
    let r_bot = polar_unitary(&r_bot_dag)?.adjoint();

    let out = Csd {
        l_top,
        l_bot,
        theta,
        r_top,
        r_bot,
    };
    let residual = max_abs_diff(&out.reassemble(), u);
    if residual > 1e-9 {
        return Err(Error::NumericFailure {
            context: "cosine-sine reassembly".into(),
            residual,
        });
    }
    Ok(out)
}

/// Cosine–sine decomposition of a `2m×2m` unitary into four `m×m` unitaries.
pub fn csd_2block(u: &CMatrix, m: usize) -> Result<CsdBlocks> {
    if u.nrows() != 2 * m || u.ncols() != 2 * m {
        return Err(Error::Shape(format!(
            "csd_2block expects a {}x{} matrix, got {}x{}",
            2 * m,
            2 * m,
            u.nrows(),
            u.ncols()
        )));
    }
    csd(u, m)
}

/// Trace distance `½‖a − b‖₁` between two Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = hermitian_part(&(a - b));
    let values = to_faer(&diff)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("Hermitian eigenvalues of a finite matrix");
    0.5 * values.iter().map(|v| v.abs()).sum::<f64>()
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`.
pub fn fidelity(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    let root = hermitian_sqrt(rho)?;
    let inner = hermitian_part(&(&root * sigma * &root));
    let (values, _) = hermitian_eigh(&inner)?;
    let t: f64 = values.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok(t * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn bbs() -> CMatrix {
        CMatrix::from_row_slice(
            2,
            2,
            &[
                c(FRAC_1_SQRT_2, 0.0),
                c(0.0, FRAC_1_SQRT_2),
                c(0.0, FRAC_1_SQRT_2),
                c(FRAC_1_SQRT_2, 0.0),
            ],
        )
    }

    #[test]
    fn svd_of_nonnegative_diagonal_is_trivial() {
        let a = diag_real(&[0.8f64.sqrt(), 0.2f64.sqrt()]);
        let f = svd(&a).unwrap();
        assert!((f.singulars[0] - 0.8f64.sqrt()).abs() < 1e-15);
        assert!((f.singulars[1] - 0.2f64.sqrt()).abs() < 1e-15);
        assert!(max_abs_diff(&f.left, &identity(2)) < 1e-15);
        assert!(max_abs_diff(&f.right, &identity(2)) < 1e-15);
    }

    #[test]
    fn svd_identity() {
        let f = svd(&identity(3)).unwrap();
        assert_eq!(f.singulars, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn svd_random_reconstruction() {
        let mut r = rng(1);
        for _ in 0..200 {
            let a = random::ginibre(4, 4, &mut r);
            let f = svd(&a).unwrap();
            assert!(max_abs_diff(&f.reconstruct(), &a) < 1e-12);
            assert!(f.singulars.windows(2).all(|w| w[0] >= w[1]));
            for k in 0..4 {
                let pivot = f
                    .left
                    .column(k)
                    .iter()
                    .copied()
                    .find(|z| z.norm() > PHASE_PIVOT);
                let pivot = pivot.unwrap();
                assert!(pivot.im.abs() < 1e-15 && pivot.re > 0.0);
            }
        }
    }

    #[test]
    fn svd_rejects_nan() {
        let mut a = identity(2);
        a[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(svd(&a), Err(Error::NonFinite)));
    }

    #[test]
    fn svd_is_deterministic() {
        let a = random::ginibre(5, 5, &mut rng(9));
        let f = svd(&a).unwrap();
        let g = svd(&a).unwrap();
        assert_eq!(f.left, g.left);
        assert_eq!(f.right, g.right);
        assert_eq!(f.singulars, g.singulars);
    }

    #[test]
    fn sqrt_examples() {
        let r = hermitian_sqrt(&diag_real(&[0.25, 1.0])).unwrap();
        assert!(max_abs_diff(&r, &diag_real(&[0.5, 1.0])) < 1e-15);
        let proj = diag_real(&[1.0, 0.0]);
        assert!(max_abs_diff(&hermitian_sqrt(&proj).unwrap(), &proj) < 1e-15);
    }

    #[test]
    fn sqrt_squares_back() {
        let mut r = rng(2);
        for _ in 0..50 {
            let a = random::ginibre(3, 3, &mut r);
            let psd = &a * a.adjoint();
            let root = hermitian_sqrt(&psd).unwrap();
            assert!(max_abs_diff(&(&root * &root), &psd) < 1e-12);
            assert!(hermiticity_residual(&root) == 0.0);
        }
    }

    #[test]
    fn sqrt_clamps_rounding_but_rejects_negative() {
        let tiny = diag_real(&[1.0, -1e-12]);
        let r = hermitian_sqrt(&tiny).unwrap();
        assert_eq!(r[(1, 1)], ZERO);
        match hermitian_sqrt(&diag_real(&[1.0, -0.1])) {
            Err(Error::NotPositive { eigenvalue }) => assert!((eigenvalue + 0.1).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn completes_single_column() {
        let col = CMatrix::from_column_slice(2, 1, &[c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]);
        let u = complete_to_unitary(&col, 3).unwrap();
        assert!(unitarity_residual(&u) < 1e-14);
        assert_eq!(u.column(0), col.column(0));
    }

    #[test]
    fn completion_keeps_square_unitary_and_is_seeded() {
        let u = random::haar_unitary(4, &mut rng(5));
        assert_eq!(complete_to_unitary(&u, 1).unwrap(), u);

        let iso = block(&u, 0, 0, 4, 2);
        let a = complete_to_unitary(&iso, 11).unwrap();
        let b = complete_to_unitary(&iso, 11).unwrap();
        assert_eq!(a, b);
        assert!(unitarity_residual(&a) < 1e-12);
        assert_eq!(block(&a, 0, 0, 4, 2), iso);
    }

    #[test]
    fn completion_rejects_non_isometry() {
        let col = CMatrix::from_column_slice(2, 1, &[ONE, ONE]);
        assert!(matches!(
            complete_to_unitary(&col, 0),
            Err(Error::InvalidIsometry { .. })
        ));
    }

    #[test]
    fn csd_of_identity() {
        let f = csd_2block(&identity(4), 2).unwrap();
        assert!(f.theta.iter().all(|t| t.abs() < 1e-15));
        for m in [&f.l_top, &f.l_bot, &f.r_top, &f.r_bot] {
            assert!(max_abs_diff(m, &identity(2)) < 1e-15);
        }
    }

    #[test]
    fn csd_of_beam_splitter_is_quarter_turn() {
        let f = csd_2block(&bbs(), 1).unwrap();
        assert!((f.theta[0] - FRAC_PI_4).abs() < 1e-15);
        assert!(max_abs_diff(&f.reassemble(), &bbs()) < 1e-15);
    }

    #[test]
    fn csd_random_unitaries() {
        let mut r = rng(7);
        for _ in 0..50 {
            let u = random::haar_unitary(6, &mut r);
            let f = csd_2block(&u, 3).unwrap();
            assert!(max_abs_diff(&f.reassemble(), &u) < 1e-11);
            assert!(f.theta.iter().all(|t| (0.0..=FRAC_PI_2).contains(t)));
            assert!(f.theta.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        }
    }

    #[test]
    fn csd_unequal_blocks_and_singular_sines() {
        let mut r = rng(8);
        // block-diagonal input has every sine zero and every cosine one
        let u = direct_sum(
            &random::haar_unitary(2, &mut r),
            &random::haar_unitary(4, &mut r),
        );
        let f = csd(&u, 2).unwrap();
        assert!(f.theta.iter().all(|t| t.abs() < 1e-12));
        assert!(max_abs_diff(&f.reassemble(), &u) < 1e-12);
        // a permutation swapping the blocks has every sine one
        let mut swap = CMatrix::zeros(4, 4);
        for k in 0..2 {
            swap[(k, k + 2)] = ONE;
            swap[(k + 2, k)] = ONE;
        }
        let f = csd_2block(&swap, 2).unwrap();
        assert!(f.theta.iter().all(|t| (t - FRAC_PI_2).abs() < 1e-12));
        assert!(max_abs_diff(&f.reassemble(), &swap) < 1e-12);
    }

    #[test]
    fn csd_rejects_non_unitary() {
        let mut u = identity(4);
        u[(0, 0)] = c(1.1, 0.0);
        assert!(matches!(
            csd_2block(&u, 2),
            Err(Error::InvalidUnitary { .. })
        ));
    }

    #[test]
    fn pinv_examples() {
        let p = pinv(&diag_real(&[2.0, 0.0]), tol::RANK).unwrap();
        assert!(max_abs_diff(&p, &diag_real(&[0.5, 0.0])) < 1e-15);
        let u = random::haar_unitary(3, &mut rng(4));
        assert!(max_abs_diff(&pinv(&u, tol::RANK).unwrap(), &u.adjoint()) < 1e-13);
    }

    #[test]
    fn pinv_penrose_identities() {
        let mut r = rng(6);
        for _ in 0..50 {
            let a = random::ginibre(3, 2, &mut r) * random::ginibre(2, 3, &mut r);
            let x = pinv(&a, tol::RANK).unwrap();
            assert!(max_abs_diff(&(&a * &x * &a), &a) < 1e-10);
            assert!(max_abs_diff(&(&x * &a * &x), &x) < 1e-10);
            let ax = &a * &x;
            let xa = &x * &a;
            assert!(hermiticity_residual(&ax) < 1e-10);
            assert!(hermiticity_residual(&xa) < 1e-10);
        }
    }

    #[test]
    fn trace_distance_and_fidelity() {
        let zero = diag_real(&[1.0, 0.0]);
        let one = diag_real(&[0.0, 1.0]);
        assert!((trace_distance(&zero, &one) - 1.0).abs() < 1e-15);
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-15);
        let mixed = diag_real(&[0.5, 0.5]);
        assert!((fidelity(&zero, &mixed).unwrap() - 0.5).abs() < 1e-14);
    }
}
