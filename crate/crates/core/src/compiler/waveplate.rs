//! Polarisation unitaries as quarter-, half-, quarter-wave plate stacks.
//!
//! In Bloch-sphere terms `Q(θ)` is a quarter turn and `H(θ)` a half turn about the axis
//! at angle `2θ` in the x–z plane. The product `Q(q1)·H(h)·Q(q2)` collapses to the
//! rotation `Ry(2q1)·Rx(2q1 + 2q2 − 4h)·Ry(−2q2)` (up to sign), so reading off y–x–y
//! Euler angles of the target gives the plate angles in closed form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, c, CMatrix};
use crate::tol;

/// Half-wave plate with fast axis at `theta` from horizontal.
pub fn hwp(theta: f64) -> CMatrix {
    let (s, co) = (2.0 * theta).sin_cos();
    let g = c(0.0, -1.0);
    CMatrix::from_row_slice(2, 2, &[g * co, g * s, g * s, -g * co])
}

/// Quarter-wave plate with fast axis at `theta` from horizontal.
pub fn qwp(theta: f64) -> CMatrix {
    let (s, co) = theta.sin_cos();
    let g = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
    let off = c(1.0, -1.0) * (s * co);
    CMatrix::from_row_slice(
        2,
        2,
        &[
            g * c(co * co, s * s),
            g * off,
            g * off,
            g * c(s * s, co * co),
        ],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveplateTriple {
    /// First quarter-wave plate in the matrix product (last one met by light).
    pub q1_angle: f64,
    pub h_angle: f64,
    /// Second quarter-wave plate in the matrix product (first one met by light).
    pub q2_angle: f64,
    pub global_phase: f64,
}

impl WaveplateTriple {
    /// `e^{iφ} Q(q1) H(h) Q(q2)`.
    pub fn matrix(&self) -> CMatrix {
        (qwp(self.q1_angle) * hwp(self.h_angle) * qwp(self.q2_angle))
            * Complex64::from_polar(1.0, self.global_phase)
    }

    fn from_params(p: [f64; 4]) -> Self {
        Self {
            q1_angle: p[0],
            h_angle: p[1],
            q2_angle: p[2],
            global_phase: p[3],
        }
    }

    fn params(&self) -> [f64; 4] {
        [
            self.q1_angle,
            self.h_angle,
            self.q2_angle,
            self.global_phase,
        ]
    }
}

fn pauli() -> [CMatrix; 3] {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    [
        CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// SO(3) image `R_ij = ½ Tr(σ_i V σ_j V†)` of an SU(2) matrix.
fn rotation_of(v: &CMatrix) -> [[f64; 3]; 3] {
    let s = pauli();
    let mut r = [[0.0; 3]; 3];
    for (i, si) in s.iter().enumerate() {
        for (j, sj) in s.iter().enumerate() {
            r[i][j] = 0.5 * numerics::trace(&(si * v * sj * v.adjoint())).re;
        }
    }
    r
}

/// Angles `(a, b, c)` with `R = Ry(a)·Rx(b)·Ry(c)`.
fn yxy_euler(r: &[[f64; 3]; 3]) -> (f64, f64, f64) {
    let sb = r[0][1].hypot(r[2][1]);
    let b = sb.atan2(r[1][1]);
    if sb > 1e-9 {
        (r[0][1].atan2(r[2][1]), b, r[1][0].atan2(-r[1][2]))
    } else if r[1][1] > 0.0 {
        (r[0][2].atan2(r[0][0]), b, 0.0)
    } else {
        ((-r[0][2]).atan2(r[0][0]), b, 0.0)
    }
}

fn residual(triple: &WaveplateTriple, u: &CMatrix) -> f64 {
    numerics::max_abs_diff(&triple.matrix(), u)
}

/// Best global phase for fixed plate angles.
fn fit_phase(q1: f64, h: f64, q2: f64, u: &CMatrix) -> f64 {
    let g = qwp(q1) * hwp(h) * qwp(q2);
    numerics::trace(&(g.adjoint() * u)).arg()
}

/// Closed-form plate angles before any refinement.
pub(crate) fn analytic_waveplates(u: &CMatrix) -> WaveplateTriple {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let special = u / det.sqrt();
    let (a, b, cc) = yxy_euler(&rotation_of(&special));
    let q1 = a / 2.0;
    let q2 = -cc / 2.0;
    let h = (-b + a - cc) / 4.0;
    WaveplateTriple {
        q1_angle: q1,
        h_angle: h,
        q2_angle: q2,
        global_phase: fit_phase(q1, h, q2, u),
    }
}

/// Levenberg–Marquardt on the eight real residual components.
fn refine(start: WaveplateTriple, u: &CMatrix) -> WaveplateTriple {
    let resid_vec = |p: &[f64; 4]| -> [f64; 8] {
        let d = WaveplateTriple::from_params(*p).matrix() - u;
        let mut out = [0.0; 8];
        for (k, z) in d.iter().enumerate() {
            out[2 * k] = z.re;
            out[2 * k + 1] = z.im;
        }
        out
    };
    let norm2 = |r: &[f64; 8]| r.iter().map(|x| x * x).sum::<f64>();

    let mut p = start.params();
    let mut r = resid_vec(&p);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        if norm2(&r).sqrt() < 1e-14 {
            break;
        }
        let h = 1e-7;
        let mut jac = [[0.0; 4]; 8];
        for k in 0..4 {
            let mut q = p;
            q[k] += h;
            let rq = resid_vec(&q);
            for row in 0..8 {
                jac[row][k] = (rq[row] - r[row]) / h;
            }
        }
        let mut jtj = nalgebra::Matrix4::<f64>::zeros();
        let mut jtr = nalgebra::Vector4::<f64>::zeros();
        for row in 0..8 {
            for a in 0..4 {
                jtr[a] += jac[row][a] * r[row];
                for b in 0..4 {
                    jtj[(a, b)] += jac[row][a] * jac[row][b];
                }
            }
        }
        let mut damped = jtj;
        for a in 0..4 {
            damped[(a, a)] += lambda * (1.0 + jtj[(a, a)]);
        }
        let Some(step) = damped.lu().solve(&(-jtr)) else {
            break;
        };
        let mut trial = p;
        for a in 0..4 {
            trial[a] += step[a];
        }
        let rt = resid_vec(&trial);
        if norm2(&rt) < norm2(&r) {
            p = trial;
            r = rt;
            lambda = (lambda * 0.3).max(1e-12);
        } else {
            lambda *= 10.0;
            if lambda > 1e8 {
                break;
            }
        }
    }
    WaveplateTriple::from_params(p)
}

/// Find `q1, h, q2, φ` with `e^{iφ} Q(q1) H(h) Q(q2) = u`.
pub fn factor_su2_waveplates(u: &CMatrix) -> Result<WaveplateTriple> {
    if u.shape() != (2, 2) {
        return Err(Error::Shape(format!(
            "wave plates act on 2x2 unitaries, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    let unit = numerics::unitarity_residual(u);
    if unit > tol::UNITARY {
        return Err(Error::InvalidUnitary { residual: unit });
    }
    let mut best = analytic_waveplates(u);
    let mut err = residual(&best, u);
    if err > 1e-12 {
        let refined = refine(best, u);
        let refined_err = residual(&refined, u);
        if refined_err < err {
            best = refined;
            err = refined_err;
        }
    }
    if err > tol::WAVEPLATE {
        return Err(Error::FactoringFailure { residual: err });
    }
    Ok(best)
}
