use crate::compiler::{CsdFactors, CsdStage};
use crate::error::{Error, Result};
use crate::netlist::Backend;
use crate::numerics::{self, CMatrix};
use crate::povm::{PovmKind, PovmSpec};
use crate::tol;

/// Outcome order for the recursive backend.
///
/// Outcomes whose Kraus operator has a singular value within `RANK` of one would put a
/// zero in the sine block and are moved to the end; ties keep ascending index.
pub fn order_outcomes(spec: &PovmSpec) -> Result<Vec<usize>> {
    let mut sharp = Vec::new();
    let mut unsharp = Vec::new();
    for (i, k) in spec.matrices().iter().enumerate() {
        let top = match spec.kind() {
            PovmKind::Kraus => numerics::svd(k)?.singulars[0],
            // singular values of √E are square roots of eigenvalues of E
            PovmKind::Effects => numerics::hermitian_eigh(k)?
                .0
                .last()
                .map(|v| v.max(0.0).sqrt())
                .unwrap_or(0.0),
        };
        if top >= 1.0 - tol::RANK {
            sharp.push(i);
        } else {
            unsharp.push(i);
        }
    }
    unsharp.extend(sharp);
    Ok(unsharp)
}

fn stage_residual(approx: &CMatrix, k: &CMatrix) -> f64 {
    numerics::max_abs_diff(approx, k)
}

/// Solve the ladder equations one SVD at a time.
///
/// Stage `j` factors `K_{order[j]} · pinv(S^(j−1) R^(j−1)† ⋯ S^(1) R^(1)†)`; the last
/// outcome's left unitary is the polar factor of the same product. After every stage
/// the factored operator is multiplied back out and compared with the input.
pub fn decompose_recursive(spec: &PovmSpec, order: &[usize]) -> Result<CsdFactors> {
    if spec.kind() != PovmKind::Kraus {
        return Err(Error::Precondition(
            "recursive decomposition needs Kraus operators".into(),
        ));
    }
    let (m, n) = (spec.system_dim(), spec.outcomes());
    if n < 2 {
        return Err(Error::Precondition(
            "recursive decomposition needs at least two outcomes".into(),
        ));
    }
    check_permutation(order, n)?;
    let kraus = spec.matrices();

    let mut tail = numerics::identity(m);
    let mut stages = Vec::with_capacity(n - 1);
    for (j, &outcome) in order.iter().take(n - 1).enumerate() {
        let k = &kraus[outcome];
        let target = if j == 0 {
            k.clone()
        } else {
            k * numerics::pinv(&tail, tol::RANK)?
        };
        let f = numerics::svd(&target)?;
        if f.singulars[0] > 1.0 + tol::RANK {
            return Err(Error::SingularSine {
                stage: j + 1,
                residual: f.singulars[0] - 1.0,
            });
        }
        let cosines: Vec<f64> = f.singulars.iter().map(|s| s.clamp(0.0, 1.0)).collect();
        let sines: Vec<f64> = cosines
            .iter()
            .map(|c| ((1.0 - c) * (1.0 + c)).sqrt())
            .collect();
        let theta: Vec<f64> = cosines.iter().map(|c| c.acos()).collect();
        let r_dag = f.right.adjoint();

        let approx = &f.left * numerics::diag_real(&cosines) * &r_dag * &tail;
        let residual = stage_residual(&approx, k);
        if residual > tol::RECON {
            return Err(Error::SingularSine {
                stage: j + 1,
                residual,
            });
        }
        tail = numerics::diag_real(&sines) * &r_dag * &tail;
        stages.push(CsdStage {
            l: f.left,
            theta,
            r_dag,
        });
    }

    let last = &kraus[order[n - 1]];
    let final_l = numerics::polar_unitary(&(last * numerics::pinv(&tail, tol::RANK)?))?;
    let residual = stage_residual(&(&final_l * &tail), last);
    if residual > tol::RECON {
        return Err(Error::SingularSine { stage: n, residual });
    }

    Ok(CsdFactors {
        m,
        stages,
        final_l,
        outcome_order: order.to_vec(),
        backend: Backend::Recursive,
        unpruned: None,
    })
}

pub(crate) fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::Precondition(format!(
            "outcome order has {} entries for {n} outcomes",
            order.len()
        )));
    }
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Precondition(format!(
                "outcome order {order:?} is not a permutation"
            )));
        }
    }
    Ok(())
}
