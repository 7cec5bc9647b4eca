use crate::compiler::{CsdFactors, CsdStage};
use crate::dilation;
use crate::error::{Error, Result};
use crate::netlist::Backend;
use crate::numerics::{self, CMatrix};
use crate::povm::{PovmKind, PovmSpec};
use crate::tol;

/// Cosine–sine decompose the full dilation unitary, one spatial mode at a time.
///
/// Step `j` splits the current `m(n−j)`-dimensional left factor into its top `m` rows
/// and the rest. Light only ever enters a stage through its first mode, so the
/// lower-right input factor `R'^(j)†` never touches the Kraus operators; with `prune`
/// set it is dropped, otherwise it is kept in [`CsdFactors::unpruned`] so the whole
/// dilation can be rebuilt with [`reconstruct_dilation`]. No sine block is ever
/// inverted.
pub fn decompose_full_csd(spec: &PovmSpec, seed: u64, prune: bool) -> Result<CsdFactors> {
    if spec.kind() != PovmKind::Kraus {
        return Err(Error::Precondition(
            "full CSD decomposition needs Kraus operators".into(),
        ));
    }
    let (m, n) = (spec.system_dim(), spec.outcomes());
    let dilation = dilation::build_dilation(spec, seed)?;
    let mut current = dilation.matrix;
    let mut stages = Vec::with_capacity(n.saturating_sub(1));
    let mut discarded = Vec::new();
    for j in 0..n.saturating_sub(1) {
        let f = numerics::csd(&current, m)?;
        stages.push(CsdStage {
            l: f.l_top,
            theta: f.theta,
            r_dag: f.r_top.adjoint(),
        });
        discarded.push(f.r_bot.adjoint());
        current = f.l_bot;
        let residual = numerics::unitarity_residual(&current);
        if residual > tol::UNITARY {
            return Err(Error::NumericFailure {
                context: format!("left factor after stage {}", j + 1),
                residual,
            });
        }
    }
    Ok(CsdFactors {
        m,
        stages,
        final_l: current,
        outcome_order: (0..n).collect(),
        backend: Backend::FullCsd,
        unpruned: (!prune).then_some(discarded),
    })
}

/// Rebuild the `nm×nm` unitary from stage factors.
///
/// Uses the kept `R'^(j)†` factors when present and identity otherwise, so a pruned
/// decomposition reproduces only the first block column of the dilation.
pub fn reconstruct_dilation(factors: &CsdFactors) -> CMatrix {
    let m = factors.m;
    let mut acc = factors.final_l.clone();
    for (j, stage) in factors.stages.iter().enumerate().rev() {
        let rest = acc.nrows();
        let left = numerics::direct_sum(&stage.l, &acc);
        let cs = numerics::cs_matrix(&stage.theta, rest - m);
        let r_rest = factors
            .unpruned
            .as_ref()
            .map(|list| list[j].clone())
            .unwrap_or_else(|| numerics::identity(rest));
        let right = numerics::direct_sum(&stage.r_dag, &r_rest);
        acc = left * cs * right;
    }
    acc
}
