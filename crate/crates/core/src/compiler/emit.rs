use crate::compiler::cs_block::factor_cs_block;
use crate::compiler::CsdFactors;
use crate::netlist::{Detector, NetElement, NetlistMeta, OpticalNetlist};
use crate::numerics;
use crate::tol;

/// Lay the factors out as a ladder of Mach–Zehnder stages.
///
/// Stage `j` couples modes `(j, j+1)`: `R^(j)†` on mode `j`, the cosine–sine block,
/// then `L^(j)` on mode `j`. The last mode finishes with `L^(n)`. With `effects_only`
/// every left unitary is omitted. Detector on mode `j` reports outcome
/// `outcome_order[j]`.
pub fn emit_netlist(factors: &CsdFactors, effects_only: bool) -> OpticalNetlist {
    let m = factors.m;
    let n = factors.outcomes();
    let mut net = OpticalNetlist::new(n, m);
    for (j, stage) in factors.stages.iter().enumerate() {
        net.elements
            .push(NetElement::unitary(j, stage.r_dag.clone()));
        net.elements
            .extend(factor_cs_block(&stage.theta, j, j + 1).elements);
        if !effects_only {
            net.elements.push(NetElement::unitary(j, stage.l.clone()));
        }
    }
    let trivial_single =
        n == 1 && numerics::max_abs_diff(&factors.final_l, &numerics::identity(m)) <= tol::RECON;
    if !effects_only && !trivial_single {
        net.elements
            .push(NetElement::unitary(n - 1, factors.final_l.clone()));
    }
    net.detectors = factors
        .outcome_order
        .iter()
        .enumerate()
        .map(|(mode, &outcome)| Detector { mode, outcome })
        .collect();
    net.meta = NetlistMeta {
        backend: Some(factors.backend),
        seed: None,
        outcome_order: factors.outcome_order.clone(),
        effects_only,
    };
    net
}
