use serde::{Deserialize, Serialize};

use crate::compiler::{compile, CompileOptions};
use crate::error::{Error, Result};
use crate::numerics::{self, CMatrix};
use crate::povm::{self, PovmKind, PovmSpec};
use crate::simulator::{self, SimInput};
use crate::{json, tol};

/// Two-outcome measurement that turns the maximally mixed state into a target state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepPlan {
    #[serde(with = "json::matrix")]
    pub target_rho: CMatrix,
    /// Largest eigenvalue of the target.
    pub lambda0: f64,
    pub povm: PovmSpec,
    /// Unitary applied to the branch-1 output, when that branch is kept.
    #[serde(default, with = "json::optional_matrix")]
    pub correction: Option<CMatrix>,
    pub deterministic: bool,
}

impl PrepPlan {
    pub fn to_json(&self) -> String {
        json::to_string(self)
    }

    /// Max-norm of `K₀†K₀ + K₁†K₁ − I`.
    pub fn completeness_residual(&self) -> f64 {
        let m = self.povm.system_dim();
        let total = self
            .povm
            .effects()
            .iter()
            .fold(CMatrix::zeros(m, m), |acc, e| acc + e);
        numerics::max_abs_diff(&total, &numerics::identity(m))
    }
}

/// Probabilistic: `K₀ = √(ρ/λ₀)`, `K₁ = √(I − ρ/λ₀)`, success `1/(mλ₀)`.
/// Deterministic (qubits): `K₀ = √ρ`, `K₁ = √(UρU†)` with `U` swapping the eigenvectors
/// of `ρ`; branch 1 is corrected by `U` and both branches yield `ρ`.
pub fn prep_plan(target: &CMatrix, deterministic: bool) -> Result<PrepPlan> {
    let m = target.nrows();
    povm::check_state(target, m)?;
    if deterministic && m != 2 {
        return Err(Error::Unsupported(format!(
            "deterministic preparation is defined for qubits only, got dimension {m}"
        )));
    }
    let rho = numerics::hermitian_part(target);
    let (values, vectors) = numerics::hermitian_eigh(&rho)?;
    let lambda0 = *values.last().expect("non-empty spectrum");
    let identity = numerics::identity(m);

    let (kraus, correction) = if deterministic {
        let swap = CMatrix::from_fn(2, 2, |r, k| {
            numerics::c(if r != k { 1.0 } else { 0.0 }, 0.0)
        });
        let u = &vectors * swap * vectors.adjoint();
        let k0 = numerics::hermitian_sqrt(&rho)?;
        let k1 = numerics::hermitian_sqrt(&numerics::hermitian_part(&(&u * &rho * u.adjoint())))?;
        (vec![k0, k1], Some(u))
    } else {
        let scaled = rho.unscale(lambda0);
        let rest = numerics::hermitian_part(&(&identity - &scaled));
        let k0 = numerics::hermitian_sqrt(&scaled)?;
        let k1 = numerics::hermitian_sqrt(&rest)?;
        (vec![k0, k1], None)
    };
    let povm = PovmSpec::new(
        PovmKind::Kraus,
        kraus,
        if deterministic {
            "deterministic preparation"
        } else {
            "probabilistic preparation"
        },
    )?;
    let plan = PrepPlan {
        target_rho: rho,
        lambda0,
        povm,
        correction,
        deterministic,
    };
    let residual = plan.completeness_residual();
    if residual > tol::COMPLETE {
        return Err(Error::InvalidPovm {
            condition: "preparation operators are incomplete".into(),
            residual,
        });
    }
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchOutput {
    pub probability: f64,
    /// Output state after any correction; `None` for a branch that never fires.
    #[serde(default, with = "json::optional_matrix")]
    pub state: Option<CMatrix>,
    pub fidelity: Option<f64>,
    pub trace_distance: Option<f64>,
    /// Whether this branch counts as a success.
    pub heralded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepReport {
    pub lambda0: f64,
    pub deterministic: bool,
    pub branches: Vec<BranchOutput>,
}

impl PrepReport {
    pub fn to_json(&self) -> String {
        json::to_string(self)
    }
}

/// Compile the plan, send in `I/m`, and read out both branches.
pub fn prep_run(plan: &PrepPlan) -> Result<PrepReport> {
    let m = plan.povm.system_dim();
    let net = compile(&plan.povm, &CompileOptions::default())?.netlist;
    let input = SimInput::new(numerics::identity(m).unscale(m as f64));
    let sim = simulator::run(&net, &input)?;
    let branches = sim
        .outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let state = o
                .post_internal
                .as_ref()
                .map(|s| match (&plan.correction, i) {
                    (Some(u), 1) => numerics::hermitian_part(&(u * s * u.adjoint())),
                    _ => s.clone(),
                });
            let fidelity = match &state {
                Some(s) => Some(numerics::fidelity(&plan.target_rho, s)?),
                None => None,
            };
            Ok(BranchOutput {
                probability: o.probability,
                trace_distance: state
                    .as_ref()
                    .map(|s| numerics::trace_distance(s, &plan.target_rho)),
                fidelity,
                state,
                heralded: i == 0 || plan.correction.is_some(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PrepReport {
        lambda0: plan.lambda0,
        deterministic: plan.deterministic,
        branches,
    })
}
