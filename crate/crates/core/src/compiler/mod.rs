//! POVM → optical netlist compilation.
//!
//! The Kraus operators are written as a ladder
//!
//! ```text
//! K_0     = L1 C1 R1†
//! K_1     = L2 C2 R2† S1 R1†
//! ...
//! K_{n−1} = Ln S_{n−1} R_{n−1}† ⋯ S1 R1†
//! ```
//!
//! where each `(C_j, S_j)` pair is one Mach–Zehnder stage between neighbouring spatial
//! modes. Two backends produce the factors: [`decompose_recursive`] solves the ladder
//! by successive SVDs, and [`decompose_full_csd`] cosine–sine decomposes a completed
//! dilation unitary, which copes with singular sine blocks.

pub mod cs_block;
mod emit;
mod full_csd;
mod recursive;
pub mod waveplate;

use serde::{Deserialize, Serialize};

pub use cs_block::{factor_cs_block, CsBlock};
pub use emit::emit_netlist;
pub use full_csd::{decompose_full_csd, reconstruct_dilation};
pub use recursive::{decompose_recursive, order_outcomes};
pub use waveplate::{factor_su2_waveplates, WaveplateTriple};

use crate::error::{Error, Result};
use crate::netlist::{Backend, NetElement, OpticalNetlist};
use crate::numerics::{self, CMatrix};
use crate::povm::{self, PovmSpec};
use crate::tol;

/// One Mach–Zehnder stage: `L^(j)`, the angles of `C^(j)`/`S^(j)`, and `R^(j)†`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsdStage {
    pub l: CMatrix,
    pub theta: Vec<f64>,
    pub r_dag: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsdFactors {
    pub m: usize,
    /// `n − 1` stages.
    pub stages: Vec<CsdStage>,
    /// `L^(n)`, the left unitary of the last outcome.
    pub final_l: CMatrix,
    /// `outcome_order[j]` is the caller's outcome realised at ladder position `j`.
    pub outcome_order: Vec<usize>,
    pub backend: Backend,
    /// Lower-right input factors `R'^(j)†`, kept only by an unpruned full CSD.
    pub unpruned: Option<Vec<CMatrix>>,
}

impl CsdFactors {
    pub fn outcomes(&self) -> usize {
        self.stages.len() + 1
    }

    /// Multiply the ladder back out, indexed by the caller's outcome numbering.
    ///
    /// With `effects_only` the left unitaries are replaced by identity, giving
    /// operators `K̃_i` with the same effects `K̃_i†K̃_i`.
    pub fn reconstruct_kraus(&self, effects_only: bool) -> Vec<CMatrix> {
        let m = self.m;
        let n = self.outcomes();
        let mut out = vec![CMatrix::zeros(m, m); n];
        let mut tail = numerics::identity(m);
        for (j, stage) in self.stages.iter().enumerate() {
            let core =
                numerics::diag_real(&stage.theta.iter().map(|t| t.cos()).collect::<Vec<_>>())
                    * &stage.r_dag
                    * &tail;
            out[self.outcome_order[j]] = if effects_only { core } else { &stage.l * core };
            tail = numerics::diag_real(&stage.theta.iter().map(|t| t.sin()).collect::<Vec<_>>())
                * &stage.r_dag
                * &tail;
        }
        out[self.outcome_order[n - 1]] = if effects_only {
            tail
        } else {
            &self.final_l * tail
        };
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    /// Recursive SVD with reordering, falling back to the full CSD.
    #[default]
    Auto,
    Recursive,
    FullCsd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompileOptions {
    pub backend: BackendChoice,
    /// Only the effects matter: drop every left unitary.
    pub effects_only: bool,
    /// Attach wave-plate angles to each internal unitary (qubits only).
    pub waveplates: bool,
    /// Seed for the dilation completion used by the full-CSD backend.
    pub seed: u64,
    /// Drop the `R'^(j)†` factors of the full CSD (always safe; disable to inspect them).
    pub prune: bool,
}

pub const DEFAULT_SEED: u64 = 1;

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            backend: BackendChoice::Auto,
            effects_only: false,
            waveplates: false,
            seed: DEFAULT_SEED,
            prune: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Compiled {
    pub factors: CsdFactors,
    pub netlist: OpticalNetlist,
    /// Failed attempts before the one that succeeded.
    pub diagnostics: Vec<String>,
}

/// Max-norm gap between the reconstructed ladder and the target POVM.
fn reconstruction_error(
    factors: &CsdFactors,
    kraus: &PovmSpec,
    effects: &[CMatrix],
    effects_only: bool,
) -> f64 {
    let rebuilt = factors.reconstruct_kraus(effects_only);
    if effects_only {
        rebuilt
            .iter()
            .zip(effects)
            .map(|(k, e)| numerics::max_abs_diff(&(k.adjoint() * k), e))
            .fold(0.0, f64::max)
    } else {
        rebuilt
            .iter()
            .zip(kraus.matrices())
            .map(|(a, b)| numerics::max_abs_diff(a, b))
            .fold(0.0, f64::max)
    }
}

fn single_outcome(kraus: &PovmSpec, backend: Backend) -> Result<CsdFactors> {
    let k = &kraus.matrices()[0];
    let residual = numerics::unitarity_residual(k);
    if residual > tol::UNITARY {
        return Err(Error::InvalidUnitary { residual });
    }
    Ok(CsdFactors {
        m: kraus.system_dim(),
        stages: Vec::new(),
        final_l: k.clone(),
        outcome_order: vec![0],
        backend,
        unpruned: None,
    })
}

/// Compile a POVM into ladder factors and an optical netlist.
pub fn compile(spec: &PovmSpec, options: &CompileOptions) -> Result<Compiled> {
    povm::ensure_valid(spec)?;
    if options.waveplates && spec.system_dim() != 2 {
        return Err(Error::Unsupported(format!(
            "wave-plate emission needs a two-dimensional internal space, got {}",
            spec.system_dim()
        )));
    }
    let kraus = povm::to_kraus(spec)?;
    let effects = spec.effects();
    let n = kraus.outcomes();

    type Attempt<'a> = (String, Box<dyn Fn() -> Result<CsdFactors> + 'a>);
    let mut attempts: Vec<Attempt> = Vec::new();
    let recursive_backend = matches!(
        options.backend,
        BackendChoice::Auto | BackendChoice::Recursive
    );
    let kraus_ref = &kraus;
    if n == 1 {
        let backend = if recursive_backend {
            Backend::Recursive
        } else {
            Backend::FullCsd
        };
        attempts.push((
            "single outcome".into(),
            Box::new(move || single_outcome(kraus_ref, backend)),
        ));
    } else {
        if recursive_backend {
            let preferred = order_outcomes(&kraus)?;
            let identity: Vec<usize> = (0..n).collect();
            if preferred != identity {
                let order = preferred.clone();
                attempts.push((
                    format!("recursive, order {order:?}"),
                    Box::new(move || decompose_recursive(kraus_ref, &order)),
                ));
            }
            attempts.push((
                format!("recursive, order {identity:?}"),
                Box::new(move || decompose_recursive(kraus_ref, &identity)),
            ));
        }
        if matches!(
            options.backend,
            BackendChoice::Auto | BackendChoice::FullCsd
        ) {
            attempts.push((
                "full CSD".into(),
                Box::new(move || decompose_full_csd(kraus_ref, options.seed, options.prune)),
            ));
        }
    }

    let mut diagnostics = Vec::new();
    for (name, attempt) in &attempts {
        let factors = match attempt() {
            Ok(f) => f,
            Err(e) => {
                diagnostics.push(format!("{name}: {e}"));
                continue;
            }
        };
        let err = reconstruction_error(&factors, &kraus, &effects, options.effects_only);
        if err > tol::RECON {
            diagnostics.push(format!("{name}: reconstruction residual {err:.3e}"));
            continue;
        }
        let mut netlist = emit_netlist(&factors, options.effects_only);
        netlist.meta.seed = Some(options.seed);
        if options.waveplates {
            attach_waveplates(&mut netlist)?;
        }
        return Ok(Compiled {
            factors,
            netlist,
            diagnostics,
        });
    }
    Err(Error::CompileFailure(diagnostics.join("; ")))
}

/// Fill in the wave-plate realisation of every internal unitary of a qubit netlist.
pub fn attach_waveplates(net: &mut OpticalNetlist) -> Result<()> {
    if net.internal_dim != 2 {
        return Err(Error::Unsupported(
            "wave plates are only defined for a two-dimensional internal space".into(),
        ));
    }
    for el in &mut net.elements {
        if let NetElement::InternalUnitary {
            matrix, waveplates, ..
        } = el
        {
            *waveplates = Some(factor_su2_waveplates(matrix)?);
        }
    }
    Ok(())
}
