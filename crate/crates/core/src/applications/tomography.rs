use serde::{Deserialize, Serialize};

use crate::compiler::{compile, CompileOptions};
use crate::error::{Error, Result};
use crate::numerics::{self, c, CMatrix};
use crate::povm::{self, PovmSpec};
use crate::simulator::{self, SimInput};
use crate::{json, tol};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyResult {
    #[serde(rename = "estimate", with = "json::matrix")]
    pub estimated_rho: CMatrix,
    #[serde(rename = "frequencies")]
    pub raw_frequencies: Vec<f64>,
    /// `None` for the exact-probability path.
    pub shots: Option<u64>,
    #[serde(rename = "trace_distance")]
    pub trace_distance_to_truth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl TomographyResult {
    pub fn to_json(&self) -> String {
        json::to_string(self)
    }
}

/// Matrix of `ρ ↦ (Tr(E_i ρ))_i` acting on column-major `vec(ρ)`.
fn measurement_map(effects: &[CMatrix], m: usize) -> CMatrix {
    CMatrix::from_fn(effects.len(), m * m, |i, idx| {
        let (row, col) = (idx % m, idx / m);
        effects[i][(col, row)]
    })
}

/// Euclidean projection of `values` onto the probability simplex.
fn simplex_projection(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        cumulative += v;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if v - candidate > 0.0 {
            shift = candidate;
        }
    }
    values.iter().map(|v| (v - shift).max(0.0)).collect()
}

/// Nearest density matrix in Frobenius norm: hermitize, then project the spectrum onto
/// the probability simplex (a uniform shift followed by clipping at zero).
pub fn project_to_density_matrix(a: &CMatrix) -> Result<CMatrix> {
    let h = numerics::hermitian_part(a);
    let (values, vectors) = numerics::hermitian_eigh(&h)?;
    let projected = simplex_projection(&values);
    Ok(numerics::hermitian_part(
        &(&vectors * numerics::diag_real(&projected) * vectors.adjoint()),
    ))
}

/// Linear-inversion estimate of `ρ` from outcome frequencies.
pub fn tomo_reconstruct(spec: &PovmSpec, frequencies: &[f64]) -> Result<TomographyResult> {
    povm::ensure_valid(spec)?;
    let (m, n) = (spec.system_dim(), spec.outcomes());
    if frequencies.len() != n {
        return Err(Error::Shape(format!(
            "{} frequencies for {n} outcomes",
            frequencies.len()
        )));
    }
    if frequencies.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::Precondition(
            "frequencies must be finite and non-negative".into(),
        ));
    }
    let map = measurement_map(&spec.effects(), m);
    let singulars = numerics::svd(&map)?.singulars;
    let top = singulars.first().copied().unwrap_or(0.0);
    let rank = singulars
        .iter()
        .filter(|&&s| s > tol::RANK * top.max(1.0))
        .count();
    if rank < m * m {
        return Err(Error::RankDeficient {
            rank,
            required: m * m,
        });
    }
    let p = CMatrix::from_fn(n, 1, |i, _| c(frequencies[i], 0.0));
    let vec_rho = numerics::pinv(&map, tol::RANK)? * p;
    let raw = CMatrix::from_fn(m, m, |r, k| vec_rho[(r + k * m, 0)]);
    let trace = numerics::trace(&raw).re;
    let raw = if trace.abs() > tol::PROB {
        raw.unscale(trace)
    } else {
        raw
    };
    Ok(TomographyResult {
        estimated_rho: project_to_density_matrix(&raw)?,
        raw_frequencies: frequencies.to_vec(),
        shots: None,
        trace_distance_to_truth: None,
        seed: None,
    })
}

/// Measure a qubit state with the compiled SIC netlist and reconstruct it.
///
/// `shots = None` feeds the exact detector probabilities to the estimator.
pub fn tomo_pipeline(state: &CMatrix, shots: Option<u64>, seed: u64) -> Result<TomographyResult> {
    povm::check_state(state, 2)?;
    let sic = povm::make_sic_qubit();
    let net = compile(&sic, &CompileOptions::default())?.netlist;
    let input = SimInput::new(state.clone());
    let frequencies = match shots {
        None => simulator::run(&net, &input)?.probabilities(),
        Some(shots) => simulator::sample(&net, &input, shots, seed)?
            .into_iter()
            .map(|k| k as f64 / shots as f64)
            .collect(),
    };
    let mut result = tomo_reconstruct(&sic, &frequencies)?;
    result.shots = shots;
    result.seed = shots.map(|_| seed);
    result.trace_distance_to_truth = Some(numerics::trace_distance(&result.estimated_rho, state));
    Ok(result)
}
