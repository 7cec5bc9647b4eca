//! Optical netlist IR.
//!
//! A netlist is an ordered list of elements acting on `modes` spatial modes, each
//! carrying an `internal_dim`-dimensional internal state. Elements apply in array
//! order: the first element is the first one the light meets.

use std::collections::HashSet;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::compiler::waveplate::WaveplateTriple;
use crate::error::{Error, Result};
use crate::numerics::{self, c, CMatrix};
use crate::{json, tol};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum NetElement {
    /// Balanced beam splitter `(1/√2)[[1, i], [i, 1]]` on modes `(a, b)`, applied
    /// identically to every internal level.
    #[serde(rename = "bbs")]
    Bbs { modes: [usize; 2] },
    /// `diag(e^{iφ_1}, …, e^{iφ_m})` on one mode's internal space.
    #[serde(rename = "phase")]
    InternalPhase { mode: usize, phases: Vec<f64> },
    /// Arbitrary unitary on one mode's internal space.
    #[serde(rename = "unitary")]
    InternalUnitary {
        mode: usize,
        #[serde(with = "json::matrix")]
        matrix: CMatrix,
        /// Quarter/half/quarter wave-plate realisation, only for `m = 2`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        waveplates: Option<WaveplateTriple>,
    },
}

impl NetElement {
    pub fn bbs(a: usize, b: usize) -> Self {
        NetElement::Bbs { modes: [a, b] }
    }

    pub fn phase(mode: usize, phases: Vec<f64>) -> Self {
        NetElement::InternalPhase { mode, phases }
    }

    pub fn unitary(mode: usize, matrix: CMatrix) -> Self {
        NetElement::InternalUnitary {
            mode,
            matrix,
            waveplates: None,
        }
    }

    fn modes(&self) -> Vec<usize> {
        match self {
            NetElement::Bbs { modes } => modes.to_vec(),
            NetElement::InternalPhase { mode, .. } | NetElement::InternalUnitary { mode, .. } => {
                vec![*mode]
            }
        }
    }

    /// Left-multiply `target` (rows indexed `mode·m + level`) by this element.
    pub fn apply_left(&self, target: &mut CMatrix, m: usize) {
        match self {
            NetElement::Bbs { modes: [a, b] } => {
                let s = FRAC_1_SQRT_2;
                for r in 0..m {
                    let (ra, rb) = (a * m + r, b * m + r);
                    for col in 0..target.ncols() {
                        let x = target[(ra, col)];
                        let y = target[(rb, col)];
                        target[(ra, col)] = (x + c(0.0, 1.0) * y) * s;
                        target[(rb, col)] = (c(0.0, 1.0) * x + y) * s;
                    }
                }
            }
            NetElement::InternalPhase { mode, phases } => {
                for (r, phi) in phases.iter().enumerate() {
                    let z = Complex64::from_polar(1.0, *phi);
                    for col in 0..target.ncols() {
                        target[(mode * m + r, col)] *= z;
                    }
                }
            }
            NetElement::InternalUnitary { mode, matrix, .. } => {
                let rows = numerics::block(target, mode * m, 0, m, target.ncols());
                numerics::set_block(target, mode * m, 0, &(matrix * rows));
            }
        }
    }
}

/// The balanced beam splitter transfer matrix.
pub fn bbs_matrix() -> CMatrix {
    let s = FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(0.0, s), c(0.0, s), c(s, 0.0)])
}

/// `diag(e^{iφ_k})`.
pub fn phase_matrix(phases: &[f64]) -> CMatrix {
    let mut d = CMatrix::zeros(phases.len(), phases.len());
    for (k, phi) in phases.iter().enumerate() {
        d[(k, k)] = Complex64::from_polar(1.0, *phi);
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detector {
    pub mode: usize,
    /// Outcome index in the caller's numbering.
    pub outcome: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Recursive,
    FullCsd,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetlistMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub outcome_order: Vec<usize>,
    #[serde(default)]
    pub effects_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticalNetlist {
    pub modes: usize,
    pub internal_dim: usize,
    pub elements: Vec<NetElement>,
    pub detectors: Vec<Detector>,
    #[serde(default)]
    pub meta: NetlistMeta,
}

/// Element counts and optical depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Resources {
    pub bbs: usize,
    pub phase: usize,
    pub unitary: usize,
    pub detectors: usize,
    /// Longest chain of elements met by light along any mode.
    pub depth: usize,
}

impl OpticalNetlist {
    pub fn new(modes: usize, internal_dim: usize) -> Self {
        Self {
            modes,
            internal_dim,
            elements: Vec::new(),
            detectors: Vec::new(),
            meta: NetlistMeta::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.modes * self.internal_dim
    }

    /// Structural checks; errors carry the JSON path of the offending value.
    pub fn check(&self) -> Result<()> {
        let err = |path: String, message: String| Error::Parse { path, message };
        let (n, m) = (self.modes, self.internal_dim);
        if n == 0 || m == 0 {
            return Err(err(
                "modes".into(),
                "modes and internal_dim must be positive".into(),
            ));
        }
        for (idx, el) in self.elements.iter().enumerate() {
            for mode in el.modes() {
                if mode >= n {
                    return Err(err(
                        format!("elements[{idx}]"),
                        format!("mode {mode} out of range for {n} modes"),
                    ));
                }
            }
            match el {
                NetElement::Bbs { modes: [a, b] } if a == b => {
                    return Err(err(
                        format!("elements[{idx}].modes"),
                        "beam splitter needs two distinct modes".into(),
                    ));
                }
                NetElement::InternalPhase { phases, .. } => {
                    if phases.len() != m {
                        return Err(err(
                            format!("elements[{idx}].phases"),
                            format!("expected {m} phases, got {}", phases.len()),
                        ));
                    }
                    if phases.iter().any(|p| !p.is_finite()) {
                        return Err(err(
                            format!("elements[{idx}].phases"),
                            "non-finite phase".into(),
                        ));
                    }
                }
                NetElement::InternalUnitary { matrix, .. } => {
                    if matrix.shape() != (m, m) {
                        return Err(err(
                            format!("elements[{idx}].matrix"),
                            format!(
                                "expected {m}x{m}, got {}x{}",
                                matrix.nrows(),
                                matrix.ncols()
                            ),
                        ));
                    }
                }
                NetElement::Bbs { .. } => {}
            }
        }
        let mut seen_modes = HashSet::new();
        let mut seen_outcomes = HashSet::new();
        for (idx, d) in self.detectors.iter().enumerate() {
            if d.mode >= n {
                return Err(err(
                    format!("detectors[{idx}].mode"),
                    format!("mode {} out of range for {n} modes", d.mode),
                ));
            }
            if !seen_modes.insert(d.mode) {
                return Err(err(
                    format!("detectors[{idx}].mode"),
                    format!("mode {} has two detectors", d.mode),
                ));
            }
            if !seen_outcomes.insert(d.outcome) {
                return Err(err(
                    format!("detectors[{idx}].outcome"),
                    format!("outcome {} is assigned twice", d.outcome),
                ));
            }
        }
        Ok(())
    }

    /// The `nm×nm` unitary implemented by the element sequence.
    pub fn to_global_unitary(&self) -> Result<CMatrix> {
        self.check()?;
        let mut u = numerics::identity(self.dim());
        for el in &self.elements {
            el.apply_left(&mut u, self.internal_dim);
        }
        Ok(u)
    }

    pub fn resources(&self) -> Resources {
        let mut r = Resources {
            detectors: self.detectors.len(),
            ..Resources::default()
        };
        let mut depth = vec![0usize; self.modes];
        for el in &self.elements {
            match el {
                NetElement::Bbs { modes: [a, b] } => {
                    r.bbs += 1;
                    if let (Some(&da), Some(&db)) = (depth.get(*a), depth.get(*b)) {
                        let d = da.max(db) + 1;
                        depth[*a] = d;
                        depth[*b] = d;
                    }
                }
                NetElement::InternalPhase { mode, .. } => {
                    r.phase += 1;
                    if let Some(d) = depth.get_mut(*mode) {
                        *d += 1;
                    }
                }
                NetElement::InternalUnitary { mode, .. } => {
                    r.unitary += 1;
                    if let Some(d) = depth.get_mut(*mode) {
                        *d += 1;
                    }
                }
            }
        }
        r.depth = depth.into_iter().max().unwrap_or(0);
        r
    }

    /// Largest unitarity residual over the internal unitary elements.
    pub fn element_unitarity_residual(&self) -> f64 {
        self.elements
            .iter()
            .filter_map(|el| match el {
                NetElement::InternalUnitary { matrix, .. } => {
                    Some(numerics::unitarity_residual(matrix))
                }
                _ => None,
            })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        json::to_string(self)
    }

    pub fn to_json_pretty(&self) -> String {
        json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: OpticalNetlist = json::parse(text)?;
        net.check()?;
        Ok(net)
    }
}

/// Check that every internal unitary in `net` is unitary within tolerance.
pub fn check_unitary_elements(net: &OpticalNetlist) -> Result<()> {
    let residual = net.element_unitarity_residual();
    if residual > tol::UNITARY {
        return Err(Error::InvalidUnitary { residual });
    }
    Ok(())
}
