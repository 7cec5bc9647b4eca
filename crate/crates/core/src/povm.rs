//! POVM data model and the direct (circuit-free) measurement formulas.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, c, CMatrix};
use crate::{json, tol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PovmKind {
    /// Positive effects `E_i` with `Σ E_i = I`.
    Effects,
    /// Measurement operators `K_i` with `Σ K_i†K_i = I`.
    Kraus,
}

/// An `n`-outcome measurement on an `m`-dimensional system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PovmFile", into = "PovmFile")]
pub struct PovmSpec {
    system_dim: usize,
    kind: PovmKind,
    matrices: Vec<CMatrix>,
    label: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PovmFile {
    system_dim: usize,
    outcomes: usize,
    kind: PovmKind,
    #[serde(default)]
    label: String,
    #[serde(with = "json::matrix_list")]
    matrices: Vec<CMatrix>,
}

impl TryFrom<PovmFile> for PovmSpec {
    type Error = Error;

    fn try_from(file: PovmFile) -> Result<Self> {
        if file.matrices.len() != file.outcomes {
            return Err(Error::Shape(format!(
                "outcomes is {} but {} matrices were given",
                file.outcomes,
                file.matrices.len()
            )));
        }
        let spec = PovmSpec::new(file.kind, file.matrices, file.label)?;
        if spec.system_dim != file.system_dim {
            return Err(Error::Shape(format!(
                "system_dim is {} but matrices are {}x{}",
                file.system_dim, spec.system_dim, spec.system_dim
            )));
        }
        Ok(spec)
    }
}

impl From<PovmSpec> for PovmFile {
    fn from(spec: PovmSpec) -> Self {
        PovmFile {
            system_dim: spec.system_dim,
            outcomes: spec.matrices.len(),
            kind: spec.kind,
            label: spec.label,
            matrices: spec.matrices,
        }
    }
}

impl PovmSpec {
    /// Build a spec, checking only shapes: non-empty, square, uniform dimension.
    pub fn new(kind: PovmKind, matrices: Vec<CMatrix>, label: impl Into<String>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::Shape("a POVM needs at least one outcome".into()))?;
        let m = first.nrows();
        if m == 0 {
            return Err(Error::Shape("system dimension must be at least one".into()));
        }
        for (i, mat) in matrices.iter().enumerate() {
            if mat.shape() != (m, m) {
                return Err(Error::Shape(format!(
                    "matrix {i} is {}x{}, expected {m}x{m}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            if !numerics::is_finite(mat) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self {
            system_dim: m,
            kind,
            matrices,
            label: label.into(),
        })
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn outcomes(&self) -> usize {
        self.matrices.len()
    }

    pub fn kind(&self) -> PovmKind {
        self.kind
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Effects `E_i`, computing `K_i†K_i` for a Kraus spec.
    pub fn effects(&self) -> Vec<CMatrix> {
        match self.kind {
            PovmKind::Effects => self.matrices.clone(),
            PovmKind::Kraus => self
                .matrices
                .iter()
                .map(|k| numerics::hermitian_part(&(k.adjoint() * k)))
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        json::parse(text)
    }

    pub fn to_json(&self) -> String {
        json::to_string(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationTolerances {
    pub herm: f64,
    pub psd: f64,
    pub complete: f64,
}

impl Default for ValidationTolerances {
    fn default() -> Self {
        Self {
            herm: tol::HERM,
            psd: tol::PSD,
            complete: tol::COMPLETE,
        }
    }
}

/// Residuals measured by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// Max-norm of `Σ E_i − I`.
    pub completeness_residual: f64,
    /// Per effect; empty for Kraus specs.
    pub hermiticity_residuals: Vec<f64>,
    /// Smallest eigenvalue per effect; empty for Kraus specs.
    pub min_eigenvalues: Vec<f64>,
    /// Human-readable description of every violated condition.
    pub violations: Vec<String>,
    pub pass: bool,
}

impl ValidationReport {
    /// Turn a failing report into an [`Error::InvalidPovm`] naming the first violation.
    pub fn check(&self) -> Result<()> {
        if self.pass {
            return Ok(());
        }
        let residual = if self.completeness_residual.is_finite() {
            self.completeness_residual
        } else {
            f64::NAN
        };
        Err(Error::InvalidPovm {
            condition: self.violations.join("; "),
            residual,
        })
    }
}

pub fn validate(spec: &PovmSpec, tolerances: &ValidationTolerances) -> ValidationReport {
    let m = spec.system_dim;
    let mut violations = Vec::new();
    let mut hermiticity_residuals = Vec::new();
    let mut min_eigenvalues = Vec::new();

    let effects = match spec.kind {
        PovmKind::Effects => {
            for (i, e) in spec.matrices.iter().enumerate() {
                let h = numerics::hermiticity_residual(e);
                hermiticity_residuals.push(h);
                if h > tolerances.herm {
                    violations.push(format!("effect {i} is not Hermitian (residual {h:.3e})"));
                    min_eigenvalues.push(f64::NAN);
                    continue;
                }
                let (values, _) = numerics::hermitian_eigh(&numerics::hermitian_part(e))
                    .expect("hermitized input");
                let lowest = values[0];
                min_eigenvalues.push(lowest);
                if lowest < -tolerances.psd {
                    violations.push(format!(
                        "effect {i} is not positive semidefinite (eigenvalue {lowest:.3e})"
                    ));
                }
            }
            spec.matrices.clone()
        }
        PovmKind::Kraus => spec.effects(),
    };

    let total = effects.iter().fold(CMatrix::zeros(m, m), |acc, e| acc + e);
    let completeness_residual = numerics::max_abs_diff(&total, &numerics::identity(m));
    if completeness_residual > tolerances.complete {
        violations.push(format!(
            "completeness violated: sum of effects differs from identity by {completeness_residual:.3e}"
        ));
    }

    ValidationReport {
        completeness_residual,
        hermiticity_residuals,
        min_eigenvalues,
        pass: violations.is_empty(),
        violations,
    }
}

/// Validate with default tolerances and return an error on failure.
pub fn ensure_valid(spec: &PovmSpec) -> Result<()> {
    validate(spec, &ValidationTolerances::default()).check()
}

/// Canonical Kraus form `K_i = √E_i`; Kraus specs are returned unchanged.
pub fn to_kraus(spec: &PovmSpec) -> Result<PovmSpec> {
    match spec.kind {
        PovmKind::Kraus => Ok(spec.clone()),
        PovmKind::Effects => {
            let matrices = spec
                .matrices
                .iter()
                .map(numerics::hermitian_sqrt)
                .collect::<Result<Vec<_>>>()?;
            Ok(PovmSpec {
                system_dim: spec.system_dim,
                kind: PovmKind::Kraus,
                matrices,
                label: spec.label.clone(),
            })
        }
    }
}

/// Check that `rho` is an `m×m` density matrix within the PSD tolerance.
pub fn check_state(rho: &CMatrix, m: usize) -> Result<()> {
    if rho.shape() != (m, m) {
        return Err(Error::InvalidState(format!(
            "expected {m}x{m}, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    if !numerics::is_finite(rho) {
        return Err(Error::InvalidState("non-finite entries".into()));
    }
    let h = numerics::hermiticity_residual(rho);
    if h > tol::HERM {
        return Err(Error::InvalidState(format!(
            "not Hermitian (residual {h:.3e})"
        )));
    }
    let tr = numerics::trace(rho);
    if (tr - c(1.0, 0.0)).norm() > tol::COMPLETE {
        return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
    }
    let (values, _) = numerics::hermitian_eigh(&numerics::hermitian_part(rho))?;
    if values[0] < -tol::PSD {
        return Err(Error::InvalidState(format!(
            "negative eigenvalue {:.3e}",
            values[0]
        )));
    }
    Ok(())
}

/// One outcome of a measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord {
    pub probability: f64,
    /// `None` when the probability is at or below [`tol::PROB`].
    pub post_state: Option<CMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub outcomes: Vec<OutcomeRecord>,
}

impl MeasurementRecord {
    pub fn probabilities(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.probability).collect()
    }
}

/// `p_i = Tr(K_i ρ K_i†)` and `ρ_i = K_i ρ K_i† / p_i`.
pub fn apply_direct(spec: &PovmSpec, rho: &CMatrix) -> Result<MeasurementRecord> {
    check_state(rho, spec.system_dim)?;
    let kraus = to_kraus(spec)?;
    let outcomes = kraus
        .matrices
        .iter()
        .map(|k| {
            let unnormalized = numerics::hermitian_part(&(k * rho * k.adjoint()));
            let probability = numerics::trace(&unnormalized).re.max(0.0);
            let post_state = (probability > tol::PROB).then(|| unnormalized.unscale(probability));
            OutcomeRecord {
                probability,
                post_state,
            }
        })
        .collect();
    Ok(MeasurementRecord { outcomes })
}

/// Tetrahedron states of the qubit SIC-POVM: `|0⟩` and `√⅓|0⟩ + √⅔ e^{2πi(k−1)/3}|1⟩`.
pub fn sic_qubit_states() -> [DVector<Complex64>; 4] {
    let a = (1.0f64 / 3.0).sqrt();
    let b = (2.0f64 / 3.0).sqrt();
    let tilted = |k: usize| {
        let phase = Complex64::from_polar(b, 2.0 * std::f64::consts::PI * (k as f64 - 1.0) / 3.0);
        DVector::from_column_slice(&[c(a, 0.0), phase])
    };
    [
        DVector::from_column_slice(&[c(1.0, 0.0), c(0.0, 0.0)]),
        tilted(1),
        tilted(2),
        tilted(3),
    ]
}

/// The four-outcome qubit SIC-POVM with effects `Π_i / 2`.
pub fn make_sic_qubit() -> PovmSpec {
    let matrices = sic_qubit_states()
        .iter()
        .map(|psi| (psi * psi.adjoint()).scale(0.5))
        .map(|e| numerics::hermitian_part(&e))
        .collect();
    PovmSpec::new(PovmKind::Effects, matrices, "qubit SIC-POVM").expect("2x2 effects")
}

/// Rank-one projective measurement onto the columns of `basis`.
pub fn make_projective(basis: &CMatrix, label: impl Into<String>) -> Result<PovmSpec> {
    if !basis.is_square() {
        return Err(Error::Shape(format!(
            "a basis of C^{} needs {} vectors, got {}",
            basis.nrows(),
            basis.nrows(),
            basis.ncols()
        )));
    }
    let residual = numerics::isometry_residual(basis);
    if residual > tol::UNITARY {
        return Err(Error::InvalidIsometry { residual });
    }
    let matrices = basis
        .column_iter()
        .map(|b| numerics::hermitian_part(&(b * b.adjoint())))
        .collect();
    PovmSpec::new(PovmKind::Effects, matrices, label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{diag_real, max_abs_diff};
    use crate::random;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn half_half() -> PovmSpec {
        let half = diag_real(&[0.5, 0.5]);
        PovmSpec::new(PovmKind::Effects, vec![half.clone(), half], "coin").unwrap()
    }

    fn hadamard() -> CMatrix {
        let h = FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)])
    }

    #[test]
    fn validate_examples() {
        let report = validate(&half_half(), &ValidationTolerances::default());
        assert!(report.pass);
        assert!(report.completeness_residual < 1e-16);

        let big = diag_real(&[0.6, 0.6]);
        let bad = PovmSpec::new(PovmKind::Effects, vec![big.clone(), big], "bad").unwrap();
        let report = validate(&bad, &ValidationTolerances::default());
        assert!(!report.pass);
        assert!((report.completeness_residual - 0.2).abs() < 1e-15);
        match report.check() {
            Err(Error::InvalidPovm { condition, .. }) => {
                assert!(condition.contains("completeness"))
            }
            other => panic!("unexpected {other:?}"),
        }

        assert!(validate(&make_sic_qubit(), &ValidationTolerances::default()).pass);
    }

    #[test]
    fn validate_flags_negative_effects() {
        let spec = PovmSpec::new(
            PovmKind::Effects,
            vec![diag_real(&[1.5, 0.5]), diag_real(&[-0.5, 0.5])],
            "negative",
        )
        .unwrap();
        let report = validate(&spec, &ValidationTolerances::default());
        assert!(!report.pass);
        assert!(report.violations[0].contains("effect 1"));
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(
            PovmSpec::new(PovmKind::Effects, vec![], "empty"),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            PovmSpec::new(
                PovmKind::Effects,
                vec![numerics::identity(2), numerics::identity(3)],
                "mixed"
            ),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn kraus_of_examples() {
        let k = to_kraus(&half_half()).unwrap();
        for m in k.matrices() {
            assert!(max_abs_diff(m, &diag_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2])) < 1e-15);
        }
        let proj = diag_real(&[1.0, 0.0]);
        let spec = PovmSpec::new(
            PovmKind::Effects,
            vec![proj.clone(), diag_real(&[0.0, 1.0])],
            "z",
        )
        .unwrap();
        assert!(max_abs_diff(&to_kraus(&spec).unwrap().matrices()[0], &proj) < 1e-15);

        // √(Π/2) = Π/√2 for a rank-one projector
        let sic = to_kraus(&make_sic_qubit()).unwrap();
        for (k, psi) in sic.matrices().iter().zip(sic_qubit_states()) {
            let expected = (&psi * psi.adjoint()).scale(FRAC_1_SQRT_2);
            assert!(max_abs_diff(k, &expected) < 1e-14);
        }
        assert_eq!(to_kraus(&sic).unwrap(), sic);
    }

    #[test]
    fn effects_kraus_round_trip() {
        let mut rng = random::seeded(12);
        for m in 2..5 {
            let spec = random::random_effects_povm(m, 4, &mut rng);
            let back = to_kraus(&spec).unwrap().effects();
            for (a, b) in back.iter().zip(spec.matrices()) {
                assert!(max_abs_diff(a, b) < 1e-11);
            }
        }
    }

    #[test]
    fn direct_projective_on_plus() {
        let spec = make_projective(&numerics::identity(2), "z").unwrap();
        let plus = CMatrix::from_element(2, 2, c(0.5, 0.0));
        let rec = apply_direct(&spec, &plus).unwrap();
        assert!((rec.outcomes[0].probability - 0.5).abs() < 1e-15);
        assert!((rec.outcomes[1].probability - 0.5).abs() < 1e-15);
        let s0 = rec.outcomes[0].post_state.as_ref().unwrap();
        assert!(max_abs_diff(s0, &diag_real(&[1.0, 0.0])) < 1e-15);
    }

    #[test]
    fn direct_sic_on_zero() {
        let rec = apply_direct(&make_sic_qubit(), &diag_real(&[1.0, 0.0])).unwrap();
        let expected = [0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        for (p, e) in rec.probabilities().iter().zip(expected) {
            assert!((p - e).abs() < 1e-14);
        }
    }

    #[test]
    fn direct_probabilities_match_effects_and_sum_to_one() {
        let mut rng = random::seeded(13);
        for _ in 0..20 {
            let spec = random::random_kraus_povm(3, 4, &mut rng);
            let rho = random::random_density_matrix(3, &mut rng);
            let rec = apply_direct(&spec, &rho).unwrap();
            let total: f64 = rec.probabilities().iter().sum();
            assert!((total - 1.0).abs() < 1e-11);
            for (p, e) in rec.probabilities().iter().zip(spec.effects()) {
                assert!(*p >= 0.0);
                assert!((p - numerics::trace(&(&e * &rho)).re).abs() < 1e-12);
            }
        }
        let mixed = diag_real(&[1.0 / 3.0; 3]);
        let rec = apply_direct(&random::random_effects_povm(3, 5, &mut rng), &mixed).unwrap();
        assert!((rec.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_has_no_post_state() {
        let spec = make_projective(&numerics::identity(2), "z").unwrap();
        let rec = apply_direct(&spec, &diag_real(&[1.0, 0.0])).unwrap();
        assert!(rec.outcomes[1].post_state.is_none());
    }

    #[test]
    fn invalid_state_rejected() {
        let spec = make_sic_qubit();
        assert!(matches!(
            apply_direct(&spec, &diag_real(&[0.7, 0.7])),
            Err(Error::InvalidState(_))
        ));
        assert!(matches!(
            apply_direct(&spec, &diag_real(&[1.0])),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn sic_gram_condition() {
        let sic = make_sic_qubit();
        let projectors: Vec<CMatrix> = sic.matrices().iter().map(|e| e.scale(2.0)).collect();
        for (i, a) in projectors.iter().enumerate() {
            for (j, b) in projectors.iter().enumerate() {
                let overlap = numerics::trace(&(a * b));
                let expected = if i == j { 1.0 } else { 1.0 / 3.0 };
                assert!((overlap - c(expected, 0.0)).norm() < 1e-12, "({i},{j})");
            }
        }
        let total = sic
            .matrices()
            .iter()
            .fold(CMatrix::zeros(2, 2), |acc, e| acc + e);
        assert!(max_abs_diff(&total, &numerics::identity(2)) < 1e-14);
    }

    #[test]
    fn projective_bases() {
        let spec = make_projective(&hadamard(), "x").unwrap();
        assert!(validate(&spec, &ValidationTolerances::default()).completeness_residual < 1e-15);

        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let s = 1.0 / 3f64.sqrt();
        let fourier = CMatrix::from_fn(3, 3, |r, k| w.powu((r * k) as u32) * s);
        let spec = make_projective(&fourier, "fourier").unwrap();
        let e = spec.matrices();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(numerics::trace(&(&e[i] * &e[j])).norm() < 1e-15);
                }
            }
        }
        let skew =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(make_projective(&skew, "skew").is_err());
    }

    #[test]
    fn json_round_trip_and_rejections() {
        let sic = make_sic_qubit();
        let text = sic.to_json();
        assert!(text.starts_with(r#"{"system_dim":2,"outcomes":4,"kind":"effects""#));
        assert_eq!(PovmSpec::from_json(&text).unwrap(), sic);

        let ragged = r#"{"system_dim":1,"outcomes":1,"kind":"effects","label":"","matrices":[[[[1,0]],[[0,0],[1,0]]]]}"#;
        assert!(matches!(
            PovmSpec::from_json(ragged),
            Err(Error::Parse { .. })
        ));
        let wrong_count = r#"{"system_dim":1,"outcomes":2,"kind":"kraus","matrices":[[[[1,0]]]]}"#;
        assert!(PovmSpec::from_json(wrong_count).is_err());
    }
}
