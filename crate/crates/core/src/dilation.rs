//! Naimark dilation of a POVM into a unitary on `n` spatial modes.
//!
//! Basis index `i·m + r` is spatial mode `i`, internal level `r`. The system enters
//! through mode 0, so the first block column of the dilation stacks the Kraus operators
//! and the remaining columns are a seeded Gram–Schmidt completion.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{self, CMatrix};
use crate::povm::{self, PovmKind, PovmSpec};
use crate::{json, tol};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilationUnitary {
    #[serde(with = "json::matrix")]
    pub matrix: CMatrix,
    /// Internal (system) dimension.
    pub m: usize,
    /// Number of outcomes / spatial modes.
    pub n: usize,
    /// Seed used for the completion columns.
    pub seed: u64,
}

impl DilationUnitary {
    /// The `m×m` block mapping input mode `col` to output mode `row`.
    pub fn block(&self, row: usize, col: usize) -> CMatrix {
        numerics::block(&self.matrix, row * self.m, col * self.m, self.m, self.m)
    }
}

pub fn build_dilation(spec: &PovmSpec, seed: u64) -> Result<DilationUnitary> {
    if spec.kind() != PovmKind::Kraus {
        return Err(Error::Precondition(
            "dilation needs Kraus operators; convert with povm::to_kraus".into(),
        ));
    }
    let (m, n) = (spec.system_dim(), spec.outcomes());
    let mut column = CMatrix::zeros(n * m, m);
    for (i, k) in spec.matrices().iter().enumerate() {
        numerics::set_block(&mut column, i * m, 0, k);
    }
    let matrix = numerics::complete_to_unitary(&column, seed)?;
    Ok(DilationUnitary { matrix, m, n, seed })
}

/// `K_i = ⟨i|U|0⟩`.
pub fn extract_kraus(d: &DilationUnitary) -> PovmSpec {
    let matrices = (0..d.n).map(|i| d.block(i, 0)).collect();
    PovmSpec::new(PovmKind::Kraus, matrices, "extracted from dilation")
        .expect("blocks of a well-formed dilation are square")
}

/// `P(i) = Tr[(Π_i ⊗ I) U (|0⟩⟨0| ⊗ ρ) U†]`, evaluated on the full `nm×nm` state.
pub fn dilated_probabilities(d: &DilationUnitary, rho: &CMatrix) -> Result<Vec<f64>> {
    povm::check_state(rho, d.m)?;
    let dim = d.n * d.m;
    if d.matrix.shape() != (dim, dim) {
        return Err(Error::Shape(format!(
            "dilation is {}x{}, expected {dim}x{dim}",
            d.matrix.nrows(),
            d.matrix.ncols()
        )));
    }
    let mut joint = CMatrix::zeros(dim, dim);
    numerics::set_block(&mut joint, 0, 0, rho);
    let out = &d.matrix * joint * d.matrix.adjoint();
    Ok((0..d.n)
        .map(|i| {
            (0..d.m)
                .map(|r| out[(i * d.m + r, i * d.m + r)].re)
                .sum::<f64>()
                .max(0.0)
        })
        .collect())
}

/// Unitarity residual of the stored matrix, for sanity checks after deserialization.
pub fn check(d: &DilationUnitary) -> Result<()> {
    let residual = numerics::unitarity_residual(&d.matrix);
    if residual > tol::UNITARY {
        return Err(Error::InvalidUnitary { residual });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, diag_real, max_abs_diff};
    use crate::random;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn projective_qubit() -> PovmSpec {
        povm::to_kraus(&povm::make_projective(&numerics::identity(2), "z").unwrap()).unwrap()
    }

    #[test]
    fn projective_dilation_is_unitary() {
        let d = build_dilation(&projective_qubit(), 1).unwrap();
        assert_eq!(d.matrix.shape(), (4, 4));
        assert!(numerics::unitarity_residual(&d.matrix) < 1e-13);
        let plus = CMatrix::from_element(2, 2, c(0.5, 0.0));
        let p = dilated_probabilities(&d, &plus).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-14 && (p[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sic_dilation_stacks_kraus() {
        let sic = povm::to_kraus(&povm::make_sic_qubit()).unwrap();
        let d = build_dilation(&sic, 5).unwrap();
        assert_eq!(d.matrix.shape(), (8, 8));
        assert!(numerics::unitarity_residual(&d.matrix) < 1e-12);
        for (i, k) in sic.matrices().iter().enumerate() {
            assert_eq!(&d.block(i, 0), k);
        }
        let p = dilated_probabilities(&d, &diag_real(&[1.0, 0.0])).unwrap();
        let direct = povm::apply_direct(&sic, &diag_real(&[1.0, 0.0])).unwrap();
        for (a, b) in p.iter().zip(direct.probabilities()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((p[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn extract_inverts_build_for_any_seed() {
        let half = diag_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]);
        let spec = PovmSpec::new(PovmKind::Kraus, vec![half.clone(), half], "half").unwrap();
        for seed in 0..5 {
            let d = build_dilation(&spec, seed).unwrap();
            assert_eq!(extract_kraus(&d).matrices(), spec.matrices());
            povm::ensure_valid(&extract_kraus(&d)).unwrap();
        }
    }

    #[test]
    fn hand_built_beam_splitter_dilation() {
        let s = FRAC_1_SQRT_2;
        let matrix = CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(0.0, s), c(0.0, s), c(s, 0.0)]);
        let d = DilationUnitary {
            matrix,
            m: 1,
            n: 2,
            seed: 0,
        };
        let k = extract_kraus(&d);
        assert_eq!(k.matrices()[0][(0, 0)], c(s, 0.0));
        assert_eq!(k.matrices()[1][(0, 0)], c(0.0, s));
    }

    #[test]
    fn random_dilations_are_complete() {
        let mut rng = random::seeded(21);
        for _ in 0..20 {
            let spec = random::random_kraus_povm(3, 4, &mut rng);
            let d = build_dilation(&spec, 9).unwrap();
            let extracted = extract_kraus(&d);
            let total = extracted
                .effects()
                .iter()
                .fold(CMatrix::zeros(3, 3), |acc, e| acc + e);
            assert!(max_abs_diff(&total, &numerics::identity(3)) < 1e-12);
            let mixed = diag_real(&[1.0 / 3.0; 3]);
            let p = dilated_probabilities(&d, &mixed).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn effects_spec_is_rejected() {
        assert!(matches!(
            build_dilation(&povm::make_sic_qubit(), 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn invalid_povm_surfaces_as_isometry_error() {
        let spec =
            PovmSpec::new(PovmKind::Kraus, vec![numerics::identity(2); 2], "double").unwrap();
        assert!(matches!(
            build_dilation(&spec, 0),
            Err(Error::InvalidIsometry { .. })
        ));
    }
}
