//! Cosine–sine block as a Mach–Zehnder interferometer.
//!
//! `[[C, −S], [S, C]] = (B ⊗ I)(Θ† ⊕ Θ)(B† ⊗ I)` with `B` the balanced beam splitter
//! and `Θ = diag(e^{iθ_k})`. The inverse splitter is `B† = Z B Z` with
//! `Z = diag(1, −1)`; the inner `Z` folds into the phase on the second mode, which
//! leaves a sign flip on the second mode's input port.

use std::f64::consts::PI;

use crate::netlist::NetElement;

/// Exact element factoring of one cosine–sine block on modes `(a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsBlock {
    /// `−I` on mode `b`, met before anything else. Inside a compiled ladder mode `b`
    /// carries no light at this point, so the emitter leaves it out.
    pub input_sign: NetElement,
    /// Beam splitter, phases, beam splitter.
    pub elements: Vec<NetElement>,
}

impl CsBlock {
    /// Every element in light order; their product is exactly the CS matrix.
    pub fn all(&self) -> Vec<NetElement> {
        std::iter::once(self.input_sign.clone())
            .chain(self.elements.iter().cloned())
            .collect()
    }
}

pub fn factor_cs_block(theta: &[f64], a: usize, b: usize) -> CsBlock {
    let m = theta.len();
    CsBlock {
        input_sign: NetElement::phase(b, vec![PI; m]),
        elements: vec![
            NetElement::bbs(a, b),
            NetElement::phase(a, theta.iter().map(|t| -t).collect()),
            NetElement::phase(b, theta.iter().map(|t| t + PI).collect()),
            NetElement::bbs(a, b),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{bbs_matrix, phase_matrix, OpticalNetlist};
    use crate::numerics::{self, cs_matrix, max_abs_diff, CMatrix};
    use rand::Rng;
    use std::f64::consts::FRAC_PI_2;

    fn product(theta: &[f64], elements: Vec<NetElement>) -> CMatrix {
        let mut net = OpticalNetlist::new(2, theta.len());
        net.elements = elements;
        net.to_global_unitary().unwrap()
    }

    /// The CS matrix built straight from Kronecker products, independent of the netlist.
    fn kron_oracle(theta: &[f64]) -> CMatrix {
        let m = theta.len();
        let b = bbs_matrix();
        let kron_b = b.kronecker(&numerics::identity(m));
        let t = phase_matrix(theta);
        let mid = numerics::direct_sum(&t.adjoint(), &t);
        &kron_b * mid * kron_b.adjoint()
    }

    #[test]
    fn printed_operand_order_gives_transposed_signs() {
        // (B ⊗ I)(Θ ⊕ Θ†)(B† ⊗ I) = [[C, S], [−S, C]]
        let theta = [0.3, 1.1];
        let b = bbs_matrix().kronecker(&numerics::identity(2));
        let t = phase_matrix(&theta);
        let printed = &b * numerics::direct_sum(&t, &t.adjoint()) * b.adjoint();
        assert!(max_abs_diff(&printed, &cs_matrix(&theta, 0).transpose()) < 1e-15);
        assert!(max_abs_diff(&kron_oracle(&theta), &cs_matrix(&theta, 0)) < 1e-15);
    }

    #[test]
    fn zero_angles_give_identity() {
        let theta = [0.0; 3];
        let p = product(&theta, factor_cs_block(&theta, 0, 1).all());
        assert!(max_abs_diff(&p, &numerics::identity(6)) < 1e-14);
    }

    #[test]
    fn quarter_turns_give_signed_swap() {
        let theta = [FRAC_PI_2; 2];
        let p = product(&theta, factor_cs_block(&theta, 0, 1).all());
        assert!(max_abs_diff(&p, &cs_matrix(&theta, 0)) < 1e-14);
        assert!((p[(0, 2)].re + 1.0).abs() < 1e-14);
        assert!((p[(2, 0)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_angles_match_cs_matrix() {
        let mut rng = crate::random::seeded(31);
        for _ in 0..100 {
            let m = rng.random_range(1..=8);
            let theta: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..FRAC_PI_2)).collect();
            let p = product(&theta, factor_cs_block(&theta, 0, 1).all());
            assert!(max_abs_diff(&p, &kron_oracle(&theta)) < 1e-13);
        }
    }

    #[test]
    fn dropping_the_input_sign_keeps_the_first_block_column() {
        let theta = [0.4, 0.9];
        let p = product(&theta, factor_cs_block(&theta, 0, 1).elements);
        let full = cs_matrix(&theta, 0);
        assert!(
            max_abs_diff(
                &numerics::block(&p, 0, 0, 4, 2),
                &numerics::block(&full, 0, 0, 4, 2)
            ) < 1e-15
        );
        assert_eq!(factor_cs_block(&theta, 0, 1).elements.len(), 4);
    }
}
