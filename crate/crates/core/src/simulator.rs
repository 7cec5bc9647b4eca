//! Density-matrix propagation through optical netlists.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::OpticalNetlist;
use crate::numerics::{self, CMatrix};
use crate::povm::{self, PovmSpec};
use crate::random;
use crate::tol;

/// Internal state injected into one spatial mode, all other modes empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SimInput {
    pub internal_state: CMatrix,
    pub input_mode: usize,
}

impl SimInput {
    pub fn new(internal_state: CMatrix) -> Self {
        Self {
            internal_state,
            input_mode: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutcome {
    pub probability: f64,
    /// Normalized internal state on the detector mode; `None` when `probability ≤ PROB`.
    pub post_internal: Option<CMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    /// Indexed by outcome label.
    pub outcomes: Vec<DetectorOutcome>,
    pub global_output: Option<CMatrix>,
}

impl SimOutcome {
    pub fn probabilities(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.probability).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Propagation {
    /// Apply each element to the density matrix in turn.
    #[default]
    Elementwise,
    /// Build the global unitary first and conjugate once.
    GlobalUnitary,
}

fn check_input(net: &OpticalNetlist, input: &SimInput) -> Result<()> {
    net.check()?;
    let m = net.internal_dim;
    if input.internal_state.shape() != (m, m) {
        return Err(Error::Shape(format!(
            "netlist carries a {m}-dimensional internal state, input is {}x{}",
            input.internal_state.nrows(),
            input.internal_state.ncols()
        )));
    }
    povm::check_state(&input.internal_state, m)?;
    if input.input_mode >= net.modes {
        return Err(Error::Shape(format!(
            "input mode {} out of range for {} modes",
            input.input_mode, net.modes
        )));
    }
    let n = net.detectors.len();
    if let Some(d) = net.detectors.iter().find(|d| d.outcome >= n) {
        return Err(Error::Shape(format!(
            "detector outcome {} out of range for {n} detectors",
            d.outcome
        )));
    }
    Ok(())
}

fn embed(net: &OpticalNetlist, input: &SimInput) -> CMatrix {
    let m = net.internal_dim;
    let mut rho = CMatrix::zeros(net.dim(), net.dim());
    numerics::set_block(
        &mut rho,
        input.input_mode * m,
        input.input_mode * m,
        &input.internal_state,
    );
    rho
}

fn propagate(net: &OpticalNetlist, rho: CMatrix, mode: Propagation) -> Result<CMatrix> {
    let m = net.internal_dim;
    Ok(match mode {
        Propagation::Elementwise => {
            let mut rho = rho;
            for el in &net.elements {
                // ρ → Eρ → (E(Eρ)†)† = EρE†
                el.apply_left(&mut rho, m);
                rho = rho.adjoint();
                el.apply_left(&mut rho, m);
                rho = rho.adjoint();
            }
            numerics::hermitian_part(&rho)
        }
        Propagation::GlobalUnitary => {
            let u = net.to_global_unitary()?;
            numerics::hermitian_part(&(&u * rho * u.adjoint()))
        }
    })
}

/// Propagate with the chosen method and read out every detector.
pub fn run_with(net: &OpticalNetlist, input: &SimInput, mode: Propagation) -> Result<SimOutcome> {
    check_input(net, input)?;
    let m = net.internal_dim;
    let out = propagate(net, embed(net, input), mode)?;
    let mut outcomes = vec![
        DetectorOutcome {
            probability: 0.0,
            post_internal: None,
        };
        net.detectors.len()
    ];
    for d in &net.detectors {
        let block = numerics::block(&out, d.mode * m, d.mode * m, m, m);
        let probability = numerics::trace(&block).re.max(0.0);
        outcomes[d.outcome] = DetectorOutcome {
            probability,
            post_internal: (probability > tol::PROB).then(|| block.unscale(probability)),
        };
    }
    Ok(SimOutcome {
        outcomes,
        global_output: Some(out),
    })
}

pub fn run(net: &OpticalNetlist, input: &SimInput) -> Result<SimOutcome> {
    run_with(net, input, Propagation::Elementwise)
}

/// Multinomial draw of `shots` detection events from `probabilities`.
pub fn sample_counts<R: Rng + ?Sized>(
    probabilities: &[f64],
    shots: u64,
    rng: &mut R,
) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::Precondition("shots must be at least 1".into()));
    }
    let total: f64 = probabilities.iter().map(|p| p.max(0.0)).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Precondition("probabilities sum to zero".into()));
    }
    let mut counts = vec![0u64; probabilities.len()];
    let mut left = shots;
    let mut mass = 1.0;
    for (i, p) in probabilities.iter().enumerate() {
        if left == 0 {
            break;
        }
        let p = p.max(0.0) / total;
        if i + 1 == probabilities.len() || mass <= p {
            counts[i] = left;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = Binomial::new(left, q)
            .map_err(|e| Error::NumericFailure {
                context: format!("binomial draw: {e}"),
                residual: q,
            })?
            .sample(rng);
        counts[i] = k;
        left -= k;
        mass -= p;
    }
    Ok(counts)
}

/// Simulate `shots` single-photon detections.
pub fn sample(net: &OpticalNetlist, input: &SimInput, shots: u64, seed: u64) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::Precondition("shots must be at least 1".into()));
    }
    let probs = run(net, input)?.probabilities();
    sample_counts(&probs, shots, &mut random::seeded(seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub max_prob_dev: f64,
    /// Largest post-state trace distance over outcomes with `p > 1e-8`; zero when
    /// post-states are not compared.
    pub max_state_dev: f64,
    pub trials: usize,
    pub pass: bool,
    pub seed: u64,
    pub tol: f64,
    /// False for effects-only netlists, whose post-states differ by the dropped unitaries.
    pub post_states_checked: bool,
}

/// Outcomes below this probability are skipped in the post-state comparison.
pub const POST_STATE_MIN_PROB: f64 = 1e-8;

/// Trial `k` uses state `random_density_matrix` seeded with `derive_seed(seed, k)`.
pub fn verification_state(m: usize, seed: u64, trial: usize) -> CMatrix {
    let mut rng = random::seeded(random::derive_seed(seed, trial as u64));
    random::random_density_matrix(m, &mut rng)
}

/// Compare simulated detector statistics with `Tr(E_i ρ)` on random mixed states.
pub fn verify(
    net: &OpticalNetlist,
    spec: &PovmSpec,
    trials: usize,
    seed: u64,
    tolerance: f64,
) -> Result<VerificationReport> {
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    povm::ensure_valid(spec)?;
    net.check()?;
    let m = spec.system_dim();
    if net.internal_dim != m {
        return Err(Error::Shape(format!(
            "netlist internal dimension {} does not match POVM dimension {m}",
            net.internal_dim
        )));
    }
    if net.detectors.len() != spec.outcomes() {
        return Err(Error::Shape(format!(
            "netlist has {} detectors, POVM has {} outcomes",
            net.detectors.len(),
            spec.outcomes()
        )));
    }
    let compare_states = !net.meta.effects_only;
    let kraus = povm::to_kraus(spec)?;

    let per_trial: Vec<Result<(f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let rho = verification_state(m, seed, k);
            let sim = run(net, &SimInput::new(rho.clone()))?;
            let direct = povm::apply_direct(&kraus, &rho)?;
            let mut prob_dev: f64 = 0.0;
            let mut state_dev: f64 = 0.0;
            for (s, d) in sim.outcomes.iter().zip(&direct.outcomes) {
                prob_dev = prob_dev.max((s.probability - d.probability).abs());
                if compare_states && d.probability > POST_STATE_MIN_PROB {
                    match (&s.post_internal, &d.post_state) {
                        (Some(a), Some(b)) => {
                            state_dev = state_dev.max(numerics::trace_distance(a, b))
                        }
                        _ => state_dev = f64::INFINITY,
                    }
                }
            }
            Ok((prob_dev, state_dev))
        })
        .collect();

    let mut max_prob_dev: f64 = 0.0;
    let mut max_state_dev: f64 = 0.0;
    for r in per_trial {
        let (p, s) = r?;
        max_prob_dev = max_prob_dev.max(p);
        max_state_dev = max_state_dev.max(s);
    }
    Ok(VerificationReport {
        max_prob_dev,
        max_state_dev,
        trials,
        pass: max_prob_dev <= tolerance && max_state_dev <= tolerance,
        seed,
        tol: tolerance,
        post_states_checked: compare_states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{compile, CompileOptions};
    use crate::netlist::{Detector, NetElement};
    use crate::numerics::{c, diag_real, max_abs_diff};
    use crate::povm::PovmKind;

    fn plus() -> CMatrix {
        CMatrix::from_element(2, 2, c(0.5, 0.0))
    }

    fn z_measurement() -> PovmSpec {
        povm::make_projective(&numerics::identity(2), "z").unwrap()
    }

    #[test]
    fn projective_on_plus_is_fair() {
        let spec = povm::make_projective(
            &CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
            "z",
        )
        .unwrap();
        let net = compile(&spec, &CompileOptions::default()).unwrap().netlist;
        let p = run(&net, &SimInput::new(plus())).unwrap().probabilities();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sic_on_zero() {
        let net = compile(&povm::make_sic_qubit(), &CompileOptions::default())
            .unwrap()
            .netlist;
        let p = run(&net, &SimInput::new(diag_real(&[1.0, 0.0])))
            .unwrap()
            .probabilities();
        for (a, b) in p.iter().zip([0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_netlist_passes_state_through() {
        let mut net = OpticalNetlist::new(1, 2);
        net.detectors.push(Detector {
            mode: 0,
            outcome: 0,
        });
        let out = run(&net, &SimInput::new(plus())).unwrap();
        assert!((out.outcomes[0].probability - 1.0).abs() < 1e-15);
        assert!(max_abs_diff(out.outcomes[0].post_internal.as_ref().unwrap(), &plus()) < 1e-15);
    }

    #[test]
    fn propagation_paths_agree() {
        let mut rng = random::seeded(12);
        for _ in 0..10 {
            let spec = random::random_kraus_povm(3, 4, &mut rng);
            let net = compile(&spec, &CompileOptions::default()).unwrap().netlist;
            let input = SimInput::new(random::random_density_matrix(3, &mut rng));
            let a = run_with(&net, &input, Propagation::Elementwise).unwrap();
            let b = run_with(&net, &input, Propagation::GlobalUnitary).unwrap();
            assert!(
                max_abs_diff(
                    a.global_output.as_ref().unwrap(),
                    b.global_output.as_ref().unwrap()
                ) < 1e-11
            );
            let total: f64 = a.probabilities().iter().sum();
            assert!((total - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let net = compile(&z_measurement(), &CompileOptions::default())
            .unwrap()
            .netlist;
        let input = SimInput::new(numerics::identity(3).unscale(3.0));
        assert!(matches!(run(&net, &input), Err(Error::Shape(_))));
        let qutrit = random::random_effects_povm(3, 2, &mut random::seeded(1));
        assert!(verify(&net, &qutrit, 3, 0, 1e-10).is_err());
    }

    #[test]
    fn sampling_edge_cases() {
        let net = compile(&z_measurement(), &CompileOptions::default())
            .unwrap()
            .netlist;
        let zero = SimInput::new(diag_real(&[1.0, 0.0]));
        assert!(matches!(
            sample(&net, &zero, 0, 1),
            Err(Error::Precondition(_))
        ));
        assert_eq!(sample(&net, &zero, 1000, 1).unwrap(), vec![1000, 0]);
        let counts = sample(&net, &SimInput::new(plus()), 1_000_000, 7).unwrap();
        assert_eq!(counts.iter().sum::<u64>(), 1_000_000);
        for k in counts {
            assert!((k as f64 - 500_000.0).abs() < 2500.0);
        }
        assert_eq!(
            sample(&net, &SimInput::new(plus()), 1000, 3).unwrap(),
            sample(&net, &SimInput::new(plus()), 1000, 3).unwrap()
        );
    }

    #[test]
    fn sampling_matches_probabilities() {
        // chi-square with 3 degrees of freedom stays far below 30 at fixed seeds
        let probs = [0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        for seed in 0..5 {
            let shots = 100_000u64;
            let counts = sample_counts(&probs, shots, &mut random::seeded(seed)).unwrap();
            let chi2: f64 = counts
                .iter()
                .zip(probs)
                .map(|(&k, p)| {
                    let e = p * shots as f64;
                    (k as f64 - e).powi(2) / e
                })
                .sum();
            assert!(chi2 < 30.0, "chi2 {chi2}");
        }
    }

    #[test]
    fn compiled_sic_verifies() {
        let sic = povm::make_sic_qubit();
        let net = compile(&sic, &CompileOptions::default()).unwrap().netlist;
        let report = verify(&net, &sic, 50, 3, 1e-10).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.post_states_checked);
        assert_eq!(report, verify(&net, &sic, 50, 3, 1e-10).unwrap());
    }

    #[test]
    fn perturbed_phase_fails() {
        let sic = povm::make_sic_qubit();
        let mut net = compile(&sic, &CompileOptions::default()).unwrap().netlist;
        let el = net
            .elements
            .iter_mut()
            .find_map(|e| match e {
                NetElement::InternalPhase { phases, .. } => Some(phases),
                _ => None,
            })
            .unwrap();
        el[0] += 1e-3;
        let report = verify(&net, &sic, 50, 3, 1e-10).unwrap();
        assert!(!report.pass);
        assert!(report.max_prob_dev > 1e-4);
    }

    #[test]
    fn effects_only_skips_post_states() {
        let sic = povm::make_sic_qubit();
        let opts = CompileOptions {
            effects_only: true,
            ..CompileOptions::default()
        };
        let net = compile(&sic, &opts).unwrap().netlist;
        let report = verify(&net, &sic, 20, 1, 1e-10).unwrap();
        assert!(report.pass);
        assert!(!report.post_states_checked);
    }

    #[test]
    fn zero_trials_rejected() {
        let spec = PovmSpec::new(PovmKind::Effects, vec![numerics::identity(2)], "t").unwrap();
        let net = compile(&spec, &CompileOptions::default()).unwrap().netlist;
        assert!(matches!(
            verify(&net, &spec, 0, 0, 1e-10),
            Err(Error::Precondition(_))
        ));
    }
}
