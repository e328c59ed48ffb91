//! Step-by-step cross-check of the simulator against the dense oracle on
//! random circuits.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{circuit_seed, CliffordGate, Fault, StabilizerTN, MAX_RECONSTRUCT_QUBITS};
use crate::error::{Error, Result};
use crate::mps::TruncationPolicy;
use crate::oracle::{gates, DenseState};
use crate::pauli::{Pauli, PauliString};

/// Fidelity every step must reach for a run to pass.
pub const FIDELITY_THRESHOLD: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub n: usize,
    pub circuits: usize,
    pub depth: usize,
    pub seed: u64,
    pub policy: TruncationPolicy,
    pub fault: Option<Fault>,
}

impl VerifyConfig {
    pub fn new(n: usize, circuits: usize, depth: usize, seed: u64) -> Self {
        Self {
            n,
            circuits,
            depth,
            seed,
            policy: TruncationPolicy::default(),
            fault: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Step {
    H(usize),
    S(usize),
    Cnot(usize, usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    MeasureZ(usize),
}

/// Worst values seen over one or more circuits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyStats {
    pub steps: usize,
    pub measurements: usize,
    pub min_fidelity: f64,
    /// `|‖ν‖ − 1|`
    pub max_norm_error: f64,
    /// Recorded probability against the oracle's.
    pub max_probability_error: f64,
    /// Recorded probability against `(1 + m⟨O⟩)/2`.
    pub max_born_rule_error: f64,
    pub failures: Vec<String>,
}

impl VerifyStats {
    fn empty() -> Self {
        Self {
            steps: 0,
            measurements: 0,
            min_fidelity: 1.0,
            max_norm_error: 0.0,
            max_probability_error: 0.0,
            max_born_rule_error: 0.0,
            failures: Vec::new(),
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.steps += other.steps;
        self.measurements += other.measurements;
        self.min_fidelity = self.min_fidelity.min(other.min_fidelity);
        self.max_norm_error = self.max_norm_error.max(other.max_norm_error);
        self.max_probability_error = self.max_probability_error.max(other.max_probability_error);
        self.max_born_rule_error = self.max_born_rule_error.max(other.max_born_rule_error);
        self.failures.extend(other.failures);
        self
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
            && self.min_fidelity >= FIDELITY_THRESHOLD
            && self.max_norm_error <= 1e-10
            && self.max_probability_error <= 1e-10
            && self.max_born_rule_error <= 1e-10
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub n: usize,
    pub circuits: usize,
    pub depth: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub stats: VerifyStats,
    pub passed: bool,
}

/// Draws one step uniformly from `{H, S, CNOT, RX, RY, RZ, measure-Z}`
/// (CNOT only when `n ≥ 2`), angles uniform in `(0, 2π)`.
pub fn random_step<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Step {
    let kinds = [0, 1, 2, 3, 4, 5, 6];
    let kinds = if n > 1 { &kinds[..] } else { &[0, 1, 3, 4, 5, 6][..] };
    let q = rng.random_range(0..n);
    let angle = |rng: &mut R| loop {
        let a = rng.random::<f64>() * TAU;
        if a > 0.0 {
            break a;
        }
    };
    match kinds[rng.random_range(0..kinds.len())] {
        0 => Step::H(q),
        1 => Step::S(q),
        2 => {
            let t = (q + rng.random_range(1..n)) % n;
            Step::Cnot(q, t)
        }
        3 => Step::Rx(q, angle(rng)),
        4 => Step::Ry(q, angle(rng)),
        5 => Step::Rz(q, angle(rng)),
        _ => Step::MeasureZ(q),
    }
}

/// Runs one random circuit, comparing after every step. Measurement outcomes
/// are sampled by the oracle and forced on the simulator.
pub fn verify_circuit(
    n: usize,
    depth: usize,
    seed: u64,
    policy: &TruncationPolicy,
    fault: Option<Fault>,
) -> Result<VerifyStats> {
    if n == 0 || n > MAX_RECONSTRUCT_QUBITS {
        return Err(Error::Capacity {
            what: "verify",
            max: MAX_RECONSTRUCT_QUBITS,
            n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut st = StabilizerTN::new(n, rng.random(), *policy)?;
    st.inject_fault(fault);
    let mut dense = DenseState::new(n)?;
    let mut stats = VerifyStats::empty();
    for index in 0..depth {
        let step = random_step(n, &mut rng);
        if let Err(e) = apply_step(&mut st, &mut dense, step, &mut rng, &mut stats) {
            stats.min_fidelity = 0.0;
            stats.failures.push(format!("seed {seed} step {index} ({step:?}): {e}"));
            break;
        }
        stats.steps += 1;
        let f = dense.fidelity(&st.reconstruct_dense()?);
        stats.min_fidelity = stats.min_fidelity.min(f);
        stats.max_norm_error = stats.max_norm_error.max((st.nu().norm() - 1.0).abs());
        if let Err(e) = st.tableau().check_invariants() {
            stats.failures.push(format!("seed {seed} step {index} ({step:?}): {e}"));
            break;
        }
    }
    Ok(stats)
}

fn apply_step(
    st: &mut StabilizerTN,
    dense: &mut DenseState,
    step: Step,
    rng: &mut ChaCha8Rng,
    stats: &mut VerifyStats,
) -> Result<()> {
    match step {
        Step::H(q) => {
            st.apply_clifford(CliffordGate::H(q))?;
            dense.apply_gate(&gates::h(), &[q])
        }
        Step::S(q) => {
            st.apply_clifford(CliffordGate::S(q))?;
            dense.apply_gate(&gates::s(), &[q])
        }
        Step::Cnot(a, b) => {
            st.apply_clifford(CliffordGate::Cnot(a, b))?;
            dense.apply_gate(&gates::cnot(), &[a, b])
        }
        Step::Rx(q, t) => {
            st.apply_rotation(Pauli::X, q, t)?;
            dense.apply_gate(&gates::rx(t), &[q])
        }
        Step::Ry(q, t) => {
            st.apply_rotation(Pauli::Y, q, t)?;
            dense.apply_gate(&gates::ry(t), &[q])
        }
        Step::Rz(q, t) => {
            st.apply_rotation(Pauli::Z, q, t)?;
            dense.apply_gate(&gates::rz(t), &[q])
        }
        Step::MeasureZ(q) => {
            let p = PauliString::single(st.num_qubits(), q, Pauli::Z)?;
            let (outcome, prob) = dense.measure_pauli(&p, None, rng)?;
            let rec = st.measure(&p, Some(outcome))?;
            stats.measurements += 1;
            stats.max_probability_error = stats.max_probability_error.max((rec.probability - prob).abs());
            let born = (1.0 + rec.outcome as f64 * rec.expectation_before) / 2.0;
            stats.max_born_rule_error = stats.max_born_rule_error.max((rec.probability - born).abs());
            Ok(())
        }
    }
}

/// `circuits` independent random circuits in parallel; circuit `i` is seeded
/// from `(seed, n, i)`.
pub fn verify(config: &VerifyConfig) -> Result<VerifyReport> {
    config.policy.validate()?;
    let stats = (0..config.circuits)
        .into_par_iter()
        .map(|i| {
            verify_circuit(
                config.n,
                config.depth,
                circuit_seed(config.seed, config.n, i),
                &config.policy,
                config.fault,
            )
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(VerifyStats::empty(), VerifyStats::merge);
    Ok(VerifyReport {
        n: config.n,
        circuits: config.circuits,
        depth: config.depth,
        seed: config.seed,
        passed: stats.passed(),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_runs_pass() {
        for n in 1..=5 {
            let r = verify(&VerifyConfig::new(n, 8, 30, 11)).unwrap();
            assert!(r.passed, "{r:?}");
            assert_eq!(r.stats.steps, 8 * 30);
            assert!(r.stats.measurements > 0);
        }
    }

    #[test]
    fn uncompressed_policy_passes() {
        let mut c = VerifyConfig::new(4, 6, 30, 2);
        c.policy = TruncationPolicy::none();
        assert!(verify(&c).unwrap().passed);
    }

    #[test]
    fn report_is_deterministic() {
        let c = VerifyConfig::new(3, 5, 20, 99);
        assert_eq!(verify(&c).unwrap(), verify(&c).unwrap());
    }

    #[test]
    fn sign_fault_is_caught() {
        let mut c = VerifyConfig::new(3, 5, 30, 1);
        c.fault = Some(Fault::FlipRotationSign);
        let r = verify(&c).unwrap();
        assert!(!r.passed);
        assert!(r.stats.min_fidelity < FIDELITY_THRESHOLD);
    }

    #[test]
    fn steps_cover_the_gate_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut seen = [false; 7];
        for _ in 0..500 {
            let i = match random_step(3, &mut rng) {
                Step::H(_) => 0,
                Step::S(_) => 1,
                Step::Cnot(a, b) => {
                    assert_ne!(a, b);
                    2
                }
                Step::Rx(_, t) | Step::Ry(_, t) | Step::Rz(_, t) => {
                    assert!(t > 0.0 && t < TAU);
                    3
                }
                Step::MeasureZ(_) => 6,
            };
            seen[i] = true;
        }
        assert!(seen[0] && seen[1] && seen[2] && seen[3] && seen[6]);
        assert!((0..100).all(|_| !matches!(random_step(1, &mut rng), Step::Cnot(..))));
    }

    #[test]
    fn rejects_oversized_registers() {
        assert!(verify(&VerifyConfig::new(13, 1, 1, 0)).is_err());
    }
}
