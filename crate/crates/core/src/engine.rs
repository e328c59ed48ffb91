//! The simulator state `|ψ⟩ = Σ_î ν_î d_î |ψ_S⟩` and its update rules.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::circuit::{Circuit, Op};
use crate::decomposition::{compile_plan, decompose_pauli, plan_measurement, plan_rotation, ElementaryOp, RotationPlan};
use crate::error::{Error, Result};
use crate::mps::{cnot_gate, MpsState, TruncationPolicy};
use crate::oracle;
use crate::pauli::{Pauli, PauliString};
use crate::tableau::{random_clifford, Tableau};

/// Largest register [`StabilizerTN::reconstruct_dense`] will expand.
pub const MAX_RECONSTRUCT_QUBITS: usize = 12;

const SNAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Cnot(usize, usize),
    Cz(usize, usize),
    Swap(usize, usize),
}

/// Deliberate defects for negative-control runs.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    FlipRotationSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub observable: PauliString,
    pub outcome: i8,
    pub probability: f64,
    pub expectation_before: f64,
}

#[derive(Debug, Clone)]
pub struct StabilizerTN {
    tableau: Tableau,
    nu: MpsState,
    policy: TruncationPolicy,
    rng: ChaCha8Rng,
    snap: bool,
    fault: Option<Fault>,
}

impl StabilizerTN {
    /// `|0…0⟩`: identity tableau and `ν = e_0`.
    pub fn new(n: usize, seed: u64, policy: TruncationPolicy) -> Result<Self> {
        Self::from_tableau(Tableau::identity(n)?, seed, policy)
    }

    /// The basis state `|ψ_S⟩` of `tableau`.
    pub fn from_tableau(tableau: Tableau, seed: u64, policy: TruncationPolicy) -> Result<Self> {
        policy.validate()?;
        let n = tableau.num_qubits();
        Ok(Self {
            nu: MpsState::basis_state(n, &Bits::zeros(n))?,
            tableau,
            policy,
            rng: ChaCha8Rng::seed_from_u64(seed),
            snap: true,
            fault: None,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.tableau.num_qubits()
    }

    pub fn tableau(&self) -> &Tableau {
        &self.tableau
    }

    pub fn nu(&self) -> &MpsState {
        &self.nu
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    pub fn max_bond(&self) -> usize {
        self.nu.max_bond()
    }

    /// Route rotations by multiples of π/2 to the tableau (on by default).
    pub fn set_snap(&mut self, snap: bool) {
        self.snap = snap;
    }

    #[doc(hidden)]
    pub fn inject_fault(&mut self, fault: Option<Fault>) {
        self.fault = fault;
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits() {
            return Err(Error::OutOfRange {
                what: "qubits",
                index: q,
                len: self.num_qubits(),
            });
        }
        Ok(())
    }

    /// Updates the basis only; `ν` is untouched.
    pub fn apply_clifford(&mut self, gate: CliffordGate) -> Result<()> {
        let t = &mut self.tableau;
        match gate {
            CliffordGate::H(q) => t.apply_h(q),
            CliffordGate::S(q) => t.apply_s(q),
            CliffordGate::Sdg(q) => t.apply_sdg(q),
            CliffordGate::X(q) => t.apply_x(q),
            CliffordGate::Y(q) => t.apply_y(q),
            CliffordGate::Z(q) => t.apply_z(q),
            CliffordGate::Cnot(a, b) => t.apply_cnot(a, b),
            CliffordGate::Cz(a, b) => {
                if a == b {
                    return Err(Error::DuplicateOperand(a));
                }
                t.apply_h(b)?;
                t.apply_cnot(a, b)?;
                t.apply_h(b)
            }
            CliffordGate::Swap(a, b) => {
                t.apply_cnot(a, b)?;
                t.apply_cnot(b, a)?;
                t.apply_cnot(a, b)
            }
        }
    }

    /// `exp(−iθ/2 · P_q)` for `P ∈ {X, Y, Z}`.
    pub fn apply_rotation(&mut self, axis: Pauli, q: usize, theta: f64) -> Result<()> {
        if !theta.is_finite() {
            return Err(Error::NonFiniteAngle(theta));
        }
        self.check_qubit(q)?;
        if axis == Pauli::I {
            return Err(Error::UnsupportedGate("rotation about the identity".into()));
        }
        if self.snap {
            let k = (theta / FRAC_PI_2).round();
            if (theta - k * FRAC_PI_2).abs() < SNAP_TOL {
                return self.apply_quarter_turns(axis, q, (k as i64).rem_euclid(4) as usize);
            }
        }
        let p = PauliString::single(self.num_qubits(), q, axis)?;
        let mut plan = plan_rotation(&self.tableau, &p, theta)?;
        if self.fault == Some(Fault::FlipRotationSign) {
            plan.sign = -plan.sign;
        }
        self.apply_plan(&plan)?;
        self.nu.normalize()?;
        Ok(())
    }

    /// `R_P(k·π/2)` up to global phase, as Clifford gates.
    fn apply_quarter_turns(&mut self, axis: Pauli, q: usize, k: usize) -> Result<()> {
        use CliffordGate::*;
        let (pre, post): (&[CliffordGate], &[CliffordGate]) = match axis {
            Pauli::Z | Pauli::I => (&[], &[]),
            Pauli::X => (&[H(q)], &[H(q)]),
            Pauli::Y => (&[Sdg(q), H(q)], &[H(q), S(q)]),
        };
        for &g in pre {
            self.apply_clifford(g)?;
        }
        for _ in 0..k {
            self.apply_clifford(S(q))?;
        }
        for &g in post {
            self.apply_clifford(g)?;
        }
        Ok(())
    }

    fn apply_plan(&mut self, plan: &RotationPlan) -> Result<()> {
        let cnot = cnot_gate();
        for op in compile_plan(plan)? {
            match op {
                ElementaryOp::Single { site, mat, .. } => self.nu.apply_1q(site, &mat)?,
                ElementaryOp::Cnot { control, target } => self.nu.apply_2q(control, target, &cnot, &self.policy)?,
            }
        }
        Ok(())
    }

    /// `⟨ψ|P|ψ⟩ = α ⟨ν| X_n̂ Z_m̂ |ν⟩` for Hermitian `P`.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        if !p.is_hermitian() {
            return Err(Error::InvalidObservable(format!("{p} is not Hermitian")));
        }
        let d = decompose_pauli(&self.tableau, p)?;
        let v = d.alpha() * self.nu.expect_pauli(&d.dbits, &d.sbits)?;
        if v.im.abs() > 1e-10 {
            return Err(Error::Internal(format!("expectation of {p} has imaginary part {}", v.im)));
        }
        Ok(v.re.clamp(-1.0, 1.0))
    }

    /// Projective measurement of a Hermitian Pauli. One uniform draw is taken
    /// from the state's RNG unless `forced` fixes the outcome.
    pub fn measure(&mut self, p: &PauliString, forced: Option<i8>) -> Result<MeasurementRecord> {
        if p.is_identity() {
            return Err(Error::DegenerateObservable);
        }
        let ev = self.expectation(p)?;
        let p_plus = ((1.0 + ev) / 2.0).clamp(0.0, 1.0);
        let outcome: i8 = match forced {
            Some(m) if m == 1 || m == -1 => m,
            Some(m) => return Err(Error::InvalidObservable(format!("outcome must be ±1, got {m}"))),
            None => {
                if self.rng.random::<f64>() < p_plus {
                    1
                } else {
                    -1
                }
            }
        };
        let probability = if outcome > 0 { p_plus } else { 1.0 - p_plus };
        if probability < 1e-12 {
            return Err(Error::ImpossibleOutcome { outcome, probability });
        }
        let record = MeasurementRecord {
            observable: p.clone(),
            outcome,
            probability,
            expectation_before: ev,
        };
        if (1.0 - ev.abs()) < 1e-10 {
            // already an eigenstate
            return Ok(record);
        }
        let d = decompose_pauli(&self.tableau, p)?;
        let plan = plan_measurement(&d, outcome)?;
        self.apply_plan(&plan)?;
        self.nu.normalize()?;
        if let Some(k) = plan.project {
            self.tableau.project_basis(p, k, outcome)?;
        }
        Ok(record)
    }

    /// Measures `Z_q`.
    pub fn measure_z(&mut self, q: usize, forced: Option<i8>) -> Result<MeasurementRecord> {
        self.check_qubit(q)?;
        let p = PauliString::single(self.num_qubits(), q, Pauli::Z)?;
        self.measure(&p, forced)
    }

    /// Dense `Σ ν_î d_î |ψ_S⟩`, little-endian, normalized.
    pub fn reconstruct_dense(&self) -> Result<Vec<C64>> {
        let n = self.num_qubits();
        if n > MAX_RECONSTRUCT_QUBITS {
            return Err(Error::Capacity {
                what: "reconstruct_dense",
                max: MAX_RECONSTRUCT_QUBITS,
                n,
            });
        }
        let basis = oracle::stabilizer_basis(&self.tableau)?;
        let nu = self.nu.to_dense()?;
        let mut out = vec![C64::new(0.0, 0.0); 1 << n];
        for (coef, v) in nu.iter().zip(&basis) {
            if coef.norm() == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(v) {
                *o += coef * a;
            }
        }
        let nrm = oracle::norm(&out);
        if nrm < 1e-12 {
            return Err(Error::Internal("reconstructed state vanished".into()));
        }
        out.iter_mut().for_each(|a| *a /= nrm);
        Ok(out)
    }

    /// Number of amplitudes of `ν` above `tol`.
    pub fn pseudo_stabilizer_rank(&self, tol: f64) -> Result<usize> {
        self.nu.count_nonzero(tol)
    }
}

/// Which qubit receives the T gate in [`chi_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TQubit {
    Random,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSample {
    pub n: usize,
    pub circuit_index: usize,
    pub t_qubit: usize,
    pub max_bond: usize,
    pub log2_chi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub max_bond: usize,
    pub log2_chi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSummary {
    pub n: usize,
    pub circuits: usize,
    pub mean: f64,
    pub max: f64,
    pub histogram: Vec<HistogramBin>,
}

/// Seed for circuit `index` of size `n` under `master`.
pub fn circuit_seed(master: u64, n: usize, index: usize) -> u64 {
    let mut z = master ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    for _ in 0..2 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

/// Random Clifford basis, then one T gate; returns `χ'` of `ν`.
pub fn chi_sample(n: usize, index: usize, master_seed: u64, t_qubit: TQubit, policy: &TruncationPolicy) -> Result<ChiSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(circuit_seed(master_seed, n, index));
    let tableau = random_clifford(n, &mut rng)?;
    let q = match t_qubit {
        TQubit::Random => rng.random_range(0..n),
        TQubit::Fixed(q) => q,
    };
    let mut st = StabilizerTN::from_tableau(tableau, rng.random(), *policy)?;
    st.apply_rotation(Pauli::Z, q, FRAC_PI_4)?;
    let max_bond = st.max_bond();
    Ok(ChiSample {
        n,
        circuit_index: index,
        t_qubit: q,
        max_bond,
        log2_chi: (max_bond as f64).log2(),
    })
}

/// Samples `χ'` over `circuits` random Clifford bases, in parallel, ordered by
/// circuit index.
pub fn chi_experiment(
    n: usize,
    circuits: usize,
    master_seed: u64,
    t_qubit: TQubit,
    policy: &TruncationPolicy,
) -> Result<(Vec<ChiSample>, ChiSummary)> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("chi experiment needs n >= 2, got {n}")));
    }
    if let TQubit::Fixed(q) = t_qubit {
        if q >= n {
            return Err(Error::OutOfRange {
                what: "qubits",
                index: q,
                len: n,
            });
        }
    }
    policy.validate()?;
    let samples = (0..circuits)
        .into_par_iter()
        .map(|i| chi_sample(n, i, master_seed, t_qubit, policy))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(n, &samples);
    Ok((samples, summary))
}

pub fn summarize(n: usize, samples: &[ChiSample]) -> ChiSummary {
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for s in samples {
        *hist.entry(s.max_bond).or_default() += 1;
    }
    let mean = if samples.is_empty() {
        0.0
    } else {
        samples.iter().map(|s| s.log2_chi).sum::<f64>() / samples.len() as f64
    };
    ChiSummary {
        n,
        circuits: samples.len(),
        mean,
        max: samples.iter().map(|s| s.log2_chi).fold(0.0, f64::max),
        histogram: hist
            .into_iter()
            .map(|(max_bond, count)| HistogramBin {
                max_bond,
                log2_chi: (max_bond as f64).log2(),
                count,
            })
            .collect(),
    }
}

/// Tolerance used when a run report counts nonzero amplitudes of `ν`.
pub const PSEUDO_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub observable: PauliString,
    pub outcome: i8,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationEntry {
    pub observable: PauliString,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub n: usize,
    pub seed: u64,
    pub records: Vec<RecordEntry>,
    pub expectations: Vec<ExpectationEntry>,
    /// `max_bond(ν)` after each instruction of the source circuit.
    pub chi_trace: Vec<usize>,
    pub max_chi: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pseudo_rank: Option<usize>,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub pseudo_rank: bool,
}

/// Runs `circuit` from `|0…0⟩`. Everything except `wall_time_ms` is a
/// function of `(circuit, seed, policy)`.
pub fn run_circuit(
    circuit: &Circuit,
    seed: u64,
    policy: &TruncationPolicy,
    options: RunOptions,
) -> Result<(RunReport, StabilizerTN)> {
    let start = Instant::now();
    let n = circuit.num_qubits();
    let mut st = StabilizerTN::new(n, seed, *policy)?;
    let mut records = Vec::new();
    let mut expectations = Vec::new();
    let mut chi_trace = Vec::with_capacity(circuit.instructions().len());
    for instr in circuit.instructions() {
        for op in instr.compile() {
            match op {
                Op::Clifford(g) => st.apply_clifford(g)?,
                Op::Rotation { axis, qubit, theta } => st.apply_rotation(axis, qubit, theta)?,
                Op::Measure(q) => {
                    let r = st.measure_z(q, None)?;
                    records.push(RecordEntry {
                        observable: r.observable,
                        outcome: r.outcome,
                        probability: r.probability,
                    });
                }
                Op::Expect(p) => {
                    let value = st.expectation(&p)?;
                    expectations.push(ExpectationEntry { observable: p, value });
                }
            }
        }
        chi_trace.push(st.max_bond());
    }
    let pseudo_rank = if options.pseudo_rank {
        Some(st.pseudo_stabilizer_rank(PSEUDO_RANK_TOL)?)
    } else {
        None
    };
    let report = RunReport {
        n,
        seed,
        records,
        expectations,
        max_chi: chi_trace.iter().copied().max().unwrap_or(1).max(st.max_bond()),
        chi_trace,
        pseudo_rank,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok((report, st))
}
