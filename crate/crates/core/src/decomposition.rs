//! Decomposition of Pauli operators into the stabilizer basis and compilation
//! of two-term unitaries and measurement projections into operations on `|ν⟩`.
//!
//! In the basis `d_î|ψ_S⟩`, a destabilizer product `δ_n̂` acts on `|ν⟩` as
//! `X_n̂` and a stabilizer product `σ_m̂` acts as `Z_m̂`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;

use crate::bits::Bits;
use crate::error::{Error, Result};
use crate::mps::Mat2;
use crate::pauli::PauliString;
use crate::tableau::Tableau;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// `i^k`
pub fn i_pow(k: u8) -> C64 {
    match k % 4 {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

/// `P = i^alpha · δ_dbits · σ_sbits` for the tableau it was decomposed in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecomposedPauli {
    /// Exponent of `i`.
    pub alpha: u8,
    /// `n̂`: which destabilizers appear.
    pub dbits: Bits,
    /// `m̂`: which stabilizers appear.
    pub sbits: Bits,
}

impl DecomposedPauli {
    pub fn alpha(&self) -> C64 {
        i_pow(self.alpha)
    }

    pub fn is_identity(&self) -> bool {
        self.dbits.is_zero() && self.sbits.is_zero()
    }
}

/// Writes `p` as `α δ_n̂ σ_m̂`. `n̂_i = 1` iff `p` anticommutes with `s_i`
/// and `m̂_j = 1` iff `p` anticommutes with `d_j`.
pub fn decompose_pauli(t: &Tableau, p: &PauliString) -> Result<DecomposedPauli> {
    let n = t.num_qubits();
    if p.num_qubits() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: p.num_qubits(),
        });
    }
    let mut dbits = Bits::zeros(n);
    let mut sbits = Bits::zeros(n);
    for i in 0..n {
        dbits.set(i, t.row_anticommutes(n + i, p));
        sbits.set(i, t.row_anticommutes(i, p));
    }
    let unit = DecomposedPauli {
        alpha: 0,
        dbits,
        sbits,
    };
    let product = recompose(t, &unit)?;
    if product.x() != p.x() || product.z() != p.z() {
        return Err(Error::Internal(format!(
            "decomposition of {p} does not reproduce its X/Z part"
        )));
    }
    let alpha = (4 + p.phase_exp() - product.phase_exp()) % 4;
    Ok(DecomposedPauli { alpha, ..unit })
}

/// `α δ_n̂ σ_m̂` as a Pauli string.
pub fn recompose(t: &Tableau, d: &DecomposedPauli) -> Result<PauliString> {
    let n = t.num_qubits();
    if d.dbits.len() != n || d.sbits.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: d.dbits.len().max(d.sbits.len()),
        });
    }
    let mut acc = PauliString::identity(n);
    for j in d.dbits.ones() {
        acc = acc.multiply(&t.destabilizer(j))?;
    }
    for i in d.sbits.ones() {
        acc = acc.multiply(&t.stabilizer(i))?;
    }
    let phase = acc.phase_exp();
    Ok(acc.with_phase(phase + d.alpha))
}

/// Sites rotated about X, Y and Z. Pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axes {
    pub x: Bits,
    pub y: Bits,
    pub z: Bits,
}

impl Axes {
    /// Sorted sites carrying any axis.
    pub fn support(&self) -> Vec<usize> {
        (0..self.x.len())
            .filter(|&q| self.x.get(q) || self.y.get(q) || self.z.get(q))
            .collect()
    }

    /// `X_Ix Y_Iy Z_Iz` as a Pauli string with phase 0.
    pub fn to_pauli(&self) -> PauliString {
        let xs = self.x.xor(&self.y).expect("axes share a length");
        let zs = self.z.xor(&self.y).expect("axes share a length");
        PauliString::new(xs, zs, 0).expect("axes share a length")
    }
}

/// `I_y = dsum ∧ ssum`, `I_x = dsum ⊕ I_y`, `I_z = ssum ⊕ I_y`.
pub fn rotation_axes(dsum: &Bits, ssum: &Bits) -> Result<Axes> {
    let y = dsum.and(ssum)?;
    let x = dsum.xor(&y)?;
    let z = ssum.xor(&y)?;
    Ok(Axes { x, y, z })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanKind {
    /// `cos(θ/2) I − i·sign·sin(θ/2) Q`
    Rotation,
    /// `(I + outcome·sign·Q)/√2`, followed by `|0⟩⟨0|` on `project` if set.
    Measurement { outcome: i8 },
}

/// A compiled update of `|ν⟩`. `Q = X_Ix Y_Iy Z_Iz` over [`Axes`]; the frame,
/// when present, is applied first.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationPlan {
    pub axes: Axes,
    pub theta: f64,
    pub sign: i8,
    pub pivot: usize,
    pub frame: Option<PauliString>,
    pub kind: PlanKind,
    /// Site projected onto `|0⟩` after a measurement combination.
    pub project: Option<usize>,
    /// Phase dropped when the input was rewritten as a rotation.
    pub global_phase: C64,
}

fn real_sign(c: C64) -> Result<i8> {
    if c.im.abs() < 1e-12 && (c.re.abs() - 1.0).abs() < 1e-12 {
        Ok(if c.re > 0.0 { 1 } else { -1 })
    } else {
        Err(Error::Internal(format!("expected a real unit sign, got {c}")))
    }
}

fn median_site(support: &[usize]) -> usize {
    support[(support.len() - 1) / 2]
}

/// Plan for `exp(−iθ/2 · axis)` where `axis` is a single-qubit Pauli.
pub fn plan_rotation(t: &Tableau, axis: &PauliString, theta: f64) -> Result<RotationPlan> {
    if !theta.is_finite() {
        return Err(Error::NonFiniteAngle(theta));
    }
    if axis.weight() != 1 {
        return Err(Error::UnsupportedGate(format!(
            "rotation axis must act on exactly one qubit, got {axis}"
        )));
    }
    if !axis.is_hermitian() {
        return Err(Error::InvalidObservable(format!("{axis} is not Hermitian")));
    }
    let d = decompose_pauli(t, axis)?;
    let axes = rotation_axes(&d.dbits, &d.sbits)?;
    let sign = real_sign(d.alpha() * i_pow((4 - axes.y.count_ones() % 4) as u8))?;
    let support = axes.support();
    let pivot = median_site(&support);
    Ok(RotationPlan {
        axes,
        theta,
        sign,
        pivot,
        frame: None,
        kind: PlanKind::Rotation,
        project: None,
        global_phase: ONE,
    })
}

/// Plan for `U = φ1 δ_d1 σ_s1 + φ2 δ_d2 σ_s2`, written as a rotation times the
/// frame `X_d1 Z_s1` on `|ν⟩`, up to a global phase.
pub fn plan_two_term(d1: &Bits, s1: &Bits, d2: &Bits, s2: &Bits, phi1: C64, phi2: C64) -> Result<RotationPlan> {
    let n = d1.len();
    for b in [s1, d2, s2] {
        if b.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: b.len(),
            });
        }
    }
    let dsum = d1.xor(d2)?;
    let ssum = s1.xor(s2)?;
    if dsum.is_zero() && ssum.is_zero() {
        return Err(Error::UnsupportedGate("both terms are the same Pauli".into()));
    }
    let axes = rotation_axes(&dsum, &ssum)?;
    // X_d2 Z_s2 (X_d1 Z_s1)^-1 = X_d2 Z_{s1+s2} X_d1 = (−1)^{(s1+s2)·d1} (−i)^{|Iy|} Q
    let commute = if ssum.dot(d1) { -ONE } else { ONE };
    let beta = phi2 * commute * i_pow((4 - axes.y.count_ones() % 4) as u8);
    let norm = (phi1.norm_sqr() + beta.norm_sqr()).sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::UnsupportedGate(format!("coefficients have norm {norm}, not 1")));
    }
    // φ1 I + β Q = e^{iγ}(cos(θ/2) I − i sin(θ/2) Q)
    let gamma = if phi1.norm() > 1e-14 {
        phi1 / phi1.norm()
    } else {
        (beta / -I) / beta.norm()
    };
    let s = I * beta / gamma;
    if s.im.abs() > 1e-10 {
        return Err(Error::UnsupportedGate("the two terms do not combine into a unitary".into()));
    }
    let theta = 2.0 * s.re.atan2(phi1.norm());
    let frame = PauliString::from_xz_product(d1.clone(), s1.clone())?;
    let support = axes.support();
    let pivot = median_site(&support);
    Ok(RotationPlan {
        axes,
        theta,
        sign: 1,
        pivot,
        frame: if frame.is_identity() { None } else { Some(frame) },
        kind: PlanKind::Rotation,
        project: None,
        global_phase: gamma,
    })
}

/// Plan for the projection `(I + m·O)/2` with `O = α δ_n̂ σ_m̂` Hermitian.
/// The result is unnormalized: its norm is `√((1 + m⟨O⟩)/2)`.
pub fn plan_measurement(obs: &DecomposedPauli, outcome: i8) -> Result<RotationPlan> {
    if outcome != 1 && outcome != -1 {
        return Err(Error::InvalidObservable(format!("outcome must be ±1, got {outcome}")));
    }
    if obs.is_identity() {
        return Err(Error::DegenerateObservable);
    }
    let axes = rotation_axes(&obs.dbits, &obs.sbits)?;
    let sign = real_sign(obs.alpha() * i_pow((4 - axes.y.count_ones() % 4) as u8))
        .map_err(|_| Error::InvalidObservable("observable is not Hermitian".into()))?;
    let project = obs.dbits.first_one();
    let pivot = match project {
        Some(k) => k,
        None => median_site(&axes.support()),
    };
    Ok(RotationPlan {
        axes,
        theta: 0.0,
        sign,
        pivot,
        frame: None,
        kind: PlanKind::Measurement { outcome },
        project,
        global_phase: ONE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpRole {
    Frame,
    Basis,
    Central,
    Projector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementaryOp {
    Single { site: usize, mat: Mat2, role: OpRole },
    Cnot { control: usize, target: usize },
}

pub(crate) mod mats {
    use super::*;

    pub fn id() -> Mat2 {
        [[ONE, ZERO], [ZERO, ONE]]
    }
    pub fn x() -> Mat2 {
        [[ZERO, ONE], [ONE, ZERO]]
    }
    pub fn z() -> Mat2 {
        [[ONE, ZERO], [ZERO, -ONE]]
    }
    pub fn h() -> Mat2 {
        let r = C64::new(FRAC_1_SQRT_2, 0.0);
        [[r, r], [r, -r]]
    }
    pub fn s() -> Mat2 {
        [[ONE, ZERO], [ZERO, I]]
    }
    pub fn sdg() -> Mat2 {
        [[ONE, ZERO], [ZERO, -I]]
    }
    pub fn proj0() -> Mat2 {
        [[ONE, ZERO], [ZERO, ZERO]]
    }
    pub fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
        let mut out = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }
}

/// Expands a plan into single-site matrices and CNOTs, in application order.
///
/// Each axis is conjugated to X at its site, a CNOT cascade from each side
/// folds the X-string into the pivot, the central 2×2 matrix acts there, and
/// the cascade and conjugations are undone.
pub fn compile_plan(plan: &RotationPlan) -> Result<Vec<ElementaryOp>> {
    let support = plan.axes.support();
    if support.is_empty() {
        return Err(Error::Internal("plan has empty support".into()));
    }
    if !support.contains(&plan.pivot) {
        return Err(Error::Internal(format!("pivot {} outside support", plan.pivot)));
    }
    let mut ops = Vec::new();
    if let Some(frame) = &plan.frame {
        // i^phase ⊗σ(x,z) = i^{phase + |x∧z|} ∏ X^x Z^z; the scalar rides on the first site
        let mut phase = i_pow(frame.phase_exp()) * i_pow((frame.x().and(frame.z())?.count_ones() % 4) as u8);
        for q in frame.support() {
            let xm = if frame.x().get(q) { mats::x() } else { mats::id() };
            let zm = if frame.z().get(q) { mats::z() } else { mats::id() };
            let mut m = mats::mul(&xm, &zm);
            for v in m.iter_mut().flatten() {
                *v *= phase;
            }
            phase = ONE;
            ops.push(ElementaryOp::Single {
                site: q,
                mat: m,
                role: OpRole::Frame,
            });
        }
    }
    // (forward, inverse) conjugation mapping the site's axis to X
    let conj = |q: usize| -> Option<(Mat2, Mat2)> {
        if plan.axes.z.get(q) {
            Some((mats::h(), mats::h()))
        } else if plan.axes.y.get(q) {
            Some((mats::sdg(), mats::s()))
        } else {
            None
        }
    };
    for &q in &support {
        if let Some((fwd, _)) = conj(q) {
            ops.push(ElementaryOp::Single {
                site: q,
                mat: fwd,
                role: OpRole::Basis,
            });
        }
    }
    let p = plan.pivot;
    let left: Vec<usize> = support.iter().copied().filter(|&q| q < p).collect();
    let right: Vec<usize> = support.iter().copied().filter(|&q| q > p).rev().collect();
    let mut cascade = Vec::new();
    for side in [&left, &right] {
        for (k, &outer) in side.iter().enumerate() {
            let inner = side.get(k + 1).copied().unwrap_or(p);
            cascade.push(ElementaryOp::Cnot {
                control: inner,
                target: outer,
            });
        }
    }
    ops.extend(cascade.iter().cloned());
    let central = match plan.kind {
        PlanKind::Rotation => {
            let (c, s) = ((plan.theta / 2.0).cos(), (plan.theta / 2.0).sin());
            let off = C64::new(0.0, -(plan.sign as f64) * s);
            [[C64::new(c, 0.0), off], [off, C64::new(c, 0.0)]]
        }
        PlanKind::Measurement { outcome } => {
            let r = C64::new(FRAC_1_SQRT_2, 0.0);
            let c = r * (outcome as f64 * plan.sign as f64);
            [[r, c], [c, r]]
        }
    };
    ops.push(ElementaryOp::Single {
        site: p,
        mat: central,
        role: OpRole::Central,
    });
    ops.extend(cascade.into_iter().rev());
    for &q in &support {
        if let Some((_, inv)) = conj(q) {
            ops.push(ElementaryOp::Single {
                site: q,
                mat: inv,
                role: OpRole::Basis,
            });
        }
    }
    if let Some(k) = plan.project {
        ops.push(ElementaryOp::Single {
            site: k,
            mat: mats::proj0(),
            role: OpRole::Projector,
        });
    }
    Ok(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{gates, pauli_matrix, DenseMatrix};
    use crate::tableau::random_clifford;
    use crate::Pauli;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn dm2(m: &Mat2) -> DenseMatrix {
        DenseMatrix::from_rows(&[&m[0], &m[1]])
    }

    /// Dense operator of a compiled op list on `n` sites.
    fn compiled_operator(n: usize, ops: &[ElementaryOp]) -> DenseMatrix {
        let mut acc = DenseMatrix::identity(1 << n);
        for op in ops {
            let g = match op {
                ElementaryOp::Single { site, mat, .. } => DenseMatrix::embed(n, &dm2(mat), &[*site]),
                ElementaryOp::Cnot { control, target } => DenseMatrix::embed(n, &gates::cnot(), &[*control, *target]),
            };
            acc = g.matmul(&acc);
        }
        acc
    }

    fn random_pauli(n: usize, rng: &mut impl Rng) -> PauliString {
        let mut q = PauliString::identity(n);
        for k in 0..n {
            q.set(k, Pauli::from_bits(rng.random(), rng.random()));
        }
        q.with_phase(rng.random_range(0..4))
    }

    #[test]
    fn decomposition_examples() {
        let t = Tableau::identity(1).unwrap();
        let d = decompose_pauli(&t, &p("Z")).unwrap();
        assert_eq!((d.alpha, d.dbits.to_string(), d.sbits.to_string()), (0, "0".into(), "1".into()));
        let d = decompose_pauli(&t, &p("Y")).unwrap();
        assert_eq!((d.alpha, d.dbits.to_string(), d.sbits.to_string()), (1, "1".into(), "1".into()));

        let mut t = Tableau::identity(3).unwrap();
        for q in 0..3 {
            t.apply_h(q).unwrap();
        }
        let d = decompose_pauli(&t, &p("IZI")).unwrap();
        assert_eq!((d.alpha, d.dbits.to_string(), d.sbits.to_string()), (0, "010".into(), "000".into()));
        assert!(decompose_pauli(&t, &p("ZZ")).is_err());
    }

    #[test]
    fn decomposition_roundtrip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.random_range(1..=8);
            let t = random_clifford(n, &mut rng).unwrap();
            let q = random_pauli(n, &mut rng);
            let d = decompose_pauli(&t, &q).unwrap();
            assert_eq!(recompose(&t, &d).unwrap(), q);
            if q.is_hermitian() && !d.dbits.dot(&d.sbits) {
                assert!(d.alpha % 2 == 0);
            }
        }
    }

    #[test]
    fn axes_examples() {
        let a = rotation_axes(&Bits::from_01(&[0, 1, 0, 1, 0]), &Bits::from_01(&[0, 0, 1, 1, 0])).unwrap();
        assert_eq!(a.x.to_string(), "01000");
        assert_eq!(a.y.to_string(), "00010");
        assert_eq!(a.z.to_string(), "00100");
        let a = rotation_axes(&Bits::unit(3, 0), &Bits::zeros(3)).unwrap();
        assert_eq!((a.x.count_ones(), a.y.count_ones(), a.z.count_ones()), (1, 0, 0));
        let a = rotation_axes(&Bits::unit(3, 2), &Bits::unit(3, 2)).unwrap();
        assert_eq!((a.x.count_ones(), a.y.to_string(), a.z.count_ones()), (0, "001".into(), 0));
        assert!(rotation_axes(&Bits::zeros(2), &Bits::zeros(3)).is_err());
    }

    proptest! {
        #[test]
        fn axes_are_disjoint_and_recover_inputs(dv in proptest::collection::vec(any::<bool>(), 1..100), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = Bits::from_bools(&dv);
            let s = Bits::from_bools(&dv.iter().map(|_| rng.random()).collect::<Vec<bool>>());
            let a = rotation_axes(&d, &s).unwrap();
            prop_assert!(a.x.and(&a.y).unwrap().is_zero());
            prop_assert!(a.x.and(&a.z).unwrap().is_zero());
            prop_assert!(a.y.and(&a.z).unwrap().is_zero());
            prop_assert_eq!(a.x.xor(&a.y).unwrap(), d);
            prop_assert_eq!(a.z.xor(&a.y).unwrap(), s);
        }
    }

    /// Dense operator of `plan` straight from its definition.
    fn plan_operator(n: usize, plan: &RotationPlan) -> DenseMatrix {
        let q = pauli_matrix(&plan.axes.to_pauli());
        let id = DenseMatrix::identity(1 << n);
        let core = match plan.kind {
            PlanKind::Rotation => {
                let (c, s) = ((plan.theta / 2.0).cos(), (plan.theta / 2.0).sin());
                id.scale(C64::new(c, 0.0)).add(&q.scale(C64::new(0.0, -(plan.sign as f64) * s)))
            }
            PlanKind::Measurement { outcome } => id
                .add(&q.scale(C64::new((outcome * plan.sign) as f64, 0.0)))
                .scale(C64::new(FRAC_1_SQRT_2, 0.0)),
        };
        let core = match &plan.project {
            Some(k) => DenseMatrix::embed(n, &dm2(&mats::proj0()), &[*k]).matmul(&core),
            None => core,
        };
        match &plan.frame {
            Some(f) => core.matmul(&pauli_matrix(f)),
            None => core,
        }
    }

    #[test]
    fn compiled_plans_match_their_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let n = rng.random_range(1..=4);
            let t = random_clifford(n, &mut rng).unwrap();
            let q = rng.random_range(0..n);
            let axis = PauliString::single(n, q, [Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..3)]).unwrap();
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            let plan = plan_rotation(&t, &axis, theta).unwrap();
            let ops = compile_plan(&plan).unwrap();
            let u = compiled_operator(n, &ops);
            assert!(u.max_diff(&plan_operator(n, &plan)) < 1e-12);
            assert!(u.is_unitary(1e-12));

            let obs = random_pauli(n, &mut rng);
            let obs = if obs.is_hermitian() { obs } else { obs.with_phase(0) };
            if obs.is_identity() {
                continue;
            }
            let d = decompose_pauli(&t, &obs).unwrap();
            for m in [1, -1] {
                let plan = plan_measurement(&d, m).unwrap();
                let u = compiled_operator(n, &compile_plan(&plan).unwrap());
                assert!(u.max_diff(&plan_operator(n, &plan)) < 1e-12);
            }
        }
    }

    #[test]
    fn rotation_plan_acts_like_the_gate_on_the_stabilizer_basis() {
        // Σ ν_i d_i|ψ_S⟩ → U Σ ν_i d_i|ψ_S⟩ must equal Σ (U_ν ν)_i d_i|ψ_S⟩.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.random_range(1..=6);
            let t = random_clifford(n, &mut rng).unwrap();
            let basis = crate::oracle::stabilizer_basis(&t).unwrap();
            let dim = 1 << n;
            // columns of B are the basis vectors
            let b = DenseMatrix::from_fn(dim, |r, c| basis[c][r]);
            let q = rng.random_range(0..n);
            let (axis, gate) = match rng.random_range(0..3) {
                0 => (Pauli::X, gates::rx as fn(f64) -> DenseMatrix),
                1 => (Pauli::Y, gates::ry as fn(f64) -> DenseMatrix),
                _ => (Pauli::Z, gates::rz as fn(f64) -> DenseMatrix),
            };
            let theta = rng.random::<f64>() * 6.0;
            let plan = plan_rotation(&t, &PauliString::single(n, q, axis).unwrap(), theta).unwrap();
            let u_nu = compiled_operator(n, &compile_plan(&plan).unwrap());
            let lhs = DenseMatrix::embed(n, &gate(theta), &[q]).matmul(&b);
            let rhs = b.matmul(&u_nu);
            assert!(lhs.max_diff(&rhs) < 1e-12);
        }
    }

    #[test]
    fn measurement_plan_projects_in_the_stabilizer_basis() {
        // With n̂ ≠ 0 the basis changes, so check the n̂ = 0 case against (I+mO)/2 directly.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..60 {
            let n = rng.random_range(1..=4);
            let t = random_clifford(n, &mut rng).unwrap();
            let basis = crate::oracle::stabilizer_basis(&t).unwrap();
            let b = DenseMatrix::from_fn(1 << n, |r, c| basis[c][r]);
            let k = rng.random_range(0..n);
            let obs = t.stabilizer(k).multiply(&t.stabilizer((k + 1) % n)).unwrap();
            if obs.is_identity() {
                continue;
            }
            let d = decompose_pauli(&t, &obs).unwrap();
            assert!(d.dbits.is_zero());
            let m = if rng.random_bool(0.5) { 1 } else { -1 };
            let plan = plan_measurement(&d, m).unwrap();
            assert_eq!(plan.project, None);
            let u_nu = compiled_operator(n, &compile_plan(&plan).unwrap());
            let proj = DenseMatrix::identity(1 << n)
                .add(&pauli_matrix(&obs).scale(C64::new(m as f64, 0.0)))
                .scale(C64::new(FRAC_1_SQRT_2, 0.0));
            assert!(proj.matmul(&b).max_diff(&b.matmul(&u_nu)) < 1e-12);
        }
    }

    #[test]
    fn free_rotation_after_hadamard_layer() {
        let n = 5;
        let mut t = Tableau::identity(n).unwrap();
        for q in 0..n {
            t.apply_h(q).unwrap();
        }
        for q in 0..n {
            let plan = plan_rotation(&t, &PauliString::single(n, q, Pauli::Z).unwrap(), std::f64::consts::FRAC_PI_4).unwrap();
            assert_eq!(plan.axes.x, Bits::unit(n, q));
            assert!(plan.axes.y.is_zero() && plan.axes.z.is_zero());
            let ops = compile_plan(&plan).unwrap();
            assert_eq!(ops.len(), 1);
        }
    }

    #[test]
    fn rz_on_fresh_tableau_is_diagonal() {
        let t = Tableau::identity(2).unwrap();
        let plan = plan_rotation(&t, &p("ZI"), 0.7).unwrap();
        assert_eq!(plan.axes.z, Bits::unit(2, 0));
        let u = compiled_operator(2, &compile_plan(&plan).unwrap());
        assert!(u.max_diff(&DenseMatrix::embed(2, &gates::rz(0.7), &[0])) < 1e-12);
        assert!(matches!(plan_rotation(&t, &p("ZZ"), 0.1), Err(Error::UnsupportedGate(_))));
        assert!(matches!(plan_rotation(&t, &p("II"), 0.1), Err(Error::UnsupportedGate(_))));
        assert!(matches!(plan_rotation(&t, &p("ZI"), f64::NAN), Err(Error::NonFiniteAngle(_))));
    }

    #[test]
    fn measurement_plan_examples() {
        let t = Tableau::identity(1).unwrap();
        let d = decompose_pauli(&t, &p("X")).unwrap();
        let plan = plan_measurement(&d, 1).unwrap();
        assert_eq!((plan.pivot, plan.project), (0, Some(0)));
        let u = compiled_operator(1, &compile_plan(&plan).unwrap());
        let r = FRAC_1_SQRT_2;
        let want = DenseMatrix::from_rows(&[&[C64::new(r, 0.0), C64::new(r, 0.0)], &[ZERO, ZERO]]);
        assert!(u.max_diff(&want) < 1e-12);

        let d = decompose_pauli(&t, &p("Y")).unwrap();
        let plan = plan_measurement(&d, -1).unwrap();
        assert_eq!(plan.axes.y, Bits::unit(1, 0));
        assert_eq!(plan.sign, 1);

        let d = decompose_pauli(&Tableau::identity(2).unwrap(), &p("II")).unwrap();
        assert_eq!(plan_measurement(&d, 1), Err(Error::DegenerateObservable));
    }

    #[test]
    fn worked_five_qubit_example() {
        let d1 = Bits::from_01(&[1, 1, 0, 0, 0]);
        let d2 = Bits::from_01(&[1, 0, 0, 1, 0]);
        let s1 = Bits::from_01(&[0, 0, 0, 1, 0]);
        let s2 = Bits::from_01(&[0, 0, 1, 0, 0]);
        let phi1 = C64::new(3f64.sqrt() / 2.0, 0.0);
        let phi2 = C64::new(0.5, 0.0);
        let plan = plan_two_term(&d1, &s1, &d2, &s2, phi1, phi2).unwrap();
        assert_eq!(plan.axes.x, Bits::unit(5, 1));
        assert_eq!(plan.axes.y, Bits::unit(5, 3));
        assert_eq!(plan.axes.z, Bits::unit(5, 2));
        assert_eq!(plan.frame.as_ref().unwrap().to_string(), "+XXIZI");
        assert!((plan.theta.abs() - std::f64::consts::FRAC_PI_3).abs() < 1e-12);

        // oracle: φ1 X_d1 Z_s1 + φ2 X_d2 Z_s2 as a dense matrix on |ν⟩
        let term = |d: &Bits, s: &Bits| pauli_matrix(&PauliString::from_xz_product(d.clone(), s.clone()).unwrap());
        let want = term(&d1, &s1).scale(phi1).add(&term(&d2, &s2).scale(phi2));
        let ops = compile_plan(&plan).unwrap();
        let got = compiled_operator(5, &ops).scale(plan.global_phase);
        assert!(got.max_diff(&want) < 1e-12);

        // conjugations on 1, 2, 3; CNOTs into pivot 2 from both sides; one central matrix
        assert_eq!(plan.pivot, 2);
        let basis_sites: Vec<usize> = ops
            .iter()
            .filter_map(|o| match o {
                ElementaryOp::Single { site, role: OpRole::Basis, .. } => Some(*site),
                _ => None,
            })
            .collect();
        assert_eq!(basis_sites, vec![2, 3, 2, 3]);
        let cnots: Vec<(usize, usize)> = ops
            .iter()
            .filter_map(|o| match o {
                ElementaryOp::Cnot { control, target } => Some((*control, *target)),
                _ => None,
            })
            .collect();
        assert_eq!(cnots, vec![(2, 1), (2, 3), (2, 3), (2, 1)]);
        assert_eq!(ops.iter().filter(|o| matches!(o, ElementaryOp::Single { role: OpRole::Central, .. })).count(), 1);
    }

    #[test]
    fn cascade_shapes() {
        let t = Tableau::identity(3).unwrap();
        let plan = plan_rotation(&t, &p("IXI"), 0.3).unwrap();
        assert_eq!(compile_plan(&plan).unwrap().len(), 1);

        let mut plan = plan.clone();
        plan.axes.x = Bits::from_01(&[1, 1, 0]);
        plan.pivot = 0;
        let ops = compile_plan(&plan).unwrap();
        let n_cnot = ops.iter().filter(|o| matches!(o, ElementaryOp::Cnot { .. })).count();
        assert_eq!(n_cnot, 2);
        let u = compiled_operator(3, &ops);
        assert!(u.max_diff(&plan_operator(3, &plan)) < 1e-12);

        plan.axes.x = Bits::from_01(&[1, 1, 1]);
        plan.pivot = 1;
        let ops = compile_plan(&plan).unwrap();
        assert!(compiled_operator(3, &ops).max_diff(&plan_operator(3, &plan)) < 1e-12);
        plan.pivot = 2;
        plan.axes.x = Bits::zeros(3);
        assert!(compile_plan(&plan).is_err());
    }
}
