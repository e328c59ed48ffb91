//! Dense statevector reference simulator.
//!
//! Amplitudes are indexed little-endian: qubit `q` is bit `q` of the index.
//! Local gate matrices take their first operand as the most significant bit,
//! so `cnot()` on operands `[c, t]` is the usual `|c t⟩` ordering.

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::tableau::Tableau;

/// Largest register the oracle will allocate.
pub const MAX_QUBITS: usize = 20;

fn check_capacity(what: &'static str, n: usize, max: usize) -> Result<()> {
    if n > max {
        return Err(Error::Capacity { what, max, n });
    }
    Ok(())
}

/// Square complex matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            assert_eq!(r.len(), dim, "matrix must be square");
            data.extend_from_slice(r);
        }
        Self { dim, data }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max entry difference after removing the best global phase.
    pub fn max_diff_up_to_phase(&self, other: &Self) -> f64 {
        let overlap: C64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        self.scale(phase).max_diff(other)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let d = self.dim;
        (0..d)
            .map(|i| (0..d).map(|j| self.data[i * d + j] * v[j]).sum())
            .collect()
    }

    /// Embeds a `2^k × 2^k` gate acting on `operands` into an `n`-qubit matrix.
    pub fn embed(n: usize, gate: &DenseMatrix, operands: &[usize]) -> Self {
        let dim = 1usize << n;
        let mut out = Self::zeros(dim);
        for col in 0..dim {
            let mut e = vec![C64::new(0.0, 0.0); dim];
            e[col] = C64::new(1.0, 0.0);
            let mut st = DenseState {
                n,
                amps: e,
            };
            st.apply_gate(gate, operands).expect("valid operands");
            for (row, a) in st.amps.iter().enumerate() {
                out.data[row * dim + col] = *a;
            }
        }
        out
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.adjoint().matmul(self).max_diff(&Self::identity(self.dim)) < tol
    }
}

/// Standard gate matrices.
pub mod gates {
    use super::DenseMatrix;
    use num_complex::Complex64 as C64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    pub fn i2() -> DenseMatrix {
        DenseMatrix::identity(2)
    }

    pub fn x() -> DenseMatrix {
        DenseMatrix::from_rows(&[&[c(0., 0.), c(1., 0.)], &[c(1., 0.), c(0., 0.)]])
    }

    pub fn y() -> DenseMatrix {
        DenseMatrix::from_rows(&[&[c(0., 0.), c(0., -1.)], &[c(0., 1.), c(0., 0.)]])
    }

    pub fn z() -> DenseMatrix {
        DenseMatrix::from_rows(&[&[c(1., 0.), c(0., 0.)], &[c(0., 0.), c(-1., 0.)]])
    }

    pub fn h() -> DenseMatrix {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        DenseMatrix::from_rows(&[&[c(r, 0.), c(r, 0.)], &[c(r, 0.), c(-r, 0.)]])
    }

    pub fn s() -> DenseMatrix {
        DenseMatrix::from_rows(&[&[c(1., 0.), c(0., 0.)], &[c(0., 0.), c(0., 1.)]])
    }

    pub fn sdg() -> DenseMatrix {
        DenseMatrix::from_rows(&[&[c(1., 0.), c(0., 0.)], &[c(0., 0.), c(0., -1.)]])
    }

    pub fn t() -> DenseMatrix {
        let w = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        DenseMatrix::from_rows(&[&[c(1., 0.), c(0., 0.)], &[c(0., 0.), w]])
    }

    pub fn tdg() -> DenseMatrix {
        t().adjoint()
    }

    /// `exp(-i θ X / 2)`
    pub fn rx(theta: f64) -> DenseMatrix {
        let (s, co) = (theta / 2.0).sin_cos();
        DenseMatrix::from_rows(&[&[c(co, 0.), c(0., -s)], &[c(0., -s), c(co, 0.)]])
    }

    /// `exp(-i θ Y / 2)`
    pub fn ry(theta: f64) -> DenseMatrix {
        let (s, co) = (theta / 2.0).sin_cos();
        DenseMatrix::from_rows(&[&[c(co, 0.), c(-s, 0.)], &[c(s, 0.), c(co, 0.)]])
    }

    /// `exp(-i θ Z / 2)`
    pub fn rz(theta: f64) -> DenseMatrix {
        let (s, co) = (theta / 2.0).sin_cos();
        DenseMatrix::from_rows(&[&[c(co, -s), c(0., 0.)], &[c(0., 0.), c(co, s)]])
    }

    pub fn cnot() -> DenseMatrix {
        let (o, l) = (c(0., 0.), c(1., 0.));
        DenseMatrix::from_rows(&[&[l, o, o, o], &[o, l, o, o], &[o, o, o, l], &[o, o, l, o]])
    }

    pub fn cz() -> DenseMatrix {
        let (o, l) = (c(0., 0.), c(1., 0.));
        DenseMatrix::from_rows(&[&[l, o, o, o], &[o, l, o, o], &[o, o, l, o], &[o, o, o, -l]])
    }

    pub fn swap() -> DenseMatrix {
        let (o, l) = (c(0., 0.), c(1., 0.));
        DenseMatrix::from_rows(&[&[l, o, o, o], &[o, o, l, o], &[o, l, o, o], &[o, o, o, l]])
    }
}

/// `P|b⟩ = i^{phase + |x∧z|} (-1)^{z·b} |b ⊕ x⟩` for a string with `n ≤ 64`.
fn pauli_masks(p: &PauliString) -> (u64, u64, u8) {
    let x = p.x().to_index();
    let z = p.z().to_index();
    let phase = (p.phase_exp() as u32 + (x & z).count_ones()) % 4;
    (x, z, phase as u8)
}

fn i_pow(k: u8) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Applies a Pauli string to a dense vector.
pub fn apply_pauli(p: &PauliString, v: &[C64]) -> Vec<C64> {
    let (x, z, phase) = pauli_masks(p);
    let c = i_pow(phase);
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for (b, a) in v.iter().enumerate() {
        let sign = if (z & b as u64).count_ones() % 2 == 1 { -c } else { c };
        out[b ^ x as usize] = sign * a;
    }
    out
}

/// Full `2^n × 2^n` matrix of a Pauli string.
pub fn pauli_matrix(p: &PauliString) -> DenseMatrix {
    let n = p.num_qubits();
    let dim = 1usize << n;
    let (x, z, phase) = pauli_masks(p);
    let c = i_pow(phase);
    let mut m = DenseMatrix::zeros(dim);
    for b in 0..dim {
        let sign = if (z & b as u64).count_ones() % 2 == 1 { -c } else { c };
        m.set(b ^ x as usize, b, sign);
    }
    m
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// `|⟨a|b⟩|² / (‖a‖²‖b‖²)`, insensitive to global phase.
pub fn fidelity_up_to_phase(a: &[C64], b: &[C64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (inner(a, b).norm() / (na * nb)).powi(2).min(1.0)
}

/// Number of singular values above `tol` across the bipartition
/// `{0..cut} | {cut..n}`.
pub fn schmidt_rank(v: &[C64], n: usize, cut: usize, tol: f64) -> Result<usize> {
    check_capacity("schmidt_rank", n, MAX_QUBITS)?;
    if v.len() != 1 << n {
        return Err(Error::LengthMismatch {
            expected: 1 << n,
            got: v.len(),
        });
    }
    if cut > n {
        return Err(Error::OutOfRange {
            what: "cuts",
            index: cut,
            len: n + 1,
        });
    }
    let rows = 1usize << cut;
    let cols = 1usize << (n - cut);
    let m = faer::Mat::from_fn(rows, cols, |l, r| v[l + r * rows]);
    let sv = m
        .singular_values()
        .map_err(|e| Error::Internal(format!("SVD failed: {e:?}")))?;
    Ok(sv.into_iter().filter(|&s| s > tol).count())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n: usize,
    amps: Vec<C64>,
}

impl DenseState {
    /// `|0…0⟩`
    pub fn new(n: usize) -> Result<Self> {
        check_capacity("dense state", n, MAX_QUBITS)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidSize(format!(
                "{} amplitudes is not a power of two",
                amps.len()
            )));
        }
        check_capacity("dense state", n, MAX_QUBITS)?;
        Ok(Self { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    pub fn normalize(&mut self) {
        let nrm = self.norm();
        if nrm > 0.0 {
            for a in &mut self.amps {
                *a /= nrm;
            }
        }
    }

    /// Applies a `2^k × 2^k` gate on `operands` (first operand = high bit).
    pub fn apply_gate(&mut self, gate: &DenseMatrix, operands: &[usize]) -> Result<()> {
        let k = operands.len();
        if gate.dim() != 1 << k {
            return Err(Error::LengthMismatch {
                expected: 1 << k,
                got: gate.dim(),
            });
        }
        for (i, &q) in operands.iter().enumerate() {
            if q >= self.n {
                return Err(Error::OutOfRange {
                    what: "qubits",
                    index: q,
                    len: self.n,
                });
            }
            if operands[..i].contains(&q) {
                return Err(Error::DuplicateOperand(q));
            }
        }
        let mask: usize = operands.iter().map(|&q| 1 << q).sum();
        let local = 1usize << k;
        let offsets: Vec<usize> = (0..local)
            .map(|l| {
                operands
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| (l >> (k - 1 - j)) & 1 == 1)
                    .map(|(_, &q)| 1 << q)
                    .sum()
            })
            .collect();
        let mut buf = vec![C64::new(0.0, 0.0); local];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for (l, off) in offsets.iter().enumerate() {
                buf[l] = self.amps[base | off];
            }
            for (r, off) in offsets.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (c, b) in buf.iter().enumerate() {
                    acc += gate.get(r, c) * b;
                }
                self.amps[base | off] = acc;
            }
        }
        Ok(())
    }

    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        if p.num_qubits() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: p.num_qubits(),
            });
        }
        self.amps = apply_pauli(p, &self.amps);
        Ok(())
    }

    /// `⟨ψ|P|ψ⟩`
    pub fn expectation(&self, p: &PauliString) -> Result<C64> {
        if p.num_qubits() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: p.num_qubits(),
            });
        }
        Ok(inner(&self.amps, &apply_pauli(p, &self.amps)))
    }

    /// Projects onto the `±1` eigenspace of a Hermitian Pauli and renormalizes.
    ///
    /// Draws one uniform number from `rng` unless `forced` is given; outcome
    /// `+1` is chosen when the draw is below `p_+ = (1 + ⟨P⟩)/2`. Returns the
    /// outcome and its probability.
    pub fn measure_pauli<R: Rng + ?Sized>(
        &mut self,
        p: &PauliString,
        forced: Option<i8>,
        rng: &mut R,
    ) -> Result<(i8, f64)> {
        if !p.is_hermitian() {
            return Err(Error::InvalidObservable(format!("{p} is not Hermitian")));
        }
        if p.is_identity() {
            return Err(Error::DegenerateObservable);
        }
        let ev = self.expectation(p)?.re;
        let p_plus = ((1.0 + ev) / 2.0).clamp(0.0, 1.0);
        let outcome = match forced {
            Some(m) => m.signum(),
            None => {
                if rng.random::<f64>() < p_plus {
                    1
                } else {
                    -1
                }
            }
        };
        let prob = if outcome > 0 { p_plus } else { 1.0 - p_plus };
        if prob < 1e-12 {
            return Err(Error::ImpossibleOutcome {
                outcome,
                probability: prob,
            });
        }
        let op = apply_pauli(p, &self.amps);
        let m = outcome as f64;
        for (a, b) in self.amps.iter_mut().zip(op) {
            *a = (*a + m * b) * 0.5;
        }
        self.normalize();
        Ok((outcome, prob))
    }

    pub fn fidelity(&self, other: &[C64]) -> f64 {
        fidelity_up_to_phase(&self.amps, other)
    }

    pub fn schmidt_rank(&self, cut: usize, tol: f64) -> Result<usize> {
        schmidt_rank(&self.amps, self.n, cut, tol)
    }
}

/// Dense `|ψ_S⟩` for the stabilizer group of `t`, normalized, with its first
/// nonzero amplitude real and positive.
pub fn stabilizer_vector(t: &Tableau) -> Result<Vec<C64>> {
    let n = t.num_qubits();
    check_capacity("stabilizer_vector", n, MAX_QUBITS)?;
    let dim = 1usize << n;
    let project = |mut v: Vec<C64>| {
        for i in 0..n {
            let s = t.stabilizer(i);
            let sv = apply_pauli(&s, &v);
            for (a, b) in v.iter_mut().zip(sv) {
                *a = (*a + b) * 0.5;
            }
        }
        v
    };
    let mut e0 = vec![C64::new(0.0, 0.0); dim];
    e0[0] = C64::new(1.0, 0.0);
    let mut v = project(e0);
    if norm(&v) < 1e-9 {
        // |0…0⟩ is orthogonal to ψ_S; any generic vector has overlap.
        let generic: Vec<C64> = (0..dim)
            .map(|j| C64::from_polar(1.0 + 0.1 * (j % 7) as f64, 0.7548776662 * j as f64))
            .collect();
        v = project(generic);
    }
    let nrm = norm(&v);
    if nrm < 1e-9 {
        return Err(Error::Internal("stabilizer projection vanished".into()));
    }
    let lead = *v
        .iter()
        .find(|a| a.norm() > 1e-9)
        .expect("nonzero vector has a nonzero entry");
    let phase = lead.conj() / lead.norm();
    Ok(v.into_iter().map(|a| a * phase / nrm).collect())
}

/// All `2^n` basis vectors `d_î |ψ_S⟩`, indexed by `î` (bit `j` selects `d_j`).
pub fn stabilizer_basis(t: &Tableau) -> Result<Vec<Vec<C64>>> {
    let n = t.num_qubits();
    check_capacity("stabilizer_basis", n, 12)?;
    let psi = stabilizer_vector(t)?;
    let mut basis = vec![psi];
    for j in 0..n {
        let d = t.destabilizer(j);
        let next: Vec<Vec<C64>> = basis.iter().map(|v| apply_pauli(&d, v)).collect();
        basis.extend(next);
    }
    Ok(basis)
}

/// Max deviation of the Gram matrix of `{d_î|ψ_S⟩}` from the identity.
pub fn gram_check(t: &Tableau) -> Result<f64> {
    check_capacity("gram_check", t.num_qubits(), 5)?;
    let basis = stabilizer_basis(t)?;
    let mut dev: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((inner(a, b) - C64::new(target, 0.0)).norm());
        }
    }
    Ok(dev)
}
