//! Stabilizer/destabilizer tableau.
//!
//! Rows `0..n` are the destabilizer generators `d_i`, rows `n..2n` the
//! stabilizer generators `s_i`. Each row is a Hermitian Pauli string stored as
//! packed `x`/`z` words plus a sign bit.

use rand::Rng;

use crate::bits::{words_for, Bits};
use crate::error::{Error, Result};
use crate::pauli::{anticommute_words, product_phase, PauliString};

#[derive(Clone, PartialEq, Eq)]
pub struct Tableau {
    n: usize,
    words: usize,
    xs: Vec<u64>,
    zs: Vec<u64>,
    signs: Vec<bool>,
}

/// One of the three generators of the Clifford group used by the tableau.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliffordGenerator {
    H(usize),
    S(usize),
    Cnot(usize, usize),
}

impl Tableau {
    /// Tableau of `|0…0⟩`: `d_i = X_i`, `s_i = Z_i`, all signs `+`.
    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("a tableau needs at least one qubit".into()));
        }
        let words = words_for(n);
        let mut t = Self {
            n,
            words,
            xs: vec![0; 2 * n * words],
            zs: vec![0; 2 * n * words],
            signs: vec![false; 2 * n],
        };
        for q in 0..n {
            t.xs[q * words + q / 64] |= 1 << (q % 64);
            t.zs[(n + q) * words + q / 64] |= 1 << (q % 64);
        }
        Ok(t)
    }

    /// Builds a tableau from explicit generators. Every row must be Hermitian.
    pub fn from_rows(destabilizers: &[PauliString], stabilizers: &[PauliString]) -> Result<Self> {
        let n = destabilizers.len();
        if stabilizers.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: stabilizers.len(),
            });
        }
        let mut t = Self::identity(n)?;
        for (i, row) in destabilizers.iter().chain(stabilizers).enumerate() {
            t.set_row(i, row)?;
        }
        Ok(t)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    fn row_x(&self, i: usize) -> &[u64] {
        &self.xs[i * self.words..(i + 1) * self.words]
    }

    #[inline]
    fn row_z(&self, i: usize) -> &[u64] {
        &self.zs[i * self.words..(i + 1) * self.words]
    }

    fn check_row(&self, i: usize) -> Result<()> {
        if i >= 2 * self.n {
            return Err(Error::OutOfRange {
                what: "tableau rows",
                index: i,
                len: 2 * self.n,
            });
        }
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n {
            return Err(Error::OutOfRange {
                what: "qubits",
                index: q,
                len: self.n,
            });
        }
        Ok(())
    }

    pub fn sign(&self, i: usize) -> bool {
        self.signs[i]
    }

    /// Row `i` as a Pauli string (phase exponent 0 or 2).
    pub fn row(&self, i: usize) -> PauliString {
        let x = Bits::from_words(self.n, self.row_x(i).to_vec());
        let z = Bits::from_words(self.n, self.row_z(i).to_vec());
        PauliString::new(x, z, if self.signs[i] { 2 } else { 0 }).expect("row lengths agree")
    }

    pub fn destabilizer(&self, i: usize) -> PauliString {
        self.row(i)
    }

    pub fn stabilizer(&self, i: usize) -> PauliString {
        self.row(self.n + i)
    }

    pub fn set_row(&mut self, i: usize, p: &PauliString) -> Result<()> {
        self.check_row(i)?;
        if p.num_qubits() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: p.num_qubits(),
            });
        }
        if !p.is_hermitian() {
            return Err(Error::InvalidObservable(format!(
                "tableau rows must be Hermitian, got {p}"
            )));
        }
        let w = self.words;
        self.xs[i * w..(i + 1) * w].copy_from_slice(p.x().words());
        self.zs[i * w..(i + 1) * w].copy_from_slice(p.z().words());
        self.signs[i] = p.phase_exp() == 2;
        Ok(())
    }

    /// Whether `p` anticommutes with row `i`.
    pub(crate) fn row_anticommutes(&self, i: usize, p: &PauliString) -> bool {
        anticommute_words(self.row_x(i), self.row_z(i), p.x().words(), p.z().words())
    }

    /// Replaces row `a` with the product of rows `a` and `b`.
    ///
    /// The rows must commute so that the product is again Hermitian.
    pub fn rowsum(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_row(a)?;
        self.check_row(b)?;
        if a == b {
            return Err(Error::DuplicateOperand(a));
        }
        let g = product_phase(self.row_x(b), self.row_z(b), self.row_x(a), self.row_z(a));
        let total = (2 * self.signs[a] as u8 + 2 * self.signs[b] as u8 + g) % 4;
        if total % 2 == 1 {
            return Err(Error::AnticommutingRows(a, b));
        }
        self.signs[a] = total == 2;
        let w = self.words;
        for k in 0..w {
            self.xs[a * w + k] ^= self.xs[b * w + k];
            self.zs[a * w + k] ^= self.zs[b * w + k];
        }
        Ok(())
    }

    /// Conjugates every row by CNOT with control `a` and target `b`.
    pub fn apply_cnot(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::DuplicateOperand(a));
        }
        let w = self.words;
        let (wa, ma) = (a / 64, 1u64 << (a % 64));
        let (wb, mb) = (b / 64, 1u64 << (b % 64));
        for i in 0..2 * self.n {
            let xa = self.xs[i * w + wa] & ma != 0;
            let xb = self.xs[i * w + wb] & mb != 0;
            let za = self.zs[i * w + wa] & ma != 0;
            let zb = self.zs[i * w + wb] & mb != 0;
            self.signs[i] ^= xa && zb && (xb == za);
            if xa {
                self.xs[i * w + wb] ^= mb;
            }
            if zb {
                self.zs[i * w + wa] ^= ma;
            }
        }
        Ok(())
    }

    /// Conjugates every row by the Hadamard on qubit `a`.
    pub fn apply_h(&mut self, a: usize) -> Result<()> {
        self.check_qubit(a)?;
        let w = self.words;
        let (wa, ma) = (a / 64, 1u64 << (a % 64));
        for i in 0..2 * self.n {
            let x = self.xs[i * w + wa] & ma;
            let z = self.zs[i * w + wa] & ma;
            self.signs[i] ^= x != 0 && z != 0;
            self.xs[i * w + wa] = (self.xs[i * w + wa] & !ma) | z;
            self.zs[i * w + wa] = (self.zs[i * w + wa] & !ma) | x;
        }
        Ok(())
    }

    /// Conjugates every row by the phase gate `S = diag(1, i)` on qubit `a`.
    pub fn apply_s(&mut self, a: usize) -> Result<()> {
        self.check_qubit(a)?;
        let w = self.words;
        let (wa, ma) = (a / 64, 1u64 << (a % 64));
        for i in 0..2 * self.n {
            let x = self.xs[i * w + wa] & ma;
            let z = self.zs[i * w + wa] & ma;
            self.signs[i] ^= x != 0 && z != 0;
            self.zs[i * w + wa] ^= x;
        }
        Ok(())
    }

    /// `S† = S³`.
    pub fn apply_sdg(&mut self, a: usize) -> Result<()> {
        self.check_qubit(a)?;
        let w = self.words;
        let (wa, ma) = (a / 64, 1u64 << (a % 64));
        for i in 0..2 * self.n {
            let x = self.xs[i * w + wa] & ma;
            let z = self.zs[i * w + wa] & ma;
            // S†: X -> -Y, Y -> X
            self.signs[i] ^= x != 0 && z == 0;
            self.zs[i * w + wa] ^= x;
        }
        Ok(())
    }

    /// Conjugation by a Pauli gate only flips the signs of anticommuting rows.
    fn apply_pauli_gate(&mut self, a: usize, flip_on_x: bool, flip_on_z: bool) -> Result<()> {
        self.check_qubit(a)?;
        let w = self.words;
        let (wa, ma) = (a / 64, 1u64 << (a % 64));
        for i in 0..2 * self.n {
            let x = self.xs[i * w + wa] & ma != 0;
            let z = self.zs[i * w + wa] & ma != 0;
            self.signs[i] ^= (flip_on_x && x) ^ (flip_on_z && z);
        }
        Ok(())
    }

    pub fn apply_x(&mut self, a: usize) -> Result<()> {
        self.apply_pauli_gate(a, false, true)
    }

    pub fn apply_y(&mut self, a: usize) -> Result<()> {
        self.apply_pauli_gate(a, true, true)
    }

    pub fn apply_z(&mut self, a: usize) -> Result<()> {
        self.apply_pauli_gate(a, true, false)
    }

    pub fn apply(&mut self, gate: CliffordGenerator) -> Result<()> {
        match gate {
            CliffordGenerator::H(a) => self.apply_h(a),
            CliffordGenerator::S(a) => self.apply_s(a),
            CliffordGenerator::Cnot(a, b) => self.apply_cnot(a, b),
        }
    }

    /// Measurement-style basis update for an observable that anticommutes
    /// with stabilizer `pivot`.
    ///
    /// Every other row anticommuting with `observable` is multiplied by
    /// stabilizer `pivot`; then destabilizer `pivot` takes the old stabilizer
    /// and stabilizer `pivot` becomes `outcome · observable`.
    pub fn project_basis(
        &mut self,
        observable: &PauliString,
        pivot: usize,
        outcome: i8,
    ) -> Result<()> {
        self.check_qubit(pivot)?;
        if observable.num_qubits() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: observable.num_qubits(),
            });
        }
        if !observable.is_hermitian() {
            return Err(Error::InvalidObservable(format!("{observable} is not Hermitian")));
        }
        let srow = self.n + pivot;
        if !self.row_anticommutes(srow, observable) {
            return Err(Error::NoAnticommutingStabilizer);
        }
        for i in 0..2 * self.n {
            if i != srow && i != pivot && self.row_anticommutes(i, observable) {
                self.rowsum(i, srow)?;
            }
        }
        let old = self.row(srow);
        self.set_row(pivot, &old)?;
        let new = if outcome < 0 {
            observable.clone().negated()
        } else {
            observable.clone()
        };
        self.set_row(srow, &new)
    }

    /// Checks the commutation pattern of the generators and their GF(2)
    /// independence.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n;
        for i in 0..2 * n {
            for j in (i + 1)..2 * n {
                let anti = anticommute_words(self.row_x(i), self.row_z(i), self.row_x(j), self.row_z(j));
                let expected = j == i + n && i < n;
                if anti != expected {
                    return Err(Error::Internal(format!(
                        "rows {i} and {j} {} but should {}",
                        if anti { "anticommute" } else { "commute" },
                        if expected { "anticommute" } else { "commute" },
                    )));
                }
            }
        }
        if self.gf2_rank() != 2 * n {
            return Err(Error::Internal("generators are linearly dependent".into()));
        }
        Ok(())
    }

    fn gf2_rank(&self) -> usize {
        let n = self.n;
        let w = self.words;
        let mut m: Vec<Vec<u64>> = (0..2 * n)
            .map(|i| {
                let mut v = self.row_x(i).to_vec();
                v.extend_from_slice(self.row_z(i));
                v
            })
            .collect();
        let mut rank = 0;
        for col in 0..2 * n {
            let (word, bit) = if col < n {
                (col / 64, col % 64)
            } else {
                (w + (col - n) / 64, (col - n) % 64)
            };
            let Some(p) = (rank..m.len()).find(|&r| (m[r][word] >> bit) & 1 == 1) else {
                continue;
            };
            m.swap(rank, p);
            for r in 0..m.len() {
                if r != rank && (m[r][word] >> bit) & 1 == 1 {
                    let pivot = m[rank].clone();
                    for (a, b) in m[r].iter_mut().zip(&pivot) {
                        *a ^= b;
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Random Clifford basis: `4n²` gates drawn uniformly from `{H, S, CNOT}` on
/// uniformly random qubits, applied to the identity tableau.
pub fn random_clifford<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Tableau> {
    let mut t = Tableau::identity(n)?;
    for gate in random_clifford_gates(n, rng) {
        t.apply(gate)?;
    }
    Ok(t)
}

/// The gate sequence behind [`random_clifford`].
pub fn random_clifford_gates<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<CliffordGenerator> {
    let kinds = if n > 1 { 3 } else { 2 };
    (0..4 * n * n)
        .map(|_| match rng.random_range(0..kinds) {
            0 => CliffordGenerator::H(rng.random_range(0..n)),
            1 => CliffordGenerator::S(rng.random_range(0..n)),
            _ => {
                let a = rng.random_range(0..n);
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                CliffordGenerator::Cnot(a, b)
            }
        })
        .collect()
}

impl std::fmt::Debug for Tableau {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Tableau(n={})", self.n)?;
        for i in 0..2 * self.n {
            let label = if i < self.n { 'd' } else { 's' };
            writeln!(f, "  {label}{} = {}", i % self.n, self.row(i))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{gates, pauli_matrix, DenseMatrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn identity_tableau_layout() {
        let t = Tableau::identity(1).unwrap();
        assert_eq!(t.destabilizer(0), p("X"));
        assert_eq!(t.stabilizer(0), p("Z"));
        assert!(!t.sign(0) && !t.sign(1));
        let t3 = Tableau::identity(3).unwrap();
        t3.check_invariants().unwrap();
        for q in 0..3 {
            assert_eq!(t3.destabilizer(q), PauliString::single(3, q, crate::Pauli::X).unwrap());
            assert_eq!(t3.stabilizer(q), PauliString::single(3, q, crate::Pauli::Z).unwrap());
        }
        let t2 = Tableau::identity(2).unwrap();
        assert!(!t2.destabilizer(0).commutes(&t2.stabilizer(0)).unwrap());
        assert!(matches!(Tableau::identity(0), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn hadamard_swaps_x_and_z() {
        let mut t = Tableau::identity(1).unwrap();
        t.apply_h(0).unwrap();
        assert_eq!(t.destabilizer(0), p("Z"));
        assert_eq!(t.stabilizer(0), p("X"));
    }

    #[test]
    fn cnot_on_identity() {
        let mut t = Tableau::identity(2).unwrap();
        t.apply_cnot(0, 1).unwrap();
        assert_eq!(t.destabilizer(0), p("XX"));
        assert_eq!(t.destabilizer(1), p("IX"));
        assert_eq!(t.stabilizer(0), p("ZI"));
        assert_eq!(t.stabilizer(1), p("ZZ"));
        assert!(t.apply_cnot(1, 1).is_err());
        assert!(t.apply_cnot(0, 2).is_err());
    }

    #[test]
    fn s_has_order_four() {
        let start = Tableau::identity(1).unwrap();
        let mut t = start.clone();
        t.apply_h(0).unwrap();
        let before = t.clone();
        for k in 0..4 {
            if k > 0 {
                assert_ne!(t, before);
            }
            t.apply_s(0).unwrap();
        }
        assert_eq!(t, before);
    }

    #[test]
    fn sdg_inverts_s() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut t = random_clifford(3, &mut rng).unwrap();
        let before = t.clone();
        t.apply_s(1).unwrap();
        t.apply_sdg(1).unwrap();
        assert_eq!(t, before);
    }

    #[test]
    fn rowsum_examples() {
        // X·Z rows anticommute: no Hermitian product.
        let mut t = Tableau::identity(1).unwrap();
        assert_eq!(t.rowsum(1, 0), Err(Error::AnticommutingRows(1, 0)));
        assert!(t.rowsum(0, 2).is_err());

        // Commuting rows: product matches PauliString::multiply.
        let mut t = Tableau::from_rows(&[p("XI"), p("IX")], &[p("ZZ"), p("-YY")]).unwrap();
        let expected = t.row(3).multiply(&t.row(2)).unwrap();
        t.rowsum(2, 3).unwrap();
        assert_eq!(t.row(2), expected);
        assert_eq!(t.row(2), p("+XX"));
        // applying twice restores (x,z)
        t.rowsum(2, 3).unwrap();
        assert_eq!(t.row(2).x(), p("ZZ").x());
        assert_eq!(t.row(2).z(), p("ZZ").z());
    }

    /// Dense conjugation `U P U†` of each row equals the updated row.
    fn check_conjugation(t: &Tableau, gate: CliffordGenerator) {
        let n = t.num_qubits();
        let (mat, ops): (DenseMatrix, Vec<usize>) = match gate {
            CliffordGenerator::H(a) => (gates::h(), vec![a]),
            CliffordGenerator::S(a) => (gates::s(), vec![a]),
            CliffordGenerator::Cnot(a, b) => (gates::cnot(), vec![a, b]),
        };
        let u = DenseMatrix::embed(n, &mat, &ops);
        let mut after = t.clone();
        after.apply(gate).unwrap();
        for i in 0..2 * n {
            let conj = u.matmul(&pauli_matrix(&t.row(i))).matmul(&u.adjoint());
            let got = pauli_matrix(&after.row(i));
            assert!(conj.max_diff(&got) < 1e-12, "{gate:?} row {i}");
        }
    }

    #[test]
    fn gate_rules_match_dense_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            for _ in 0..20 {
                let t = random_clifford(n, &mut rng).unwrap();
                for a in 0..n {
                    check_conjugation(&t, CliffordGenerator::H(a));
                    check_conjugation(&t, CliffordGenerator::S(a));
                    for b in 0..n {
                        if a != b {
                            check_conjugation(&t, CliffordGenerator::Cnot(a, b));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn pauli_gates_match_dense_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_clifford(3, &mut rng).unwrap();
        for (mat, f) in [
            (gates::x(), Tableau::apply_x as fn(&mut Tableau, usize) -> Result<()>),
            (gates::y(), Tableau::apply_y),
            (gates::z(), Tableau::apply_z),
            (gates::sdg(), Tableau::apply_sdg),
        ] {
            let u = DenseMatrix::embed(3, &mat, &[1]);
            let mut after = t.clone();
            f(&mut after, 1).unwrap();
            for i in 0..6 {
                let conj = u.matmul(&pauli_matrix(&t.row(i))).matmul(&u.adjoint());
                assert!(conj.max_diff(&pauli_matrix(&after.row(i))) < 1e-12);
            }
        }
    }

    #[test]
    fn project_basis_on_identity_x_measurement() {
        let mut t = Tableau::identity(1).unwrap();
        t.project_basis(&p("X"), 0, 1).unwrap();
        assert_eq!(t.stabilizer(0), p("+X"));
        assert_eq!(t.destabilizer(0), p("Z"));

        let mut t = Tableau::identity(1).unwrap();
        t.project_basis(&p("-X"), 0, 1).unwrap();
        assert_eq!(t.stabilizer(0), p("-X"));
        assert!(t.sign(1));
    }

    #[test]
    fn project_basis_on_ghz() {
        let mut t = Tableau::identity(3).unwrap();
        t.apply_h(0).unwrap();
        t.apply_cnot(0, 1).unwrap();
        t.apply_cnot(1, 2).unwrap();
        // Z_0 anticommutes with the X-type stabilizer XXX.
        let obs = p("ZII");
        let k = (0..3).find(|&i| t.row_anticommutes(3 + i, &obs)).unwrap();
        t.project_basis(&obs, k, -1).unwrap();
        t.check_invariants().unwrap();
        assert!((0..3).any(|i| t.stabilizer(i) == p("-ZII")));
    }

    #[test]
    fn invariants_hold_after_random_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let t = random_clifford(5, &mut rng).unwrap();
            t.check_invariants().unwrap();
        }
        let a = random_clifford(1, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = random_clifford(1, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
        a.check_invariants().unwrap();
    }

    #[test]
    fn invariant_check_rejects_bad_tableau() {
        let t = Tableau::from_rows(&[p("X")], &[p("X")]).unwrap();
        assert!(t.check_invariants().is_err());
    }

    #[test]
    fn wide_tableau_spans_several_words() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut t = Tableau::identity(70).unwrap();
        for _ in 0..2000 {
            let a = rng.random_range(0..70);
            let b = (a + 1 + rng.random_range(0..69)) % 70;
            match rng.random_range(0..3) {
                0 => t.apply_h(a).unwrap(),
                1 => t.apply_s(a).unwrap(),
                _ => t.apply_cnot(a, b).unwrap(),
            }
        }
        t.check_invariants().unwrap();
    }
}
