//! Pauli operators in binary symplectic form.
//!
//! A [`PauliString`] stores two bit vectors `x`, `z` and a phase exponent `p`
//! and denotes the operator `i^p · σ(x_0,z_0) ⊗ … ⊗ σ(x_{n-1},z_{n-1})` with
//! `σ(0,0)=I`, `σ(1,0)=X`, `σ(0,1)=Z`, `σ(1,1)=Y`. With this convention the
//! Hermitian strings are exactly those with an even phase exponent.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::Bits;
use crate::error::{Error, Result};

/// Single-qubit Pauli label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Exponent of `i` picked up when multiplying the single-qubit Paulis
/// `σ(x1,z1) · σ(x2,z2)`.
pub fn g(x1: bool, z1: bool, x2: bool, z2: bool) -> i8 {
    let (x2, z2) = (x2 as i8, z2 as i8);
    match (x1, z1) {
        (false, false) => 0,
        (true, true) => z2 - x2,
        (true, false) => z2 * (2 * x2 - 1),
        (false, true) => x2 * (1 - 2 * z2),
    }
}

/// Sum of `g` over all qubits, mod 4, computed a word at a time.
pub(crate) fn product_phase(x1: &[u64], z1: &[u64], x2: &[u64], z2: &[u64]) -> u8 {
    let mut pos = 0u32;
    let mut neg = 0u32;
    for k in 0..x1.len() {
        let (a, b, c, d) = (x1[k], z1[k], x2[k], z2[k]);
        // +1: Y·Z, X·Y, Z·X      -1: Y·X, X·Z, Z·Y
        let p = (a & b & !c & d) | (a & !b & c & d) | (!a & b & c & !d);
        let m = (a & b & c & !d) | (a & !b & !c & d) | (!a & b & c & d);
        pos += p.count_ones();
        neg += m.count_ones();
    }
    (pos as i64 - neg as i64).rem_euclid(4) as u8
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    x: Bits,
    z: Bits,
    phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self {
            x: Bits::zeros(n),
            z: Bits::zeros(n),
            phase: 0,
        }
    }

    pub fn new(x: Bits, z: Bits, phase_exp: u8) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::LengthMismatch {
                expected: x.len(),
                got: z.len(),
            });
        }
        Ok(Self {
            x,
            z,
            phase: phase_exp % 4,
        })
    }

    /// `pauli` acting on `qubit` of an `n`-qubit register.
    pub fn single(n: usize, qubit: usize, pauli: Pauli) -> Result<Self> {
        if qubit >= n {
            return Err(Error::OutOfRange {
                what: "qubits",
                index: qubit,
                len: n,
            });
        }
        let mut p = Self::identity(n);
        p.set(qubit, pauli);
        Ok(p)
    }

    /// `X^x Z^z` (X applied after Z) as a string: `XZ = -iY` on overlapping sites.
    pub fn from_xz_product(x: Bits, z: Bits) -> Result<Self> {
        let overlap = x.and(&z)?.count_ones();
        Self::new(x, z, ((4 - overlap % 4) % 4) as u8)
    }

    pub fn num_qubits(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &Bits {
        &self.x
    }

    pub fn z(&self) -> &Bits {
        &self.z
    }

    pub fn phase_exp(&self) -> u8 {
        self.phase
    }

    pub fn with_phase(mut self, phase_exp: u8) -> Self {
        self.phase = phase_exp % 4;
        self
    }

    pub fn negated(mut self) -> Self {
        self.phase = (self.phase + 2) % 4;
        self
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.x.get(qubit), self.z.get(qubit))
    }

    pub fn set(&mut self, qubit: usize, pauli: Pauli) {
        let (x, z) = pauli.bits();
        self.x.set(qubit, x);
        self.z.set(qubit, z);
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == 0
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_zero() && self.z.is_zero()
    }

    pub fn weight(&self) -> usize {
        self.support().count()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_qubits()).filter(move |&q| self.x.get(q) || self.z.get(q))
    }

    fn check_same_size(&self, other: &Self) -> Result<()> {
        if self.num_qubits() != other.num_qubits() {
            return Err(Error::LengthMismatch {
                expected: self.num_qubits(),
                got: other.num_qubits(),
            });
        }
        Ok(())
    }

    /// Symplectic inner product test: `true` iff `self · other = other · self`.
    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check_same_size(other)?;
        Ok(!anticommute_words(
            self.x.words(),
            self.z.words(),
            other.x.words(),
            other.z.words(),
        ))
    }

    /// Operator product `self · other`, phase included.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_same_size(other)?;
        let g = product_phase(
            self.x.words(),
            self.z.words(),
            other.x.words(),
            other.z.words(),
        );
        let mut x = self.x.clone();
        x.xor_assign(&other.x);
        let mut z = self.z.clone();
        z.xor_assign(&other.z);
        Ok(Self {
            x,
            z,
            phase: (self.phase + other.phase + g) % 4,
        })
    }
}

pub(crate) fn anticommute_words(x1: &[u64], z1: &[u64], x2: &[u64], z2: &[u64]) -> bool {
    let mut acc = 0u32;
    for k in 0..x1.len() {
        acc += ((x1[k] & z2[k]) ^ (z1[k] & x2[k])).count_ones();
    }
    acc & 1 == 1
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.phase {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        })?;
        for q in 0..self.num_qubits() {
            write!(f, "{}", self.get(q).symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts an optional `+`, `-`, `+i`, `-i` or `i` prefix followed by a word
    /// over `{I,X,Y,Z}` (qubit 0 first).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, word) = if let Some(rest) = s.strip_prefix("-i") {
            (3, rest)
        } else if let Some(rest) = s.strip_prefix("+i") {
            (1, rest)
        } else if let Some(rest) = s.strip_prefix('i') {
            (1, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (2, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (0, rest)
        } else {
            (0, s)
        };
        if word.is_empty() {
            return Err(Error::InvalidObservable(format!("empty Pauli word {s:?}")));
        }
        let mut p = PauliString::identity(word.chars().count());
        for (q, c) in word.chars().enumerate() {
            let pauli = match c {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => {
                    return Err(Error::InvalidObservable(format!(
                        "unexpected character {other:?} in Pauli word {s:?}"
                    )))
                }
            };
            p.set(q, pauli);
        }
        Ok(p.with_phase(phase))
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
