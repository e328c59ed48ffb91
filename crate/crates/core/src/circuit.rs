//! Plain-text circuit files.
//!
//! ```text
//! qubits 2
//! # Bell pair
//! h 0
//! cx 0 1
//! measure 0
//! expect ZZ
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::engine::CliffordGate;
use crate::pauli::{Pauli, PauliString};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: missing `qubits <n>` header")]
    MissingHeader { line: usize },

    #[error("line {line}: unknown mnemonic `{mnemonic}`")]
    UnknownMnemonic { line: usize, mnemonic: String },

    #[error("line {line}: operand {operand} out of range for {n} qubits")]
    OperandOutOfRange { line: usize, operand: usize, n: usize },

    #[error("line {line}: malformed angle `{text}`")]
    MalformedAngle { line: usize, text: String },

    #[error("line {line}: malformed operand `{text}`")]
    MalformedOperand { line: usize, text: String },

    #[error("line {line}: `{mnemonic}` takes {expected} argument(s), got {got}")]
    WrongArity {
        line: usize,
        mnemonic: String,
        expected: usize,
        got: usize,
    },

    #[error("line {line}: operands of `{mnemonic}` must be distinct")]
    DuplicateOperand { line: usize, mnemonic: String },

    #[error("line {line}: bad Pauli word `{word}`: {reason}")]
    BadPauliWord { line: usize, word: String, reason: String },

    #[error("line {line}: bad header: {reason}")]
    BadHeader { line: usize, reason: String },
}

/// An angle as written in the file. `pi/k` forms keep their source spelling so
/// printing reproduces them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Radians(f64),
    /// `±π/k`
    PiOver { negative: bool, k: u32 },
}

impl Angle {
    pub fn radians(self) -> f64 {
        match self {
            Angle::Radians(r) => r,
            Angle::PiOver { negative, k } => {
                let a = PI / k as f64;
                if negative {
                    -a
                } else {
                    a
                }
            }
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Angle::Radians(r) => write!(f, "{r}"),
            Angle::PiOver { negative, k } => write!(f, "{}pi/{k}", if negative { "-" } else { "" }),
        }
    }
}

impl FromStr for Angle {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let (negative, rest) = match s.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, s),
        };
        if let Some(k) = rest.strip_prefix("pi/") {
            if !k.bytes().all(|b| b.is_ascii_digit()) {
                return Err(());
            }
            let k: u32 = k.parse().map_err(|_| ())?;
            if k == 0 {
                return Err(());
            }
            return Ok(Angle::PiOver { negative, k });
        }
        // only plain decimal literals: no `inf`, `nan` or exponents
        let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
        let ok = !digits.is_empty()
            && digits.bytes().all(|b| b.is_ascii_digit() || b == b'.')
            && digits.bytes().filter(|&b| b == b'.').count() <= 1
            && digits.bytes().any(|b| b.is_ascii_digit());
        if !ok {
            return Err(());
        }
        s.parse::<f64>().map(Angle::Radians).map_err(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate1 {
    H,
    S,
    Sdg,
    X,
    Y,
    Z,
    T,
    Tdg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate2 {
    Cx,
    Cz,
    Swap,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    Single(Gate1, usize),
    Two(Gate2, usize, usize),
    Rotation { axis: Pauli, angle: Angle, qubit: usize },
    /// `Z` measurement of one qubit.
    Measure(usize),
    /// Expectation value report; does not touch the state.
    Expect(PauliString),
}

/// An engine-level operation produced by [`Circuit::compile`].
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Clifford(CliffordGate),
    Rotation { axis: Pauli, qubit: usize, theta: f64 },
    Measure(usize),
    Expect(PauliString),
}

impl Instruction {
    fn mnemonic(&self) -> &'static str {
        match self {
            Instruction::Single(g, _) => match g {
                Gate1::H => "h",
                Gate1::S => "s",
                Gate1::Sdg => "sdg",
                Gate1::X => "x",
                Gate1::Y => "y",
                Gate1::Z => "z",
                Gate1::T => "t",
                Gate1::Tdg => "tdg",
            },
            Instruction::Two(g, ..) => match g {
                Gate2::Cx => "cx",
                Gate2::Cz => "cz",
                Gate2::Swap => "swap",
            },
            Instruction::Rotation { axis, .. } => match axis {
                Pauli::X => "rx",
                Pauli::Y => "ry",
                _ => "rz",
            },
            Instruction::Measure(_) => "measure",
            Instruction::Expect(_) => "expect",
        }
    }

    /// Lowers named gates to `{H, S, S†, X, Y, Z, CNOT}` and Pauli rotations.
    pub fn compile(&self) -> Vec<Op> {
        use CliffordGate as C;
        let c = Op::Clifford;
        match *self {
            Instruction::Single(g, q) => vec![match g {
                Gate1::H => c(C::H(q)),
                Gate1::S => c(C::S(q)),
                Gate1::Sdg => c(C::Sdg(q)),
                Gate1::X => c(C::X(q)),
                Gate1::Y => c(C::Y(q)),
                Gate1::Z => c(C::Z(q)),
                Gate1::T => Op::Rotation {
                    axis: Pauli::Z,
                    qubit: q,
                    theta: PI / 4.0,
                },
                Gate1::Tdg => Op::Rotation {
                    axis: Pauli::Z,
                    qubit: q,
                    theta: -PI / 4.0,
                },
            }],
            Instruction::Two(Gate2::Cx, a, b) => vec![c(C::Cnot(a, b))],
            Instruction::Two(Gate2::Cz, a, b) => vec![c(C::H(b)), c(C::Cnot(a, b)), c(C::H(b))],
            Instruction::Two(Gate2::Swap, a, b) => vec![c(C::Cnot(a, b)), c(C::Cnot(b, a)), c(C::Cnot(a, b))],
            Instruction::Rotation { axis, angle, qubit } => vec![Op::Rotation {
                axis,
                qubit,
                theta: angle.radians(),
            }],
            Instruction::Measure(q) => vec![Op::Measure(q)],
            Instruction::Expect(ref p) => vec![Op::Expect(p.clone())],
        }
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.mnemonic();
        match self {
            Instruction::Single(_, q) | Instruction::Measure(q) => write!(f, "{m} {q}"),
            Instruction::Two(_, a, b) => write!(f, "{m} {a} {b}"),
            Instruction::Rotation { angle, qubit, .. } => write!(f, "{m} {angle} {qubit}"),
            Instruction::Expect(p) => {
                let word: String = (0..p.num_qubits()).map(|q| p.get(q).symbol()).collect();
                write!(f, "{m} {word}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n: usize,
    instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut n: Option<usize> = None;
        let mut instructions = Vec::new();
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            last_line = line;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut words = content.split_whitespace();
            let mnemonic = words.next().unwrap_or_default().to_string();
            let args: Vec<&str> = words.collect();
            let Some(nq) = n else {
                if mnemonic != "qubits" {
                    return Err(ParseError::MissingHeader { line });
                }
                n = Some(parse_header(line, &args)?);
                continue;
            };
            let arity = |expected: usize| {
                if args.len() != expected {
                    Err(ParseError::WrongArity {
                        line,
                        mnemonic: mnemonic.clone(),
                        expected,
                        got: args.len(),
                    })
                } else {
                    Ok(())
                }
            };
            let qubit = |text: &str| -> Result<usize, ParseError> {
                if !text.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(ParseError::MalformedOperand {
                        line,
                        text: text.to_string(),
                    });
                }
                let q: usize = text.parse().map_err(|_| ParseError::MalformedOperand {
                    line,
                    text: text.to_string(),
                })?;
                if q >= nq {
                    return Err(ParseError::OperandOutOfRange { line, operand: q, n: nq });
                }
                Ok(q)
            };
            let single = match mnemonic.as_str() {
                "h" => Some(Gate1::H),
                "s" => Some(Gate1::S),
                "sdg" => Some(Gate1::Sdg),
                "x" => Some(Gate1::X),
                "y" => Some(Gate1::Y),
                "z" => Some(Gate1::Z),
                "t" => Some(Gate1::T),
                "tdg" => Some(Gate1::Tdg),
                _ => None,
            };
            let two = match mnemonic.as_str() {
                "cx" => Some(Gate2::Cx),
                "cz" => Some(Gate2::Cz),
                "swap" => Some(Gate2::Swap),
                _ => None,
            };
            let rot = match mnemonic.as_str() {
                "rx" => Some(Pauli::X),
                "ry" => Some(Pauli::Y),
                "rz" => Some(Pauli::Z),
                _ => None,
            };
            let instr = if let Some(g) = single {
                arity(1)?;
                Instruction::Single(g, qubit(args[0])?)
            } else if let Some(g) = two {
                arity(2)?;
                let (a, b) = (qubit(args[0])?, qubit(args[1])?);
                if a == b {
                    return Err(ParseError::DuplicateOperand { line, mnemonic });
                }
                Instruction::Two(g, a, b)
            } else if let Some(axis) = rot {
                arity(2)?;
                let angle: Angle = args[0].parse().map_err(|_| ParseError::MalformedAngle {
                    line,
                    text: args[0].to_string(),
                })?;
                Instruction::Rotation {
                    axis,
                    angle,
                    qubit: qubit(args[1])?,
                }
            } else if mnemonic == "measure" {
                arity(1)?;
                Instruction::Measure(qubit(args[0])?)
            } else if mnemonic == "expect" {
                arity(1)?;
                Instruction::Expect(parse_word(line, args[0], nq)?)
            } else if mnemonic == "qubits" {
                return Err(ParseError::BadHeader {
                    line,
                    reason: "header repeated".into(),
                });
            } else {
                return Err(ParseError::UnknownMnemonic { line, mnemonic });
            };
            instructions.push(instr);
        }
        match n {
            Some(n) => Ok(Circuit { n, instructions }),
            None => Err(ParseError::MissingHeader {
                line: last_line.max(1),
            }),
        }
    }

    pub fn compile(&self) -> Vec<Op> {
        self.instructions.iter().flat_map(Instruction::compile).collect()
    }
}

impl FromStr for Circuit {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        Circuit::parse(s)
    }
}

/// Canonical form: header, then one instruction per line, no comments.
impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n)?;
        for i in &self.instructions {
            writeln!(f, "{i}")?;
        }
        Ok(())
    }
}

fn parse_header(line: usize, args: &[&str]) -> Result<usize, ParseError> {
    let bad = |reason: String| ParseError::BadHeader { line, reason };
    if args.len() != 1 {
        return Err(bad(format!("expected one integer, got {} argument(s)", args.len())));
    }
    let n: usize = args[0].parse().map_err(|_| bad(format!("`{}` is not an integer", args[0])))?;
    if n == 0 {
        return Err(bad("need at least one qubit".into()));
    }
    Ok(n)
}

fn parse_word(line: usize, word: &str, n: usize) -> Result<PauliString, ParseError> {
    let bad = |reason: String| ParseError::BadPauliWord {
        line,
        word: word.to_string(),
        reason,
    };
    if !word.chars().all(|c| matches!(c, 'I' | 'X' | 'Y' | 'Z')) {
        return Err(bad("expected only I, X, Y, Z".into()));
    }
    if word.len() != n {
        return Err(bad(format!("length {} does not match {n} qubits", word.len())));
    }
    word.parse().map_err(|e: crate::Error| bad(e.to_string()))
}
