//! Measurement outcome labels and sequences of them.
//!
//! X-axis results are ±1. Y-axis results are stored as ±i so that both kinds can share
//! one alphabet closed under multiplication; outcome +i belongs to the σ_y eigenvalue +1.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Axis, ALGEBRA_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "+i")]
    PlusI,
    #[serde(rename = "-i")]
    MinusI,
}

impl Outcome {
    pub const X: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];
    pub const Y: [Outcome; 2] = [Outcome::PlusI, Outcome::MinusI];

    pub fn for_axis(axis: Axis) -> Result<[Outcome; 2]> {
        match axis {
            Axis::X => Ok(Self::X),
            Axis::Y => Ok(Self::Y),
            Axis::Z => Err(Error::Domain("no measurement alphabet for the z axis".into())),
        }
    }

    /// Outcome whose projector is (𝟙 + sign·σ_axis)/2.
    pub fn from_axis_sign(axis: Axis, sign: i8) -> Result<Self> {
        match (axis, sign) {
            (Axis::X, 1) => Ok(Outcome::Plus),
            (Axis::X, -1) => Ok(Outcome::Minus),
            (Axis::Y, 1) => Ok(Outcome::PlusI),
            (Axis::Y, -1) => Ok(Outcome::MinusI),
            _ => Err(Error::Domain(format!(
                "no outcome for axis {} with sign {sign}",
                axis.label()
            ))),
        }
    }

    pub fn value(&self) -> Complex64 {
        match self {
            Outcome::Plus => Complex64::new(1.0, 0.0),
            Outcome::Minus => Complex64::new(-1.0, 0.0),
            Outcome::PlusI => Complex64::new(0.0, 1.0),
            Outcome::MinusI => Complex64::new(0.0, -1.0),
        }
    }

    pub fn axis(&self) -> Axis {
        match self {
            Outcome::Plus | Outcome::Minus => Axis::X,
            Outcome::PlusI | Outcome::MinusI => Axis::Y,
        }
    }

    /// Eigenvalue of σ_axis selected by this outcome.
    pub fn eigen_sign(&self) -> i8 {
        match self {
            Outcome::Plus | Outcome::PlusI => 1,
            Outcome::Minus | Outcome::MinusI => -1,
        }
    }

    /// ±1 for X outcomes; errors for Y outcomes.
    pub fn real_sign(&self) -> Result<f64> {
        match self {
            Outcome::Plus => Ok(1.0),
            Outcome::Minus => Ok(-1.0),
            _ => Err(Error::Unsupported(
                "operation defined only for the X-axis alphabet".into(),
            )),
        }
    }

    /// Product of two X outcomes.
    pub fn times(&self, other: Outcome) -> Result<Outcome> {
        let s = self.real_sign()? * other.real_sign()?;
        Ok(if s > 0.0 { Outcome::Plus } else { Outcome::Minus })
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Outcome::Plus => "+",
            Outcome::Minus => "-",
            Outcome::PlusI => "+i",
            Outcome::MinusI => "-i",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Results m_1, …, m_k in time order (m_1 first).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct OutcomeSequence(Vec<Outcome>);

impl OutcomeSequence {
    pub fn new(outcomes: Vec<Outcome>) -> Self {
        Self(outcomes)
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Outcome> {
        self.0.last().copied()
    }

    /// Every ±1 sequence of length `n`, in lexicographic order with `+` before `-`
    /// and m_1 varying slowest.
    pub fn all_x(n: usize) -> Vec<OutcomeSequence> {
        all_sequences(n, &vec![Outcome::X.to_vec(); n])
    }

    /// Every sequence where slot `k` ranges over `alphabets[k]`.
    pub fn all_over(alphabets: &[Vec<Outcome>]) -> Vec<OutcomeSequence> {
        all_sequences(alphabets.len(), alphabets)
    }

    pub fn is_x_only(&self) -> bool {
        self.0.iter().all(|o| o.axis() == Axis::X)
    }
}

fn all_sequences(n: usize, alphabets: &[Vec<Outcome>]) -> Vec<OutcomeSequence> {
    let mut out = vec![Vec::with_capacity(n)];
    for alphabet in alphabets.iter().take(n) {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                alphabet.iter().map(move |o| {
                    let mut next = prefix.clone();
                    next.push(*o);
                    next
                })
            })
            .collect();
    }
    out.into_iter().map(OutcomeSequence).collect()
}

impl fmt::Display for OutcomeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(Outcome::symbol).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for OutcomeSequence {
    type Err = Error;

    /// Accepts `+`, `-`, `+i`, `-i` tokens, optionally separated by commas or whitespace
    /// (`"+-+"`, `"+,-i,-"`).
    fn from_str(s: &str) -> Result<Self> {
        let mut out = Vec::new();
        let mut chars = s.chars().peekable();
        while let Some(c) = chars.next() {
            let sign = match c {
                '+' => 1,
                '-' | '−' => -1,
                ',' => continue,
                c if c.is_whitespace() => continue,
                other => {
                    return Err(Error::Parse(format!(
                        "unexpected character `{other}` in outcome sequence"
                    )))
                }
            };
            let axis = if chars.peek() == Some(&'i') {
                chars.next();
                Axis::Y
            } else {
                Axis::X
            };
            out.push(Outcome::from_axis_sign(axis, sign)?);
        }
        Ok(Self(out))
    }
}

/// Whether a finite set of complex labels is closed under multiplication and conjugation.
pub fn alphabet_closed(values: &[Complex64]) -> bool {
    let contains = |z: Complex64| values.iter().any(|v| (v - z).norm() <= ALGEBRA_TOL);
    values
        .iter()
        .all(|a| contains(a.conj()) && values.iter().all(|b| contains(a * b)))
}
