//! Local pulses and local measurements on a register of qubits sharing one environment.
//!
//! Qubit 1 is the most significant tensor factor; the environment comes last.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::IdentityCheck;
use crate::error::{Error, Result};
use crate::linalg::{pauli, projector, random_unitary, Axis, CMatrix, ALGEBRA_TOL, CHAIN_TOL};
use crate::superop::LinearMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiQubitRegister {
    n_qubits: usize,
    env_dim: usize,
}

impl MultiQubitRegister {
    pub const MAX_QUBITS: usize = 4;

    pub fn new(n_qubits: usize, env_dim: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > Self::MAX_QUBITS {
            return Err(Error::Domain(format!(
                "register size must be in 1..={}, got {n_qubits}",
                Self::MAX_QUBITS
            )));
        }
        if env_dim == 0 {
            return Err(Error::Domain("environment dimension must be positive".into()));
        }
        Ok(Self { n_qubits, env_dim })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn env_dim(&self) -> usize {
        self.env_dim
    }

    pub fn total_dim(&self) -> usize {
        (1 << self.n_qubits) * self.env_dim
    }

    /// `op` on qubit `j` (1-based), identity on every other factor.
    pub fn local_operator(&self, j: usize, op: &CMatrix) -> Result<CMatrix> {
        if j == 0 || j > self.n_qubits {
            return Err(Error::Domain(format!(
                "qubit index {j} outside 1..={}",
                self.n_qubits
            )));
        }
        let before = 1usize << (j - 1);
        let after = (1usize << (self.n_qubits - j)) * self.env_dim;
        Ok(CMatrix::identity(before, before)
            .kronecker(op)
            .kronecker(&CMatrix::identity(after, after)))
    }

    /// 𝒳^{(j)}
    pub fn pulse(&self, j: usize) -> Result<LinearMap> {
        Ok(LinearMap::conjugation(&self.local_operator(j, pauli(Axis::X).matrix())?))
    }

    /// 𝒫_±^{(j)}
    pub fn projection(&self, j: usize, sign: i8) -> Result<LinearMap> {
        Ok(LinearMap::conjugation(
            &self.local_operator(j, projector(Axis::X, sign)?.matrix())?,
        ))
    }

    fn identity(&self) -> LinearMap {
        LinearMap::identity(self.total_dim())
    }

    /// ∏_j (ℐ + 𝒳^{(j)})
    pub fn pulse_product(&self) -> Result<LinearMap> {
        let mut acc = self.identity();
        for j in 1..=self.n_qubits {
            acc = &acc * &(&self.identity() + &self.pulse(j)?);
        }
        Ok(acc)
    }

    /// 2^n ∏_j (𝒫₊^{(j)} + 𝒫₋^{(j)})
    pub fn measurement_product(&self) -> Result<LinearMap> {
        let mut acc = self.identity();
        for j in 1..=self.n_qubits {
            acc = &acc * &(&self.projection(j, 1)? + &self.projection(j, -1)?);
        }
        Ok(acc.scaled(Complex64::new((1u64 << self.n_qubits) as f64, 0.0)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiQubitReport {
    pub n_qubits: usize,
    pub env_dim: usize,
    /// Local operations on distinct qubits commute.
    pub commutation: IdentityCheck,
    /// ∏(ℐ + 𝒳^{(j)}) = 2^n ∏(𝒫₊^{(j)} + 𝒫₋^{(j)})
    pub product_identity: IdentityCheck,
    /// Two-qubit registers: the four coherent terms against four times the four
    /// measurement terms, written out one by one.
    pub explicit_two_qubit: Option<IdentityCheck>,
    /// The identity applied at two slots interlaced with random evolutions.
    pub interlaced: IdentityCheck,
}

impl MultiQubitReport {
    pub fn passed(&self) -> bool {
        self.commutation.passed
            && self.product_identity.passed
            && self.interlaced.passed
            && self.explicit_two_qubit.as_ref().is_none_or(|c| c.passed)
    }
}

pub fn multiqubit_identity_check(register: &MultiQubitRegister, seed: u64) -> Result<MultiQubitReport> {
    let n = register.n_qubits();

    let mut commutation = 0.0f64;
    for j in 1..=n {
        for k in (j + 1)..=n {
            let local_j = [register.pulse(j)?, register.projection(j, 1)?, register.projection(j, -1)?];
            let local_k = [register.pulse(k)?, register.projection(k, 1)?, register.projection(k, -1)?];
            for a in &local_j {
                for b in &local_k {
                    commutation = commutation.max((a * b).max_abs_diff(&(b * a))?);
                }
            }
        }
    }

    let lhs = register.pulse_product()?;
    let rhs = register.measurement_product()?;
    let product_identity = IdentityCheck::new(
        format!("pulse-product n_qubits={n}"),
        lhs.max_abs_diff(&rhs)?,
        CHAIN_TOL,
    );

    let explicit_two_qubit = if n == 2 {
        let id = register.identity();
        let (x1, x2) = (register.pulse(1)?, register.pulse(2)?);
        let coherent = &(&(&id + &x1) + &x2) + &(&x1 * &x2);
        let mut measured = LinearMap::zero(register.total_dim());
        for s1 in [1, -1] {
            for s2 in [1, -1] {
                measured = &measured + &(&register.projection(1, s1)? * &register.projection(2, s2)?);
            }
        }
        let measured = measured.scaled(Complex64::new(4.0, 0.0));
        let err = coherent
            .max_abs_diff(&measured)?
            .max(coherent.max_abs_diff(&lhs)?);
        Some(IdentityCheck::new("two-qubit explicit terms", err, CHAIN_TOL))
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = register.total_dim();
    let u1 = LinearMap::conjugation(&random_unitary(&mut rng, dim));
    let u2 = LinearMap::conjugation(&random_unitary(&mut rng, dim));
    let coherent = LinearMap::chain(&[&u1, &lhs, &u2, &lhs])?;
    let measured = LinearMap::chain(&[&u1, &rhs, &u2, &rhs])?;
    let interlaced = IdentityCheck::new(
        "interlaced two-slot",
        coherent.max_abs_diff(&measured)?,
        CHAIN_TOL,
    );

    Ok(MultiQubitReport {
        n_qubits: n,
        env_dim: register.env_dim(),
        commutation: IdentityCheck::new("local commutation", commutation, ALGEBRA_TOL),
        product_identity,
        explicit_two_qubit,
        interlaced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HilbertDims;
    use crate::superop::pulse_from_projections;

    #[test]
    fn register_bounds() {
        assert!(MultiQubitRegister::new(0, 1).is_err());
        assert!(MultiQubitRegister::new(5, 1).is_err());
        let r = MultiQubitRegister::new(2, 3).unwrap();
        assert_eq!(r.total_dim(), 12);
        assert!(r.pulse(3).is_err());
    }

    #[test]
    fn single_qubit_is_the_pillar_identity() {
        let r = MultiQubitRegister::new(1, 2).unwrap();
        let dims = HilbertDims::qubit(2).unwrap();
        let x = pulse_from_projections(dims, Axis::X).unwrap();
        assert!(r.pulse(1).unwrap().max_abs_diff(&x).unwrap() < 1e-14);
        assert!(multiqubit_identity_check(&r, 1).unwrap().passed());
    }

    #[test]
    fn two_and_three_qubits() {
        let r = MultiQubitRegister::new(2, 2).unwrap();
        let report = multiqubit_identity_check(&r, 4).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!(report.explicit_two_qubit.is_some());
        let r = MultiQubitRegister::new(3, 1).unwrap();
        assert!(multiqubit_identity_check(&r, 4).unwrap().passed());
    }

    #[test]
    fn qubit_one_is_most_significant() {
        let r = MultiQubitRegister::new(2, 1).unwrap();
        let x1 = r.local_operator(1, pauli(Axis::X).matrix()).unwrap();
        // σ_x on the first factor flips |00⟩ to |10⟩ = basis index 2
        assert_eq!(x1[(2, 0)], Complex64::new(1.0, 0.0));
    }
}
