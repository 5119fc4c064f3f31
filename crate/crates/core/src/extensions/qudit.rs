//! Cyclic shift operations on a d-level system and measurements in the shift eigenbasis.
//!
//! g has ones on the superdiagonal and in the bottom-left corner. Its eigenvectors are the
//! discrete Fourier vectors v^{(j)}_k = ω^{jk}/√d with eigenvalue m_j = ω^j, ω = e^{2πi/d}.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::IdentityCheck;
use crate::error::{Error, Result};
use crate::linalg::{max_abs_diff, random_density, CMatrix, ALGEBRA_TOL, CHAIN_TOL, ONE};
use crate::outcome::alphabet_closed;
use crate::superop::LinearMap;

#[derive(Debug, Clone, PartialEq)]
pub struct QuditShiftAlgebra {
    d: usize,
    generator: CMatrix,
    projectors: Vec<CMatrix>,
    outcomes: Vec<Complex64>,
}

impl QuditShiftAlgebra {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Domain(format!("qudit dimension must be at least 2, got {d}")));
        }
        let mut generator = CMatrix::zeros(d, d);
        for i in 0..d {
            generator[(i, (i + 1) % d)] = ONE;
        }
        let outcomes: Vec<Complex64> = (0..d).map(|j| root_of_unity(j, d)).collect();
        let norm = 1.0 / (d as f64).sqrt();
        let projectors = (0..d)
            .map(|j| {
                let v = DVector::from_fn(d, |k, _| root_of_unity(j * k, d) * norm);
                &v * v.adjoint()
            })
            .collect();
        Ok(Self {
            d,
            generator,
            projectors,
            outcomes,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn generator(&self) -> &CMatrix {
        &self.generator
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    /// m_0 = 1, m_1, …, m_{d−1}
    pub fn outcomes(&self) -> &[Complex64] {
        &self.outcomes
    }

    /// S_k = g^k
    pub fn shift(&self, k: usize) -> CMatrix {
        let mut s = CMatrix::identity(self.d, self.d);
        for _ in 0..(k % self.d) {
            s = &s * &self.generator;
        }
        s
    }

    /// Σ_i m_i^k P_i
    pub fn shift_from_projectors(&self, k: usize) -> CMatrix {
        let mut s = CMatrix::zeros(self.d, self.d);
        for (m, p) in self.outcomes.iter().zip(&self.projectors) {
            s += p * m.powu(k as u32);
        }
        s
    }

    /// Largest violation among g^d = 𝟙, g = Σ m_i P_i, Σ P_i = 𝟙, P_i P_j = δ_ij P_i,
    /// 1 + Σ_{j≥1} m_j = 0 and |m_j| = 1.
    pub fn invariant_error(&self) -> f64 {
        let d = self.d;
        let id = CMatrix::identity(d, d);
        let mut err = max_abs_diff(&self.shift(d), &id);
        let mut g_pow_d = id.clone();
        for _ in 0..d {
            g_pow_d = &g_pow_d * &self.generator;
        }
        err = err.max(max_abs_diff(&g_pow_d, &id));
        err = err.max(max_abs_diff(&self.shift_from_projectors(1), &self.generator));
        let sum = self.projectors.iter().fold(CMatrix::zeros(d, d), |acc, p| acc + p);
        err = err.max(max_abs_diff(&sum, &id));
        for (i, p) in self.projectors.iter().enumerate() {
            for (j, q) in self.projectors.iter().enumerate() {
                let expected = if i == j { p.clone() } else { CMatrix::zeros(d, d) };
                err = err.max(max_abs_diff(&(p * q), &expected));
            }
        }
        let total: Complex64 = self.outcomes.iter().sum();
        err = err.max(total.norm());
        for m in &self.outcomes {
            err = err.max((m.norm() - 1.0).abs());
        }
        err
    }

    pub fn outcomes_closed(&self) -> bool {
        alphabet_closed(&self.outcomes)
    }

    /// Whether {m_j^k}_{k=0..d−1} is the full outcome set for every j ≠ 0.
    pub fn powers_generate_all(&self) -> bool {
        (1..self.d).all(|j| {
            let mut hit = vec![false; self.d];
            for k in 0..self.d {
                hit[(j * k) % self.d] = true;
            }
            hit.iter().all(|h| *h)
        })
    }

    /// c_ij = Σ_{k=0}^{d−1} (m_i m̄_j)^k
    pub fn residual_coefficient(&self, i: usize, j: usize) -> Complex64 {
        let z = self.outcomes[i] * self.outcomes[j].conj();
        (0..self.d).map(|k| z.powu(k as u32)).sum()
    }

    /// max over d-th roots z ≠ 1 of |Σ_{k=0}^{d−1} z^k|.
    pub fn geometric_series_error(&self) -> f64 {
        self.outcomes[1..]
            .iter()
            .map(|z| (0..self.d).map(|k| z.powu(k as u32)).sum::<Complex64>().norm())
            .fold(0.0, f64::max)
    }

    fn extend(&self, op: &CMatrix, env_dim: usize) -> CMatrix {
        op.kronecker(&CMatrix::identity(env_dim, env_dim))
    }

    /// 𝒮_k ⊗ 𝟙_E as a map.
    pub fn shift_map(&self, k: usize, env_dim: usize) -> LinearMap {
        LinearMap::conjugation(&self.extend(&self.shift(k), env_dim))
    }

    /// 𝒫_i ⊗ 𝟙_E as a map.
    pub fn projection_map(&self, i: usize, env_dim: usize) -> LinearMap {
        LinearMap::conjugation(&self.extend(&self.projectors[i], env_dim))
    }

    /// 𝒬_ij[ρ] = P_i ρ P_j (extended by 𝟙_E).
    pub fn cross_map(&self, i: usize, j: usize, env_dim: usize) -> LinearMap {
        LinearMap::sandwich(
            &self.extend(&self.projectors[i], env_dim),
            &self.extend(&self.projectors[j], env_dim),
        )
    }
}

fn root_of_unity(power: usize, d: usize) -> Complex64 {
    let reduced = power % d;
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * reduced as f64 / d as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualTerm {
    pub i: usize,
    pub j: usize,
    pub coefficient: Complex64,
}

#[derive(Debug, Clone)]
pub struct QuditExpansion {
    /// ℐ + Σ_{k=1}^{d−1} 𝒮_k
    pub lhs: LinearMap,
    /// d Σ_i 𝒫_i
    pub measurement_part: LinearMap,
    /// c_ij for every i ≠ j, row-major.
    pub residual_terms: Vec<ResidualTerm>,
    /// Σ_{i≠j} c_ij 𝒬_ij
    pub residual_map: LinearMap,
}

impl QuditExpansion {
    /// |lhs − measurement_part − Σ c_ij 𝒬_ij|
    pub fn decomposition_error(&self) -> f64 {
        let rebuilt = &self.measurement_part + &self.residual_map;
        self.lhs.max_abs_diff(&rebuilt).expect("same dimension")
    }

    /// Pairs whose coefficient is non-zero beyond 1e−12.
    pub fn nonzero_residuals(&self) -> Vec<ResidualTerm> {
        self.residual_terms
            .iter()
            .copied()
            .filter(|t| t.coefficient.norm() > ALGEBRA_TOL)
            .collect()
    }
}

pub fn qudit_expansion(alg: &QuditShiftAlgebra, env_dim: usize) -> Result<QuditExpansion> {
    if env_dim == 0 {
        return Err(Error::Domain("environment dimension must be positive".into()));
    }
    let d = alg.d();
    let dim = d * env_dim;
    let mut lhs = LinearMap::identity(dim);
    for k in 1..d {
        lhs = &lhs + &alg.shift_map(k, env_dim);
    }
    let mut measurement_part = LinearMap::zero(dim);
    for i in 0..d {
        measurement_part = &measurement_part + &alg.projection_map(i, env_dim);
    }
    let measurement_part = measurement_part.scaled(Complex64::new(d as f64, 0.0));
    let mut residual_terms = Vec::new();
    let mut residual_map = LinearMap::zero(dim);
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let c = alg.residual_coefficient(i, j);
            residual_terms.push(ResidualTerm { i, j, coefficient: c });
            residual_map = &residual_map + &alg.cross_map(i, j, env_dim).scaled(c);
        }
    }
    Ok(QuditExpansion {
        lhs,
        measurement_part,
        residual_terms,
        residual_map,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuditIdentityReport {
    pub d: usize,
    pub env_dim: usize,
    /// Every c_ij with i ≠ j vanishes.
    pub residuals_vanish: bool,
    /// |ℐ + Σ 𝒮_k − d Σ 𝒫_i|
    pub residual_norm: f64,
    /// |Σ c_ij 𝒬_ij| from the expansion.
    pub expected_residual_norm: f64,
    /// The measured residual map against Σ c_ij 𝒬_ij.
    pub consistency: IdentityCheck,
    /// Both sides applied to a seeded random state.
    pub state_error: f64,
    /// Asserted only when the residuals vanish.
    pub identity: Option<IdentityCheck>,
}

impl QuditIdentityReport {
    pub fn passed(&self) -> bool {
        self.consistency.passed && self.identity.as_ref().is_none_or(|c| c.passed)
    }
}

/// ℐ + Σ_{k=1}^{d−1} 𝒮_k = d Σ_i 𝒫_i on a d × env_dim space.
pub fn qudit_prime_identity_check(
    alg: &QuditShiftAlgebra,
    env_dim: usize,
    seed: u64,
) -> Result<QuditIdentityReport> {
    let expansion = qudit_expansion(alg, env_dim)?;
    let difference = &expansion.lhs - &expansion.measurement_part;
    let residual_norm = difference.max_abs();
    let residuals_vanish = expansion.nonzero_residuals().is_empty();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = random_density(&mut rng, alg.d() * env_dim);
    let state_error = max_abs_diff(
        &expansion.lhs.apply(&rho)?,
        &expansion.measurement_part.apply(&rho)?,
    );
    Ok(QuditIdentityReport {
        d: alg.d(),
        env_dim,
        residuals_vanish,
        residual_norm,
        expected_residual_norm: expansion.residual_map.max_abs(),
        consistency: IdentityCheck::new(
            "residual consistency",
            difference.max_abs_diff(&expansion.residual_map)?,
            ALGEBRA_TOL,
        ),
        state_error,
        identity: residuals_vanish
            .then(|| IdentityCheck::new("shift sum", residual_norm.max(state_error), CHAIN_TOL)),
    })
}

/// Frobenius norm of the least-squares residual of 𝒮_k projected onto span{ℐ, 𝒫_0, …}.
pub fn single_shift_span_residual(alg: &QuditShiftAlgebra, k: usize) -> Result<f64> {
    let d = alg.d();
    let target = alg.shift_map(k, 1);
    let mut basis = vec![LinearMap::identity(d)];
    basis.extend((0..d).map(|i| alg.projection_map(i, 1)));
    let rows = d * d * d * d;
    let a = CMatrix::from_fn(rows, basis.len(), |r, c| basis[c].matrix().as_slice()[r]);
    let b = DVector::from_column_slice(target.matrix().as_slice());
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(&b, 1e-12)
        .map_err(|e| Error::Invariant(format!("least squares failed: {e}")))?;
    let residual = &a * x - b;
    Ok(residual.norm())
}
