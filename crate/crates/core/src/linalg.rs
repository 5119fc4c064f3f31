//! Dense complex linear algebra on small composite Hilbert spaces.
//!
//! Every composite operator is ordered system ⊗ environment: the system index
//! is the slow one in a Kronecker product.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Tolerance for algebraic identities between directly constructed objects.
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Tolerance for identities that chain many products (protocol-level checks).
pub const CHAIN_TOL: f64 = 1e-10;
/// Lowest eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dimensions of a system ⊗ environment Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertDims {
    system_dim: usize,
    env_dim: usize,
}

impl HilbertDims {
    pub fn new(system_dim: usize, env_dim: usize) -> Result<Self> {
        if system_dim == 0 || env_dim == 0 {
            return Err(Error::Domain(format!(
                "dimensions must be positive, got system {system_dim}, env {env_dim}"
            )));
        }
        Ok(Self {
            system_dim,
            env_dim,
        })
    }

    /// A qubit coupled to an environment of dimension `env_dim`.
    pub fn qubit(env_dim: usize) -> Result<Self> {
        Self::new(2, env_dim)
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn env_dim(&self) -> usize {
        self.env_dim
    }

    pub fn total(&self) -> usize {
        self.system_dim * self.env_dim
    }
}

/// Coordinate axes of the qubit Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn label(&self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// A square complex operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: CMatrix,
}

impl DenseOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

    /// Builds an operator and checks that it is Hermitian.
    pub fn hermitian(matrix: CMatrix) -> Result<Self> {
        let op = Self::new(matrix)?;
        if !op.is_hermitian() {
            return Err(Error::Invariant("operator is not Hermitian".into()));
        }
        Ok(op)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(dim, dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            matrix: CMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    Complex64::new(diag[i], 0.0)
                } else {
                    ZERO
                }
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.scale(factor),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// ‖A − A†‖_F ≤ 1e−12·‖A‖_F
    pub fn is_hermitian(&self) -> bool {
        let scale = self.matrix.norm().max(f64::MIN_POSITIVE);
        (&self.matrix - self.matrix.adjoint()).norm() <= ALGEBRA_TOL * scale
    }

    /// ‖A†A − 𝟙‖_F ≤ 1e−12
    pub fn is_unitary(&self) -> bool {
        let n = self.dim();
        (self.matrix.adjoint() * &self.matrix - CMatrix::identity(n, n)).norm() <= ALGEBRA_TOL
    }

    /// ‖P² − P‖_F ≤ 1e−12
    pub fn is_projector(&self) -> bool {
        (&self.matrix * &self.matrix - &self.matrix).norm() <= ALGEBRA_TOL
    }
}

impl std::ops::Mul for &DenseOperator {
    type Output = DenseOperator;

    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator {
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

/// Whether a state carries unit trace or is an unnormalized measurement branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TracePolicy {
    Normalized,
    UnnormalizedBranch,
}

/// A density operator on a composite (or single-factor) space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateOperator {
    dims: HilbertDims,
    matrix: CMatrix,
    policy: TracePolicy,
}

impl StateOperator {
    pub fn new(dims: HilbertDims, matrix: CMatrix, policy: TracePolicy) -> Result<Self> {
        let n = dims.total();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Shape(format!(
                "state must be {n}x{n}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = matrix.norm().max(1.0);
        if (&matrix - matrix.adjoint()).norm() > ALGEBRA_TOL * scale {
            return Err(Error::Invariant("state is not Hermitian".into()));
        }
        let hermitian = (&matrix + matrix.adjoint()).scale(0.5);
        let min_eig = hermitian
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(Error::Invariant(format!(
                "state is not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        let tr = matrix.trace();
        let trace_ok = match policy {
            TracePolicy::Normalized => (tr - ONE).norm() <= ALGEBRA_TOL * (n as f64).max(1.0),
            TracePolicy::UnnormalizedBranch => {
                tr.im.abs() <= ALGEBRA_TOL
                    && tr.re >= -ALGEBRA_TOL
                    && tr.re <= 1.0 + ALGEBRA_TOL
            }
        };
        if !trace_ok {
            return Err(Error::Invariant(format!(
                "state trace {tr} violates {policy:?} policy"
            )));
        }
        Ok(Self {
            dims,
            matrix,
            policy,
        })
    }

    /// A normalized state on a single factor of dimension `dim`.
    pub fn single(matrix: CMatrix) -> Result<Self> {
        let dims = HilbertDims::new(matrix.nrows(), 1)?;
        Self::new(dims, matrix, TracePolicy::Normalized)
    }

    pub fn maximally_mixed(dims: HilbertDims) -> Self {
        let n = dims.total();
        Self {
            dims,
            matrix: CMatrix::identity(n, n).scale(1.0 / n as f64),
            policy: TracePolicy::Normalized,
        }
    }

    pub fn dims(&self) -> HilbertDims {
        self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn policy(&self) -> TracePolicy {
        self.policy
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }
}

/// Kronecker product, first factor slow.
pub fn tensor(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    DenseOperator {
        matrix: a.matrix.kronecker(&b.matrix),
    }
}

/// `A ⊗ ρ_E` for a qubit-side operator and an environment state.
pub fn product_state(system: &DenseOperator, env: &StateOperator) -> Result<StateOperator> {
    let dims = HilbertDims::new(system.dim(), env.dims().total())?;
    StateOperator::new(
        dims,
        system.matrix.kronecker(env.matrix()),
        TracePolicy::Normalized,
    )
}

/// Traces out the environment factor of a composite matrix.
pub fn partial_trace_env_matrix(matrix: &CMatrix, dims: HilbertDims) -> Result<CMatrix> {
    let (ds, de) = (dims.system_dim(), dims.env_dim());
    if matrix.nrows() != ds * de || matrix.ncols() != ds * de {
        return Err(Error::Shape(format!(
            "partial trace expects {}x{}, got {}x{}",
            ds * de,
            ds * de,
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    Ok(CMatrix::from_fn(ds, ds, |i, j| {
        (0..de).map(|e| matrix[(i * de + e, j * de + e)]).sum()
    }))
}

/// Traces out the system factor of a composite matrix.
pub fn partial_trace_system_matrix(matrix: &CMatrix, dims: HilbertDims) -> Result<CMatrix> {
    let (ds, de) = (dims.system_dim(), dims.env_dim());
    if matrix.nrows() != ds * de || matrix.ncols() != ds * de {
        return Err(Error::Shape(format!(
            "partial trace expects {}x{}, got {}x{}",
            ds * de,
            ds * de,
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    Ok(CMatrix::from_fn(de, de, |a, b| {
        (0..ds).map(|s| matrix[(s * de + a, s * de + b)]).sum()
    }))
}

pub fn partial_trace_env(rho: &StateOperator) -> Result<StateOperator> {
    let reduced = partial_trace_env_matrix(rho.matrix(), rho.dims())?;
    let dims = HilbertDims::new(rho.dims().system_dim(), 1)?;
    StateOperator::new(dims, reduced, rho.policy())
}

/// Pauli matrix in the σ_z eigenbasis (|↑⟩ = |0⟩ first).
pub fn pauli(axis: Axis) -> DenseOperator {
    let m = match axis {
        Axis::X => [ZERO, ONE, ONE, ZERO],
        Axis::Y => [ZERO, -I, I, ZERO],
        Axis::Z => [ONE, ZERO, ZERO, -ONE],
    };
    DenseOperator {
        matrix: CMatrix::from_row_slice(2, 2, &m),
    }
}

/// (𝟙 + m σ_axis)/2 for a real sign `m` = ±1.
pub fn projector(axis: Axis, sign: i8) -> Result<DenseOperator> {
    if axis == Axis::Z {
        return Err(Error::Domain("projectors are defined for x and y only".into()));
    }
    if sign != 1 && sign != -1 {
        return Err(Error::Domain(format!("projector sign must be ±1, got {sign}")));
    }
    let p = (CMatrix::identity(2, 2) + pauli(axis).matrix.scale(sign as f64)).scale(0.5);
    Ok(DenseOperator { matrix: p })
}

/// Largest absolute entry of `a − b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff on mismatched shapes");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// exp(−i H τ) for Hermitian H via its eigendecomposition.
pub fn hermitian_exp(h: &CMatrix, tau: f64) -> Result<CMatrix> {
    let scale = h.norm().max(f64::MIN_POSITIVE);
    if (h - h.adjoint()).norm() > ALGEBRA_TOL * scale.max(1.0) {
        return Err(Error::Invariant("generator is not Hermitian".into()));
    }
    let n = h.nrows();
    if tau == 0.0 {
        return Ok(CMatrix::identity(n, n));
    }
    let herm = (h + h.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        eig.eigenvalues
            .iter()
            .map(|&lambda| Complex64::from_polar(1.0, -lambda * tau)),
    ));
    let q = &eig.eigenvectors;
    Ok(q * phases * q.adjoint())
}

/// Hermitian matrix with Gaussian real and imaginary parts, scaled to unit spectral norm.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let h = (&g + g.adjoint()).scale(0.5);
    let spectral = h
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    if spectral > 0.0 {
        h.scale(1.0 / spectral)
    } else {
        h
    }
}

/// Full-rank density matrix G G† / tr(G G†) from a complex Ginibre draw.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    let rho = rho.scale(1.0 / tr);
    // exact Hermiticity for downstream checks
    (&rho + rho.adjoint()).scale(0.5)
}

/// Unitary exp(−i H) for a random unit-norm Hermitian H.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let h = random_hermitian(rng, dim);
    hermitian_exp(&h, 1.0).expect("random_hermitian output is Hermitian")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn tensor_with_scalar_environment_is_identity_map() {
        let sx = pauli(Axis::X);
        let t = tensor(&sx, &DenseOperator::identity(1));
        assert_eq!(t, sx);
    }

    #[test]
    fn tensor_of_identities() {
        let t = tensor(&DenseOperator::identity(2), &DenseOperator::identity(2));
        assert_eq!(t, DenseOperator::identity(4));
    }

    #[test]
    fn tensor_sigma_z_with_diagonal() {
        let (v1, v2) = (0.3, -1.7);
        let t = tensor(&pauli(Axis::Z), &DenseOperator::from_real_diagonal(&[v1, v2]));
        let expected = DenseOperator::from_real_diagonal(&[v1, v2, -v1, -v2]);
        assert_eq!(max_abs_diff(t.matrix(), expected.matrix()), 0.0);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let env = StateOperator::single(random_density(&mut rng, 3)).unwrap();
        let plus = projector(Axis::X, 1).unwrap();
        let rho = product_state(&plus, &env).unwrap();
        let reduced = partial_trace_env(&rho).unwrap();
        assert!(max_abs_diff(reduced.matrix(), plus.matrix()) < 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = nalgebra::DVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)]);
        let rho = &psi * psi.adjoint();
        let state = StateOperator::new(
            HilbertDims::new(2, 2).unwrap(),
            rho,
            TracePolicy::Normalized,
        )
        .unwrap();
        let reduced = partial_trace_env(&state).unwrap();
        let half = CMatrix::identity(2, 2).scale(0.5);
        assert!(max_abs_diff(reduced.matrix(), &half) < 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace_against_block_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dims = HilbertDims::new(2, 4).unwrap();
        let rho = random_density(&mut rng, 8);
        let reduced = partial_trace_env_matrix(&rho, dims).unwrap();
        // oracle: sum the diagonals of the two diagonal 4x4 blocks
        let block_sum: Complex64 = (0..8).map(|i| rho[(i, i)]).sum();
        assert!((reduced.trace() - block_sum).norm() < 1e-12);
        assert!((reduced.trace() - ONE).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_shape() {
        let dims = HilbertDims::new(2, 3).unwrap();
        let err = partial_trace_env_matrix(&CMatrix::identity(4, 4), dims).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn projector_completeness_and_eigen_property() {
        let p = projector(Axis::X, 1).unwrap();
        let m = projector(Axis::X, -1).unwrap();
        assert!(max_abs_diff(&(p.matrix() + m.matrix()), &CMatrix::identity(2, 2)) < 1e-15);
        let px = &p * &pauli(Axis::X);
        assert!(max_abs_diff(px.matrix(), p.matrix()) < 1e-15);
        assert!(p.is_projector() && p.is_hermitian());
    }

    #[test]
    fn pauli_product() {
        let xy = &pauli(Axis::X) * &pauli(Axis::Y);
        let iz = pauli(Axis::Z).matrix().map(|z| z * I);
        assert!(max_abs_diff(xy.matrix(), &iz) < 1e-15);
    }

    #[test]
    fn projector_rejects_z_axis() {
        assert!(projector(Axis::Z, 1).is_err());
        assert!(projector(Axis::X, 0).is_err());
    }

    #[test]
    fn state_validation() {
        let dims = HilbertDims::qubit(1).unwrap();
        let bad = CMatrix::from_row_slice(2, 2, &[c(1.5), ZERO, ZERO, c(-0.5)]);
        assert!(StateOperator::new(dims, bad, TracePolicy::Normalized).is_err());
        let half = CMatrix::from_row_slice(2, 2, &[c(0.5), ZERO, ZERO, ZERO]);
        assert!(StateOperator::new(dims, half.clone(), TracePolicy::Normalized).is_err());
        assert!(StateOperator::new(dims, half, TracePolicy::UnnormalizedBranch).is_ok());
    }

    #[test]
    fn hermitian_exp_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(hermitian_exp(&m, 1.0), Err(Error::Invariant(_))));
    }

    #[test]
    fn random_draws_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dim in [1, 2, 5] {
            let h = DenseOperator::new(random_hermitian(&mut rng, dim)).unwrap();
            assert!(h.is_hermitian());
            let rho = random_density(&mut rng, dim);
            assert!(StateOperator::single(rho).is_ok());
            let u = DenseOperator::new(random_unitary(&mut rng, dim)).unwrap();
            assert!(u.is_unitary());
        }
    }
}
