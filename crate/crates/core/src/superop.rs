//! Linear maps on operators, represented as matrices on column-stacked vectorizations.
//!
//! With vec(X) stacking the columns of X, vec(A X B) = (Bᵀ ⊗ A) vec(X), so the
//! conjugation X ↦ U X U† has matrix Ū ⊗ U. Maps here need not be completely positive
//! or trace preserving: signed combinations of operations are first-class.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    max_abs, max_abs_diff, pauli, projector, tensor, Axis, CMatrix, DenseOperator, HilbertDims,
    ALGEBRA_TOL, ONE, PSD_TOL,
};
use crate::outcome::Outcome;

/// Informational properties recorded by the constructors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MapTags {
    pub completely_positive: bool,
    pub trace_preserving: bool,
    pub unital: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    dim: usize,
    matrix: CMatrix,
    tags: MapTags,
}

impl LinearMap {
    pub fn from_matrix(dim: usize, matrix: CMatrix) -> Result<Self> {
        let n = dim * dim;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Shape(format!(
                "map on dimension {dim} needs a {n}x{n} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            dim,
            matrix,
            tags: MapTags::default(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: CMatrix::identity(dim * dim, dim * dim),
            tags: MapTags {
                completely_positive: true,
                trace_preserving: true,
                unital: true,
            },
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            matrix: CMatrix::zeros(dim * dim, dim * dim),
            tags: MapTags::default(),
        }
    }

    /// ρ ↦ K ρ K†
    pub fn conjugation(k: &CMatrix) -> Self {
        let dim = k.nrows();
        let unitary = DenseOperator::new(k.clone())
            .map(|op| op.is_unitary())
            .unwrap_or(false);
        Self {
            dim,
            matrix: k.conjugate().kronecker(k),
            tags: MapTags {
                completely_positive: true,
                trace_preserving: unitary,
                unital: unitary,
            },
        }
    }

    /// ρ ↦ Σ_j K_j ρ K_j†
    pub fn kraus(ops: &[CMatrix]) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::Domain("at least one Kraus operator is required".into()))?;
        let dim = first.nrows();
        let mut total = Self::zero(dim);
        let mut completeness = CMatrix::zeros(dim, dim);
        for k in ops {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::Shape("Kraus operators must share one square shape".into()));
            }
            total.matrix += k.conjugate().kronecker(k);
            completeness += k.adjoint() * k;
        }
        total.tags.completely_positive = true;
        total.tags.trace_preserving =
            max_abs_diff(&completeness, &CMatrix::identity(dim, dim)) <= ALGEBRA_TOL;
        Ok(total)
    }

    /// ρ ↦ A ρ
    pub fn left_multiplication(a: &CMatrix) -> Self {
        let dim = a.nrows();
        Self {
            dim,
            matrix: CMatrix::identity(dim, dim).kronecker(a),
            tags: MapTags::default(),
        }
    }

    /// ρ ↦ ρ B
    pub fn right_multiplication(b: &CMatrix) -> Self {
        let dim = b.nrows();
        Self {
            dim,
            matrix: b.transpose().kronecker(&CMatrix::identity(dim, dim)),
            tags: MapTags::default(),
        }
    }

    /// ρ ↦ A ρ B
    pub fn sandwich(a: &CMatrix, b: &CMatrix) -> Self {
        Self {
            dim: a.nrows(),
            matrix: b.transpose().kronecker(a),
            tags: MapTags::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn tags(&self) -> MapTags {
        self.tags
    }

    fn ensure_same_dim(&self, other: &LinearMap) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Shape(format!(
                "maps act on dimensions {} and {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    /// `outer ∘ inner`: `inner` acts first.
    pub fn compose(outer: &LinearMap, inner: &LinearMap) -> Result<LinearMap> {
        outer.ensure_same_dim(inner)?;
        let tags = MapTags {
            completely_positive: outer.tags.completely_positive && inner.tags.completely_positive,
            trace_preserving: outer.tags.trace_preserving && inner.tags.trace_preserving,
            unital: outer.tags.unital && inner.tags.unital,
        };
        Ok(LinearMap {
            dim: outer.dim,
            matrix: &outer.matrix * &inner.matrix,
            tags,
        })
    }

    /// Composes a chain given in application order (first element acts first).
    pub fn chain(maps: &[&LinearMap]) -> Result<LinearMap> {
        let (first, rest) = maps
            .split_first()
            .ok_or_else(|| Error::Domain("empty composition chain".into()))?;
        rest.iter()
            .try_fold((*first).clone(), |acc, next| LinearMap::compose(next, &acc))
    }

    /// Σ c_j L_j, exact and signed.
    pub fn lincomb(terms: &[(Complex64, &LinearMap)]) -> Result<LinearMap> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::Domain("empty linear combination".into()))?;
        let mut acc = LinearMap::zero(first.dim);
        for (c, map) in terms {
            acc.ensure_same_dim(map)?;
            acc.matrix += map.matrix.map(|z| z * c);
        }
        Ok(acc)
    }

    pub fn scaled(&self, c: Complex64) -> LinearMap {
        LinearMap {
            dim: self.dim,
            matrix: self.matrix.map(|z| z * c),
            tags: MapTags::default(),
        }
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::Shape(format!(
                "map on dimension {} applied to a {}x{} operator",
                self.dim,
                rho.nrows(),
                rho.ncols()
            )));
        }
        let v = nalgebra::DVector::from_column_slice(rho.as_slice());
        let out = &self.matrix * v;
        Ok(CMatrix::from_column_slice(self.dim, self.dim, out.as_slice()))
    }

    pub fn max_abs_diff(&self, other: &LinearMap) -> Result<f64> {
        self.ensure_same_dim(other)?;
        Ok(max_abs_diff(&self.matrix, &other.matrix))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// tr L[ρ] = tr ρ for all ρ.
    pub fn is_trace_preserving(&self) -> bool {
        let d = self.dim;
        // row of the vectorized trace functional: vec(𝟙)ᵀ
        (0..d * d).all(|col| {
            let s: Complex64 = (0..d).map(|i| self.matrix[(i * d + i, col)]).sum();
            let expected = if col % (d + 1) == 0 { ONE } else { Complex64::new(0.0, 0.0) };
            (s - expected).norm() <= ALGEBRA_TOL * (d as f64)
        })
    }

    /// L[𝟙] = 𝟙
    pub fn is_unital(&self) -> bool {
        let id = CMatrix::identity(self.dim, self.dim);
        self.apply(&id)
            .map(|out| max_abs_diff(&out, &id) <= ALGEBRA_TOL * (self.dim as f64))
            .unwrap_or(false)
    }

    /// Choi matrix Σ_ij |i⟩⟨j| ⊗ L(|i⟩⟨j|) is positive semidefinite.
    pub fn is_completely_positive(&self) -> bool {
        let d = self.dim;
        let mut choi = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let mut e = CMatrix::zeros(d, d);
                e[(i, j)] = ONE;
                let out = self.apply(&e).expect("dimension checked");
                choi.view_mut((i * d, j * d), (d, d)).copy_from(&out);
            }
        }
        if (&choi - choi.adjoint()).norm() > ALGEBRA_TOL * choi.norm().max(1.0) {
            return false;
        }
        let herm = (&choi + choi.adjoint()).scale(0.5);
        herm.symmetric_eigenvalues().iter().all(|&l| l >= -PSD_TOL)
    }

    /// Checks each tag set by a constructor against the map itself.
    pub fn tags_hold(&self) -> bool {
        (!self.tags.completely_positive || self.is_completely_positive())
            && (!self.tags.trace_preserving || self.is_trace_preserving())
            && (!self.tags.unital || self.is_unital())
    }
}

impl Add for &LinearMap {
    type Output = LinearMap;

    fn add(self, rhs: &LinearMap) -> LinearMap {
        assert_eq!(self.dim, rhs.dim, "adding maps on different dimensions");
        LinearMap {
            dim: self.dim,
            matrix: &self.matrix + &rhs.matrix,
            tags: MapTags::default(),
        }
    }
}

impl Sub for &LinearMap {
    type Output = LinearMap;

    fn sub(self, rhs: &LinearMap) -> LinearMap {
        assert_eq!(self.dim, rhs.dim, "subtracting maps on different dimensions");
        LinearMap {
            dim: self.dim,
            matrix: &self.matrix - &rhs.matrix,
            tags: MapTags::default(),
        }
    }
}

/// `a * b` is `a ∘ b`.
impl Mul for &LinearMap {
    type Output = LinearMap;

    fn mul(self, rhs: &LinearMap) -> LinearMap {
        LinearMap::compose(self, rhs).expect("composing maps on different dimensions")
    }
}

fn qubit_dims_check(dims: HilbertDims) -> Result<()> {
    if dims.system_dim() != 2 {
        return Err(Error::Domain(format!(
            "qubit operation requested on a system of dimension {}",
            dims.system_dim()
        )));
    }
    Ok(())
}

/// σ_axis ⊗ 𝟙_E on the full space.
pub fn pulse_operator(dims: HilbertDims, axis: Axis) -> Result<CMatrix> {
    qubit_dims_check(dims)?;
    Ok(tensor(&pauli(axis), &DenseOperator::identity(dims.env_dim())).into_matrix())
}

/// P_m ⊗ 𝟙_E on the full space.
pub fn projector_operator(dims: HilbertDims, outcome: Outcome) -> Result<CMatrix> {
    qubit_dims_check(dims)?;
    let p = projector(outcome.axis(), outcome.eigen_sign())?;
    Ok(tensor(&p, &DenseOperator::identity(dims.env_dim())).into_matrix())
}

pub fn conjugation_map(u: &CMatrix) -> LinearMap {
    LinearMap::conjugation(u)
}

/// 𝒳 (or 𝒴): conjugation by the π pulse σ_axis ⊗ 𝟙_E.
pub fn pulse_map(dims: HilbertDims, axis: Axis) -> Result<LinearMap> {
    Ok(LinearMap::conjugation(&pulse_operator(dims, axis)?))
}

/// 𝒫_m[ρ] = (P_m ⊗ 𝟙) ρ (P_m ⊗ 𝟙). X outcomes are ±1, Y outcomes ±i.
pub fn projection_map(dims: HilbertDims, outcome: Outcome) -> Result<LinearMap> {
    Ok(LinearMap::conjugation(&projector_operator(dims, outcome)?))
}

/// 𝒟_axis[ρ] = (σ ⊗ 𝟙) ρ + ρ (σ ⊗ 𝟙).
pub fn anticommutator_map(dims: HilbertDims, axis: Axis) -> Result<LinearMap> {
    if axis == Axis::Z {
        return Err(Error::Domain("anticommutator maps are defined for x and y".into()));
    }
    let s = pulse_operator(dims, axis)?;
    Ok(&LinearMap::left_multiplication(&s) + &LinearMap::right_multiplication(&s))
}

/// 2(𝒫₊ + 𝒫₋) − ℐ along `axis`.
pub fn pulse_from_projections(dims: HilbertDims, axis: Axis) -> Result<LinearMap> {
    let [a, b] = Outcome::for_axis(axis)?;
    let pa = projection_map(dims, a)?;
    let pb = projection_map(dims, b)?;
    let id = LinearMap::identity(dims.total());
    let two = Complex64::new(2.0, 0.0);
    LinearMap::lincomb(&[(two, &pa), (two, &pb), (-ONE, &id)])
}

/// ¼(ℐ + 𝒳 + m 𝒟_X) for X, ¼(ℐ + 𝒴 − i m 𝒟_Y) for Y.
pub fn projection_from_pulse(dims: HilbertDims, outcome: Outcome) -> Result<LinearMap> {
    let axis = outcome.axis();
    let id = LinearMap::identity(dims.total());
    let pulse = pulse_map(dims, axis)?;
    let anti = anticommutator_map(dims, axis)?;
    let m = outcome.value();
    let coeff = match axis {
        Axis::X => m,
        _ => -crate::linalg::I * m,
    };
    let quarter = Complex64::new(0.25, 0.0);
    LinearMap::lincomb(&[(quarter, &id), (quarter, &pulse), (quarter * coeff, &anti)])
}
