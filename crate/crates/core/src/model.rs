//! Qubit ⊗ environment Hamiltonians and their evolution operators.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_exp, max_abs_diff, pauli, random_density, random_hermitian, tensor, Axis, CMatrix,
    DenseOperator, HilbertDims, StateOperator, ALGEBRA_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    General,
    PureDephasing,
}

/// Generator of one evolution segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    /// Full qubit–environment Hamiltonian.
    Composite,
    /// 𝟙_Q ⊗ H_E only (coupling switched off).
    EnvOnly,
}

impl SegmentKind {
    pub fn label(&self) -> &'static str {
        match self {
            SegmentKind::Composite => "composite",
            SegmentKind::EnvOnly => "env_only",
        }
    }
}

impl std::str::FromStr for SegmentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "composite" => Ok(SegmentKind::Composite),
            "env_only" => Ok(SegmentKind::EnvOnly),
            other => Err(Error::Parse(format!("unknown segment kind `{other}`"))),
        }
    }
}

/// Parameters of H = a_z σ_z ⊗ V_z + a_1 𝟙 ⊗ V_1.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingParams {
    pub a_z: f64,
    pub a_1: f64,
    pub v_z: DenseOperator,
    pub v_1: DenseOperator,
}

/// H_C = H_Q ⊗ 𝟙 + 𝟙 ⊗ H_E + Σ_k σ_k ⊗ V_k together with the environment's initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    dims: HilbertDims,
    qubit_hamiltonian: DenseOperator,
    env_hamiltonian: DenseOperator,
    couplings: BTreeMap<Axis, DenseOperator>,
    dephasing: Option<DephasingParams>,
    env_initial: StateOperator,
    seed: u64,
}

impl ModelSpec {
    pub fn new(
        env_dim: usize,
        qubit_hamiltonian: DenseOperator,
        env_hamiltonian: DenseOperator,
        couplings: BTreeMap<Axis, DenseOperator>,
        env_initial: StateOperator,
        seed: u64,
    ) -> Result<Self> {
        let dims = HilbertDims::qubit(env_dim)?;
        if qubit_hamiltonian.dim() != 2 || !qubit_hamiltonian.is_hermitian() {
            return Err(Error::Invariant(
                "qubit Hamiltonian must be a Hermitian 2x2 operator".into(),
            ));
        }
        if env_hamiltonian.dim() != env_dim || !env_hamiltonian.is_hermitian() {
            return Err(Error::Invariant(format!(
                "environment Hamiltonian must be Hermitian {env_dim}x{env_dim}"
            )));
        }
        for (axis, v) in &couplings {
            if v.dim() != env_dim || !v.is_hermitian() {
                return Err(Error::Invariant(format!(
                    "coupling V_{} must be Hermitian {env_dim}x{env_dim}",
                    axis.label()
                )));
            }
        }
        if env_initial.dims().total() != env_dim {
            return Err(Error::Shape(format!(
                "environment state has dimension {}, expected {env_dim}",
                env_initial.dims().total()
            )));
        }
        Ok(Self {
            dims,
            qubit_hamiltonian,
            env_hamiltonian,
            couplings,
            dephasing: None,
            env_initial,
            seed,
        })
    }

    /// H = a_z σ_z ⊗ V_z + a_1 𝟙 ⊗ V_1, stored as H_E = a_1 V_1 and V_z-coupling a_z V_z.
    pub fn pure_dephasing(
        params: DephasingParams,
        env_initial: StateOperator,
        seed: u64,
    ) -> Result<Self> {
        let env_dim = params.v_z.dim();
        if params.v_1.dim() != env_dim {
            return Err(Error::Shape("V_z and V_1 dimensions differ".into()));
        }
        let couplings = BTreeMap::from([(Axis::Z, params.v_z.scale(params.a_z))]);
        let mut model = Self::new(
            env_dim,
            DenseOperator::zeros(2),
            params.v_1.scale(params.a_1),
            couplings,
            env_initial,
            seed,
        )?;
        model.dephasing = Some(params);
        model.check_dephasing_consistency()?;
        Ok(model)
    }

    fn check_dephasing_consistency(&self) -> Result<()> {
        let Some(p) = &self.dephasing else {
            return Ok(());
        };
        let z = tensor(&pauli(Axis::Z), &p.v_z).scale(p.a_z);
        let one = tensor(&DenseOperator::identity(2), &p.v_1).scale(p.a_1);
        let expected = z.matrix() + one.matrix();
        if max_abs_diff(&self.composite_hamiltonian(), &expected) > ALGEBRA_TOL {
            return Err(Error::Invariant(
                "dephasing parameters disagree with the assembled Hamiltonian".into(),
            ));
        }
        Ok(())
    }

    pub fn dims(&self) -> HilbertDims {
        self.dims
    }

    pub fn env_dim(&self) -> usize {
        self.dims.env_dim()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn qubit_hamiltonian(&self) -> &DenseOperator {
        &self.qubit_hamiltonian
    }

    pub fn env_hamiltonian(&self) -> &DenseOperator {
        &self.env_hamiltonian
    }

    pub fn couplings(&self) -> &BTreeMap<Axis, DenseOperator> {
        &self.couplings
    }

    pub fn coupling(&self, axis: Axis) -> Option<&DenseOperator> {
        self.couplings.get(&axis)
    }

    pub fn dephasing(&self) -> Option<&DephasingParams> {
        self.dephasing.as_ref()
    }

    pub fn is_pure_dephasing(&self) -> bool {
        self.dephasing.is_some()
    }

    pub fn env_initial(&self) -> &StateOperator {
        &self.env_initial
    }

    pub fn with_env_initial(mut self, env_initial: StateOperator) -> Result<Self> {
        if env_initial.dims().total() != self.env_dim() {
            return Err(Error::Shape("environment state dimension mismatch".into()));
        }
        self.env_initial = env_initial;
        Ok(self)
    }

    /// H_C on the full space.
    pub fn composite_hamiltonian(&self) -> CMatrix {
        let de = self.env_dim();
        let id_e = DenseOperator::identity(de);
        let mut h = tensor(&self.qubit_hamiltonian, &id_e).into_matrix()
            + tensor(&DenseOperator::identity(2), &self.env_hamiltonian).into_matrix();
        for (axis, v) in &self.couplings {
            h += tensor(&pauli(*axis), v).into_matrix();
        }
        h
    }

    /// 𝟙_Q ⊗ H_E on the full space.
    pub fn env_only_hamiltonian(&self) -> CMatrix {
        tensor(&DenseOperator::identity(2), &self.env_hamiltonian).into_matrix()
    }

    pub fn hamiltonian(&self, kind: SegmentKind) -> CMatrix {
        match kind {
            SegmentKind::Composite => self.composite_hamiltonian(),
            SegmentKind::EnvOnly => self.env_only_hamiltonian(),
        }
    }

    /// A model with every Hamiltonian term zero (no dynamics).
    pub fn frozen(env_initial: StateOperator) -> Result<Self> {
        let de = env_initial.dims().total();
        Self::new(
            de,
            DenseOperator::zeros(2),
            DenseOperator::zeros(de),
            BTreeMap::new(),
            env_initial,
            0,
        )
    }
}

/// Deterministic random model for verification sweeps.
///
/// Every Hermitian term is a Gaussian draw normalized to unit spectral norm and the
/// environment starts in a random full-rank state. `PureDephasing` models carry only
/// (a_z, a_1, V_z, V_1).
pub fn random_model(dims: HilbertDims, kind: ModelKind, seed: u64) -> Result<ModelSpec> {
    if dims.system_dim() != 2 {
        return Err(Error::Domain(format!(
            "models are defined for a qubit system, got system_dim {}",
            dims.system_dim()
        )));
    }
    let de = dims.env_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        ModelKind::General => {
            let h_q = DenseOperator::new(random_hermitian(&mut rng, 2))?;
            let h_e = DenseOperator::new(random_hermitian(&mut rng, de))?;
            let mut couplings = BTreeMap::new();
            for axis in [Axis::X, Axis::Y, Axis::Z] {
                couplings.insert(axis, DenseOperator::new(random_hermitian(&mut rng, de))?);
            }
            let rho_e = StateOperator::single(random_density(&mut rng, de))?;
            ModelSpec::new(de, h_q, h_e, couplings, rho_e, seed)
        }
        ModelKind::PureDephasing => {
            let a_z = rng.random_range(0.5..1.5);
            let a_1 = rng.random_range(0.5..1.5);
            let v_z = DenseOperator::new(random_hermitian(&mut rng, de))?;
            let v_1 = DenseOperator::new(random_hermitian(&mut rng, de))?;
            let rho_e = StateOperator::single(random_density(&mut rng, de))?;
            ModelSpec::pure_dephasing(DephasingParams { a_z, a_1, v_z, v_1 }, rho_e, seed)
        }
    }
}

/// exp(−i H τ) on the full space for the chosen segment generator.
pub fn evolution_unitary(model: &ModelSpec, duration: f64, kind: SegmentKind) -> Result<CMatrix> {
    if !duration.is_finite() || duration < 0.0 {
        return Err(Error::Domain(format!(
            "duration must be finite and non-negative, got {duration}"
        )));
    }
    hermitian_exp(&model.hamiltonian(kind), duration)
}

/// Scalar dephasing model with H = a_z v σ_z + a_1 w 𝟙 on a one-dimensional environment.
pub fn scalar_dephasing(a_z: f64, v: f64, a_1: f64, w: f64) -> Result<ModelSpec> {
    let scalar = |x: f64| DenseOperator::new(CMatrix::from_element(1, 1, Complex64::new(x, 0.0)));
    let rho_e = StateOperator::single(CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)))?;
    ModelSpec::pure_dephasing(
        DephasingParams {
            a_z,
            a_1,
            v_z: scalar(v)?,
            v_1: scalar(w)?,
        },
        rho_e,
        0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CHAIN_TOL;

    #[test]
    fn random_model_is_deterministic() {
        let dims = HilbertDims::qubit(3).unwrap();
        for kind in [ModelKind::General, ModelKind::PureDephasing] {
            let a = random_model(dims, kind, 42).unwrap();
            let b = random_model(dims, kind, 42).unwrap();
            assert_eq!(a, b);
            let c = random_model(dims, kind, 43).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn pure_dephasing_has_no_transverse_coupling() {
        let m = random_model(HilbertDims::qubit(2).unwrap(), ModelKind::PureDephasing, 1).unwrap();
        assert!(m.coupling(Axis::X).is_none());
        assert!(m.coupling(Axis::Y).is_none());
        assert!(m.is_pure_dephasing());
    }

    #[test]
    fn scalar_environment_gives_scalar_operators() {
        let m = random_model(HilbertDims::qubit(1).unwrap(), ModelKind::PureDephasing, 9).unwrap();
        let p = m.dephasing().unwrap();
        assert_eq!(p.v_z.dim(), 1);
        assert_eq!(p.v_1.dim(), 1);
    }

    #[test]
    fn non_qubit_system_rejected() {
        assert!(random_model(HilbertDims::new(3, 1).unwrap(), ModelKind::General, 0).is_err());
    }

    #[test]
    fn zero_duration_is_identity() {
        let m = random_model(HilbertDims::qubit(2).unwrap(), ModelKind::General, 2).unwrap();
        let u = evolution_unitary(&m, 0.0, SegmentKind::Composite).unwrap();
        assert_eq!(u, CMatrix::identity(4, 4));
    }

    #[test]
    fn negative_duration_rejected() {
        let m = random_model(HilbertDims::qubit(1).unwrap(), ModelKind::General, 2).unwrap();
        assert!(evolution_unitary(&m, -1.0, SegmentKind::Composite).is_err());
    }

    #[test]
    fn scalar_dephasing_precession_matches_closed_form() {
        // a_z v = 1/2, a_1 = 0: U = diag(e^{-it/2}, e^{+it/2})
        let m = scalar_dephasing(0.5, 1.0, 0.0, 0.0).unwrap();
        for t in [0.3, 1.0, 2.7] {
            let u = evolution_unitary(&m, t, SegmentKind::Composite).unwrap();
            let expected = CMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::from_polar(1.0, -t / 2.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::from_polar(1.0, t / 2.0),
                ],
            );
            assert!(max_abs_diff(&u, &expected) < 1e-14);
        }
    }

    #[test]
    fn evolution_is_unitary_and_composes() {
        let m = random_model(HilbertDims::qubit(4).unwrap(), ModelKind::General, 7).unwrap();
        for kind in [SegmentKind::Composite, SegmentKind::EnvOnly] {
            let (s, t) = (0.37, 1.21);
            let us = evolution_unitary(&m, s, kind).unwrap();
            let ut = evolution_unitary(&m, t, kind).unwrap();
            let ust = evolution_unitary(&m, s + t, kind).unwrap();
            assert!(DenseOperator::new(ust.clone()).unwrap().is_unitary());
            assert!(max_abs_diff(&ust, &(us * ut)) < CHAIN_TOL);
        }
    }

    #[test]
    fn dephasing_reconstruction_is_checked() {
        let m = random_model(HilbertDims::qubit(3).unwrap(), ModelKind::PureDephasing, 5).unwrap();
        assert!(m.check_dephasing_consistency().is_ok());
    }
}
