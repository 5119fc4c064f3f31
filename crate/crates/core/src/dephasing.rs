//! Pure-dephasing specialization: environment-side Kraus dynamics, preparation-conditioned
//! probabilities and the re-preparation protocol.
//!
//! With H = a_z σ_z ⊗ V_z + a_1 𝟙 ⊗ V_1 the σ_z branches evolve independently, so a
//! qubit prepared in an X eigenstate |p⟩ and found in |m⟩ after one segment leaves the
//! environment acted on by K_{m,p} = ½(U_↑ + p·m·U_↓).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_exp, max_abs_diff, partial_trace_system_matrix, projector, CMatrix, HilbertDims,
    StateOperator, ALGEBRA_TOL,
};
use crate::model::{DephasingParams, ModelSpec, SegmentKind};
use crate::outcome::{Outcome, OutcomeSequence};
use crate::protocol::{o_signal, segment_unitaries, ProtocolSchedule};
use crate::signals::{ensure_real, SignalKind, SignalTable};
use crate::superop::{projector_operator, LinearMap};

/// Branch evolutions of one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingStep {
    duration: f64,
    kind: SegmentKind,
    up: CMatrix,
    down: CMatrix,
}

impl DephasingStep {
    /// U_↑/↓(τ) = exp(−iτ(a_1 V_1 ± a_z V_z)); an environment-only segment drops the ± term.
    pub fn new(params: &DephasingParams, duration: f64, kind: SegmentKind) -> Result<Self> {
        if !duration.is_finite() || duration < 0.0 {
            return Err(Error::Domain(format!("invalid step duration {duration}")));
        }
        let base = params.v_1.matrix() * Complex64::new(params.a_1, 0.0);
        let (up, down) = match kind {
            SegmentKind::Composite => {
                let z = params.v_z.matrix() * Complex64::new(params.a_z, 0.0);
                (
                    hermitian_exp(&(&base + &z), duration)?,
                    hermitian_exp(&(&base - &z), duration)?,
                )
            }
            SegmentKind::EnvOnly => {
                let u = hermitian_exp(&base, duration)?;
                (u.clone(), u)
            }
        };
        Ok(Self {
            duration,
            kind,
            up,
            down,
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn kind(&self) -> SegmentKind {
        self.kind
    }

    pub fn up(&self) -> &CMatrix {
        &self.up
    }

    pub fn down(&self) -> &CMatrix {
        &self.down
    }

    pub fn env_dim(&self) -> usize {
        self.up.nrows()
    }

    /// |↑⟩⟨↑| ⊗ U_↑ + |↓⟩⟨↓| ⊗ U_↓
    pub fn reconstruct_full(&self) -> CMatrix {
        let de = self.env_dim();
        let mut full = CMatrix::zeros(2 * de, 2 * de);
        full.view_mut((0, 0), (de, de)).copy_from(&self.up);
        full.view_mut((de, de), (de, de)).copy_from(&self.down);
        full
    }
}

fn params(model: &ModelSpec) -> Result<&DephasingParams> {
    model.dephasing().ok_or_else(|| {
        Error::Unsupported("environment-side dynamics need a pure-dephasing model".into())
    })
}

/// One step per schedule segment.
pub fn dephasing_steps(model: &ModelSpec, schedule: &ProtocolSchedule) -> Result<Vec<DephasingStep>> {
    let params = params(model)?;
    schedule
        .durations()
        .into_iter()
        .zip(schedule.kinds())
        .map(|(tau, kind)| DephasingStep::new(params, tau, *kind))
        .collect()
}

/// K_{m,p} = ½(U_↑ + p·m·U_↓)
pub fn kraus_k(m: Outcome, p: Outcome, step: &DephasingStep) -> Result<CMatrix> {
    let sign = m.real_sign()? * p.real_sign()?;
    Ok((&step.up + &step.down * Complex64::new(sign, 0.0)) * Complex64::new(0.5, 0.0))
}

/// Qubit preparations p_1 … p_n before each segment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PreparationSequence(Vec<Outcome>);

impl PreparationSequence {
    pub fn new(preparations: Vec<Outcome>) -> Result<Self> {
        if preparations.iter().any(|p| p.real_sign().is_err()) {
            return Err(Error::Unsupported("preparations must be X eigenstates".into()));
        }
        Ok(Self(preparations))
    }

    /// p_1 = +, p_k = m_{k−1}: each segment starts in the state the last measurement left.
    pub fn without_repreparation(outcomes: &OutcomeSequence) -> Result<Self> {
        let mut preps = vec![Outcome::Plus];
        preps.extend(outcomes.outcomes().iter().take(outcomes.len().saturating_sub(1)));
        Self::new(preps)
    }

    /// Every segment starts in |+⟩.
    pub fn repreparation(n: usize) -> Self {
        Self(vec![Outcome::Plus; n])
    }

    pub fn preparations(&self) -> &[Outcome] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// ℙ(m_n, …, m_1 | p_n, …, p_1) = tr{K_{m_n,p_n} ⋯ K_{m_1,p_1} ρ_B K† ⋯}.
pub fn conditioned_probability(
    rho_b0: &StateOperator,
    steps: &[DephasingStep],
    outcomes: &OutcomeSequence,
    preparations: &PreparationSequence,
) -> Result<f64> {
    if steps.len() != outcomes.len() || steps.len() != preparations.len() {
        return Err(Error::Domain(format!(
            "{} steps, {} outcomes and {} preparations",
            steps.len(),
            outcomes.len(),
            preparations.len()
        )));
    }
    let de = rho_b0.dims().total();
    if steps.iter().any(|s| s.env_dim() != de) {
        return Err(Error::Shape("environment state and steps differ in dimension".into()));
    }
    let mut k = CMatrix::identity(de, de);
    for ((step, m), p) in steps
        .iter()
        .zip(outcomes.outcomes())
        .zip(preparations.preparations())
    {
        k = kraus_k(*m, *p, step)? * k;
    }
    ensure_real(SignalKind::P, (&k * rho_b0.matrix() * k.adjoint()).trace())
}

/// Full-space probability of one outcome sequence when the qubit is put in |p_k⟩ ⊗ tr_Q{ρ}
/// before segment k.
pub fn prepared_probability_full(
    model: &ModelSpec,
    schedule: &ProtocolSchedule,
    outcomes: &OutcomeSequence,
    preparations: &PreparationSequence,
) -> Result<f64> {
    let n = schedule.len();
    if outcomes.len() != n || preparations.len() != n {
        return Err(Error::Domain("outcome and preparation lengths must match the schedule".into()));
    }
    let dims = model.dims();
    let segments = segment_unitaries(model, schedule)?;
    let mut env = model.env_initial().matrix().clone();
    let mut rho = CMatrix::zeros(dims.total(), dims.total());
    for ((u, m), p) in segments
        .iter()
        .zip(outcomes.outcomes())
        .zip(preparations.preparations())
    {
        let qubit = projector(crate::linalg::Axis::X, p.real_sign()? as i8)?;
        rho = qubit.matrix().kronecker(&env);
        let pm = projector_operator(dims, *m)?;
        rho = &pm * (u * rho * u.adjoint()) * &pm;
        env = partial_trace_system_matrix(&rho, dims)?;
    }
    ensure_real(SignalKind::P, rho.trace())
}

/// The re-preparation channel ℛ[ρ] = P₊ ⊗ tr_Q{ρ} with Kraus operators |+⟩⟨a| ⊗ 𝟙_E.
pub fn repreparation_channel(dims: HilbertDims) -> Result<LinearMap> {
    if dims.system_dim() != 2 {
        return Err(Error::Domain("re-preparation is defined for a qubit".into()));
    }
    let de = dims.env_dim();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let id_e = CMatrix::identity(de, de);
    let ops: Vec<CMatrix> = (0..2)
        .map(|a| {
            let mut ket = CMatrix::zeros(2, 2);
            ket[(0, a)] = Complex64::new(s, 0.0);
            ket[(1, a)] = Complex64::new(s, 0.0);
            ket.kronecker(&id_e)
        })
        .collect();
    LinearMap::kraus(&ops)
}

/// ℙ_ℛ for all 2^n outcome sequences, on the full space with ℛ after every measurement but
/// the last. Non-dephasing models are allowed; the table is then marked as carrying no
/// equivalence guarantee.
pub fn repreparation_probabilities(
    model: &ModelSpec,
    rho0: &StateOperator,
    schedule: &ProtocolSchedule,
) -> Result<SignalTable> {
    let dims = model.dims();
    if rho0.dims().total() != dims.total() {
        return Err(Error::Shape("initial state dimension mismatch".into()));
    }
    let segments: Vec<LinearMap> = segment_unitaries(model, schedule)?
        .iter()
        .map(LinearMap::conjugation)
        .collect();
    let reset = repreparation_channel(dims)?;
    let mut table = SignalTable::new();
    for seq in OutcomeSequence::all_x(schedule.len()) {
        let mut rho = rho0.matrix().clone();
        for (k, (u, m)) in segments.iter().zip(seq.outcomes()).enumerate() {
            let pm = projector_operator(dims, *m)?;
            rho = &pm * u.apply(&rho)? * &pm;
            if k + 1 < segments.len() {
                rho = reset.apply(&rho)?;
            }
        }
        table.insert(SignalKind::PR, schedule, seq.to_string(), rho.trace())?;
    }
    table.set_provenance(
        "equivalence",
        if model.is_pure_dephasing() {
            "pure-dephasing"
        } else {
            "no-equivalence-guarantee"
        },
    );
    table.check_normalized(SignalKind::PR, schedule)?;
    Ok(table)
}

/// ℙ_ℛ from environment-side Kraus products with every preparation |+⟩.
pub fn repreparation_probabilities_env(
    model: &ModelSpec,
    schedule: &ProtocolSchedule,
) -> Result<SignalTable> {
    let steps = dephasing_steps(model, schedule)?;
    let preps = PreparationSequence::repreparation(schedule.len());
    let mut table = SignalTable::new();
    for seq in OutcomeSequence::all_x(schedule.len()) {
        let p = conditioned_probability(model.env_initial(), &steps, &seq, &preps)?;
        table.insert(SignalKind::PR, schedule, seq.to_string(), Complex64::new(p, 0.0))?;
    }
    Ok(table)
}

/// m ↦ (m_1, m_2·m_1, …, m_n·m_{n−1}) with m_0 = +1.
///
/// Maps a no-re-preparation outcome sequence to the re-preparation sequence of equal
/// probability: ℙ(m) = ℙ_ℛ(relabel(m)).
pub fn relabel(outcomes: &OutcomeSequence) -> Result<OutcomeSequence> {
    let mut prev = Outcome::Plus;
    let mut out = Vec::with_capacity(outcomes.len());
    for m in outcomes.outcomes() {
        out.push(m.times(prev)?);
        prev = *m;
    }
    Ok(OutcomeSequence::new(out))
}

/// Cumulative product, the inverse of [`relabel`].
pub fn inverse_relabel(outcomes: &OutcomeSequence) -> Result<OutcomeSequence> {
    let mut acc = Outcome::Plus;
    let mut out = Vec::with_capacity(outcomes.len());
    for m in outcomes.outcomes() {
        acc = acc.times(*m)?;
        out.push(acc);
    }
    Ok(OutcomeSequence::new(out))
}

/// max_m |ℙ(m) − ℙ_ℛ(relabel(m))| over all 2^n sequences.
pub fn relabeling_discrepancy(
    model: &ModelSpec,
    rho0: &StateOperator,
    schedule: &ProtocolSchedule,
) -> Result<f64> {
    let plain = crate::protocol::outcome_probabilities(model, rho0, schedule)?;
    let reprep = repreparation_probabilities(model, rho0, schedule)?;
    let mut worst = 0.0f64;
    for seq in OutcomeSequence::all_x(schedule.len()) {
        let p = plain
            .get(SignalKind::P, schedule, &seq.to_string())
            .ok_or_else(|| Error::Invariant("missing probability".into()))?;
        let q = reprep
            .get(SignalKind::PR, schedule, &relabel(&seq)?.to_string())
            .ok_or_else(|| Error::Invariant("missing probability".into()))?;
        worst = worst.max((p - q).abs());
    }
    Ok(worst)
}

/// ⟨∏_k m'_k⟩_ℛ = Σ (∏_k m'_k) ℙ_ℛ(m').
pub fn correlation_r(model: &ModelSpec, rho0: &StateOperator, schedule: &ProtocolSchedule) -> Result<f64> {
    let table = repreparation_probabilities(model, rho0, schedule)?;
    let mut acc = 0.0;
    for seq in OutcomeSequence::all_x(schedule.len()) {
        let p = table
            .get(SignalKind::PR, schedule, &seq.to_string())
            .ok_or_else(|| Error::Invariant("missing probability".into()))?;
        let sign: f64 = seq
            .outcomes()
            .iter()
            .map(|m| m.real_sign())
            .product::<Result<f64>>()?;
        acc += sign * p;
    }
    Ok(acc)
}

/// |⟨∏ m'_k⟩_ℛ − O_n|
pub fn correlation_discrepancy(
    model: &ModelSpec,
    rho0: &StateOperator,
    schedule: &ProtocolSchedule,
) -> Result<f64> {
    Ok((correlation_r(model, rho0, schedule)? - o_signal(model, rho0, schedule)?).abs())
}

/// max over all outcome/preparation assignments of |env-side − full-space| probability.
pub fn kraus_reduction_discrepancy(model: &ModelSpec, schedule: &ProtocolSchedule) -> Result<f64> {
    let steps = dephasing_steps(model, schedule)?;
    let n = schedule.len();
    let mut worst = 0.0f64;
    for seq in OutcomeSequence::all_x(n) {
        for preps in OutcomeSequence::all_x(n) {
            let preps = PreparationSequence::new(preps.outcomes().to_vec())?;
            let env = conditioned_probability(model.env_initial(), &steps, &seq, &preps)?;
            let full = prepared_probability_full(model, schedule, &seq, &preps)?;
            worst = worst.max((env - full).abs());
        }
    }
    Ok(worst)
}

/// max over steps and sign pairs of ‖K_{m,p} − K_{mp,+}‖ (entrywise).
pub fn kraus_sign_collapse(steps: &[DephasingStep]) -> Result<f64> {
    let mut worst = 0.0f64;
    for step in steps {
        for m in Outcome::X {
            for p in Outcome::X {
                let a = kraus_k(m, p, step)?;
                let b = kraus_k(m.times(p)?, Outcome::Plus, step)?;
                worst = worst.max(max_abs_diff(&a, &b));
            }
        }
    }
    Ok(worst)
}

/// max over steps of |U_step(full) − reconstruction from branches|.
pub fn step_reconstruction_error(model: &ModelSpec, schedule: &ProtocolSchedule) -> Result<f64> {
    let steps = dephasing_steps(model, schedule)?;
    let full = segment_unitaries(model, schedule)?;
    Ok(steps
        .iter()
        .zip(&full)
        .map(|(s, u)| max_abs_diff(&s.reconstruct_full(), u))
        .fold(0.0, f64::max))
}

pub(crate) fn branch_unitarity_error(step: &DephasingStep) -> f64 {
    let id = CMatrix::identity(step.env_dim(), step.env_dim());
    max_abs_diff(&(step.up.adjoint() * &step.up), &id)
        .max(max_abs_diff(&(step.down.adjoint() * &step.down), &id))
}

/// Whether both branch unitaries are unitary within 1e−12.
pub fn step_is_valid(step: &DephasingStep) -> bool {
    branch_unitarity_error(step) <= ALGEBRA_TOL
}
