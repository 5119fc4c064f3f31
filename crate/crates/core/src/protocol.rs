//! Pulse-sequence and sequential-measurement protocols and the identities relating them.
//!
//! Both families share the same evolutions 𝒰_1 … 𝒰_n between intervention times. A pulse
//! protocol inserts 𝒜 ∈ {ℐ, 𝒳} after each of the first n−1 segments; a measurement
//! protocol inserts a projection after every segment. Every branch of either family is a
//! single operator sandwich K·K†, so maps are built from the product operator K.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Axis, CMatrix, HilbertDims, StateOperator, CHAIN_TOL};
use crate::model::{evolution_unitary, ModelSpec, SegmentKind};
use crate::outcome::{Outcome, OutcomeSequence};
use crate::signals::{ensure_real, SignalKind, SignalTable};
use crate::superop::{projection_map, projector_operator, pulse_operator, LinearMap};

/// Intervention times t_1 < … < t_n (t_0 = 0) with the generator of each segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSchedule {
    times: Vec<f64>,
    kinds: Vec<SegmentKind>,
}

impl ProtocolSchedule {
    pub fn new(times: Vec<f64>, kinds: Vec<SegmentKind>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Domain("a schedule needs at least one time".into()));
        }
        if times.len() != kinds.len() {
            return Err(Error::Domain(format!(
                "{} times but {} segment kinds",
                times.len(),
                kinds.len()
            )));
        }
        let mut prev = 0.0;
        for (k, &t) in times.iter().enumerate() {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::Domain(format!("time t_{} = {t} is invalid", k + 1)));
            }
            if k > 0 && t <= prev {
                return Err(Error::Domain(format!(
                    "times must be strictly increasing (t_{} = {t} ≤ {prev})",
                    k + 1
                )));
            }
            prev = t;
        }
        Ok(Self { times, kinds })
    }

    /// All segments composite.
    pub fn composite(times: Vec<f64>) -> Result<Self> {
        let n = times.len();
        Self::new(times, vec![SegmentKind::Composite; n])
    }

    /// Composite and environment-only segments alternating, starting composite.
    pub fn alternating(times: Vec<f64>) -> Result<Self> {
        let kinds = (0..times.len())
            .map(|k| {
                if k % 2 == 0 {
                    SegmentKind::Composite
                } else {
                    SegmentKind::EnvOnly
                }
            })
            .collect();
        Self::new(times, kinds)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn kinds(&self) -> &[SegmentKind] {
        &self.kinds
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("schedule is non-empty")
    }

    /// t_k − t_{k−1}
    pub fn durations(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.times
            .iter()
            .map(|&t| {
                let d = t - prev;
                prev = t;
                d
            })
            .collect()
    }

    /// Same segment kinds with every time multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.times.iter().map(|t| t * factor).collect(),
            self.kinds.clone(),
        )
    }

    /// FNV-1a over the time bit patterns and the segment kinds.
    pub fn hash(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut feed = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(PRIME);
            }
        };
        for (t, k) in self.times.iter().zip(&self.kinds) {
            feed(&t.to_bits().to_le_bytes());
            feed(&[match k {
                SegmentKind::Composite => 0,
                SegmentKind::EnvOnly => 1,
            }]);
        }
        h
    }
}

/// Instantaneous operation inserted between two evolution segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pulse {
    #[serde(rename = "i")]
    Idle,
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
}

impl Pulse {
    pub fn axis(&self) -> Option<Axis> {
        match self {
            Pulse::Idle => None,
            Pulse::X => Some(Axis::X),
            Pulse::Y => Some(Axis::Y),
        }
    }

    pub fn from_axis(axis: Axis) -> Result<Self> {
        match axis {
            Axis::X => Ok(Pulse::X),
            Axis::Y => Ok(Pulse::Y),
            Axis::Z => Err(Error::Domain("no z pulses".into())),
        }
    }

    pub fn symbol(&self) -> char {
        match self {
            Pulse::Idle => 'i',
            Pulse::X => 'x',
            Pulse::Y => 'y',
        }
    }
}

/// Pulse slots s_1 … s_{n−1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct PulsePattern(Vec<Pulse>);

impl PulsePattern {
    pub fn new(pulses: Vec<Pulse>) -> Self {
        Self(pulses)
    }

    pub fn idle(len: usize) -> Self {
        Self(vec![Pulse::Idle; len])
    }

    pub fn all_x(len: usize) -> Self {
        Self(vec![Pulse::X; len])
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All 2^len patterns over {i, x}, s_1 varying slowest.
    pub fn all_binary(len: usize) -> Vec<PulsePattern> {
        let axes = vec![Axis::X; len];
        Self::all_over_axes(&axes).expect("x pulses are valid")
    }

    /// All patterns where slot k is either idle or a pulse about `axes[k]`.
    pub fn all_over_axes(axes: &[Axis]) -> Result<Vec<PulsePattern>> {
        let mut out = vec![Vec::with_capacity(axes.len())];
        for &axis in axes {
            let pulse = Pulse::from_axis(axis)?;
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    [Pulse::Idle, pulse].into_iter().map(move |p| {
                        let mut next = prefix.clone();
                        next.push(p);
                        next
                    })
                })
                .collect();
        }
        Ok(out.into_iter().map(PulsePattern).collect())
    }
}

impl fmt::Display for PulsePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(Pulse::symbol).collect();
        f.write_str(&s)
    }
}

impl FromStr for PulsePattern {
    type Err = Error;

    /// Accepts `i`, `x`, `y` characters with optional commas, whitespace or parentheses
    /// (`"xix"`, `"(x),(i),(x)"`).
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace() && !matches!(c, ',' | '(' | ')'))
            .map(|c| match c {
                'i' => Ok(Pulse::Idle),
                'x' => Ok(Pulse::X),
                'y' => Ok(Pulse::Y),
                other => Err(Error::Parse(format!("unknown pulse `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(PulsePattern)
    }
}

/// The evolution operators U_1 … U_n of a schedule on the full space.
pub fn segment_unitaries(model: &ModelSpec, schedule: &ProtocolSchedule) -> Result<Vec<CMatrix>> {
    schedule
        .durations()
        .into_iter()
        .zip(schedule.kinds())
        .map(|(tau, kind)| evolution_unitary(model, tau, *kind))
        .collect()
}

/// U_n A_{s_{n−1}} … A_{s_1} U_1.
pub fn dd_operator(dims: HilbertDims, segments: &[CMatrix], pattern: &PulsePattern) -> Result<CMatrix> {
    if pattern.len() + 1 != segments.len() {
        return Err(Error::Domain(format!(
            "pattern has {} slots but the schedule needs {}",
            pattern.len(),
            segments.len().saturating_sub(1)
        )));
    }
    let mut op = segments[0].clone();
    for (pulse, u) in pattern.pulses().iter().zip(&segments[1..]) {
        if let Some(axis) = pulse.axis() {
            op = pulse_operator(dims, axis)? * op;
        }
        op = u * op;
    }
    Ok(op)
}

/// P_{m_n} U_n … P_{m_1} U_1.
pub fn branch_operator(
    dims: HilbertDims,
    segments: &[CMatrix],
    outcomes: &OutcomeSequence,
) -> Result<CMatrix> {
    if outcomes.len() != segments.len() {
        return Err(Error::Domain(format!(
            "{} outcomes for a schedule of length {}",
            outcomes.len(),
            segments.len()
        )));
    }
    let n = dims.total();
    let mut op = CMatrix::identity(n, n);
    for (u, m) in segments.iter().zip(outcomes.outcomes()) {
        op = projector_operator(dims, *m)? * (u * op);
    }
    Ok(op)
}

/// 𝒰_n ∘ 𝒜_{s_{n−1}} ∘ … ∘ 𝒜_{s_1} ∘ 𝒰_1
pub fn dd_map(model: &ModelSpec, schedule: &ProtocolSchedule, pattern: &PulsePattern) -> Result<LinearMap> {
    let segments = segment_unitaries(model, schedule)?;
    Ok(LinearMap::conjugation(&dd_operator(model.dims(), &segments, pattern)?))
}

/// 𝒫_{m_n} ∘ 𝒰_n ∘ … ∘ 𝒫_{m_1} ∘ 𝒰_1 (trace-decreasing branch map).
pub fn measurement_branch_map(
    model: &ModelSpec,
    schedule: &ProtocolSchedule,
    outcomes: &OutcomeSequence,
) -> Result<LinearMap> {
    let segments = segment_unitaries(model, schedule)?;
    Ok(LinearMap::conjugation(&branch_operator(model.dims(), &segments, outcomes)?))
}

fn check_state(model: &ModelSpec, rho0: &StateOperator) -> Result<()> {
    if rho0.dims().total() != model.dims().total() {
        return Err(Error::Shape(format!(
            "state of dimension {} for a model of dimension {}",
            rho0.dims().total(),
            model.dims().total()
        )));
    }
    Ok(())
}

/// Probabilities of every ±1 result sequence, enumerated depth-first with shared prefixes.
pub(crate) fn x_branch_probabilities(
    dims: HilbertDims,
    segments: &[CMatrix],
    rho0: &CMatrix,
) -> Result<Vec<(OutcomeSequence, Complex64)>> {
    let projectors = [
        projector_operator(dims, Outcome::Plus)?,
        projector_operator(dims, Outcome::Minus)?,
    ];
    let mut out = Vec::with_capacity(1 << segments.len());
    let mut prefix = Vec::with_capacity(segments.len());
    descend(segments, &projectors, rho0.clone(), &mut prefix, &mut out);
    Ok(out)
}

fn descend(
    segments: &[CMatrix],
    projectors: &[CMatrix; 2],
    rho: CMatrix,
    prefix: &mut Vec<Outcome>,
    out: &mut Vec<(OutcomeSequence, Complex64)>,
) {
    let Some((u, rest)) = segments.split_first() else {
        out.push((OutcomeSequence::new(prefix.clone()), rho.trace()));
        return;
    };
    let evolved = u * rho * u.adjoint();
    for (p, m) in projectors.iter().zip(Outcome::X) {
        let branch = p * &evolved * p;
        prefix.push(m);
        descend(rest, projectors, branch, prefix, out);
        prefix.pop();
    }
}

/// ℙ(m_n, …, m_1) for all 2^n sequences, keyed by the outcome string (m_1 first).
pub fn outcome_probabilities(
    model: &ModelSpec,
    rho0: &StateOperator,
    schedule: &ProtocolSchedule,
) -> Result<SignalTable> {
    check_state(model, rho0)?;
    let segments = segment_unitaries(model, schedule)?;
    let mut table = SignalTable::new();
    for (seq, p) in x_branch_probabilities(model.dims(), &segments, rho0.matrix())? {
        table.insert(SignalKind::P, schedule, seq.to_string(), p)?;
    }
    table.check_normalized(SignalKind::P, schedule)?;
    Ok(table)
}

/// Σ m_n ℙ over branch probabilities of arbitrary (merged) segments.
pub(crate) fn o_from_segments(dims: HilbertDims, segments: &[CMatrix], rho0: &CMatrix) -> Result<f64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (seq, p) in x_branch_probabilities(dims, segments, rho0)? {
        let last = seq.last().expect("non-empty sequence");
        acc += p * last.real_sign()?;
    }
    ensure_real(SignalKind::O, acc)
}

/// O_n(t_n, …, t_1) = Σ m_n ℙ(m_n, …, m_1).
pub fn o_signal(model: &ModelSpec, rho0: &StateOperator, schedule: &ProtocolSchedule) -> Result<f64> {
    check_state(model, rho0)?;
    let segments = segment_unitaries(model, schedule)?;
    o_from_segments(model.dims(), &segments, rho0.matrix())
}

/// tr{(σ_x ⊗ 𝟙) K ρ K†}
pub(crate) fn sigma_x_expectation(dims: HilbertDims, k: &CMatrix, rho0: &CMatrix) -> Result<f64> {
    let sx = pulse_operator(dims, Axis::X)?;
    let value = (sx * k * rho0 * k.adjoint()).trace();
    ensure_real(SignalKind::W, value)
}

/// W_{s_{n−1},…,s_1}(t_n, …, t_1) = tr{(σ_x ⊗ 𝟙) 𝒰^𝒜[ρ]}.
pub fn w_signal(
    model: &ModelSpec,
    rho0: &StateOperator,
    schedule: &ProtocolSchedule,
    pattern: &PulsePattern,
) -> Result<f64> {
    check_state(model, rho0)?;
    let segments = segment_unitaries(model, schedule)?;
    let k = dd_operator(model.dims(), &segments, pattern)?;
    sigma_x_expectation(model.dims(), &k, rho0.matrix())
}

/// Both constructions of 𝒪_n(m_n) for one final outcome.
#[derive(Debug, Clone)]
pub struct NonselectiveBranch {
    pub outcome: Outcome,
    /// Σ over m_1 … m_{n−1} of the measurement branch maps.
    pub from_measurements: LinearMap,
    /// 2^{−(n−1)} 𝒫_{m_n} ∘ Σ_patterns 𝒰^𝒜.
    pub from_pulses: LinearMap,
}

impl NonselectiveBranch {
    pub fn max_abs_error(&self) -> f64 {
        self.from_measurements
            .max_abs_diff(&self.from_pulses)
            .expect("both sides share one dimension")
    }
}

/// 𝒪_n(m_n) for m_n = ±1, built from non-selective measurements and, independently,
/// as the uniform average of all pulse patterns followed by the final projection.
pub fn nonselective_map(model: &ModelSpec, schedule: &ProtocolSchedule) -> Result<Vec<NonselectiveBranch>> {
    let axes = vec![Axis::X; schedule.len() - 1];
    nonselective_map_axes(model, schedule, &axes, Axis::X)
}

/// Mixed-axis form: slot k is measured (or pulsed) about `axes[k]`, the final
/// measurement about `final_axis`.
pub fn nonselective_map_axes(
    model: &ModelSpec,
    schedule: &ProtocolSchedule,
    axes: &[Axis],
    final_axis: Axis,
) -> Result<Vec<NonselectiveBranch>> {
    let n = schedule.len();
    if axes.len() + 1 != n {
        return Err(Error::Domain(format!(
            "{} slot axes for a schedule of length {n}",
            axes.len()
        )));
    }
    let dims = model.dims();
    let total = dims.total();
    let segments = segment_unitaries(model, schedule)?;

    let prefixes: Vec<Vec<Outcome>> = axes
        .iter()
        .map(|a| Outcome::for_axis(*a).map(|o| o.to_vec()))
        .collect::<Result<_>>()?;
    let prefix_sequences = OutcomeSequence::all_over(&prefixes);

    let patterns = PulsePattern::all_over_axes(axes)?;
    let mut pulse_sum = LinearMap::zero(total);
    for pattern in &patterns {
        let k = dd_operator(dims, &segments, pattern)?;
        pulse_sum = &pulse_sum + &LinearMap::conjugation(&k);
    }
    let weight = Complex64::new(1.0 / patterns.len() as f64, 0.0);
    let averaged = pulse_sum.scaled(weight);

    Outcome::for_axis(final_axis)?
        .into_iter()
        .map(|m_n| {
            let mut lhs = LinearMap::zero(total);
            for prefix in &prefix_sequences {
                let mut seq = prefix.outcomes().to_vec();
                seq.push(m_n);
                let k = branch_operator(dims, &segments, &OutcomeSequence::new(seq))?;
                lhs = &lhs + &LinearMap::conjugation(&k);
            }
            let rhs = LinearMap::compose(&projection_map(dims, m_n)?, &averaged)?;
            Ok(NonselectiveBranch {
                outcome: m_n,
                from_measurements: lhs,
                from_pulses: rhs,
            })
        })
        .collect()
}

/// One term of the signed expansion of a pulse sequence into measurement sequences.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExpansionTerm {
    /// Number of evolution segments n.
    pub segments: usize,
    /// Signed integer weight (−1)^{#idle} 2^{#measured}.
    pub coefficient: i64,
    /// Measured slots: (k, m) means a projection right after segment k (1-based).
    pub measurements: Vec<(usize, Outcome)>,
    /// Merged evolutions between consecutive measurements, as inclusive 1-based
    /// segment ranges in time order.
    pub evolutions: Vec<(usize, usize)>,
}

impl ExpansionTerm {
    fn from_choices(segments: usize, choices: &[Option<Outcome>]) -> Self {
        let mut coefficient = 1i64;
        let mut measurements = Vec::new();
        let mut evolutions = Vec::new();
        let mut start = 1;
        for (slot, choice) in choices.iter().enumerate() {
            let k = slot + 1;
            match choice {
                None => coefficient = -coefficient,
                Some(m) => {
                    coefficient *= 2;
                    measurements.push((k, *m));
                    evolutions.push((start, k));
                    start = k + 1;
                }
            }
        }
        evolutions.push((start, segments));
        Self {
            segments,
            coefficient,
            measurements,
            evolutions,
        }
    }

    pub fn measured_slots(&self) -> Vec<usize> {
        self.measurements.iter().map(|(k, _)| *k).collect()
    }

    /// The term's Kraus operator: merged evolutions with projections at measured slots.
    pub fn operator(&self, dims: HilbertDims, segment_unitaries: &[CMatrix]) -> Result<CMatrix> {
        if segment_unitaries.len() != self.segments {
            return Err(Error::Domain(format!(
                "term expects {} segments, got {}",
                self.segments,
                segment_unitaries.len()
            )));
        }
        let n = dims.total();
        let mut op = CMatrix::identity(n, n);
        let mut measured = self.measurements.iter().peekable();
        for (k, u) in segment_unitaries.iter().enumerate() {
            op = u * op;
            if let Some((slot, m)) = measured.peek() {
                if *slot == k + 1 {
                    op = projector_operator(dims, *m)? * op;
                    measured.next();
                }
            }
        }
        Ok(op)
    }

    pub fn to_map(&self, dims: HilbertDims, segment_unitaries: &[CMatrix]) -> Result<LinearMap> {
        Ok(LinearMap::conjugation(&self.operator(dims, segment_unitaries)?).scaled(
            Complex64::new(self.coefficient as f64, 0.0),
        ))
    }

    /// Operator string, latest first: `U3 P+ U2 U1`.
    pub fn operator_string(&self) -> String {
        let mut parts = Vec::new();
        for k in (1..=self.segments).rev() {
            if let Some((_, m)) = self.measurements.iter().find(|(slot, _)| *slot == k) {
                parts.push(match m {
                    Outcome::Plus => "P+".to_string(),
                    Outcome::Minus => "P−".to_string(),
                    Outcome::PlusI => "PY+i".to_string(),
                    Outcome::MinusI => "PY−i".to_string(),
                });
            }
            parts.push(format!("U{k}"));
        }
        parts.join(" ")
    }
}

impl fmt::Display for ExpansionTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.coefficient < 0 { "−" } else { "+" };
        write!(f, "{sign}{}·[{}]", self.coefficient.abs(), self.operator_string())
    }
}

/// Signed expansion of U_n 𝒳 … 𝒳 U_1 (n − 1 pulses) into measurement sequences.
pub fn dd_expansion(n: usize) -> Result<Vec<ExpansionTerm>> {
    if n == 0 {
        return Err(Error::Domain("expansion needs at least one segment".into()));
    }
    expand_pulses(&vec![Axis::X; n - 1])
}

/// Distributes 𝒜 = 2(𝒫₊ + 𝒫₋) − ℐ over every pulse slot, slot k pulsing about `axes[k]`.
///
/// Idle choices merge the neighbouring evolutions. Terms come out ordered by the
/// number of measurements, then by measured slots, then by outcomes.
pub fn expand_pulses(axes: &[Axis]) -> Result<Vec<ExpansionTerm>> {
    let segments = axes.len() + 1;
    let mut choices: Vec<Vec<Option<Outcome>>> = vec![Vec::new()];
    for &axis in axes {
        let [a, b] = Outcome::for_axis(axis)?;
        choices = choices
            .into_iter()
            .flat_map(|prefix| {
                [None, Some(a), Some(b)].into_iter().map(move |c| {
                    let mut next = prefix.clone();
                    next.push(c);
                    next
                })
            })
            .collect();
    }
    let mut terms: Vec<ExpansionTerm> = choices
        .iter()
        .map(|c| ExpansionTerm::from_choices(segments, c))
        .collect();
    terms.sort_by(|a, b| {
        let key = |t: &ExpansionTerm| (t.measurements.len(), t.measured_slots(), t.measurements.clone());
        key(a).cmp(&key(b))
    });
    Ok(terms)
}

/// Σ_terms coefficient · (term map), evaluated on the model's evolutions.
pub fn expansion_map(
    model: &ModelSpec,
    schedule: &ProtocolSchedule,
    terms: &[ExpansionTerm],
) -> Result<LinearMap> {
    let segments = segment_unitaries(model, schedule)?;
    let mut acc = LinearMap::zero(model.dims().total());
    for term in terms {
        acc = &acc + &term.to_map(model.dims(), &segments)?;
    }
    Ok(acc)
}

/// Products of consecutive segment unitaries, split right after each slot in `measured`.
pub(crate) fn merge_segments(segments: &[CMatrix], measured: &[usize]) -> Vec<CMatrix> {
    let mut merged = Vec::with_capacity(measured.len() + 1);
    let mut current: Option<CMatrix> = None;
    for (k, u) in segments.iter().enumerate() {
        current = Some(match current {
            None => u.clone(),
            Some(acc) => u * acc,
        });
        if measured.contains(&(k + 1)) || k + 1 == segments.len() {
            merged.push(current.take().expect("segment accumulated"));
        }
    }
    merged
}

/// O_k[t_n ⊕ {t_ℓ}]: measurements at the listed intermediate slots (1-based, < n) and at
/// t_n, with evolutions merged across every skipped time.
pub fn o_signal_subset(
    model: &ModelSpec,
    rho0: &StateOperator,
    schedule: &ProtocolSchedule,
    slots: &[usize],
) -> Result<f64> {
    check_state(model, rho0)?;
    let n = schedule.len();
    if slots.iter().any(|&s| s == 0 || s >= n) {
        return Err(Error::Domain(format!(
            "intermediate measurement slots must lie in 1..{n}"
        )));
    }
    let segments = segment_unitaries(model, schedule)?;
    let merged = merge_segments(&segments, slots);
    o_from_segments(model.dims(), &merged, rho0.matrix())
}

/// Two signal values that an identity says are equal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_error: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl SignalCheck {
    pub fn new(lhs: f64, rhs: f64, threshold: f64) -> Self {
        let abs_error = (lhs - rhs).abs();
        Self {
            lhs,
            rhs,
            abs_error,
            threshold,
            passed: abs_error <= threshold,
        }
    }
}

fn require_plus_product(model: &ModelSpec, rho0: &StateOperator) -> Result<()> {
    check_state(model, rho0)?;
    let dims = model.dims();
    let p_plus = projector_operator(dims, Outcome::Plus)?;
    let m = rho0.matrix();
    let residual = crate::linalg::max_abs_diff(&(&p_plus * m * &p_plus), m);
    if residual > CHAIN_TOL {
        return Err(Error::Domain(
            "signal identities expect an initial state P₊ ⊗ ρ_E".into(),
        ));
    }
    Ok(())
}

/// O_n = 2^{−(n−1)} Σ_patterns W_pattern.
pub fn verify_on_in_wn(
    model: &ModelSpec,
    rho0: &StateOperator,
    schedule: &ProtocolSchedule,
) -> Result<SignalCheck> {
    require_plus_product(model, rho0)?;
    let n = schedule.len();
    let o = o_signal(model, rho0, schedule)?;
    let patterns = PulsePattern::all_binary(n - 1);
    let segments = segment_unitaries(model, schedule)?;
    let mut sum = 0.0;
    for p in &patterns {
        let k = dd_operator(model.dims(), &segments, p)?;
        sum += sigma_x_expectation(model.dims(), &k, rho0.matrix())?;
    }
    Ok(SignalCheck::new(o, sum / patterns.len() as f64, CHAIN_TOL))
}

/// All subsets of {1, …, len} in order of size, then lexicographically.
pub(crate) fn subsets(len: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (0u32..(1u32 << len))
        .map(|mask| (1..=len).filter(|k| mask & (1 << (k - 1)) != 0).collect())
        .collect();
    all.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
    all
}

/// W_{(x),…,(x)} = Σ_S (−1)^{n−1−|S|} 2^{|S|} O_{|S|+1}[t_n ⊕ S] over S ⊆ {t_1, …, t_{n−1}}.
pub fn verify_wn_in_ok(
    model: &ModelSpec,
    rho0: &StateOperator,
    schedule: &ProtocolSchedule,
) -> Result<SignalCheck> {
    require_plus_product(model, rho0)?;
    let n = schedule.len();
    let w = w_signal(model, rho0, schedule, &PulsePattern::all_x(n - 1))?;
    let mut sum = 0.0;
    for subset in subsets(n - 1) {
        let sign = if (n - 1 - subset.len()).is_multiple_of(2) { 1.0 } else { -1.0 };
        let weight = sign * (1u64 << subset.len()) as f64;
        sum += weight * o_signal_subset(model, rho0, schedule, &subset)?;
    }
    Ok(SignalCheck::new(w, sum, CHAIN_TOL))
}

/// Spin echo from two measurement protocols: W_(x)(t_2,t_1) = 2 O_2(t_2,t_1) − O_1(t_2).
pub fn echo_from_measurements(
    model: &ModelSpec,
    rho0: &StateOperator,
    schedule: &ProtocolSchedule,
) -> Result<SignalCheck> {
    require_plus_product(model, rho0)?;
    if schedule.len() != 2 {
        return Err(Error::Domain("the echo relation needs a two-time schedule".into()));
    }
    let w = w_signal(model, rho0, schedule, &PulsePattern::all_x(1))?;
    let o2 = o_signal(model, rho0, schedule)?;
    let o1 = o_signal_subset(model, rho0, schedule, &[])?;
    Ok(SignalCheck::new(w, 2.0 * o2 - o1, CHAIN_TOL))
}

/// O_2(t_2,t_1) = ½ (W_(i) + W_(x)).
pub fn two_measurements_from_pulses(
    model: &ModelSpec,
    rho0: &StateOperator,
    schedule: &ProtocolSchedule,
) -> Result<SignalCheck> {
    require_plus_product(model, rho0)?;
    if schedule.len() != 2 {
        return Err(Error::Domain("this relation needs a two-time schedule".into()));
    }
    let o2 = o_signal(model, rho0, schedule)?;
    let wi = w_signal(model, rho0, schedule, &"i".parse()?)?;
    let wx = w_signal(model, rho0, schedule, &"x".parse()?)?;
    Ok(SignalCheck::new(o2, 0.5 * (wi + wx), CHAIN_TOL))
}

/// O_3 = ¼ (W_(i),(i) + W_(x),(i) + W_(i),(x) + W_(x),(x)).
pub fn three_measurements_from_pulses(
    model: &ModelSpec,
    rho0: &StateOperator,
    schedule: &ProtocolSchedule,
) -> Result<SignalCheck> {
    require_plus_product(model, rho0)?;
    if schedule.len() != 3 {
        return Err(Error::Domain("this relation needs a three-time schedule".into()));
    }
    let o3 = o_signal(model, rho0, schedule)?;
    let mut sum = 0.0;
    for p in ["ii", "xi", "ix", "xx"] {
        sum += w_signal(model, rho0, schedule, &p.parse()?)?;
    }
    Ok(SignalCheck::new(o3, 0.25 * sum, CHAIN_TOL))
}

/// Two-pulse Carr–Purcell with delays τ, 2τ, τ:
/// W_CP-2(4τ) = O_1(4τ) − 2[O_2(4τ,τ) + O_2(4τ,3τ)] + 4 O_3(4τ,3τ,τ).
pub fn carr_purcell_2_from_measurements(
    model: &ModelSpec,
    rho0: &StateOperator,
    tau: f64,
    kinds: [SegmentKind; 3],
) -> Result<SignalCheck> {
    require_plus_product(model, rho0)?;
    let schedule = ProtocolSchedule::new(vec![tau, 3.0 * tau, 4.0 * tau], kinds.to_vec())?;
    let w = w_signal(model, rho0, &schedule, &PulsePattern::all_x(2))?;
    let o1 = o_signal_subset(model, rho0, &schedule, &[])?;
    let o2_tau = o_signal_subset(model, rho0, &schedule, &[1])?;
    let o2_3tau = o_signal_subset(model, rho0, &schedule, &[2])?;
    let o3 = o_signal(model, rho0, &schedule)?;
    Ok(SignalCheck::new(
        w,
        o1 - 2.0 * (o2_tau + o2_3tau) + 4.0 * o3,
        CHAIN_TOL,
    ))
}

/// P₊ ⊗ ρ_E for the model's environment state.
pub fn plus_state(model: &ModelSpec) -> Result<StateOperator> {
    let p = crate::linalg::projector(Axis::X, 1)?;
    crate::linalg::product_state(&p, model.env_initial())
}

/// The identity on the trace functional: Σ_terms coefficient · tr(term[𝟙/2 ⊗ ρ_E]) with
/// no dynamics. Equals tr(𝒳^{n−1}[ρ]) = 1.
pub fn expansion_trace_sum(terms: &[ExpansionTerm], env_dim: usize) -> Result<f64> {
    let dims = HilbertDims::qubit(env_dim)?;
    let n = dims.total();
    let rho = CMatrix::identity(n, n).scale(1.0 / n as f64);
    let mut total = Complex64::new(0.0, 0.0);
    for term in terms {
        let segments = vec![CMatrix::identity(n, n); term.segments];
        let k = term.operator(dims, &segments)?;
        total += (&k * &rho * k.adjoint()).trace() * term.coefficient as f64;
    }
    ensure_real(SignalKind::P, total)
}

/// Number of expansion terms for n − 1 pulse slots: Σ_k C(n−1, k) 2^k = 3^{n−1}.
pub fn expansion_term_count(n: usize) -> usize {
    3usize.pow(n.saturating_sub(1) as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, product_state, projector, StateOperator};
    use crate::model::{random_model, scalar_dephasing, ModelKind};
    use crate::superop::pulse_map;

    fn general(env: usize, seed: u64) -> ModelSpec {
        random_model(HilbertDims::qubit(env).unwrap(), ModelKind::General, seed).unwrap()
    }

    fn frozen(env: usize) -> ModelSpec {
        let rho_e = StateOperator::maximally_mixed(HilbertDims::new(env, 1).unwrap());
        ModelSpec::frozen(rho_e).unwrap()
    }

    #[test]
    fn schedule_validation() {
        assert!(ProtocolSchedule::composite(vec![1.0, 1.0]).is_err());
        assert!(ProtocolSchedule::composite(vec![2.0, 1.0]).is_err());
        assert!(ProtocolSchedule::composite(vec![-1.0]).is_err());
        assert!(ProtocolSchedule::composite(vec![]).is_err());
        assert!(ProtocolSchedule::new(vec![1.0], vec![]).is_err());
        let s = ProtocolSchedule::alternating(vec![0.0, 1.0, 2.5]).unwrap();
        assert_eq!(s.durations(), vec![0.0, 1.0, 1.5]);
        assert_eq!(s.kinds()[1], SegmentKind::EnvOnly);
    }

    #[test]
    fn pattern_parsing() {
        let p: PulsePattern = "(x),(i),(x)".parse().unwrap();
        assert_eq!(p.to_string(), "xix");
        assert!("xz".parse::<PulsePattern>().is_err());
        assert_eq!(PulsePattern::all_binary(2).len(), 4);
    }

    #[test]
    fn spin_echo_is_u2_x_u1() {
        let m = general(2, 1);
        let s = ProtocolSchedule::composite(vec![0.7, 1.4]).unwrap();
        let echo = dd_map(&m, &s, &"x".parse().unwrap()).unwrap();
        let segs = segment_unitaries(&m, &s).unwrap();
        let u1 = LinearMap::conjugation(&segs[0]);
        let u2 = LinearMap::conjugation(&segs[1]);
        let x = pulse_map(m.dims(), Axis::X).unwrap();
        let explicit = LinearMap::chain(&[&u1, &x, &u2]).unwrap();
        assert!(echo.max_abs_diff(&explicit).unwrap() < CHAIN_TOL);
    }

    #[test]
    fn idle_pattern_without_dynamics_is_identity() {
        let m = frozen(2);
        let s = ProtocolSchedule::composite(vec![1.0, 2.0, 3.0]).unwrap();
        let l = dd_map(&m, &s, &PulsePattern::idle(2)).unwrap();
        assert!(l.max_abs_diff(&LinearMap::identity(4)).unwrap() < 1e-15);
    }

    #[test]
    fn idle_slot_absorbs_into_merged_evolution() {
        let m = general(2, 4);
        let s = ProtocolSchedule::new(
            vec![0.4, 1.1, 1.9, 2.2],
            vec![
                SegmentKind::Composite,
                SegmentKind::Composite,
                SegmentKind::Composite,
                SegmentKind::EnvOnly,
            ],
        )
        .unwrap();
        let full = dd_map(&m, &s, &"xix".parse().unwrap()).unwrap();
        // absorb the idle slot: 𝒰₃∘ℐ∘𝒰₂ merged into one segment
        let segs = segment_unitaries(&m, &s).unwrap();
        let merged = merge_segments(&segs, &[1, 3]);
        assert_eq!(merged.len(), 3);
        let short = dd_operator(m.dims(), &merged, &"xx".parse().unwrap()).unwrap();
        let short = LinearMap::conjugation(&short);
        assert!(full.max_abs_diff(&short).unwrap() <= CHAIN_TOL);
    }

    #[test]
    fn dd_map_rejects_length_mismatch() {
        let m = general(1, 2);
        let s = ProtocolSchedule::composite(vec![1.0, 2.0]).unwrap();
        assert!(matches!(dd_map(&m, &s, &PulsePattern::idle(2)), Err(Error::Domain(_))));
        let seq = OutcomeSequence::all_x(3).remove(0);
        assert!(matches!(
            measurement_branch_map(&m, &s, &seq),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn single_measurement_eigenstate_branches() {
        let m = frozen(2);
        let s = ProtocolSchedule::composite(vec![1.0]).unwrap();
        let rho = plus_state(&m).unwrap();
        for (label, expected) in [("+", 1.0), ("-", 0.0)] {
            let map = measurement_branch_map(&m, &s, &label.parse().unwrap()).unwrap();
            let tr = map.apply(rho.matrix()).unwrap().trace();
            assert!((tr.re - expected).abs() < 1e-14 && tr.im.abs() < 1e-14);
        }
    }

    #[test]
    fn single_measurement_precession() {
        // a_z v = 1/2: ℙ(+) = (1 + cos t)/2
        let m = scalar_dephasing(0.5, 1.0, 0.0, 0.0).unwrap();
        let rho = plus_state(&m).unwrap();
        for t in [0.2, 1.3, 3.0] {
            let s = ProtocolSchedule::composite(vec![t]).unwrap();
            let map = measurement_branch_map(&m, &s, &"+".parse().unwrap()).unwrap();
            let tr = map.apply(rho.matrix()).unwrap().trace().re;
            assert!((tr - (1.0 + t.cos()) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_for_frozen_and_mixed_inputs() {
        let m = frozen(3);
        let s = ProtocolSchedule::composite(vec![1.0, 2.0]).unwrap();
        let rho = plus_state(&m).unwrap();
        let table = outcome_probabilities(&m, &rho, &s).unwrap();
        assert!((table.get(SignalKind::P, &s, "+,+").unwrap() - 1.0).abs() < 1e-14);
        for k in ["+,-", "-,+", "-,-"] {
            assert!(table.get(SignalKind::P, &s, k).unwrap().abs() < 1e-14);
        }
        let s1 = ProtocolSchedule::composite(vec![1.0]).unwrap();
        let half = CMatrix::identity(2, 2).scale(0.5);
        let mixed = product_state(&crate::linalg::DenseOperator::new(half).unwrap(), m.env_initial()).unwrap();
        let table = outcome_probabilities(&m, &mixed, &s1).unwrap();
        assert!((table.get(SignalKind::P, &s1, "+").unwrap() - 0.5).abs() < 1e-14);
        assert!((table.get(SignalKind::P, &s1, "-").unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn two_step_precession_probabilities() {
        // closed form for H = σ_z/2 from |+⟩: each step keeps the sign with
        // probability (1 + cos τ_k)/2 when starting from the previous eigenstate
        let m = scalar_dephasing(0.5, 1.0, 0.3, 1.0).unwrap();
        let (t1, t2) = (0.6, 1.9);
        let s = ProtocolSchedule::composite(vec![t1, t2]).unwrap();
        let table = outcome_probabilities(&m, &plus_state(&m).unwrap(), &s).unwrap();
        let stay = |tau: f64| (1.0 + tau.cos()) / 2.0;
        let flip = |tau: f64| (1.0 - tau.cos()) / 2.0;
        let (a, b) = (t1, t2 - t1);
        let expected = [
            ("+,+", stay(a) * stay(b)),
            ("+,-", stay(a) * flip(b)),
            ("-,+", flip(a) * flip(b)),
            ("-,-", flip(a) * stay(b)),
        ];
        for (k, v) in expected {
            assert!((table.get(SignalKind::P, &s, k).unwrap() - v).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn static_signals() {
        let m = frozen(2);
        let s = ProtocolSchedule::composite(vec![0.5, 1.0, 4.0]).unwrap();
        let plus = plus_state(&m).unwrap();
        assert!((o_signal(&m, &plus, &s).unwrap() - 1.0).abs() < 1e-14);
        let minus = product_state(&projector(Axis::X, -1).unwrap(), m.env_initial()).unwrap();
        assert!((o_signal(&m, &minus, &s).unwrap() + 1.0).abs() < 1e-14);
        let check = verify_on_in_wn(&m, &plus, &s).unwrap();
        assert!((check.lhs - 1.0).abs() < 1e-14 && (check.rhs - 1.0).abs() < 1e-14);
    }

    #[test]
    fn analytic_w_and_o() {
        let m = scalar_dephasing(0.5, 1.0, 0.8, -0.4).unwrap();
        let rho = plus_state(&m).unwrap();
        let t = 2.3;
        let s = ProtocolSchedule::composite(vec![t]).unwrap();
        let w = w_signal(&m, &rho, &s, &PulsePattern::idle(0)).unwrap();
        assert!((w - t.cos()).abs() < 1e-12);
        let echo = ProtocolSchedule::composite(vec![0.9, 1.8]).unwrap();
        let w = w_signal(&m, &rho, &echo, &"x".parse().unwrap()).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
        let (t1, t2) = (0.7, 2.9);
        let s2 = ProtocolSchedule::composite(vec![t1, t2]).unwrap();
        let o2 = o_signal(&m, &rho, &s2).unwrap();
        assert!((o2 - 0.5 * (t2.cos() + (t2 - 2.0 * t1).cos())).abs() < 1e-12);
    }

    #[test]
    fn w_stays_real_with_transverse_coupling() {
        let m = general(4, 12);
        let s = ProtocolSchedule::alternating(vec![0.3, 0.9, 2.0]).unwrap();
        let rho = plus_state(&m).unwrap();
        for p in PulsePattern::all_binary(2) {
            assert!(w_signal(&m, &rho, &s, &p).is_ok());
        }
    }

    #[test]
    fn nonselective_two_step_display() {
        // 𝒪₂(m₂) = ½[𝒫 ∘ 𝒰₂ ∘ 𝒰₁ + 𝒫 ∘ 𝒰₂ ∘ 𝒳 ∘ 𝒰₁]
        let m = general(2, 3);
        let s = ProtocolSchedule::composite(vec![0.8, 1.5]).unwrap();
        let branches = nonselective_map(&m, &s).unwrap();
        let segs = segment_unitaries(&m, &s).unwrap();
        let u1 = LinearMap::conjugation(&segs[0]);
        let u2 = LinearMap::conjugation(&segs[1]);
        let x = pulse_map(m.dims(), Axis::X).unwrap();
        for b in &branches {
            let p = projection_map(m.dims(), b.outcome).unwrap();
            let free = LinearMap::chain(&[&u1, &u2, &p]).unwrap();
            let echo = LinearMap::chain(&[&u1, &x, &u2, &p]).unwrap();
            let display = (&free + &echo).scaled(Complex64::new(0.5, 0.0));
            assert!(b.from_measurements.max_abs_diff(&display).unwrap() < CHAIN_TOL);
            assert!(b.max_abs_error() < CHAIN_TOL);
        }
    }

    #[test]
    fn nonselective_single_step() {
        let m = general(2, 5);
        let s = ProtocolSchedule::composite(vec![1.1]).unwrap();
        for b in nonselective_map(&m, &s).unwrap() {
            assert!(b.max_abs_error() < 1e-14);
        }
    }

    #[test]
    fn spin_echo_expansion_terms() {
        let terms = dd_expansion(2).unwrap();
        let rendered: Vec<String> = terms.iter().map(|t| t.to_string()).collect();
        assert_eq!(rendered, ["−1·[U2 U1]", "+2·[U2 P+ U1]", "+2·[U2 P− U1]"]);
        assert_eq!(terms[1].evolutions, vec![(1, 1), (2, 2)]);
        assert_eq!(terms[0].evolutions, vec![(1, 2)]);
    }

    #[test]
    fn two_pulse_expansion_terms() {
        let terms = dd_expansion(3).unwrap();
        assert_eq!(terms.len(), 9);
        let count = |c: i64| terms.iter().filter(|t| t.coefficient == c).count();
        assert_eq!((count(1), count(-2), count(4)), (1, 4, 4));
        let rendered: Vec<String> = terms.iter().map(|t| t.to_string()).collect();
        for expected in [
            "+1·[U3 U2 U1]",
            "−2·[U3 U2 P+ U1]",
            "−2·[U3 U2 P− U1]",
            "−2·[U3 P+ U2 U1]",
            "−2·[U3 P− U2 U1]",
            "+4·[U3 P+ U2 P+ U1]",
            "+4·[U3 P− U2 P− U1]",
            "+4·[U3 P+ U2 P− U1]",
            "+4·[U3 P− U2 P+ U1]",
        ] {
            assert!(rendered.contains(&expected.to_string()), "{expected}");
        }
    }

    #[test]
    fn expansion_bookkeeping() {
        for n in 1..=6 {
            let terms = dd_expansion(n).unwrap();
            assert_eq!(terms.len(), expansion_term_count(n));
            let by_binomial: usize = (0..n)
                .map(|k| binomial(n - 1, k) * (1 << k))
                .sum();
            assert_eq!(terms.len(), by_binomial);
            let s = expansion_trace_sum(&terms, 2).unwrap();
            assert!((s - 1.0).abs() < 1e-12, "n={n}: {s}");
        }
    }

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn spin_echo_expansion_equals_dd_map() {
        let m = general(2, 9);
        let s = ProtocolSchedule::alternating(vec![0.5, 1.7]).unwrap();
        let expanded = expansion_map(&m, &s, &dd_expansion(2).unwrap()).unwrap();
        let direct = dd_map(&m, &s, &PulsePattern::all_x(1)).unwrap();
        assert!(expanded.max_abs_diff(&direct).unwrap() <= CHAIN_TOL);
    }

    #[test]
    fn merged_segments_products() {
        let m = general(1, 6);
        let s = ProtocolSchedule::composite(vec![0.2, 0.5, 0.9, 1.4]).unwrap();
        let segs = segment_unitaries(&m, &s).unwrap();
        let merged = merge_segments(&segs, &[2]);
        assert_eq!(merged.len(), 2);
        assert!(max_abs_diff(&merged[0], &(&segs[1] * &segs[0])) < 1e-14);
        assert!(max_abs_diff(&merged[1], &(&segs[3] * &segs[2])) < 1e-14);
    }

    #[test]
    fn subset_order() {
        assert_eq!(
            subsets(2),
            vec![vec![], vec![1], vec![2], vec![1, 2]]
        );
    }

    #[test]
    fn signal_identities_need_plus_state() {
        let m = general(1, 1);
        let s = ProtocolSchedule::composite(vec![1.0, 2.0]).unwrap();
        let rho = StateOperator::maximally_mixed(m.dims());
        assert!(verify_on_in_wn(&m, &rho, &s).is_err());
    }
}
