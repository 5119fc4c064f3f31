//! Verification suites over deterministic parameter sweeps.
//!
//! Each sweep cell derives its own model and schedule seeds from the base seed, cells run
//! in parallel, and the report sorts records canonically so output order never depends on
//! scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dephasing::{
    correlation_r, dephasing_steps, kraus_reduction_discrepancy, kraus_sign_collapse,
    relabeling_discrepancy, repreparation_probabilities, repreparation_probabilities_env,
    step_reconstruction_error,
};
use crate::error::{Error, Result};
use crate::extensions::{
    multiqubit_identity_check, qudit_expansion, qudit_prime_identity_check,
    single_shift_span_residual, two_axis_duality_check, IdentityCheck, MultiQubitRegister,
    QuditShiftAlgebra,
};
use crate::linalg::{random_hermitian, Axis, DenseOperator, HilbertDims, ALGEBRA_TOL, CHAIN_TOL};
use crate::model::{random_model, scalar_dephasing, ModelKind, ModelSpec, SegmentKind};
use crate::outcome::Outcome;
use crate::protocol::{
    carr_purcell_2_from_measurements, dd_expansion, dd_map, echo_from_measurements,
    expansion_map, expansion_term_count, expansion_trace_sum, nonselective_map, o_signal,
    plus_state, three_measurements_from_pulses, two_measurements_from_pulses, verify_on_in_wn,
    verify_wn_in_ok, w_signal, ProtocolSchedule, PulsePattern, SignalCheck,
};
use crate::report::{params, CheckRecord, VerificationReport};
use crate::signals::SignalKind;
use crate::superop::{pulse_from_projections, pulse_map, projection_from_pulse, projection_map};

/// Negative-control threshold: the relabeling must break by more than this.
pub const NEGATIVE_CONTROL_GAP: f64 = 1e-3;
/// Least-squares residual a single qudit shift must exceed.
pub const SPAN_RESIDUAL_FLOOR: f64 = 1e-3;

pub const SWEEP_N: [usize; 3] = [2, 3, 4];
pub const SWEEP_ENV: [usize; 4] = [1, 2, 4, 8];
pub const SWEEP_REPS: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    All,
    Pillar,
    Eq3,
    Eq4,
    Eq5,
    Eq6,
    Worked,
    Dephasing,
    Multiqubit,
    Qudit,
    Twoaxis,
}

impl Scope {
    pub const ALL: [Scope; 11] = [
        Scope::All,
        Scope::Pillar,
        Scope::Eq3,
        Scope::Eq4,
        Scope::Eq5,
        Scope::Eq6,
        Scope::Worked,
        Scope::Dephasing,
        Scope::Multiqubit,
        Scope::Qudit,
        Scope::Twoaxis,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scope::All => "all",
            Scope::Pillar => "pillar",
            Scope::Eq3 => "eq3",
            Scope::Eq4 => "eq4",
            Scope::Eq5 => "eq5",
            Scope::Eq6 => "eq6",
            Scope::Worked => "worked",
            Scope::Dephasing => "dephasing",
            Scope::Multiqubit => "multiqubit",
            Scope::Qudit => "qudit",
            Scope::Twoaxis => "twoaxis",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scope::ALL
            .iter()
            .find(|scope| scope.name() == s)
            .copied()
            .ok_or_else(|| Error::Parse(format!("unknown scope `{s}`")))
    }
}

/// Segment generators used across a sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KindPattern {
    Composite,
    Alternating,
}

impl KindPattern {
    pub const BOTH: [KindPattern; 2] = [KindPattern::Composite, KindPattern::Alternating];

    pub fn label(&self) -> &'static str {
        match self {
            KindPattern::Composite => "composite",
            KindPattern::Alternating => "alternating",
        }
    }

    pub fn kinds(&self, n: usize) -> Vec<SegmentKind> {
        (0..n)
            .map(|k| match self {
                KindPattern::Alternating if k % 2 == 1 => SegmentKind::EnvOnly,
                _ => SegmentKind::Composite,
            })
            .collect()
    }
}

/// SplitMix64 over the base seed and a list of cell coordinates.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut z = base;
    for p in parts {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(p.wrapping_mul(0xbf58_476d_1ce4_e5b9));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

/// Strictly increasing times with gaps drawn from U[0.2, 1.2].
pub fn random_schedule(n: usize, kinds: KindPattern, seed: u64) -> Result<ProtocolSchedule> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    let times = (0..n)
        .map(|_| {
            t += rng.random_range(0.2..1.2);
            t
        })
        .collect();
    ProtocolSchedule::new(times, kinds.kinds(n))
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    n: usize,
    env: usize,
    rep: u64,
    kinds: KindPattern,
}

impl Cell {
    fn params(&self) -> BTreeMap<String, String> {
        params([
            ("n", self.n.to_string()),
            ("env_dim", format!("{:02}", self.env)),
            ("rep", self.rep.to_string()),
            ("kinds", self.kinds.label().to_string()),
        ])
    }

    fn model(&self, base: u64, kind: ModelKind) -> Result<ModelSpec> {
        let tag = match kind {
            ModelKind::General => 0,
            ModelKind::PureDephasing => 1,
        };
        random_model(
            HilbertDims::qubit(self.env)?,
            kind,
            derive_seed(base, &[tag, self.env as u64, self.rep]),
        )
    }

    fn schedule(&self, base: u64) -> Result<ProtocolSchedule> {
        let kinds = match self.kinds {
            KindPattern::Composite => 0,
            KindPattern::Alternating => 1,
        };
        random_schedule(
            self.n,
            self.kinds,
            derive_seed(base, &[100, self.n as u64, self.env as u64, self.rep, kinds]),
        )
    }
}

fn cells(ns: &[usize], envs: &[usize]) -> Vec<Cell> {
    let mut out = Vec::new();
    for &n in ns {
        for &env in envs {
            for rep in 0..SWEEP_REPS {
                for kinds in KindPattern::BOTH {
                    out.push(Cell { n, env, rep, kinds });
                }
            }
        }
    }
    out
}

/// Runs `f` on every cell in parallel; an error becomes a failing record.
fn run_cells<F>(cells: &[Cell], check_id: &str, identity: &str, f: F) -> Vec<CheckRecord>
where
    F: Fn(&Cell) -> Result<Vec<CheckRecord>> + Sync,
{
    cells
        .par_iter()
        .flat_map_iter(|cell| {
            f(cell).unwrap_or_else(|e| {
                vec![CheckRecord::errored(check_id, identity, cell.params(), e.to_string())]
            })
        })
        .collect()
}

fn signal_record(check_id: &str, identity: &str, p: BTreeMap<String, String>, c: SignalCheck) -> CheckRecord {
    CheckRecord::assert_below(check_id, identity, p, c.abs_error, c.threshold)
}

fn identity_record(check_id: &str, identity: &str, p: BTreeMap<String, String>, c: &IdentityCheck) -> CheckRecord {
    CheckRecord::assert_below(check_id, identity, p, c.max_abs_error, c.threshold)
}

fn with(mut p: BTreeMap<String, String>, key: &str, value: impl ToString) -> BTreeMap<String, String> {
    p.insert(key.to_string(), value.to_string());
    p
}

pub fn pillar_suite() -> Vec<CheckRecord> {
    let mut out = Vec::new();
    for env in SWEEP_ENV {
        let dims = HilbertDims::qubit(env).expect("positive dimension");
        for axis in [Axis::X, Axis::Y] {
            let p = params([
                ("total_dim", format!("{:02}", dims.total())),
                ("axis", axis.label().to_string()),
            ]);
            let pulse = pulse_map(dims, axis).and_then(|x| x.max_abs_diff(&pulse_from_projections(dims, axis)?));
            out.push(match pulse {
                Ok(err) => CheckRecord::assert_below("pillar.pulse", "pulse = 2(P+ + P-) - I", p.clone(), err, ALGEBRA_TOL),
                Err(e) => CheckRecord::errored("pillar.pulse", "pulse = 2(P+ + P-) - I", p.clone(), e.to_string()),
            });
            for outcome in Outcome::for_axis(axis).expect("x and y have outcomes") {
                let err = projection_map(dims, outcome)
                    .and_then(|m| m.max_abs_diff(&projection_from_pulse(dims, outcome)?));
                let p = with(p.clone(), "outcome", outcome);
                out.push(match err {
                    Ok(err) => CheckRecord::assert_below(
                        "pillar.projection",
                        "P_m = (I + pulse + m D)/4",
                        p,
                        err,
                        ALGEBRA_TOL,
                    ),
                    Err(e) => CheckRecord::errored("pillar.projection", "P_m = (I + pulse + m D)/4", p, e.to_string()),
                });
            }
        }
    }
    out
}

pub fn nonselective_suite(seed: u64) -> Vec<CheckRecord> {
    let id = "nonselective-average";
    let identity = "sum of measurement branches = projected average over pulse patterns";
    run_cells(&cells(&SWEEP_N, &SWEEP_ENV), id, identity, |cell| {
        let model = cell.model(seed, ModelKind::General)?;
        let schedule = cell.schedule(seed)?;
        Ok(nonselective_map(&model, &schedule)?
            .into_iter()
            .map(|b| {
                CheckRecord::assert_below(
                    id,
                    identity,
                    with(cell.params(), "m_n", b.outcome),
                    b.max_abs_error(),
                    CHAIN_TOL,
                )
            })
            .collect())
    })
}

/// Expected signed expansion text for n = 2 and n = 3, as sorted term lists.
pub fn reference_expansion_terms(n: usize) -> Option<Vec<&'static str>> {
    let mut terms = match n {
        2 => vec!["−1·[U2 U1]", "+2·[U2 P+ U1]", "+2·[U2 P− U1]"],
        3 => vec![
            "+1·[U3 U2 U1]",
            "−2·[U3 U2 P+ U1]",
            "−2·[U3 U2 P− U1]",
            "−2·[U3 P+ U2 U1]",
            "−2·[U3 P− U2 U1]",
            "+4·[U3 P+ U2 P+ U1]",
            "+4·[U3 P− U2 P− U1]",
            "+4·[U3 P+ U2 P− U1]",
            "+4·[U3 P− U2 P+ U1]",
        ],
        _ => return None,
    };
    terms.sort_unstable();
    Some(terms)
}

pub fn expansion_suite(seed: u64) -> Vec<CheckRecord> {
    let id = "signed-expansion";
    let identity = "pulse sequence = signed sum of measurement sequences";
    let mut out = run_cells(&cells(&SWEEP_N, &SWEEP_ENV), id, identity, |cell| {
        let model = cell.model(seed, ModelKind::General)?;
        let schedule = cell.schedule(seed)?;
        let direct = dd_map(&model, &schedule, &PulsePattern::all_x(cell.n - 1))?;
        let expanded = expansion_map(&model, &schedule, &dd_expansion(cell.n)?)?;
        Ok(vec![CheckRecord::assert_below(
            id,
            identity,
            cell.params(),
            direct.max_abs_diff(&expanded)?,
            CHAIN_TOL,
        )])
    });
    for n in [2, 3] {
        let reference = reference_expansion_terms(n).expect("reference exists");
        let mut rendered: Vec<String> = dd_expansion(n)
            .expect("n ≥ 1")
            .iter()
            .map(|t| t.to_string())
            .collect();
        rendered.sort_unstable();
        let mismatch = rendered != reference;
        out.push(
            CheckRecord::assert_below(
                "signed-expansion.symbolic",
                "term multiset and coefficients of the written-out expansion",
                params([("n", n.to_string())]),
                if mismatch { 1.0 } else { 0.0 },
                0.0,
            )
            .with_note(rendered.join(" ")),
        );
    }
    for n in 1..=6 {
        let terms = dd_expansion(n).expect("n ≥ 1");
        let count_err = (terms.len() as f64 - expansion_term_count(n) as f64).abs();
        let trace_err = expansion_trace_sum(&terms, 2).map(|s| (s - 1.0).abs()).unwrap_or(f64::NAN);
        out.push(CheckRecord::assert_below(
            "signed-expansion.bookkeeping",
            "3^(n-1) terms whose signed traces sum to one",
            params([("n", n.to_string())]),
            count_err.max(trace_err),
            ALGEBRA_TOL,
        ));
    }
    out
}

fn signal_cells() -> Vec<Cell> {
    cells(&SWEEP_N, &SWEEP_ENV)
}

pub fn o_from_w_suite(seed: u64) -> Vec<CheckRecord> {
    let id = "signal.o-from-w";
    let identity = "O_n = average of W over all pulse patterns";
    run_cells(&signal_cells(), id, identity, |cell| {
        let model = cell.model(seed, ModelKind::General)?;
        let schedule = cell.schedule(seed)?;
        let rho = plus_state(&model)?;
        Ok(vec![signal_record(id, identity, cell.params(), verify_on_in_wn(&model, &rho, &schedule)?)])
    })
}

pub fn w_from_o_suite(seed: u64) -> Vec<CheckRecord> {
    let id = "signal.w-from-o";
    let identity = "W_(x..x) = signed sum of O_k over measurement subsets";
    run_cells(&signal_cells(), id, identity, |cell| {
        let model = cell.model(seed, ModelKind::General)?;
        let schedule = cell.schedule(seed)?;
        let rho = plus_state(&model)?;
        Ok(vec![signal_record(id, identity, cell.params(), verify_wn_in_ok(&model, &rho, &schedule)?)])
    })
}

/// a_z·v = ½ so the free precession is cos t.
pub fn analytic_model() -> Result<ModelSpec> {
    scalar_dephasing(0.5, 1.0, 0.7, 1.3)
}

pub fn analytic_suite() -> Result<Vec<CheckRecord>> {
    let model = analytic_model()?;
    let rho = plus_state(&model)?;
    let grid: Vec<f64> = (1..=100).map(|k| 0.1 * k as f64).collect();

    let mut idle = 0.0f64;
    let mut echo = 0.0f64;
    for &t in &grid {
        let s = ProtocolSchedule::composite(vec![t])?;
        idle = idle.max((w_signal(&model, &rho, &s, &PulsePattern::idle(0))? - t.cos()).abs());
        let s = ProtocolSchedule::composite(vec![t, 2.0 * t])?;
        echo = echo.max((w_signal(&model, &rho, &s, &PulsePattern::all_x(1))? - 1.0).abs());
    }
    let mut two = 0.0f64;
    for (k, &t2) in grid.iter().enumerate().skip(1) {
        for &t1 in grid.iter().take(k).step_by(7) {
            let s = ProtocolSchedule::composite(vec![t1, t2])?;
            let expected = 0.5 * (t2.cos() + (t2 - 2.0 * t1).cos());
            two = two.max((o_signal(&model, &rho, &s)? - expected).abs());
        }
    }
    let p = params([("grid", "100".to_string())]);
    Ok(vec![
        CheckRecord::assert_below("analytic.free-induction", "W_idle(t) = cos t", p.clone(), idle, CHAIN_TOL),
        CheckRecord::assert_below("analytic.echo", "W_(x)(2t, t) = 1", p.clone(), echo, CHAIN_TOL),
        CheckRecord::assert_below(
            "analytic.two-measurements",
            "O_2(t2, t1) = [cos t2 + cos(t2 - 2 t1)]/2",
            p,
            two,
            CHAIN_TOL,
        ),
    ])
}

pub fn worked_suite(seed: u64) -> Vec<CheckRecord> {
    let mut out = run_cells(&cells(&[2], &SWEEP_ENV), "worked.echo", "", |cell| {
        let model = cell.model(seed, ModelKind::General)?;
        let schedule = cell.schedule(seed)?;
        let rho = plus_state(&model)?;
        Ok(vec![
            signal_record(
                "worked.echo",
                "W_(x)(t2, t1) = 2 O_2(t2, t1) - O_1(t2)",
                cell.params(),
                echo_from_measurements(&model, &rho, &schedule)?,
            ),
            signal_record(
                "worked.two-measurements",
                "O_2 = [W_(i) + W_(x)]/2",
                cell.params(),
                two_measurements_from_pulses(&model, &rho, &schedule)?,
            ),
        ])
    });
    out.extend(run_cells(&cells(&[3], &SWEEP_ENV), "worked.three-measurements", "", |cell| {
        let model = cell.model(seed, ModelKind::General)?;
        let schedule = cell.schedule(seed)?;
        let rho = plus_state(&model)?;
        let tau = schedule.times()[0];
        let kinds = cell.kinds.kinds(3);
        Ok(vec![
            signal_record(
                "worked.three-measurements",
                "O_3 = average of the four two-slot W",
                cell.params(),
                three_measurements_from_pulses(&model, &rho, &schedule)?,
            ),
            signal_record(
                "worked.carr-purcell-2",
                "W_CP2(4t) = O_1 - 2[O_2(4t, t) + O_2(4t, 3t)] + 4 O_3",
                with(cell.params(), "tau", format!("{tau:.6}")),
                carr_purcell_2_from_measurements(&model, &rho, tau, [kinds[0], kinds[1], kinds[2]])?,
            ),
        ])
    }));
    match analytic_suite() {
        Ok(records) => out.extend(records),
        Err(e) => out.push(CheckRecord::errored("analytic", "closed-form precession", params([]), e.to_string())),
    }
    out
}

/// A dephasing model with an extra transverse coupling σ_x ⊗ V_x.
pub fn transverse_model(env: usize, seed: u64) -> Result<ModelSpec> {
    let base = random_model(HilbertDims::qubit(env)?, ModelKind::PureDephasing, seed)?;
    let p = base.dephasing().expect("dephasing model").clone();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[7]));
    let mut couplings = BTreeMap::new();
    couplings.insert(Axis::Z, p.v_z.scale(p.a_z));
    couplings.insert(Axis::X, DenseOperator::new(random_hermitian(&mut rng, env))?);
    ModelSpec::new(
        env,
        DenseOperator::zeros(2),
        p.v_1.scale(p.a_1),
        couplings,
        base.env_initial().clone(),
        seed,
    )
}

pub fn dephasing_suite(seed: u64) -> Vec<CheckRecord> {
    let cells = cells(&[1, 2, 3, 4], &[1, 2, 4]);
    let mut out = run_cells(&cells, "dephasing", "pure dephasing", |cell| {
        let model = cell.model(seed, ModelKind::PureDephasing)?;
        let schedule = cell.schedule(seed)?;
        let rho = plus_state(&model)?;
        let p = cell.params();
        let steps = dephasing_steps(&model, &schedule)?;
        let full = repreparation_probabilities(&model, &rho, &schedule)?;
        let env = repreparation_probabilities_env(&model, &schedule)?;
        let mut env_vs_full = 0.0f64;
        for (key, v) in env.values_of(SignalKind::PR) {
            let w = full
                .get(SignalKind::PR, &schedule, &key.key)
                .ok_or_else(|| Error::Invariant("missing entry".into()))?;
            env_vs_full = env_vs_full.max((v - w).abs());
        }
        let corr = (correlation_r(&model, &rho, &schedule)? - o_signal(&model, &rho, &schedule)?).abs();
        let mut records = vec![
            CheckRecord::assert_below(
                "dephasing.step-reconstruction",
                "branch unitaries rebuild the full evolution",
                p.clone(),
                step_reconstruction_error(&model, &schedule)?,
                ALGEBRA_TOL,
            ),
            CheckRecord::assert_below(
                "dephasing.kraus-reduction",
                "environment-side Kraus products = full-space probabilities",
                p.clone(),
                kraus_reduction_discrepancy(&model, &schedule)?,
                CHAIN_TOL,
            ),
            CheckRecord::assert_below(
                "dephasing.kraus-sign",
                "K_(m,p) = K_(mp,+)",
                p.clone(),
                kraus_sign_collapse(&steps)?,
                ALGEBRA_TOL,
            ),
            CheckRecord::assert_below(
                "dephasing.repreparation-env",
                "re-preparation table: full-space channel = environment-side Kraus",
                p.clone(),
                env_vs_full,
                CHAIN_TOL,
            ),
            CheckRecord::assert_below(
                "dephasing.relabeling",
                "P(m) = P_R(relabel(m))",
                p.clone(),
                relabeling_discrepancy(&model, &rho, &schedule)?,
                ALGEBRA_TOL,
            ),
            CheckRecord::assert_below(
                "dephasing.correlation",
                "<prod m'_k>_R = O_n",
                p.clone(),
                corr,
                CHAIN_TOL,
            ),
        ];
        if cell.n == 2 {
            let wi = w_signal(&model, &rho, &schedule, &"i".parse()?)?;
            let wx = w_signal(&model, &rho, &schedule, &"x".parse()?)?;
            let c = correlation_r(&model, &rho, &schedule)?;
            records.push(CheckRecord::assert_below(
                "dephasing.correlation-two-measurements",
                "<m'_1 m'_2>_R = [W_(i) + W_(x)]/2",
                p,
                (c - 0.5 * (wi + wx)).abs(),
                CHAIN_TOL,
            ));
        }
        Ok(records)
    });

    let mut worst = 0.0f64;
    let mut failure = None;
    for rep in 0..SWEEP_REPS {
        for n in [2, 3] {
            let attempt = (|| -> Result<f64> {
                let model = transverse_model(2, derive_seed(seed, &[200, rep]))?;
                let schedule = random_schedule(n, KindPattern::Composite, derive_seed(seed, &[201, rep, n as u64]))?;
                relabeling_discrepancy(&model, &plus_state(&model)?, &schedule)
            })();
            match attempt {
                Ok(d) => worst = worst.max(d),
                Err(e) => failure = Some(e.to_string()),
            }
        }
    }
    let p = params([("env_dim", "02".to_string()), ("instances", (2 * SWEEP_REPS).to_string())]);
    out.push(match failure {
        Some(msg) => CheckRecord::errored("dephasing.negative-control", "relabeling with transverse coupling", p, msg),
        None => CheckRecord::expect_above(
            "dephasing.negative-control",
            "relabeling with transverse coupling",
            p,
            worst,
            NEGATIVE_CONTROL_GAP,
        ),
    });
    out
}

pub fn multiqubit_suite(seed: u64) -> Vec<CheckRecord> {
    let mut grid = Vec::new();
    for n in [1, 2, 3] {
        for env in [1, 2] {
            grid.push((n, env));
        }
    }
    grid.par_iter()
        .flat_map_iter(|&(n, env)| {
            let p = params([("n_qubits", n.to_string()), ("env_dim", env.to_string())]);
            let report = MultiQubitRegister::new(n, env)
                .and_then(|r| multiqubit_identity_check(&r, derive_seed(seed, &[300, n as u64, env as u64])));
            match report {
                Err(e) => vec![CheckRecord::errored("multiqubit", "local pulse product", p, e.to_string())],
                Ok(r) => {
                    let mut v = vec![
                        identity_record("multiqubit.product", "prod(I + X_j) = 2^n prod(P+_j + P-_j)", p.clone(), &r.product_identity),
                        identity_record("multiqubit.commutation", "local maps on distinct qubits commute", p.clone(), &r.commutation),
                        identity_record("multiqubit.interlaced", "two slots interlaced with random evolutions", p.clone(), &r.interlaced),
                    ];
                    if let Some(c) = &r.explicit_two_qubit {
                        v.push(identity_record("multiqubit.two-qubit-terms", "four coherent terms = 4 x four measurement terms", p, c));
                    }
                    v
                }
            }
        })
        .collect()
}

pub fn qudit_suite(seed: u64) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    for d in 2..=8usize {
        let p = params([("d", d.to_string())]);
        let alg = match QuditShiftAlgebra::new(d) {
            Ok(a) => a,
            Err(e) => {
                out.push(CheckRecord::errored("qudit", "shift algebra", p, e.to_string()));
                continue;
            }
        };
        out.push(CheckRecord::assert_below(
            "qudit.algebra",
            "g^d = 1, g = sum m_i P_i, orthogonal complete projectors, roots sum to zero",
            p.clone(),
            alg.invariant_error(),
            ALGEBRA_TOL,
        ));
        out.push(CheckRecord::assert_below(
            "qudit.closure",
            "outcomes closed under multiplication and conjugation",
            p.clone(),
            if alg.outcomes_closed() { 0.0 } else { 1.0 },
            0.0,
        ));
        out.push(CheckRecord::assert_below(
            "qudit.geometric-series",
            "full-cycle sum of every root other than 1 vanishes",
            p.clone(),
            alg.geometric_series_error(),
            ALGEBRA_TOL,
        ));
        out.push(
            CheckRecord::info(
                "qudit.powers-generate-all",
                "powers of every non-trivial root give the whole outcome set",
                p.clone(),
                if alg.powers_generate_all() { 1.0 } else { 0.0 },
            )
            .with_note(if alg.powers_generate_all() {
                "all non-trivial roots primitive"
            } else {
                "some non-trivial root is not primitive"
            }),
        );
        match qudit_expansion(&alg, 1) {
            Ok(e) => {
                out.push(CheckRecord::assert_below(
                    "qudit.decomposition",
                    "I + sum S_k = d sum P_i + sum c_ij Q_ij",
                    p.clone(),
                    e.decomposition_error(),
                    ALGEBRA_TOL,
                ));
                if d == 6 {
                    for t in &e.residual_terms {
                        out.push(CheckRecord::info(
                            "qudit.residual-listing",
                            "cross-term coefficient c_ij",
                            params([("d", d.to_string()), ("i", t.i.to_string()), ("j", t.j.to_string())]),
                            t.coefficient.norm(),
                        ));
                    }
                }
            }
            Err(err) => out.push(CheckRecord::errored("qudit.decomposition", "", p.clone(), err.to_string())),
        }
        for env in [1usize, 2] {
            let p = with(p.clone(), "env_dim", env);
            match qudit_prime_identity_check(&alg, env, derive_seed(seed, &[400, d as u64, env as u64])) {
                Ok(r) => {
                    out.push(identity_record("qudit.residual-consistency", "measured residual = sum c_ij Q_ij", p.clone(), &r.consistency));
                    match &r.identity {
                        Some(c) => out.push(identity_record("qudit.shift-sum", "I + sum S_k = d sum P_i", p, c)),
                        None => out.push(CheckRecord::info("qudit.shift-sum", "I + sum S_k = d sum P_i", p, r.residual_norm)),
                    }
                }
                Err(e) => out.push(CheckRecord::errored("qudit.shift-sum", "", p, e.to_string())),
            }
        }
    }
    let alg = QuditShiftAlgebra::new(3).expect("d = 3 is valid");
    let p = params([("d", "3".to_string()), ("k", "1".to_string())]);
    out.push(match single_shift_span_residual(&alg, 1) {
        Ok(r) => CheckRecord::assert_above(
            "qudit.single-shift-span",
            "one shift is not a combination of identity and projections",
            p,
            r,
            SPAN_RESIDUAL_FLOOR,
        ),
        Err(e) => CheckRecord::errored("qudit.single-shift-span", "", p, e.to_string()),
    });
    out
}

pub fn two_axis_suite(seed: u64) -> Vec<CheckRecord> {
    let patterns: Vec<Vec<Axis>> = vec![
        vec![Axis::X],
        vec![Axis::Y],
        vec![Axis::X, Axis::Y],
        vec![Axis::Y, Axis::X],
        vec![Axis::Y, Axis::Y],
        vec![Axis::X, Axis::Y, Axis::X],
    ];
    let mut grid = Vec::new();
    for pattern in &patterns {
        for env in [1usize, 2] {
            for rep in 0..SWEEP_REPS {
                grid.push((pattern.clone(), env, rep));
            }
        }
    }
    grid.par_iter()
        .flat_map_iter(|(axes, env, rep)| {
            let label: String = axes.iter().map(|a| a.label()).collect();
            let p = params([
                ("axes", label),
                ("env_dim", env.to_string()),
                ("rep", rep.to_string()),
            ]);
            let n = axes.len() + 1;
            let result = (|| -> Result<_> {
                let model = random_model(HilbertDims::qubit(*env)?, ModelKind::General, derive_seed(seed, &[500, *env as u64, *rep]))?;
                let schedule = random_schedule(n, KindPattern::Alternating, derive_seed(seed, &[501, n as u64, *rep]))?;
                two_axis_duality_check(&model, &schedule, axes)
            })();
            match result {
                Err(e) => vec![CheckRecord::errored("twoaxis", "mixed-axis duality", p, e.to_string())],
                Ok(r) => {
                    let mut v = vec![
                        identity_record("twoaxis.pillar-y", "Y = 2(P+i + P-i) - I", p.clone(), &r.pillar_y),
                        identity_record("twoaxis.signed-expansion", "mixed-axis pulses = signed measurement sum", p.clone(), &r.expansion),
                    ];
                    for (c, m) in r.nonselective.iter().zip(Outcome::X) {
                        v.push(identity_record(
                            "twoaxis.nonselective-average",
                            "mixed-axis measurements = averaged mixed-axis pulses",
                            with(p.clone(), "m_n", m),
                            c,
                        ));
                    }
                    v
                }
            }
        })
        .collect()
}

/// Runs one scope and assembles the canonical report (without timing).
pub fn run_scope(scope: Scope, seed: u64) -> VerificationReport {
    let mut records = Vec::new();
    let wants = |s: Scope| scope == Scope::All || scope == s;
    if wants(Scope::Pillar) {
        records.extend(pillar_suite());
    }
    if wants(Scope::Eq3) {
        records.extend(nonselective_suite(seed));
    }
    if wants(Scope::Eq4) {
        records.extend(expansion_suite(seed));
    }
    if wants(Scope::Eq5) {
        records.extend(o_from_w_suite(seed));
    }
    if wants(Scope::Eq6) {
        records.extend(w_from_o_suite(seed));
    }
    if wants(Scope::Worked) {
        records.extend(worked_suite(seed));
    }
    if wants(Scope::Dephasing) {
        records.extend(dephasing_suite(seed));
    }
    if wants(Scope::Multiqubit) {
        records.extend(multiqubit_suite(seed));
    }
    if wants(Scope::Qudit) {
        records.extend(qudit_suite(seed));
    }
    if wants(Scope::Twoaxis) {
        records.extend(two_axis_suite(seed));
    }
    VerificationReport::new(scope.name(), seed, records)
}
