//! Damped fixed-point iteration of `Γ = Pr ∘ M`.
//!
//! Each step computes a best response `y_i ∈ M_i(x_{-i})` for every player,
//! projects it back onto `X_i` under `p_i`, and averages with the current
//! iterate:
//!
//! ```text
//! x_i ← (1 - θ) x_i + θ Pr_i(y_i)
//! ```
//!
//! Iterates stay in `∏ X_i` because both endpoints of the average do. A run
//! is declared converged only when the step falls below `tol_fp` *and* the
//! resulting pair `(x, y)` passes the certificate at `tol_cert`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::certify::{certify_prepared, CertReport, CertifyError};
use crate::geometry::{GeometryError, SemiNorm};
use crate::model::{CandidateSolution, Diagnostic, GameInstance, GameKind, PreparedGame, Profile, Severity};
use crate::par;
use crate::response::{best_response_prepared, ResponseConfig, ResponseError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveConfig {
    /// Largest per-player `p_i` step accepted as stagnation.
    pub tol_fp: f64,
    pub tol_cert: f64,
    pub max_iter: usize,
    /// Averaging factor θ ∈ (0, 1].
    pub damping: f64,
    pub multistart: usize,
    pub seed: u64,
    pub response: ResponseConfig,
    pub trace: bool,
    /// Keep running the remaining starts after one converges.
    pub exhaust_starts: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol_fp: 1e-8,
            tol_cert: 1e-6,
            max_iter: 500,
            damping: 1.0,
            multistart: 8,
            seed: 42,
            response: ResponseConfig::default(),
            trace: false,
            exhaust_starts: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub x: Profile,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartOutcome {
    pub start: usize,
    pub converged: bool,
    pub iterations: usize,
    pub solution: CandidateSolution,
    pub residuals: CertReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    pub solution: CandidateSolution,
    pub residuals: CertReport,
    pub iterations: usize,
    pub starts_used: usize,
    pub seed: u64,
    pub trace: Option<Vec<TraceEntry>>,
    /// Every start that was run, in order.
    pub starts: Vec<StartOutcome>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("instance kind is {found:?}, expected {expected:?}")]
    WrongKind { expected: GameKind, found: GameKind },
    #[error("invalid instance: {0}")]
    Invalid(Diagnostic),
    #[error("start {start}, iteration {iteration}, iterate {x:?}: {source}")]
    Iterate {
        start: usize,
        iteration: usize,
        x: Profile,
        source: ResponseError,
    },
    #[error("start {start}: certificate failed: {source}")]
    Certify { start: usize, source: CertifyError },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub fn solve_gnep(inst: &GameInstance, cfg: &SolveConfig) -> Result<SolveReport, SolveError> {
    expect_kind(inst, GameKind::Gnep)?;
    solve_impl(inst, cfg)
}

/// Quasi-optimization `QuOp(K, f)` as a one-player game: returns `ū` as the
/// single `x̃` entry and `v̄` as the single `ỹ` entry.
pub fn solve_quopt(inst: &GameInstance, cfg: &SolveConfig) -> Result<SolveReport, SolveError> {
    expect_kind(inst, GameKind::Quopt)?;
    solve_impl(inst, cfg)
}

/// Dispatches on the instance kind.
pub fn solve(inst: &GameInstance, cfg: &SolveConfig) -> Result<SolveReport, SolveError> {
    match inst.kind {
        GameKind::Gnep => solve_gnep(inst, cfg),
        GameKind::Quopt => solve_quopt(inst, cfg),
    }
}

fn expect_kind(inst: &GameInstance, expected: GameKind) -> Result<(), SolveError> {
    if inst.kind != expected {
        return Err(SolveError::WrongKind {
            expected,
            found: inst.kind,
        });
    }
    if let Some(d) = inst.validate().into_iter().find(|d| d.severity == Severity::Error) {
        return Err(SolveError::Invalid(d));
    }
    Ok(())
}

/// Start 0 projects each bounding-box midpoint into `X_i`; later starts
/// project seeded uniform samples of the bounding box.
pub fn start_points(inst: &GameInstance, count: usize, seed: u64) -> Result<Vec<Profile>, GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for s in 0..count {
        let mut prof = Vec::with_capacity(inst.n_players());
        for p in &inst.players {
            let (lo, hi) = p.strategy_set.bounding_box();
            let raw: Vec<f64> = if s == 0 {
                lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
            } else {
                lo.iter()
                    .zip(&hi)
                    .map(|(&a, &b)| if b > a { rng.gen_range(a..=b) } else { a })
                    .collect()
            };
            prof.push(p.strategy_set.project(&SemiNorm::euclidean(p.dim), &raw)?.point);
        }
        out.push(prof);
    }
    Ok(out)
}

fn solve_impl(inst: &GameInstance, cfg: &SolveConfig) -> Result<SolveReport, SolveError> {
    let game = inst.prepare().map_err(|e| {
        SolveError::Invalid(Diagnostic {
            severity: Severity::Error,
            category: crate::model::Category::Scope,
            location: "players".into(),
            message: e.to_string(),
        })
    })?;
    let starts = start_points(inst, cfg.multistart.max(1), cfg.seed)?;
    let mut outcomes: Vec<StartOutcome> = Vec::new();
    for (s, x0) in starts.into_iter().enumerate() {
        let outcome = run_start(&game, cfg, s, x0)?;
        let done = outcome.converged && !cfg.exhaust_starts;
        outcomes.push(outcome);
        if done {
            break;
        }
    }
    let pick = outcomes
        .iter()
        .position(|o| o.converged)
        .unwrap_or_else(|| {
            // lowest residual, earliest start on ties
            let mut best = 0;
            for (k, o) in outcomes.iter().enumerate() {
                if o.residuals.max < outcomes[best].residuals.max {
                    best = k;
                }
            }
            best
        });
    let chosen = &outcomes[pick];
    Ok(SolveReport {
        converged: chosen.converged,
        solution: chosen.solution.clone(),
        residuals: chosen.residuals.clone(),
        iterations: chosen.iterations,
        starts_used: outcomes.len(),
        seed: cfg.seed,
        trace: chosen.trace.clone(),
        starts: outcomes,
    })
}

fn run_start(game: &PreparedGame<'_>, cfg: &SolveConfig, start: usize, x0: Profile) -> Result<StartOutcome, SolveError> {
    let inst = game.inst;
    let theta = cfg.damping;
    let mut x = x0;
    let mut y: Profile = Vec::new();
    let mut trace = cfg.trace.then(Vec::new);
    let mut iterations = 0;
    let mut stagnated = false;

    for k in 0..cfg.max_iter.max(1) {
        let flat = game.flatten(&x);
        let responses = par::map_range(inst.n_players(), |i| {
            best_response_prepared(game, i, &flat, &cfg.response).map(|(_, br)| br.y_star)
        });
        y = responses
            .into_iter()
            .collect::<Result<_, _>>()
            .map_err(|source| SolveError::Iterate {
                start,
                iteration: k,
                x: x.clone(),
                source,
            })?;

        let mut next = Vec::with_capacity(inst.n_players());
        let mut step: f64 = 0.0;
        for (i, p) in inst.players.iter().enumerate() {
            let pr = p
                .strategy_set
                .project(&p.seminorm, &y[i])
                .map_err(|e| SolveError::Iterate {
                    start,
                    iteration: k,
                    x: x.clone(),
                    source: e.into(),
                })?;
            let xi: Vec<f64> = x[i]
                .iter()
                .zip(&pr.point)
                .map(|(a, b)| if theta == 1.0 { *b } else { (1.0 - theta) * a + theta * b })
                .collect();
            step = step.max(p.seminorm.dist(&xi, &x[i])?);
            next.push(xi);
        }
        x = next;
        iterations = k + 1;
        if let Some(t) = trace.as_mut() {
            t.push(TraceEntry { x: x.clone(), step });
        }
        if step <= cfg.tol_fp {
            stagnated = true;
            break;
        }
    }

    let solution = CandidateSolution { x_tilde: x, y_tilde: y };
    let residuals = certify_prepared(game, &solution, cfg.tol_cert, &cfg.response)
        .map_err(|source| SolveError::Certify { start, source })?;
    Ok(StartOutcome {
        start,
        converged: stagnated && residuals.passed,
        iterations,
        solution,
        residuals,
        trace,
    })
}
