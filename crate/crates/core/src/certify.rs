//! Certificates for best approximate solutions and classical equilibria.
//!
//! A pair `(x̃, ỹ)` is a best approximate solution when, for every player,
//! `x̃_i ∈ X_i`, `p_i(ỹ_i - x̃_i) = d_{p_i}(ỹ_i, X_i)`, `ỹ_i ∈ F_i(x̃_{-i})` and
//! `ỹ_i` maximizes `u_i(x̃_{-i}, ·)` over `F_i(x̃_{-i})`. [`certify`] measures
//! the slack in each of the four conditions.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::model::{CandidateSolution, GameInstance, PreparedGame};
use crate::response::{maximize, objective_fn, snap_gap, ResponseConfig, ResponseError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerResiduals {
    /// Violation of `x̃_i ∈ X_i`.
    pub feas_x: f64,
    /// `|p_i(ỹ_i - x̃_i) - d_{p_i}(ỹ_i, X_i)|`.
    pub proj_residual: f64,
    /// Violation of `ỹ_i ∈ F_i(x̃_{-i})`.
    pub feas_f: f64,
    /// Best attainable payoff minus the payoff at `ỹ_i`.
    pub opt_residual: f64,
}

impl PlayerResiduals {
    pub fn max(&self) -> f64 {
        self.feas_x
            .max(self.proj_residual)
            .max(self.feas_f)
            .max(self.opt_residual)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertReport {
    pub players: Vec<PlayerResiduals>,
    pub max: f64,
    pub tol: f64,
    pub passed: bool,
    /// Grid resolution used by the best-response polish that backs
    /// `opt_residual`.
    pub oracle_resolution: usize,
}

impl CertReport {
    pub fn passes_at(&self, tol: f64) -> bool {
        self.max <= tol
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifyError {
    #[error(transparent)]
    Dimension(#[from] GeometryError),
    #[error("player {player}: {source}")]
    Player { player: usize, source: ResponseError },
    #[error("invalid instance: {0}")]
    Compile(crate::expr::EvalError),
}

pub fn certify(
    inst: &GameInstance,
    cand: &CandidateSolution,
    tol: f64,
    cfg: &ResponseConfig,
) -> Result<CertReport, CertifyError> {
    inst.check_profile(&cand.x_tilde)?;
    inst.check_profile(&cand.y_tilde)?;
    let game = inst.prepare().map_err(CertifyError::Compile)?;
    certify_prepared(&game, cand, tol, cfg)
}

pub(crate) fn certify_prepared(
    game: &PreparedGame<'_>,
    cand: &CandidateSolution,
    tol: f64,
    cfg: &ResponseConfig,
) -> Result<CertReport, CertifyError> {
    let inst = game.inst;
    let flat = game.flatten(&cand.x_tilde);
    let mut players = Vec::with_capacity(inst.n_players());
    for (i, p) in inst.players.iter().enumerate() {
        let wrap = |source: ResponseError| CertifyError::Player { player: i + 1, source };
        let x = &cand.x_tilde[i];
        let y = &cand.y_tilde[i];
        let feas_x = p.strategy_set.violation(x)?;
        let d = p
            .strategy_set
            .distance(&p.seminorm, y)
            .map_err(|e| wrap(e.into()))?;
        let proj_residual = (p.seminorm.dist(y, x)? - d).abs();

        let set = game.realize(i, &flat).map_err(|e| wrap(e.into()))?;
        let feas_f = set.violation(y)?;
        let br = maximize(&set, objective_fn(game, i, &flat), cfg, i + 1).map_err(wrap)?;
        let uy = objective_fn(game, i, &flat)(y).map_err(|source| {
            wrap(ResponseError::Objective {
                player: i + 1,
                point: y.clone(),
                source,
            })
        })?;
        let opt_residual = snap_gap((br.value - uy).max(0.0), cfg.tol_value);
        players.push(PlayerResiduals {
            feas_x,
            proj_residual,
            feas_f,
            opt_residual,
        });
    }
    let max = players.iter().map(PlayerResiduals::max).fold(0.0, f64::max);
    Ok(CertReport {
        players,
        max,
        tol,
        passed: max <= tol,
        oracle_resolution: cfg.polish_resolution,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GneCheck {
    pub is_gne: bool,
    /// Largest residual measured. Checking stops at the first player found
    /// infeasible, so this is a lower bound when `is_gne` is false.
    pub residual: f64,
}

/// Whether `x` is a classical generalized Nash equilibrium: each `x_i` is
/// feasible for `F_i(x_{-i})` and a best response there.
pub fn is_classical_gne(
    inst: &GameInstance,
    x: &[Vec<f64>],
    tol: f64,
    cfg: &ResponseConfig,
) -> Result<GneCheck, CertifyError> {
    inst.check_profile(x)?;
    let game = inst.prepare().map_err(CertifyError::Compile)?;
    is_classical_gne_prepared(&game, x, tol, cfg)
}

pub(crate) fn is_classical_gne_prepared(
    game: &PreparedGame<'_>,
    x: &[Vec<f64>],
    tol: f64,
    cfg: &ResponseConfig,
) -> Result<GneCheck, CertifyError> {
    let flat = game.flatten(x);
    let mut residual: f64 = 0.0;
    for (i, xi) in x.iter().enumerate() {
        let wrap = |source: ResponseError| CertifyError::Player { player: i + 1, source };
        let set = game.realize(i, &flat).map_err(|e| wrap(e.into()))?;
        let feas = set.violation(xi)?;
        residual = residual.max(feas);
        if feas > tol {
            return Ok(GneCheck {
                is_gne: false,
                residual,
            });
        }
        let br = maximize(&set, objective_fn(game, i, &flat), cfg, i + 1).map_err(wrap)?;
        let ux = objective_fn(game, i, &flat)(xi).map_err(|source| {
            wrap(ResponseError::Objective {
                player: i + 1,
                point: xi.clone(),
                source,
            })
        })?;
        residual = residual.max(snap_gap((br.value - ux).max(0.0), cfg.tol_value));
    }
    Ok(GneCheck {
        is_gne: residual <= tol,
        residual,
    })
}
