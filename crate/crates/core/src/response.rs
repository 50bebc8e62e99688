//! Best responses: a point of the maximizing map
//! `M_i(x_{-i}) = argmax { u_i(x_{-i}, z) : z ∈ F_i(x_{-i}) }`.
//!
//! The search combines seeded multi-start projected gradient ascent (finite
//! difference gradients, backtracking on non-improvement) with an exhaustive
//! grid polish over the realized set. The grid phase bounds the optimality
//! loss by the objective's Lipschitz constant times the grid spacing, which
//! keeps the result sound for nonsmooth or merely quasi-concave objectives.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::EvalError;
use crate::geometry::{GeometryError, RealizedSet, SemiNorm};
use crate::model::{GameInstance, PreparedGame, RealizeError};
use crate::par;

/// Ascent stops once the trial step falls below this.
pub const MIN_STEP: f64 = 1e-12;
/// `y` must lie within this of `F_i(x_{-i})` for a value gap to be defined.
pub const GAP_FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseConfig {
    pub starts: usize,
    pub ascent_steps: usize,
    /// `None` means 0.1 × the diameter of the realized set's bounding box.
    pub step_init: Option<f64>,
    pub step_shrink: f64,
    pub polish_resolution: usize,
    pub tol_value: f64,
    pub seed: u64,
}

impl Default for ResponseConfig {
    fn default() -> Self {
        ResponseConfig {
            starts: 16,
            ascent_steps: 500,
            step_init: None,
            step_shrink: 0.5,
            polish_resolution: 33,
            tol_value: 1e-9,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponsePhase {
    Ascent { start: usize },
    Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub y_star: Vec<f64>,
    pub value: f64,
    pub phase: ResponsePhase,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResponseError {
    #[error(transparent)]
    Realize(#[from] RealizeError),
    #[error("objective of player {player} failed at feasible point {point:?}: {source}")]
    Objective {
        player: usize,
        point: Vec<f64>,
        source: EvalError,
    },
    #[error("point is infeasible for player {player}: constraint violation {violation:e}")]
    Infeasible { player: usize, violation: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid instance: {0}")]
    Compile(EvalError),
}

/// Maximizes `objective` over `set`. `player` (1-based) only labels errors.
pub fn maximize<F>(
    set: &RealizedSet,
    objective: F,
    cfg: &ResponseConfig,
    player: usize,
) -> Result<BestResponse, ResponseError>
where
    F: Fn(&[f64]) -> Result<f64, EvalError> + Sync,
{
    let dim = set.dim();
    let metric = SemiNorm::euclidean(dim);
    let eval = |z: &[f64]| {
        objective(z).map_err(|source| ResponseError::Objective {
            player,
            point: z.to_vec(),
            source,
        })
    };

    let (lo, hi) = set.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<Vec<f64>> = (0..cfg.starts)
        .map(|_| {
            lo.iter()
                .zip(&hi)
                .map(|(&a, &b)| if b > a { rng.gen_range(a..=b) } else { a })
                .collect()
        })
        .collect();
    let step0 = cfg.step_init.unwrap_or(0.1 * set.diameter());

    let ascend = |seed: &Vec<f64>| -> Result<(Vec<f64>, f64), ResponseError> {
        let mut x = set.project(&metric, seed)?.point;
        let mut fx = eval(&x)?;
        let mut step = step0;
        for _ in 0..cfg.ascent_steps {
            if step < MIN_STEP {
                break;
            }
            let Ok(g) = fd_gradient(&objective, &x) else {
                // kink or domain edge; the grid phase covers it
                break;
            };
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(gn.is_finite() && gn > 0.0) {
                break;
            }
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, d)| a + step * d / gn).collect();
            let cand = set.project(&metric, &trial)?.point;
            let fc = eval(&cand)?;
            if fc > fx {
                x = cand;
                fx = fc;
            } else {
                step *= cfg.step_shrink;
            }
        }
        Ok((x, fx))
    };
    let finals: Vec<(Vec<f64>, f64)> = par::map_slice(&seeds, ascend)
        .into_iter()
        .collect::<Result<_, _>>()?;

    let grid = set.sample_grid(cfg.polish_resolution.max(2));
    let grid_vals: Vec<f64> = par::map_slice(&grid, |g| eval(g))
        .into_iter()
        .collect::<Result<_, _>>()?;

    let mut pool: Vec<(&[f64], f64, ResponsePhase)> = finals
        .iter()
        .enumerate()
        .map(|(k, (x, v))| (x.as_slice(), *v, ResponsePhase::Ascent { start: k }))
        .collect();
    pool.extend(
        grid.iter()
            .zip(&grid_vals)
            .map(|(g, v)| (g.as_slice(), *v, ResponsePhase::Grid)),
    );
    let best = pool
        .iter()
        .map(|c| c.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let winner = pool
        .iter()
        .filter(|c| c.1 >= best - cfg.tol_value)
        .min_by(|a, b| lex_cmp(a.0, b.0))
        .expect("at least one candidate");
    Ok(BestResponse {
        y_star: winner.0.to_vec(),
        value: winner.1,
        phase: winner.2,
    })
}

/// Central differences with step `1e-6 · max(1, |z_j|)`.
fn fd_gradient<F>(f: &F, z: &[f64]) -> Result<Vec<f64>, EvalError>
where
    F: Fn(&[f64]) -> Result<f64, EvalError>,
{
    let mut w = z.to_vec();
    let mut g = Vec::with_capacity(z.len());
    for j in 0..z.len() {
        let h = 1e-6 * z[j].abs().max(1.0);
        w[j] = z[j] + h;
        let fp = f(&w)?;
        w[j] = z[j] - h;
        let fm = f(&w)?;
        w[j] = z[j];
        g.push((fp - fm) / (2.0 * h));
    }
    Ok(g)
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Objective of player `i` as a closure over its own decision.
pub(crate) fn objective_fn<'g>(
    game: &'g PreparedGame<'_>,
    i: usize,
    flat_x: &'g [f64],
) -> impl Fn(&[f64]) -> Result<f64, EvalError> + Sync + 'g {
    move |z: &[f64]| game.objective_at(i, flat_x).value(z)
}

pub fn best_response_prepared(
    game: &PreparedGame<'_>,
    i: usize,
    flat_x: &[f64],
    cfg: &ResponseConfig,
) -> Result<(RealizedSet, BestResponse), ResponseError> {
    let set = game.realize(i, flat_x)?;
    let br = maximize(&set, objective_fn(game, i, flat_x), cfg, i + 1)?;
    Ok((set, br))
}

/// A maximizer of player `i`'s objective over `F_i` at `profile`.
pub fn best_response(
    inst: &GameInstance,
    i: usize,
    profile: &[Vec<f64>],
    cfg: &ResponseConfig,
) -> Result<BestResponse, ResponseError> {
    inst.check_profile(profile)?;
    let game = inst.prepare().map_err(ResponseError::Compile)?;
    let flat = game.flatten(profile);
    Ok(best_response_prepared(&game, i, &flat, cfg)?.1)
}

/// How much better the best response does than `y`, floored at 0 and
/// snapped to 0 when within `tol_value`.
pub fn response_value_gap(
    inst: &GameInstance,
    i: usize,
    profile: &[Vec<f64>],
    y: &[f64],
    cfg: &ResponseConfig,
) -> Result<f64, ResponseError> {
    inst.check_profile(profile)?;
    let game = inst.prepare().map_err(ResponseError::Compile)?;
    let flat = game.flatten(profile);
    let set = game.realize(i, &flat)?;
    let violation = set.violation(y)?;
    if violation > GAP_FEASIBILITY_TOL {
        return Err(ResponseError::Infeasible {
            player: i + 1,
            violation,
        });
    }
    let br = maximize(&set, objective_fn(&game, i, &flat), cfg, i + 1)?;
    let uy = objective_fn(&game, i, &flat)(y).map_err(|source| ResponseError::Objective {
        player: i + 1,
        point: y.to_vec(),
        source,
    })?;
    Ok(snap_gap(br.value - uy, cfg.tol_value))
}

pub(crate) fn snap_gap(gap: f64, tol: f64) -> f64 {
    if gap <= tol {
        0.0
    } else {
        gap
    }
}
