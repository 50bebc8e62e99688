//! Exhaustive grid oracle for best approximate solutions.
//!
//! Every profile `x` on the product grid of the strategy sets is tested as a
//! fixed point of the discretized map: each player's response `ŷ_i` is the
//! grid argmax of `u_i(x_{-i}, ·)` over `F_i(x_{-i})` (first grid point on
//! ties, i.e. lexicographically smallest), and `x` is accepted when
//! `max_i p_i(Pr_i(ŷ_i) - x_i) ≤ match_tol`.
//!
//! Responses depend only on `x_{-i}` (on `x_i` itself for a quasi-optimization
//! problem), so they are tabulated once per rival grid combination.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::model::{GameInstance, GameKind, PreparedGame, Profile};
use crate::par;
use crate::response::objective_fn;

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCandidate {
    pub x: Profile,
    pub y_hat: Profile,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub resolution: usize,
    pub match_tol: f64,
    /// Largest grid step over all players and coordinates.
    pub spacing: f64,
    /// Upper bound on objective evaluations, checked against the budget.
    pub evaluations_bound: u64,
    /// Response table entries skipped because `F_i` could not be realized.
    pub skipped: usize,
    pub candidates: Vec<OracleCandidate>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("grid needs up to {needed} evaluations, budget is {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("instance kind is {found:?}, expected {expected:?}")]
    WrongKind { expected: GameKind, found: GameKind },
    #[error("resolution must be at least 2")]
    Resolution,
    #[error("invalid instance: {0}")]
    Compile(crate::expr::EvalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Largest grid step `(hi - lo) / (resolution - 1)` over all strategy sets.
pub fn grid_spacing(inst: &GameInstance, resolution: usize) -> f64 {
    inst.players
        .iter()
        .flat_map(|p| {
            let (lo, hi) = p.strategy_set.bounding_box();
            lo.into_iter()
                .zip(hi)
                .map(|(a, b)| (b - a) / (resolution - 1) as f64)
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

pub fn brute_force_gnep(
    inst: &GameInstance,
    resolution: usize,
    match_tol: Option<f64>,
    budget: u64,
) -> Result<OracleReport, OracleError> {
    if inst.kind != GameKind::Gnep {
        return Err(OracleError::WrongKind {
            expected: GameKind::Gnep,
            found: inst.kind,
        });
    }
    run(inst, resolution, match_tol, budget)
}

pub fn brute_force_quopt(
    inst: &GameInstance,
    resolution: usize,
    match_tol: Option<f64>,
    budget: u64,
) -> Result<OracleReport, OracleError> {
    if inst.kind != GameKind::Quopt {
        return Err(OracleError::WrongKind {
            expected: GameKind::Quopt,
            found: inst.kind,
        });
    }
    run(inst, resolution, match_tol, budget)
}

pub fn brute_force(
    inst: &GameInstance,
    resolution: usize,
    match_tol: Option<f64>,
    budget: u64,
) -> Result<OracleReport, OracleError> {
    match inst.kind {
        GameKind::Gnep => brute_force_gnep(inst, resolution, match_tol, budget),
        GameKind::Quopt => brute_force_quopt(inst, resolution, match_tol, budget),
    }
}

/// Cached response of one player for one rival grid combination.
struct Entry {
    y_hat: Vec<f64>,
    projected: Vec<f64>,
}

fn run(
    inst: &GameInstance,
    resolution: usize,
    match_tol: Option<f64>,
    budget: u64,
) -> Result<OracleReport, OracleError> {
    if resolution < 2 {
        return Err(OracleError::Resolution);
    }
    let n = inst.n_players();
    let spacing = grid_spacing(inst, resolution);
    let match_tol = match_tol.unwrap_or(1.5 * spacing);

    // budget bound from unfiltered grid sizes, before building anything
    let box_size = |dim: usize| (resolution as u64).saturating_pow(dim as u32);
    let profile_bound = inst
        .players
        .iter()
        .fold(1u64, |acc, p| acc.saturating_mul(box_size(p.dim)));
    let mut needed = profile_bound;
    for i in 0..n {
        let deps = dependencies(inst, i)
            .iter()
            .fold(1u64, |acc, &j| acc.saturating_mul(box_size(inst.players[j].dim)));
        needed = needed.saturating_add(deps.saturating_mul(box_size(inst.players[i].dim)));
    }
    if needed > budget {
        return Err(OracleError::BudgetExceeded { needed, budget });
    }

    let game = inst.prepare().map_err(OracleError::Compile)?;
    let grids: Vec<Vec<Vec<f64>>> = inst
        .players
        .iter()
        .map(|p| p.strategy_set.sample_grid(resolution))
        .collect();
    let sizes: Vec<usize> = grids.iter().map(Vec::len).collect();

    let mut skipped = 0;
    let tables: Vec<Vec<Option<Entry>>> = (0..n)
        .map(|i| {
            let deps = dependencies(inst, i);
            let combos: usize = deps.iter().map(|&j| sizes[j]).product();
            let table = par::map_range(combos, |c| {
                let mut idx = vec![0usize; n];
                decode(c, &deps, &sizes, &mut idx);
                let x: Profile = (0..n).map(|j| grids[j][idx[j]].clone()).collect();
                tabulate(&game, i, &x, resolution)
            });
            skipped += table.iter().filter(|e| e.is_none()).count();
            table
        })
        .collect();

    let all: Vec<usize> = (0..n).collect();
    let total: usize = sizes.iter().product();
    let hits: Vec<Option<OracleCandidate>> = par::map_range(total, |c| {
        let mut idx = vec![0usize; n];
        decode(c, &all, &sizes, &mut idx);
        let mut residual: f64 = 0.0;
        let mut y_hat = Vec::with_capacity(n);
        for i in 0..n {
            let deps = dependencies(inst, i);
            let key = encode(&idx, &deps, &sizes);
            let entry = tables[i][key].as_ref()?;
            let x_i = &grids[i][idx[i]];
            let d = inst.players[i].seminorm.dist(&entry.projected, x_i).ok()?;
            residual = residual.max(d);
            if residual > match_tol {
                return None;
            }
            y_hat.push(entry.y_hat.clone());
        }
        Some(OracleCandidate {
            x: (0..n).map(|j| grids[j][idx[j]].clone()).collect(),
            y_hat,
            residual,
        })
    });
    let mut candidates: Vec<OracleCandidate> = hits.into_iter().flatten().collect();
    candidates.sort_by(|a, b| a.residual.total_cmp(&b.residual));

    Ok(OracleReport {
        resolution,
        match_tol,
        spacing,
        evaluations_bound: needed,
        skipped,
        candidates,
    })
}

/// Players whose strategies determine player `i`'s response.
fn dependencies(inst: &GameInstance, i: usize) -> Vec<usize> {
    match inst.kind {
        GameKind::Gnep => (0..inst.n_players()).filter(|&j| j != i).collect(),
        GameKind::Quopt => vec![i],
    }
}

fn decode(mut c: usize, players: &[usize], sizes: &[usize], idx: &mut [usize]) {
    for &j in players.iter().rev() {
        idx[j] = c % sizes[j];
        c /= sizes[j];
    }
}

fn encode(idx: &[usize], players: &[usize], sizes: &[usize]) -> usize {
    players.iter().fold(0, |acc, &j| acc * sizes[j] + idx[j])
}

fn tabulate(game: &PreparedGame<'_>, i: usize, x: &[Vec<f64>], resolution: usize) -> Option<Entry> {
    let flat = game.flatten(x);
    let set = game.realize(i, &flat).ok()?;
    let f = objective_fn(game, i, &flat);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for g in set.sample_grid(resolution) {
        let Ok(v) = f(&g) else { continue };
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, g));
        }
    }
    let (_, y_hat) = best?;
    let p = &game.inst.players[i];
    let projected = p.strategy_set.project(&p.seminorm, &y_hat).ok()?.point;
    Some(Entry { y_hat, projected })
}

/// Groups candidates whose profiles are within `radius` of each other in
/// every coordinate, transitively. Clusters are listed by first member.
pub fn cluster(candidates: &[OracleCandidate], radius: f64) -> Vec<Vec<usize>> {
    let n = candidates.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for a in 0..n {
        for b in a + 1..n {
            if max_coord_gap(&candidates[a].x, &candidates[b].x) <= radius {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = std::collections::HashMap::new();
    for k in 0..n {
        let r = find(&mut parent, k);
        let slot = *root_slot.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(k);
    }
    groups
}

/// Largest absolute coordinate difference between two profiles.
pub fn max_coord_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::expr::parse;
    use crate::geometry::{ConvexSet, SemiNorm};
    use crate::model::{load_instance, ConstraintMapSpec, PlayerSpec};

    #[test]
    fn gnep_single_cluster_at_ones() {
        let inst = load_instance(examples::PAPER_GNEP).unwrap();
        let r = brute_force_gnep(&inst, 21, Some(0.05), DEFAULT_BUDGET).unwrap();
        assert!(!r.candidates.is_empty());
        assert_eq!(r.candidates[0].residual, 0.0);
        assert_eq!(r.candidates[0].x, vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let clusters = cluster(&r.candidates, r.spacing * 1.5);
        assert_eq!(clusters.len(), 1);
        for c in &r.candidates {
            assert!(max_coord_gap(&c.x, &[vec![1.0, 1.0], vec![1.0, 1.0]]) <= 0.05 + 1e-12);
        }
    }

    #[test]
    fn selfmap_candidates_hug_the_diagonal() {
        let inst = load_instance(examples::SELFMAP_BOX).unwrap();
        let r = brute_force_gnep(&inst, 21, Some(0.05), DEFAULT_BUDGET).unwrap();
        // all 21 diagonal points are exact fixed points
        assert_eq!(r.candidates.iter().filter(|c| c.residual == 0.0).count(), 21);
        for c in &r.candidates {
            assert!((c.x[0][0] - c.x[1][0]).abs() <= 0.05 + 1e-12);
        }
    }

    #[test]
    fn quopt_single_cluster() {
        let inst = load_instance(examples::PAPER_QUOPT).unwrap();
        let r = brute_force_quopt(&inst, 21, None, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.candidates[0].x, vec![vec![1.0, 1.0]]);
        assert_eq!(cluster(&r.candidates, 1.5 * r.spacing).len(), 1);
    }

    #[test]
    fn zero_tolerance_off_grid_solution_is_empty() {
        // K(u) = {0.3}: the only solution is u = 0.3, not on the grid {0, 0.5, 1}
        let inst = GameInstance {
            kind: GameKind::Quopt,
            metadata: Default::default(),
            players: vec![PlayerSpec {
                name: "U".into(),
                dim: 1,
                strategy_set: ConvexSet::Box {
                    lower: vec![0.0],
                    upper: vec![1.0],
                },
                seminorm: SemiNorm::euclidean(1),
                objective: parse("z_1").unwrap(),
                constraint_map: ConstraintMapSpec::ParamBox {
                    lower: vec![parse("0.3").unwrap()],
                    upper: vec![parse("0.3").unwrap()],
                },
            }],
        };
        let r = brute_force_quopt(&inst, 3, Some(0.0), DEFAULT_BUDGET).unwrap();
        assert!(r.candidates.is_empty());
        let r = brute_force_quopt(&inst, 11, Some(0.0), DEFAULT_BUDGET).unwrap();
        assert_eq!(r.candidates.len(), 1);
    }

    #[test]
    fn budget() {
        let inst = load_instance(examples::PAPER_QUOPT).unwrap();
        assert!(matches!(
            brute_force_quopt(&inst, 1001, None, 10),
            Err(OracleError::BudgetExceeded { budget: 10, .. })
        ));
    }

    #[test]
    fn wrong_kind() {
        let inst = load_instance(examples::PAPER_QUOPT).unwrap();
        assert!(matches!(
            brute_force_gnep(&inst, 5, None, DEFAULT_BUDGET),
            Err(OracleError::WrongKind { .. })
        ));
    }

    #[test]
    fn clustering() {
        let mk = |a: f64| OracleCandidate {
            x: vec![vec![a]],
            y_hat: vec![vec![a]],
            residual: 0.0,
        };
        let c = vec![mk(0.0), mk(0.1), mk(0.5), mk(0.2), mk(0.6)];
        assert_eq!(cluster(&c, 0.1 + 1e-12), vec![vec![0, 1, 3], vec![2, 4]]);
    }
}
