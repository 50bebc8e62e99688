//! Sampling diagnostics for the hypotheses behind existence: quasi-concavity,
//! lower semi-continuity and feasible-path-transfer lower semi-continuity.
//!
//! None of these checks is a proof. Every report carries `evidence_only`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{CompiledExpr, EvalError, Expr};
use crate::geometry::{grid_points, ConvexSet, GeometryError, RealizedSet, SemiNorm};
use crate::model::{own_var, ConstraintMapSpec, RealizeError};
use crate::par;

/// Half-width of the box that stands in for unbounded constraint values.
pub const DEFAULT_TRUNCATION: f64 = 10.0;
pub const DEFAULT_RADII: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Realize(#[from] RealizeError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("point is not feasible: v lies {violation:e} outside K(u)")]
    NotFeasible { violation: f64 },
    #[error("{0}")]
    Input(String),
}

// ---------------------------------------------------------------------------
// Quasi-concavity

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiConcavityWitness {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
    /// `f(t u + (1 - t) v)`.
    pub f_mix: f64,
    /// `min(f(u), f(v))`.
    pub f_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavityWitness {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `f((u + v) / 2)`.
    pub f_mid: f64,
    /// `(f(u) + f(v)) / 2`.
    pub f_avg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasiConcavityReport {
    pub quasiconcave: bool,
    pub quasiconcavity_witness: Option<QuasiConcavityWitness>,
    pub midpoint_concave: bool,
    pub concavity_witness: Option<ConcavityWitness>,
    pub pairs_tested: usize,
    pub evidence_only: bool,
}

/// Probes `f(tu + (1-t)v) ≥ min{f(u), f(v)}` and, separately, midpoint
/// concavity on pairs from `set`. `f` is written over `z_1..z_d`.
///
/// Structured pairs come first (bounding-box vertices against each other,
/// then the center against each vertex, all projected into the set and with
/// `t = 1/2`), followed by `samples` seeded random pairs.
pub fn check_quasiconcave(
    f: &Expr,
    set: &ConvexSet,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<QuasiConcavityReport, DiagnosticError> {
    let d = set.dim();
    let vars: Vec<String> = (0..d).map(own_var).collect();
    let f = f.compile(&vars)?;
    let metric = SemiNorm::euclidean(d);
    let (lo, hi) = set.bounding_box();

    let mut pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    if d <= 10 {
        let vertices: Vec<Vec<f64>> = grid_points(&lo, &hi, 2)
            .into_iter()
            .map(|v| set.project(&metric, &v).map(|p| p.point))
            .collect::<Result<_, _>>()?;
        let mid: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let center = set.project(&metric, &mid)?.point;
        for a in 0..vertices.len() {
            for b in a + 1..vertices.len() {
                pairs.push((vertices[a].clone(), vertices[b].clone(), 0.5));
            }
        }
        for v in &vertices {
            pairs.push((center.clone(), v.clone(), 0.5));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Result<Vec<f64>, GeometryError> {
        let raw: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(&a, &b)| if b > a { rng.gen_range(a..=b) } else { a })
            .collect();
        Ok(set.project(&metric, &raw)?.point)
    };
    for _ in 0..samples {
        let u = draw(&mut rng)?;
        let v = draw(&mut rng)?;
        let t = rng.gen_range(0.0..=1.0);
        pairs.push((u, v, t));
    }

    type Probe = (Option<QuasiConcavityWitness>, Option<ConcavityWitness>);
    let probes: Vec<Result<Probe, EvalError>> = par::map_slice(&pairs, |(u, v, t)| {
        let fu = f.eval(u)?;
        let fv = f.eval(v)?;
        let mix: Vec<f64> = u.iter().zip(v).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let f_mix = f.eval(&mix)?;
        let f_min = fu.min(fv);
        let qc = (f_mix < f_min - tol).then(|| QuasiConcavityWitness {
            u: u.clone(),
            v: v.clone(),
            t: *t,
            f_mix,
            f_min,
        });
        let mid: Vec<f64> = u.iter().zip(v).map(|(a, b)| 0.5 * (a + b)).collect();
        let f_mid = f.eval(&mid)?;
        let f_avg = 0.5 * (fu + fv);
        let cc = (f_mid < f_avg - tol).then(|| ConcavityWitness {
            u: u.clone(),
            v: v.clone(),
            f_mid,
            f_avg,
        });
        Ok((qc, cc))
    });
    let mut qc_witness = None;
    let mut cc_witness = None;
    for p in probes {
        let (qc, cc) = p?;
        if qc_witness.is_none() {
            qc_witness = qc;
        }
        if cc_witness.is_none() {
            cc_witness = cc;
        }
    }
    Ok(QuasiConcavityReport {
        quasiconcave: qc_witness.is_none(),
        quasiconcavity_witness: qc_witness,
        midpoint_concave: cc_witness.is_none(),
        concavity_witness: cc_witness,
        pairs_tested: pairs.len(),
        evidence_only: true,
    })
}

// ---------------------------------------------------------------------------
// Lower semi-continuity

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusOutcome {
    pub radius: f64,
    pub sampled: usize,
    /// Samples that fail the property at this radius.
    pub failures: usize,
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LscReport {
    pub f_point: f64,
    pub epsilon: f64,
    pub radii: Vec<RadiusOutcome>,
    /// A sample with `f(q) ≤ f(point) - ε` was found at every radius.
    pub violated: bool,
    pub evidence_only: bool,
}

/// Uniform sample from the Euclidean ball of radius `r` around `c`.
fn sample_ball(rng: &mut ChaCha8Rng, c: &[f64], r: f64) -> Vec<f64> {
    loop {
        let off: Vec<f64> = c.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if off.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return c.iter().zip(off).map(|(a, o)| a + r * o).collect();
        }
    }
}

/// Looks for points `q` near `point` with `f(q) ≤ f(point) - ε` at every
/// radius in `radii`. `vars` fixes the coordinate order of `point`.
pub fn check_lsc_at<S: AsRef<str>>(
    f: &Expr,
    vars: &[S],
    point: &[f64],
    epsilon: f64,
    radii: &[f64],
    samples: usize,
    seed: u64,
) -> Result<LscReport, DiagnosticError> {
    if vars.len() != point.len() {
        return Err(DiagnosticError::Input(format!(
            "point has {} coordinates but the function has {} variables",
            point.len(),
            vars.len()
        )));
    }
    let f = f.compile(vars)?;
    let f_point = f.eval(point)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcomes = Vec::with_capacity(radii.len());
    for &r in radii {
        let qs: Vec<Vec<f64>> = (0..samples).map(|_| sample_ball(&mut rng, point, r)).collect();
        let vals: Vec<f64> = par::map_slice(&qs, |q| f.eval(q))
            .into_iter()
            .collect::<Result<_, _>>()?;
        let bad: Vec<usize> = (0..qs.len())
            .filter(|&k| vals[k] <= f_point - epsilon)
            .collect();
        outcomes.push(RadiusOutcome {
            radius: r,
            sampled: qs.len(),
            failures: bad.len(),
            witness: bad.first().map(|&k| qs[k].clone()),
        });
    }
    let violated = !outcomes.is_empty() && outcomes.iter().all(|o| o.failures > 0);
    Ok(LscReport {
        f_point,
        epsilon,
        radii: outcomes,
        violated,
        evidence_only: true,
    })
}

// ---------------------------------------------------------------------------
// Feasible path transfer lower semi-continuity

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FptReport {
    pub f_point: f64,
    pub epsilon: f64,
    pub radii: Vec<RadiusOutcome>,
    /// Every sampled `u'` at the finest radius admitted some `v' ∈ K(u')`
    /// with `f(u, v) < f(u', v') + ε`.
    pub passed: bool,
    pub truncation: f64,
    pub evidence_only: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FptOptions {
    pub epsilon: f64,
    pub radii: Vec<f64>,
    /// Number of `u'` samples per radius, and of random `v'` per `u'`.
    pub samples: usize,
    /// Per-axis grid resolution used when searching `K(u')`.
    pub grid: usize,
    pub truncation: f64,
    pub seed: u64,
}

impl Default for FptOptions {
    fn default() -> Self {
        FptOptions {
            epsilon: 0.5,
            radii: DEFAULT_RADII.to_vec(),
            samples: 200,
            grid: 11,
            truncation: DEFAULT_TRUNCATION,
            seed: 42,
        }
    }
}

/// Clips a realized set to `[-t, t]^d`. Only boxes are clipped; translated
/// compact bases are already bounded.
fn truncate(set: RealizedSet, t: f64) -> RealizedSet {
    match &set.base {
        ConvexSet::Box { lower, upper } if set.shift.iter().all(|s| *s == 0.0) => {
            let lower: Vec<f64> = lower.iter().map(|l| l.max(-t).min(t)).collect();
            let upper: Vec<f64> = upper.iter().map(|u| u.min(t).max(-t)).collect();
            RealizedSet::unshifted(ConvexSet::Box { lower, upper })
        }
        _ => set,
    }
}

/// Sampling test of FPT lower semi-continuity of `f(u, v)` in `u` with
/// respect to `K`, at `(u, v)` with `v ∈ K(u)`.
///
/// `f` is compiled over `u_vars ++ v_vars`; `K` over `u_vars`. For each radius
/// the check samples `u'` in the ball around `u` and searches `K(u')` (grid,
/// random points, and the projection of `v`) for a `v'` that satisfies
/// `f(u, v) < f(u', v') + ε`.
pub fn check_fpt_lsc_at<S: AsRef<str>>(
    f: &Expr,
    k: &ConstraintMapSpec,
    u_vars: &[S],
    v_vars: &[S],
    u: &[f64],
    v: &[f64],
    opts: &FptOptions,
) -> Result<FptReport, DiagnosticError> {
    if u.len() != u_vars.len() || v.len() != v_vars.len() || k.dim() != v.len() {
        return Err(DiagnosticError::Input(
            "point does not match the variable lists and constraint dimension".into(),
        ));
    }
    let slots: Vec<&str> = u_vars.iter().chain(v_vars).map(|s| s.as_ref()).collect();
    let f: CompiledExpr = f.compile(&slots)?;
    let kmap = k.compile(u_vars)?;
    let k_at = |uu: &[f64]| -> Result<RealizedSet, RealizeError> {
        Ok(truncate(kmap.realize(1, uu)?, opts.truncation))
    };
    let eval = |uu: &[f64], vv: &[f64]| -> Result<f64, EvalError> {
        let mut buf = uu.to_vec();
        buf.extend_from_slice(vv);
        f.eval(&buf)
    };

    let violation = k_at(u)?.violation(v)?;
    if violation > 1e-6 {
        return Err(DiagnosticError::NotFeasible { violation });
    }
    let f_point = eval(u, v)?;
    let metric = SemiNorm::euclidean(v.len());

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut outcomes = Vec::with_capacity(opts.radii.len());
    for &r in &opts.radii {
        // draw everything up front so the parallel part is order-independent
        let jobs: Vec<(Vec<f64>, u64)> = (0..opts.samples)
            .map(|_| (sample_ball(&mut rng, u, r), rng.gen::<u64>()))
            .collect();
        let found: Vec<Result<bool, DiagnosticError>> = par::map_slice(&jobs, |(up, sub_seed)| {
            let set = match k_at(up) {
                Ok(s) => s,
                // K undefined at u': no feasible path through this point
                Err(_) => return Ok(false),
            };
            let mut cands = vec![set.project(&metric, v)?.point];
            cands.extend(set.sample_grid(opts.grid.max(2)));
            let (lo, hi) = set.bounding_box();
            let mut sub = ChaCha8Rng::seed_from_u64(*sub_seed);
            for _ in 0..opts.samples {
                let raw: Vec<f64> = lo
                    .iter()
                    .zip(&hi)
                    .map(|(&a, &b)| if b > a { sub.gen_range(a..=b) } else { a })
                    .collect();
                cands.push(set.project(&metric, &raw)?.point);
            }
            for vp in &cands {
                if let Ok(val) = eval(up, vp) {
                    if f_point < val + opts.epsilon {
                        return Ok(true);
                    }
                }
            }
            Ok(false)
        });
        let mut failures = 0;
        let mut witness = None;
        for (k, res) in found.into_iter().enumerate() {
            if !res? {
                failures += 1;
                witness.get_or_insert_with(|| jobs[k].0.clone());
            }
        }
        outcomes.push(RadiusOutcome {
            radius: r,
            sampled: jobs.len(),
            failures,
            witness,
        });
    }
    let passed = outcomes.last().is_none_or(|o| o.failures == 0);
    Ok(FptReport {
        f_point,
        epsilon: opts.epsilon,
        radii: outcomes,
        passed,
        truncation: opts.truncation,
        evidence_only: true,
    })
}
