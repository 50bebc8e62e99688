//! Convex compact sets in ℝ^d, diagonal weighted semi-norms and
//! best-approximation projections.
//!
//! A semi-norm here is `p(v) = sqrt(Σ w_j v_j²)` with `w_j ≥ 0`. Projections
//! minimize `p(v - z)` over the set. When some weight is zero the minimizer is
//! not unique; boxes resolve this by clamping every coordinate, which also
//! minimizes the plain Euclidean distance among all `p`-minimizers. Balls and
//! polytopes require strictly positive weights.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dykstra stops once a full sweep moves the iterate by at most this much.
pub const DYKSTRA_TOL: f64 = 1e-12;
pub const DYKSTRA_MAX_SWEEPS: usize = 10_000;
/// Tolerance used when filtering grid samples by membership.
pub const GRID_MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

fn check_dim(expected: usize, found: usize) -> Result<(), GeometryError> {
    if expected == found {
        Ok(())
    } else {
        Err(GeometryError::DimensionMismatch { expected, found })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiNorm {
    pub weights: Vec<f64>,
}

impl SemiNorm {
    pub fn new(weights: Vec<f64>) -> Self {
        SemiNorm { weights }
    }

    pub fn euclidean(dim: usize) -> Self {
        SemiNorm {
            weights: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// All weights strictly positive, i.e. `p` is a norm.
    pub fn is_norm(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    pub fn eval(&self, v: &[f64]) -> Result<f64, GeometryError> {
        check_dim(self.dim(), v.len())?;
        Ok(self.eval_unchecked(v))
    }

    pub(crate) fn eval_unchecked(&self, v: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(v)
            .map(|(w, x)| w * x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// `p(a - b)`.
    pub fn dist(&self, a: &[f64], b: &[f64]) -> Result<f64, GeometryError> {
        check_dim(self.dim(), a.len())?;
        check_dim(self.dim(), b.len())?;
        Ok(self
            .weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * (x - y) * (x - y))
            .sum::<f64>()
            .sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    /// `normal · v - offset`; positive means violated.
    pub fn excess(&self, v: &[f64]) -> f64 {
        dot(&self.normal, v) - self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexSet {
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// `[lower, upper] ∩ {z : normal·z ≤ offset for every halfspace}`.
    Polytope {
        lower: Vec<f64>,
        upper: Vec<f64>,
        halfspaces: Vec<Halfspace>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    pub distance: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn clamp_into(v: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((x, lo), hi) in v.iter_mut().zip(lower).zip(upper) {
        *x = x.max(*lo).min(*hi);
    }
}

fn box_violation(v: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    v.iter()
        .zip(lower.iter().zip(upper))
        .map(|(x, (lo, hi))| (lo - x).max(x - hi))
        .fold(0.0, f64::max)
}

impl ConvexSet {
    pub fn unit_box(dim: usize) -> Self {
        ConvexSet::Box {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lower, .. } | ConvexSet::Polytope { lower, .. } => lower.len(),
            ConvexSet::Ball { center, .. } => center.len(),
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            ConvexSet::Box { lower, upper } | ConvexSet::Polytope { lower, upper, .. } => {
                (lower.clone(), upper.clone())
            }
            ConvexSet::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    /// Largest violation of a defining inequality, 0 inside the set.
    pub fn violation(&self, v: &[f64]) -> Result<f64, GeometryError> {
        check_dim(self.dim(), v.len())?;
        Ok(match self {
            ConvexSet::Box { lower, upper } => box_violation(v, lower, upper),
            ConvexSet::Ball { center, radius } => {
                let d: f64 = v
                    .iter()
                    .zip(center)
                    .map(|(x, c)| (x - c) * (x - c))
                    .sum::<f64>()
                    .sqrt();
                (d - radius).max(0.0)
            }
            ConvexSet::Polytope {
                lower,
                upper,
                halfspaces,
            } => halfspaces
                .iter()
                .map(|h| h.excess(v))
                .fold(box_violation(v, lower, upper), f64::max),
        })
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> Result<bool, GeometryError> {
        Ok(self.violation(v)? <= tol)
    }

    /// Best approximation of `v` in the set under `p`.
    pub fn project(&self, p: &SemiNorm, v: &[f64]) -> Result<Projection, GeometryError> {
        check_dim(self.dim(), v.len())?;
        check_dim(self.dim(), p.dim())?;
        let point = match self {
            ConvexSet::Box { lower, upper } => {
                let mut z = v.to_vec();
                clamp_into(&mut z, lower, upper);
                z
            }
            ConvexSet::Ball { center, radius } => {
                require_norm(p, "ball")?;
                project_ball(&p.weights, center, *radius, v)
            }
            ConvexSet::Polytope {
                lower,
                upper,
                halfspaces,
            } => {
                require_norm(p, "polytope")?;
                dykstra(&p.weights, lower, upper, halfspaces, v)
            }
        };
        let distance = p.dist(v, &point)?;
        Ok(Projection { point, distance })
    }

    pub fn distance(&self, p: &SemiNorm, v: &[f64]) -> Result<f64, GeometryError> {
        Ok(self.project(p, v)?.distance)
    }

    /// Lexicographically ordered axis-aligned grid over the bounding box,
    /// `resolution` points per axis, filtered by membership.
    pub fn sample_grid(&self, resolution: usize) -> Vec<Vec<f64>> {
        let (lower, upper) = self.bounding_box();
        grid_points(&lower, &upper, resolution)
            .into_iter()
            .filter(|g| self.violation(g).is_ok_and(|e| e <= GRID_MEMBERSHIP_TOL))
            .collect()
    }

    /// Structural problems with the set's data, as `(field, message)` pairs.
    pub fn problems(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut check_bounds = |lower: &[f64], upper: &[f64]| {
            if lower.len() != upper.len() {
                out.push((
                    "upper".to_string(),
                    format!("length {} differs from lower length {}", upper.len(), lower.len()),
                ));
                return;
            }
            for (j, (lo, hi)) in lower.iter().zip(upper).enumerate() {
                if !lo.is_finite() || !hi.is_finite() {
                    out.push((format!("lower/upper[{j}]"), "non-finite bound".to_string()));
                } else if lo > hi {
                    out.push((
                        format!("lower/upper[{j}]"),
                        format!("lower ≤ upper violated at coordinate {}", j + 1),
                    ));
                }
            }
        };
        match self {
            ConvexSet::Box { lower, upper } => check_bounds(lower, upper),
            ConvexSet::Ball { center, radius } => {
                if center.iter().any(|c| !c.is_finite()) {
                    out.push(("center".into(), "non-finite center".into()));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    out.push(("radius".into(), "radius must be positive and finite".into()));
                }
            }
            ConvexSet::Polytope {
                lower,
                upper,
                halfspaces,
            } => {
                check_bounds(lower, upper);
                let mut shape_ok = out.is_empty();
                for (k, h) in halfspaces.iter().enumerate() {
                    if h.normal.len() != lower.len() {
                        out.push((
                            format!("halfspaces[{k}].normal"),
                            format!("length {} differs from dimension {}", h.normal.len(), lower.len()),
                        ));
                        shape_ok = false;
                    } else if h.normal.iter().any(|x| !x.is_finite()) || !h.offset.is_finite() {
                        out.push((format!("halfspaces[{k}]"), "non-finite coefficient".into()));
                        shape_ok = false;
                    }
                }
                if shape_ok && !self.feasibility_probe() {
                    out.push(("halfspaces".into(), "polytope is empty".into()));
                }
            }
        }
        out
    }

    /// Projects the bounding-box midpoint and checks the result lands in the set.
    fn feasibility_probe(&self) -> bool {
        let (lower, upper) = self.bounding_box();
        let mid: Vec<f64> = lower.iter().zip(&upper).map(|(a, b)| 0.5 * (a + b)).collect();
        match self.project(&SemiNorm::euclidean(self.dim()), &mid) {
            Ok(pr) => self.violation(&pr.point).is_ok_and(|e| e <= 1e-7),
            Err(_) => false,
        }
    }
}

fn require_norm(p: &SemiNorm, what: &str) -> Result<(), GeometryError> {
    if p.is_norm() {
        Ok(())
    } else {
        Err(GeometryError::Unsupported(format!(
            "zero semi-norm weight with a {what} set; only boxes support degenerate weights"
        )))
    }
}

pub(crate) fn grid_axes(lower: &[f64], upper: &[f64], resolution: usize) -> Vec<Vec<f64>> {
    assert!(resolution >= 2, "grid resolution must be at least 2");
    lower
        .iter()
        .zip(upper)
        .map(|(&lo, &hi)| {
            let mut axis: Vec<f64> = (0..resolution)
                .map(|k| {
                    if k + 1 == resolution {
                        hi
                    } else {
                        lo + (hi - lo) * k as f64 / (resolution - 1) as f64
                    }
                })
                .collect();
            axis.dedup();
            axis
        })
        .collect()
}

pub(crate) fn grid_points(lower: &[f64], upper: &[f64], resolution: usize) -> Vec<Vec<f64>> {
    let axes = grid_axes(lower, upper, resolution);
    let total: usize = axes.iter().map(Vec::len).product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        out.push(idx.iter().zip(&axes).map(|(&k, a)| a[k]).collect());
        for d in (0..axes.len()).rev() {
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

/// Weighted projection onto a Euclidean ball.
///
/// Stationarity gives `z_j = c_j + w_j d_j / (w_j + μ)` with `d = v - c`;
/// `μ ≥ 0` is the root of `‖z(μ) - c‖ = r`, found by bisection. Uniform
/// weights reduce to radial contraction.
fn project_ball(w: &[f64], center: &[f64], radius: f64, v: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = v.iter().zip(center).map(|(x, c)| x - c).collect();
    let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= radius {
        return v.to_vec();
    }
    if w.iter().all(|&x| x == w[0]) {
        return center
            .iter()
            .zip(&d)
            .map(|(c, x)| c + x * (radius / norm))
            .collect();
    }
    let radial = |mu: f64| -> f64 {
        w.iter()
            .zip(&d)
            .map(|(wj, dj)| {
                let t = wj * dj / (wj + mu);
                t * t
            })
            .sum::<f64>()
            .sqrt()
    };
    let wmax = w.iter().cloned().fold(0.0, f64::max);
    let (mut lo, mut hi) = (0.0, wmax * norm / radius);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if radial(mid) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // hi is the feasible side of the bracket
    center
        .iter()
        .zip(w.iter().zip(&d))
        .map(|(c, (wj, dj))| c + wj * dj / (wj + hi))
        .collect()
}

/// Dykstra's alternating projections onto the box and each halfspace, all in
/// the inner product `<a, b> = Σ w_j a_j b_j`.
fn dykstra(w: &[f64], lower: &[f64], upper: &[f64], halfspaces: &[Halfspace], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut x = v.to_vec();
    let mut corr = vec![vec![0.0; n]; halfspaces.len() + 1];
    let mut y = vec![0.0; n];
    // aᵀW⁻¹a per halfspace
    let scales: Vec<f64> = halfspaces
        .iter()
        .map(|h| h.normal.iter().zip(w).map(|(a, wj)| a * a / wj).sum())
        .collect();
    for _ in 0..DYKSTRA_MAX_SWEEPS {
        let start = x.clone();
        // x can return to the same point while the corrections still drift
        let mut drift: f64 = 0.0;

        for j in 0..n {
            y[j] = x[j] + corr[0][j];
        }
        x.copy_from_slice(&y);
        clamp_into(&mut x, lower, upper);
        for j in 0..n {
            let c = y[j] - x[j];
            drift = drift.max((c - corr[0][j]).abs());
            corr[0][j] = c;
        }

        for (k, h) in halfspaces.iter().enumerate() {
            for j in 0..n {
                y[j] = x[j] + corr[k + 1][j];
            }
            x.copy_from_slice(&y);
            let excess = h.excess(&y);
            if excess > 0.0 && scales[k] > 0.0 {
                let lambda = excess / scales[k];
                for j in 0..n {
                    x[j] -= lambda * h.normal[j] / w[j];
                }
            }
            for j in 0..n {
                let c = y[j] - x[j];
                drift = drift.max((c - corr[k + 1][j]).abs());
                corr[k + 1][j] = c;
            }
        }

        let moved = x
            .iter()
            .zip(&start)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if moved.max(drift) <= DYKSTRA_TOL {
            break;
        }
    }
    x
}

/// `{shift + c : c ∈ base}`, the value of a translated constraint map.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedSet {
    pub shift: Vec<f64>,
    pub base: ConvexSet,
}

impl RealizedSet {
    pub fn new(shift: Vec<f64>, base: ConvexSet) -> Self {
        RealizedSet { shift, base }
    }

    /// A set used as-is, with zero shift.
    pub fn unshifted(base: ConvexSet) -> Self {
        RealizedSet {
            shift: vec![0.0; base.dim()],
            base,
        }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    fn unshift(&self, v: &[f64]) -> Result<Vec<f64>, GeometryError> {
        check_dim(self.dim(), v.len())?;
        Ok(v.iter().zip(&self.shift).map(|(x, s)| x - s).collect())
    }

    fn reshift(&self, v: &mut [f64]) {
        for (x, s) in v.iter_mut().zip(&self.shift) {
            *x += s;
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let (mut lo, mut hi) = self.base.bounding_box();
        self.reshift(&mut lo);
        self.reshift(&mut hi);
        (lo, hi)
    }

    pub fn violation(&self, v: &[f64]) -> Result<f64, GeometryError> {
        self.base.violation(&self.unshift(v)?)
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> Result<bool, GeometryError> {
        Ok(self.violation(v)? <= tol)
    }

    pub fn project(&self, p: &SemiNorm, v: &[f64]) -> Result<Projection, GeometryError> {
        let local = self.unshift(v)?;
        let mut pr = self.base.project(p, &local)?;
        self.reshift(&mut pr.point);
        Ok(pr)
    }

    pub fn distance(&self, p: &SemiNorm, v: &[f64]) -> Result<f64, GeometryError> {
        Ok(self.project(p, v)?.distance)
    }

    /// Grid of the base set, translated by the shift.
    pub fn sample_grid(&self, resolution: usize) -> Vec<Vec<f64>> {
        let mut pts = self.base.sample_grid(resolution);
        for p in &mut pts {
            self.reshift(p);
        }
        pts
    }

    /// Euclidean diameter of the bounding box.
    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.base.bounding_box();
        lo.iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<ConvexSet> for RealizedSet {
    fn from(base: ConvexSet) -> Self {
        RealizedSet::unshifted(base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    /// The strategy set of the two-player example: unit square with z₁+z₂ ≥ 1.
    fn example_set() -> ConvexSet {
        ConvexSet::Polytope {
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
            halfspaces: vec![Halfspace {
                normal: vec![-1.0, -1.0],
                offset: -1.0,
            }],
        }
    }

    #[test]
    fn seminorm_values() {
        assert_eq!(SemiNorm::new(vec![1.0, 1.0]).eval(&[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(SemiNorm::new(vec![0.0, 1.0]).eval(&[100.0, 2.0]).unwrap(), 2.0);
        let v = SemiNorm::new(vec![4.0, 1.0]).eval(&[1.0, 2.0]).unwrap();
        assert!((v - 8f64.sqrt()).abs() < 1e-12);
        assert_eq!(SemiNorm::euclidean(3).eval(&[0.0; 3]).unwrap(), 0.0);
        assert!(matches!(
            SemiNorm::euclidean(2).eval(&[1.0]),
            Err(GeometryError::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn membership() {
        assert!(ConvexSet::unit_box(2).contains(&[0.5, 0.5], 1e-9).unwrap());
        assert!(!example_set().contains(&[0.4, 0.4], 1e-9).unwrap());
        let r = RealizedSet::new(vec![SQRT2, SQRT2], ConvexSet::unit_box(2));
        assert!(r.contains(&[1.0 + SQRT2, 1.0 + SQRT2], 1e-9).unwrap());
        assert!(!r.contains(&[1.0, 1.0], 1e-9).unwrap());
        assert!(ConvexSet::unit_box(2).contains(&[0.5], 1e-9).is_err());
    }

    #[test]
    fn box_projection_is_clamp() {
        let pr = ConvexSet::unit_box(2)
            .project(&SemiNorm::euclidean(2), &[2.0, -1.0])
            .unwrap();
        assert_eq!(pr.point, vec![1.0, 0.0]);
        assert!((pr.distance - SQRT2).abs() < 1e-12);
    }

    #[test]
    fn polytope_projection_of_example_corner() {
        let pr = example_set()
            .project(&SemiNorm::euclidean(2), &[1.0 + SQRT2, 1.0 + SQRT2])
            .unwrap();
        assert!((pr.point[0] - 1.0).abs() < 1e-12 && (pr.point[1] - 1.0).abs() < 1e-12);
        assert!((pr.distance - 2.0).abs() < 1e-12);

        // grid oracle at spacing 1e-3 agrees
        let v = [1.0 + SQRT2, 1.0 + SQRT2];
        let best = example_set()
            .sample_grid(1001)
            .iter()
            .map(|g| SemiNorm::euclidean(2).dist(&v, g).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!((best - 2.0).abs() < 1e-9);
    }

    #[test]
    fn polytope_projection_onto_cut_face() {
        // (0,0) projects onto the segment z₁+z₂ = 1 at its midpoint
        let pr = example_set().project(&SemiNorm::euclidean(2), &[0.0, 0.0]).unwrap();
        assert!((pr.point[0] - 0.5).abs() < 1e-10 && (pr.point[1] - 0.5).abs() < 1e-10);
        // weighted: minimize 4(z₁)² + z₂² on z₁+z₂=1 → z₁ = 0.2
        let pr = example_set()
            .project(&SemiNorm::new(vec![4.0, 1.0]), &[0.0, 0.0])
            .unwrap();
        assert!((pr.point[0] - 0.2).abs() < 1e-9 && (pr.point[1] - 0.8).abs() < 1e-9);
    }

    #[test]
    fn distances() {
        let e = SemiNorm::euclidean(2);
        assert_eq!(ConvexSet::unit_box(2).distance(&e, &[0.5, 0.5]).unwrap(), 0.0);
        assert!((ConvexSet::unit_box(2).distance(&e, &[2.0, 2.0]).unwrap() - SQRT2).abs() < 1e-12);
        assert!((example_set().distance(&e, &[2.0, 2.0]).unwrap() - SQRT2).abs() < 1e-12);
    }

    #[test]
    fn interior_points_are_fixed() {
        let e = SemiNorm::euclidean(2);
        for s in [
            ConvexSet::unit_box(2),
            example_set(),
            ConvexSet::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
        ] {
            let pr = s.project(&e, &[0.6, 0.5]).unwrap();
            assert_eq!(pr.point, vec![0.6, 0.5]);
            assert_eq!(pr.distance, 0.0);
        }
    }

    #[test]
    fn ball_projection_weighted_and_uniform() {
        let ball = ConvexSet::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        let pr = ball.project(&SemiNorm::euclidean(2), &[3.0, 4.0]).unwrap();
        assert!((pr.point[0] - 0.6).abs() < 1e-12 && (pr.point[1] - 0.8).abs() < 1e-12);

        // weighted projection lies on the sphere and beats a fine boundary scan
        let p = SemiNorm::new(vec![5.0, 1.0]);
        let v = [2.0, 1.0];
        let pr = ball.project(&p, &v).unwrap();
        let r: f64 = pr.point.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((r - 1.0).abs() < 1e-9);
        let scan = (0..100_000)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 100_000.0;
                p.dist(&v, &[t.cos(), t.sin()]).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(pr.distance <= scan + 1e-9);
    }

    #[test]
    fn zero_weights_only_for_boxes() {
        let p = SemiNorm::new(vec![0.0, 1.0]);
        let pr = ConvexSet::unit_box(2).project(&p, &[5.0, 3.0]).unwrap();
        assert_eq!(pr.point, vec![1.0, 1.0]);
        assert_eq!(pr.distance, 2.0);
        assert!(matches!(
            example_set().project(&p, &[5.0, 3.0]),
            Err(GeometryError::Unsupported(_))
        ));
        let ball = ConvexSet::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        assert!(matches!(ball.project(&p, &[5.0, 3.0]), Err(GeometryError::Unsupported(_))));
    }

    #[test]
    fn grids() {
        assert_eq!(
            ConvexSet::Box {
                lower: vec![0.0],
                upper: vec![1.0]
            }
            .sample_grid(3),
            vec![vec![0.0], vec![0.5], vec![1.0]]
        );
        assert_eq!(
            example_set().sample_grid(3),
            vec![
                vec![0.0, 1.0],
                vec![0.5, 0.5],
                vec![0.5, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 0.5],
                vec![1.0, 1.0]
            ]
        );
        assert_eq!(
            ConvexSet::Ball {
                center: vec![0.0],
                radius: 1.0
            }
            .sample_grid(3),
            vec![vec![-1.0], vec![0.0], vec![1.0]]
        );
        // degenerate axes collapse to one point
        assert_eq!(
            ConvexSet::Box {
                lower: vec![0.3],
                upper: vec![0.3]
            }
            .sample_grid(5),
            vec![vec![0.3]]
        );
    }

    #[test]
    fn problems_reported() {
        let bad = ConvexSet::Box {
            lower: vec![0.0, 0.0],
            upper: vec![1.0, -1.0],
        };
        let probs = bad.problems();
        assert_eq!(probs.len(), 1);
        assert!(probs[0].1.contains("lower ≤ upper violated at coordinate 2"));
        let empty = ConvexSet::Polytope {
            lower: vec![0.0, 0.0],
            upper: vec![1.0, 1.0],
            halfspaces: vec![Halfspace {
                normal: vec![-1.0, -1.0],
                offset: -3.0,
            }],
        };
        assert!(empty.problems().iter().any(|(_, m)| m.contains("empty")));
        assert!(example_set().problems().is_empty());
    }
}
