//! Proximal setups: norms, prox functions, Bregman divergences, and the
//! mirror-step operator over concrete feasible sets.
//!
//! A proximal setup pairs a feasible set `Q` with a distance-generating
//! function `d` that is 1-strongly convex with respect to the primal norm
//! on `Q`. The induced Bregman divergence is
//!
//! ```text
//! V(y, x) = d(y) - d(x) - <grad d(x), y - x>
//! ```
//!
//! and the mirror step maps an iterate `x`, a dual vector `p` and a step
//! size `h > 0` to
//!
//! ```text
//! Mirr[x](h p) = argmin_{u in Q} { <h p, u - x> + V(u, x) }.
//! ```
//!
//! Three setups are provided, all with closed-form mirror steps:
//!
//! | setup            | Q            | d(x)                    | primal / dual norm |
//! |------------------|--------------|-------------------------|--------------------|
//! | Euclidean on box | `Box(l, u)`  | `1/2 ||x - c||^2 + off` | l2 / l2            |
//! | Euclidean on ball| `Ball(c, r)` | `1/2 ||x - c||^2 + off` | l2 / l2            |
//! | Entropy          | `Simplex(n)` | `sum x_i ln x_i + ln n` | l1 / l-inf         |
//!
//! Prox functions are normalized (additive offset) so that `min_Q d = 0`;
//! the prox center `argmin_Q d` is then the canonical starting iterate and
//! `V(z, x0) <= d(z)` for every `z in Q`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest coordinate kept on the simplex after an entropy mirror step.
/// The multiplicative update can underflow; iterates are clamped so the
/// entropy gradient stays finite. The clamp perturbs Bregman values by at
/// most `dim * 1e-13`.
pub const ENTROPY_FLOOR: f64 = 1e-15;

/// Default membership tolerance for feasibility checks on solver iterates.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Errors from proximal-setup operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProximalError {
    #[error("point lies outside the feasible set")]
    OutsideFeasibleSet,
    #[error("entropy gradient undefined: point has a zero coordinate")]
    EntropyBoundary,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("invalid feasible set: {0}")]
    InvalidFeasibleSet(String),
}

/// A primal point. Coordinates are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, ProximalError> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(ProximalError::NonFinite);
        }
        Ok(Self { coords })
    }

    /// Construct without the finiteness check; for values produced by
    /// operations that cannot introduce non-finite coordinates.
    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// A dual-space vector (subgradient-like object). Coordinates are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVector {
    coords: Vec<f64>,
}

impl DualVector {
    pub fn new(coords: Vec<f64>) -> Result<Self, ProximalError> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(ProximalError::NonFinite);
        }
        Ok(Self { coords })
    }

    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self { coords }
    }

    pub fn zero(dim: usize) -> Self {
        Self { coords: vec![0.0; dim] }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0.0)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Norm pair of a setup: primal norm on iterates, dual norm on subgradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    /// l2 primal / l2 dual (Euclidean setups).
    L2,
    /// l1 primal / l-infinity dual (entropy setup).
    L1,
}

/// A feasible set `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeasibleSet {
    /// Axis-aligned box `{ x : lower <= x <= upper }`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Euclidean ball `{ x : ||x - center||_2 <= radius }`.
    Ball { center: Vec<f64>, radius: f64 },
    /// Probability simplex `{ x : x >= 0, sum x = 1 }`.
    Simplex { dim: usize },
}

impl FeasibleSet {
    pub fn validate(&self) -> Result<(), ProximalError> {
        match self {
            FeasibleSet::Box { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(ProximalError::DimensionMismatch {
                        expected: lower.len(),
                        got: upper.len(),
                    });
                }
                if lower.iter().zip(upper).any(|(l, u)| l > u || !l.is_finite() || !u.is_finite()) {
                    return Err(ProximalError::InvalidFeasibleSet(
                        "box requires finite lower <= upper".into(),
                    ));
                }
                Ok(())
            }
            FeasibleSet::Ball { center, radius } => {
                if *radius <= 0.0 || radius.is_nan() || center.iter().any(|c| !c.is_finite()) {
                    return Err(ProximalError::InvalidFeasibleSet(
                        "ball requires finite center and radius > 0".into(),
                    ));
                }
                Ok(())
            }
            FeasibleSet::Simplex { dim } => {
                if *dim == 0 {
                    return Err(ProximalError::InvalidFeasibleSet("simplex dim must be > 0".into()));
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lower, .. } => lower.len(),
            FeasibleSet::Ball { center, .. } => center.len(),
            FeasibleSet::Simplex { dim } => *dim,
        }
    }

    /// Membership test with an absolute coordinate tolerance. Simplex sums
    /// are always held to `1e-12`.
    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        if x.dim() != self.dim() {
            return false;
        }
        match self {
            FeasibleSet::Box { lower, upper } => x
                .coords()
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(c, (l, u))| *c >= l - tol && *c <= u + tol),
            FeasibleSet::Ball { center, radius } => {
                let dist_sq: f64 = x
                    .coords()
                    .iter()
                    .zip(center)
                    .map(|(c, m)| (c - m) * (c - m))
                    .sum();
                dist_sq.sqrt() <= radius + tol
            }
            FeasibleSet::Simplex { .. } => {
                let sum: f64 = x.coords().iter().sum();
                x.coords().iter().all(|&c| c >= -tol) && (sum - 1.0).abs() <= 1e-12
            }
        }
    }

    /// Deterministic dense grid over the set: a tensor grid with
    /// `resolution` nodes per axis for boxes (filtered to the ball for
    /// balls), the barycentric grid with spacing `1/(resolution-1)` for the
    /// simplex. Intended for low dimensions; the node count grows as
    /// `resolution^dim`.
    pub fn grid_nodes(&self, resolution: usize) -> Vec<Point> {
        assert!(resolution >= 2, "grid needs at least two nodes per axis");
        match self {
            FeasibleSet::Box { lower, upper } => {
                let mut nodes = Vec::new();
                let mut coords = vec![0.0; lower.len()];
                tensor_grid(lower, upper, resolution, 0, &mut coords, &mut |c| {
                    nodes.push(Point::from_vec(c.to_vec()));
                });
                nodes
            }
            FeasibleSet::Ball { center, radius } => {
                let lower: Vec<f64> = center.iter().map(|c| c - radius).collect();
                let upper: Vec<f64> = center.iter().map(|c| c + radius).collect();
                let mut nodes = Vec::new();
                let mut coords = vec![0.0; center.len()];
                let r_sq = radius * radius;
                tensor_grid(&lower, &upper, resolution, 0, &mut coords, &mut |c| {
                    let dist_sq: f64 =
                        c.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                    if dist_sq <= r_sq + 1e-12 {
                        nodes.push(Point::from_vec(c.to_vec()));
                    }
                });
                nodes
            }
            FeasibleSet::Simplex { dim } => {
                let r = resolution - 1;
                let mut nodes = Vec::new();
                let mut parts = vec![0usize; *dim];
                simplex_grid(*dim, 0, r, &mut parts, &mut |p| {
                    nodes.push(Point::from_vec(
                        p.iter().map(|&i| i as f64 / r as f64).collect(),
                    ));
                });
                nodes
            }
        }
    }

    /// Spacing between adjacent grid nodes along one axis (the largest
    /// axis for boxes).
    pub fn grid_spacing(&self, resolution: usize) -> f64 {
        match self {
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (u - l) / (resolution - 1) as f64)
                .fold(0.0_f64, f64::max),
            FeasibleSet::Ball { radius, .. } => 2.0 * radius / (resolution - 1) as f64,
            FeasibleSet::Simplex { .. } => 1.0 / (resolution - 1) as f64,
        }
    }

    /// Upper bound on `max_{u,v in Q} ||u - v||` in the given primal norm.
    pub fn diameter(&self, norm: NormKind) -> f64 {
        match self {
            FeasibleSet::Box { lower, upper } => {
                let diffs = lower.iter().zip(upper).map(|(l, u)| u - l);
                match norm {
                    NormKind::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
                    NormKind::L1 => diffs.sum(),
                }
            }
            FeasibleSet::Ball { radius, .. } => match norm {
                NormKind::L2 => 2.0 * radius,
                // ||.||_1 <= sqrt(n) ||.||_2 on an l2 ball
                NormKind::L1 => 2.0 * radius * (self.dim() as f64).sqrt(),
            },
            FeasibleSet::Simplex { .. } => match norm {
                NormKind::L1 => 2.0,
                NormKind::L2 => 2.0_f64.sqrt(),
            },
        }
    }
}

fn tensor_grid(
    lower: &[f64],
    upper: &[f64],
    resolution: usize,
    axis: usize,
    coords: &mut [f64],
    emit: &mut impl FnMut(&[f64]),
) {
    if axis == lower.len() {
        emit(coords);
        return;
    }
    for i in 0..resolution {
        let t = i as f64 / (resolution - 1) as f64;
        coords[axis] = lower[axis] + t * (upper[axis] - lower[axis]);
        tensor_grid(lower, upper, resolution, axis + 1, coords, emit);
    }
}

fn simplex_grid(
    dim: usize,
    axis: usize,
    remaining: usize,
    parts: &mut [usize],
    emit: &mut impl FnMut(&[usize]),
) {
    if axis == dim - 1 {
        parts[axis] = remaining;
        emit(parts);
        return;
    }
    for i in 0..=remaining {
        parts[axis] = i;
        simplex_grid(dim, axis + 1, remaining - i, parts, emit);
    }
}

/// Distance-generating function of a setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProxFunction {
    /// `d(x) = 1/2 ||x - center||_2^2 + offset`.
    Euclidean { center: Vec<f64> },
    /// Negative entropy `d(x) = sum x_i ln x_i + ln n` on the simplex.
    Entropy,
}

/// Raw serialized form of [`ProximalSetup`]; the normalizing offset is
/// recomputed on deserialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSetup {
    feasible_set: FeasibleSet,
    prox: ProxFunction,
}

/// A feasible set together with its prox function and norm pair.
///
/// Values are immutable after construction and safe to share across
/// concurrent solver runs; every operation is a pure function of its
/// arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSetup", into = "RawSetup")]
pub struct ProximalSetup {
    feasible_set: FeasibleSet,
    prox: ProxFunction,
    /// Additive constant making `min_Q d = 0`.
    prox_offset: f64,
}

impl TryFrom<RawSetup> for ProximalSetup {
    type Error = ProximalError;
    fn try_from(raw: RawSetup) -> Result<Self, ProximalError> {
        ProximalSetup::new(raw.feasible_set, raw.prox)
    }
}

impl From<ProximalSetup> for RawSetup {
    fn from(s: ProximalSetup) -> RawSetup {
        RawSetup { feasible_set: s.feasible_set, prox: s.prox }
    }
}

impl ProximalSetup {
    pub fn new(feasible_set: FeasibleSet, prox: ProxFunction) -> Result<Self, ProximalError> {
        feasible_set.validate()?;
        match (&feasible_set, &prox) {
            (FeasibleSet::Simplex { .. }, ProxFunction::Entropy) => {}
            (FeasibleSet::Simplex { .. }, ProxFunction::Euclidean { .. }) => {
                return Err(ProximalError::InvalidFeasibleSet(
                    "the simplex is paired with the entropy prox function".into(),
                ));
            }
            (_, ProxFunction::Entropy) => {
                return Err(ProximalError::InvalidFeasibleSet(
                    "the entropy prox function requires a simplex".into(),
                ));
            }
            (_, ProxFunction::Euclidean { center }) => {
                if center.len() != feasible_set.dim() {
                    return Err(ProximalError::DimensionMismatch {
                        expected: feasible_set.dim(),
                        got: center.len(),
                    });
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return Err(ProximalError::NonFinite);
                }
            }
        }
        let mut setup = Self { feasible_set, prox, prox_offset: 0.0 };
        let raw_min = setup.prox_raw(setup.prox_center().coords());
        setup.prox_offset = -raw_min;
        Ok(setup)
    }

    /// Euclidean setup with `d` centered at `center`.
    pub fn euclidean(feasible_set: FeasibleSet, center: Vec<f64>) -> Result<Self, ProximalError> {
        Self::new(feasible_set, ProxFunction::Euclidean { center })
    }

    /// Entropy setup on the `dim`-simplex.
    pub fn entropy_simplex(dim: usize) -> Result<Self, ProximalError> {
        Self::new(FeasibleSet::Simplex { dim }, ProxFunction::Entropy)
    }

    pub fn feasible_set(&self) -> &FeasibleSet {
        &self.feasible_set
    }

    pub fn dim(&self) -> usize {
        self.feasible_set.dim()
    }

    pub fn norm_kind(&self) -> NormKind {
        match self.prox {
            ProxFunction::Euclidean { .. } => NormKind::L2,
            ProxFunction::Entropy => NormKind::L1,
        }
    }

    pub fn prox_offset(&self) -> f64 {
        self.prox_offset
    }

    /// `d` before the normalizing offset.
    fn prox_raw(&self, x: &[f64]) -> f64 {
        match &self.prox {
            ProxFunction::Euclidean { center } => {
                0.5 * x
                    .iter()
                    .zip(center)
                    .map(|(c, m)| (c - m) * (c - m))
                    .sum::<f64>()
            }
            ProxFunction::Entropy => {
                let n = x.len() as f64;
                x.iter().map(|&c| if c > 0.0 { c * c.ln() } else { 0.0 }).sum::<f64>() + n.ln()
            }
        }
    }

    /// Prox function value `d(x) >= 0`; zero at the prox center.
    pub fn prox_value(&self, x: &Point) -> Result<f64, ProximalError> {
        self.check_dim(x.dim())?;
        if !self.feasible_set.contains(x, MEMBERSHIP_TOL) {
            return Err(ProximalError::OutsideFeasibleSet);
        }
        Ok((self.prox_raw(x.coords()) + self.prox_offset).max(0.0))
    }

    /// `argmin_{x in Q} d(x)`: the canonical starting iterate.
    pub fn prox_center(&self) -> Point {
        match (&self.feasible_set, &self.prox) {
            (FeasibleSet::Box { lower, upper }, ProxFunction::Euclidean { center }) => {
                Point::from_vec(
                    center
                        .iter()
                        .zip(lower.iter().zip(upper))
                        .map(|(c, (l, u))| c.clamp(*l, *u))
                        .collect(),
                )
            }
            (FeasibleSet::Ball { center: bc, radius }, ProxFunction::Euclidean { center }) => {
                let dist_sq: f64 =
                    center.iter().zip(bc).map(|(c, m)| (c - m) * (c - m)).sum();
                let dist = dist_sq.sqrt();
                if dist <= *radius {
                    Point::from_vec(center.clone())
                } else {
                    let scale = radius / dist;
                    Point::from_vec(
                        center
                            .iter()
                            .zip(bc)
                            .map(|(c, m)| m + scale * (c - m))
                            .collect(),
                    )
                }
            }
            (FeasibleSet::Simplex { dim }, ProxFunction::Entropy) => {
                Point::from_vec(vec![1.0 / *dim as f64; *dim])
            }
            // constructor rules out remaining combinations
            _ => unreachable!("invalid setup combination"),
        }
    }

    /// Gradient of `d` at `x`. Entropy requires strictly positive `x`.
    fn prox_grad(&self, x: &[f64]) -> Result<Vec<f64>, ProximalError> {
        match &self.prox {
            ProxFunction::Euclidean { center } => {
                Ok(x.iter().zip(center).map(|(c, m)| c - m).collect())
            }
            ProxFunction::Entropy => {
                if x.iter().any(|&c| c <= 0.0) {
                    return Err(ProximalError::EntropyBoundary);
                }
                Ok(x.iter().map(|&c| 1.0 + c.ln()).collect())
            }
        }
    }

    /// Bregman divergence `V(y, x) = d(y) - d(x) - <grad d(x), y - x>`.
    ///
    /// For Euclidean setups this equals `1/2 ||y - x||_2^2`; for the entropy
    /// setup it is the KL divergence of `y` from `x` (plus a mass-correction
    /// term that vanishes on the simplex). `x` must have strictly positive
    /// coordinates in the entropy case; `y` may touch the boundary.
    pub fn bregman(&self, y: &Point, x: &Point) -> Result<f64, ProximalError> {
        self.check_dim(x.dim())?;
        self.check_dim(y.dim())?;
        match &self.prox {
            ProxFunction::Euclidean { .. } => Ok(0.5
                * y.coords()
                    .iter()
                    .zip(x.coords())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()),
            ProxFunction::Entropy => {
                let grad = self.prox_grad(x.coords())?;
                let dy = self.prox_raw(y.coords());
                let dx = self.prox_raw(x.coords());
                let lin: f64 = grad
                    .iter()
                    .zip(y.coords().iter().zip(x.coords()))
                    .map(|(g, (yc, xc))| g * (yc - xc))
                    .sum();
                Ok((dy - dx - lin).max(0.0))
            }
        }
    }

    /// The mirror step `argmin_{u in Q} { <h p, u - x> + V(u, x) }`.
    ///
    /// Closed forms: coordinatewise clamp of `x - h p` for Euclidean-box,
    /// radial projection of `x - h p` for Euclidean-ball, multiplicative
    /// weights (computed in log space) for entropy-simplex.
    pub fn mirror_step(&self, x: &Point, p: &DualVector, h: f64) -> Point {
        debug_assert!(h > 0.0 && h.is_finite());
        debug_assert_eq!(x.dim(), self.dim());
        debug_assert_eq!(p.dim(), self.dim());
        match (&self.feasible_set, &self.prox) {
            (FeasibleSet::Box { lower, upper }, ProxFunction::Euclidean { .. }) => {
                Point::from_vec(
                    x.coords()
                        .iter()
                        .zip(p.coords())
                        .zip(lower.iter().zip(upper))
                        .map(|((xc, pc), (l, u))| (xc - h * pc).clamp(*l, *u))
                        .collect(),
                )
            }
            (FeasibleSet::Ball { center, radius }, ProxFunction::Euclidean { .. }) => {
                let target: Vec<f64> =
                    x.coords().iter().zip(p.coords()).map(|(xc, pc)| xc - h * pc).collect();
                let dist_sq: f64 =
                    target.iter().zip(center).map(|(t, m)| (t - m) * (t - m)).sum();
                let dist = dist_sq.sqrt();
                if dist <= *radius {
                    Point::from_vec(target)
                } else {
                    let scale = radius / dist;
                    Point::from_vec(
                        target.iter().zip(center).map(|(t, m)| m + scale * (t - m)).collect(),
                    )
                }
            }
            (FeasibleSet::Simplex { .. }, ProxFunction::Entropy) => {
                debug_assert!(x.coords().iter().all(|&c| c > 0.0));
                let logits: Vec<f64> = x
                    .coords()
                    .iter()
                    .zip(p.coords())
                    .map(|(xc, pc)| xc.ln() - h * pc)
                    .collect();
                let m = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let mut weights: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
                let z: f64 = weights.iter().sum();
                for w in &mut weights {
                    *w = (*w / z).max(ENTROPY_FLOOR);
                }
                let total: f64 = weights.iter().sum();
                for w in &mut weights {
                    *w /= total;
                }
                Point::from_vec(weights)
            }
            _ => unreachable!("invalid setup combination"),
        }
    }

    /// Dual norm of a subgradient: l2 for Euclidean setups, l-infinity for
    /// the entropy setup.
    pub fn dual_norm(&self, p: &DualVector) -> f64 {
        match self.norm_kind() {
            NormKind::L2 => p.coords().iter().map(|c| c * c).sum::<f64>().sqrt(),
            NormKind::L1 => p.coords().iter().fold(0.0_f64, |a, &c| a.max(c.abs())),
        }
    }

    /// Primal norm of a displacement: l2 for Euclidean setups, l1 for the
    /// entropy setup.
    pub fn primal_norm(&self, v: &[f64]) -> f64 {
        match self.norm_kind() {
            NormKind::L2 => v.iter().map(|c| c * c).sum::<f64>().sqrt(),
            NormKind::L1 => v.iter().map(|c| c.abs()).sum(),
        }
    }

    /// Primal-norm distance `||x - y||`.
    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        let diff: Vec<f64> =
            x.coords().iter().zip(y.coords()).map(|(a, b)| a - b).collect();
        self.primal_norm(&diff)
    }

    fn check_dim(&self, got: usize) -> Result<(), ProximalError> {
        if got != self.dim() {
            return Err(ProximalError::DimensionMismatch { expected: self.dim(), got });
        }
        Ok(())
    }
}
