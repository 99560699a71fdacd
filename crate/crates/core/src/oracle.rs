//! First-order oracles reporting inexact subgradients.
//!
//! A delta-subgradient of a convex `f` at `x` is a dual vector `v` with
//!
//! ```text
//! f(y) - f(x) >= <v, y - x> - delta      for all y in Q,  delta >= 0;
//! ```
//!
//! at `delta = 0` this is an ordinary subgradient. Oracles here come in
//! three flavors:
//!
//! * [`Oracle::Exact`]: a built-in convex function with a deterministic
//!   exact subgradient selection (`delta = 0`),
//! * [`Oracle::InexactMax`]: a max of smooth components answered through
//!   [`inexact_max_oracle`]: the gradient of any component whose value is
//!   within a `delta` budget of the true max,
//! * [`Oracle::Perturbed`]: an exact oracle plus a bounded dual-norm
//!   perturbation, reporting `delta = noise * diameter(Q)`.
//!
//! Oracles are immutable and callable concurrently; the perturbed oracle
//! derives its noise from a pure hash of `(seed, x)` rather than mutable
//! generator state, so traces are reproducible.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::proximal::{dot, DualVector, NormKind, Point};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("delta must be nonnegative, got {0}")]
    NegativeDelta(f64),
    #[error("noise dual norm must be nonnegative, got {0}")]
    NegativeNoise(f64),
    #[error("constraint list is empty")]
    EmptyConstraintList,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// An oracle answer: a dual vector valid as a `delta`-subgradient, the
/// inexactness `delta >= 0` it was produced with, and the oracle's estimate
/// of the function value at the query point.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSubgradient {
    pub vector: DualVector,
    pub delta: f64,
    pub value: f64,
}

/// A smooth convex component of a max-type function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SmoothComponent {
    /// `<coeffs, x> + intercept`; gradient Lipschitz constant 0.
    Affine { coeffs: Vec<f64>, intercept: f64 },
    /// `curvature/2 * ||x - center||_2^2 + offset`; gradient Lipschitz
    /// constant `curvature`.
    Quadratic { curvature: f64, center: Vec<f64>, offset: f64 },
}

impl SmoothComponent {
    pub fn value(&self, x: &Point) -> f64 {
        match self {
            SmoothComponent::Affine { coeffs, intercept } => dot(coeffs, x.coords()) + intercept,
            SmoothComponent::Quadratic { curvature, center, offset } => {
                let sq: f64 = x
                    .coords()
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                0.5 * curvature * sq + offset
            }
        }
    }

    pub fn gradient(&self, x: &Point) -> DualVector {
        match self {
            SmoothComponent::Affine { coeffs, .. } => DualVector::new(coeffs.clone()).unwrap(),
            SmoothComponent::Quadratic { curvature, center, .. } => DualVector::new(
                x.coords().iter().zip(center).map(|(a, b)| curvature * (a - b)).collect(),
            )
            .unwrap(),
        }
    }

    /// Lipschitz constant of the gradient (w.r.t. the l2 norm pair).
    pub fn grad_lipschitz(&self) -> f64 {
        match self {
            SmoothComponent::Affine { .. } => 0.0,
            SmoothComponent::Quadratic { curvature, .. } => *curvature,
        }
    }
}

/// `f(x) = max_i f_i(x)` over finitely many smooth convex components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxOfFunctions {
    pub components: Vec<SmoothComponent>,
    /// `L_i` with `||grad f_i(x) - grad f_i(y)||_* <= L_i ||x - y||`.
    pub lipschitz_grad_consts: Vec<f64>,
}

impl MaxOfFunctions {
    pub fn new(components: Vec<SmoothComponent>) -> Self {
        assert!(!components.is_empty(), "max-of-functions needs at least one component");
        let lipschitz_grad_consts = components.iter().map(|c| c.grad_lipschitz()).collect();
        Self { components, lipschitz_grad_consts }
    }

    pub fn max_lipschitz(&self) -> f64 {
        self.lipschitz_grad_consts.iter().fold(0.0_f64, |a, &b| a.max(b))
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.components
            .iter()
            .map(|c| c.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Built-in convex functions with deterministic exact subgradient
/// selections. Tie-breaks at kinks are fixed: sign-based functions use
/// `sign(0) = 0`, max-type functions take the smallest maximizing index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConvexFn {
    /// `sum_i weights_i |x_i - target_i|`, weights >= 0.
    WeightedL1 { target: Vec<f64>, weights: Vec<f64> },
    /// `max_i |x_i| - level`.
    SupNorm { level: f64 },
    /// `<coeffs, x> + intercept`.
    Affine { coeffs: Vec<f64>, intercept: f64 },
    /// `1/2 ||x - center||_2^2`.
    HalfSqNorm { center: Vec<f64> },
    /// Max of smooth components, answered exactly (smallest argmax index).
    MaxOf(MaxOfFunctions),
    /// Constant function; subgradient 0.
    Constant { value: f64 },
    /// `factor * inner`, factor > 0.
    Scaled { factor: f64, inner: Box<ConvexFn> },
}

impl ConvexFn {
    /// Plain l1 distance `||x - target||_1`.
    pub fn l1_distance(target: Vec<f64>) -> Self {
        let weights = vec![1.0; target.len()];
        ConvexFn::WeightedL1 { target, weights }
    }

    pub fn value(&self, x: &Point) -> f64 {
        match self {
            ConvexFn::WeightedL1 { target, weights } => x
                .coords()
                .iter()
                .zip(target.iter().zip(weights))
                .map(|(c, (t, w))| w * (c - t).abs())
                .sum(),
            ConvexFn::SupNorm { level } => {
                x.coords().iter().fold(0.0_f64, |a, &c| a.max(c.abs())) - level
            }
            ConvexFn::Affine { coeffs, intercept } => dot(coeffs, x.coords()) + intercept,
            ConvexFn::HalfSqNorm { center } => {
                0.5 * x
                    .coords()
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            }
            ConvexFn::MaxOf(m) => m.value(x),
            ConvexFn::Constant { value } => *value,
            ConvexFn::Scaled { factor, inner } => factor * inner.value(x),
        }
    }

    /// The fixed exact-subgradient selection.
    pub fn subgradient(&self, x: &Point) -> DualVector {
        match self {
            ConvexFn::WeightedL1 { target, weights } => DualVector::from_vec(
                x.coords()
                    .iter()
                    .zip(target.iter().zip(weights))
                    .map(|(c, (t, w))| w * sign(c - t))
                    .collect(),
            ),
            ConvexFn::SupNorm { .. } => {
                let coords = x.coords();
                let mut arg = 0;
                let mut best = coords[0].abs();
                for (i, &c) in coords.iter().enumerate().skip(1) {
                    if c.abs() > best {
                        best = c.abs();
                        arg = i;
                    }
                }
                let mut g = vec![0.0; coords.len()];
                g[arg] = sign(coords[arg]);
                DualVector::from_vec(g)
            }
            ConvexFn::Affine { coeffs, .. } => DualVector::from_vec(coeffs.clone()),
            ConvexFn::HalfSqNorm { center } => DualVector::from_vec(
                x.coords().iter().zip(center).map(|(a, b)| a - b).collect(),
            ),
            ConvexFn::MaxOf(m) => {
                let values: Vec<f64> = m.components.iter().map(|c| c.value(x)).collect();
                let mut arg = 0;
                for (i, &v) in values.iter().enumerate().skip(1) {
                    if v > values[arg] {
                        arg = i;
                    }
                }
                m.components[arg].gradient(x)
            }
            ConvexFn::Constant { .. } => DualVector::zero(x.dim()),
            ConvexFn::Scaled { factor, inner } => {
                let g = inner.subgradient(x);
                DualVector::from_vec(g.coords().iter().map(|c| factor * c).collect())
            }
        }
    }

    /// Exact oracle answer: the fixed subgradient choice with `delta = 0`.
    pub fn exact_subgradient(&self, x: &Point) -> DeltaSubgradient {
        DeltaSubgradient { vector: self.subgradient(x), delta: 0.0, value: self.value(x) }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Inexact-max oracle: returns the gradient of a component `f_j` with
/// `max_i f_i(x) - f_j(x) <= delta`, reporting the actual gap as its
/// inexactness and `f_j(x)` as the value estimate.
///
/// Among admissible components the one with the smallest value is chosen
/// (the most adversarial answer the budget allows), remaining ties broken
/// by smallest index. With `delta = 0` this is the exact max oracle.
pub fn inexact_max_oracle(
    m: &MaxOfFunctions,
    x: &Point,
    delta: f64,
) -> Result<DeltaSubgradient, OracleError> {
    if delta < 0.0 {
        return Err(OracleError::NegativeDelta(delta));
    }
    let values: Vec<f64> = m.components.iter().map(|c| c.value(x)).collect();
    let max = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut chosen = None;
    for (i, &v) in values.iter().enumerate() {
        if max - v <= delta {
            match chosen {
                None => chosen = Some((i, v)),
                Some((_, best)) if v < best => chosen = Some((i, v)),
                _ => {}
            }
        }
    }
    let (j, vj) = chosen.expect("the maximizing component is always admissible");
    Ok(DeltaSubgradient {
        vector: m.components[j].gradient(x),
        delta: max - vj,
        value: vj,
    })
}

/// A first-order oracle. `delta_bound` is the worst-case inexactness it
/// ever reports; `lipschitz_bound`, when known, bounds the dual norm of
/// every answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Oracle {
    Exact {
        f: ConvexFn,
        lipschitz_bound: Option<f64>,
    },
    InexactMax {
        f: MaxOfFunctions,
        delta_budget: f64,
        lipschitz_bound: Option<f64>,
    },
    Perturbed {
        base: Box<Oracle>,
        noise_dual_norm: f64,
        q_diameter: f64,
        seed: u64,
        norm: NormKind,
    },
}

impl Oracle {
    pub fn exact(f: ConvexFn) -> Self {
        Oracle::Exact { f, lipschitz_bound: None }
    }

    pub fn exact_with_lipschitz(f: ConvexFn, m: f64) -> Self {
        Oracle::Exact { f, lipschitz_bound: Some(m) }
    }

    /// Evaluate at `x`: value estimate plus delta-subgradient.
    pub fn eval(&self, x: &Point) -> DeltaSubgradient {
        match self {
            Oracle::Exact { f, .. } => f.exact_subgradient(x),
            Oracle::InexactMax { f, delta_budget, .. } => {
                inexact_max_oracle(f, x, *delta_budget).expect("budget validated at construction")
            }
            Oracle::Perturbed { base, noise_dual_norm, q_diameter, seed, norm } => {
                let inner = base.eval(x);
                if *noise_dual_norm == 0.0 {
                    return inner;
                }
                let noise = noise_direction(*seed, x, *norm, inner.vector.dim());
                let vector = DualVector::from_vec(
                    inner
                        .vector
                        .coords()
                        .iter()
                        .zip(noise.coords())
                        .map(|(g, n)| g + noise_dual_norm * n)
                        .collect(),
                );
                DeltaSubgradient {
                    vector,
                    delta: inner.delta + noise_dual_norm * q_diameter,
                    value: inner.value,
                }
            }
        }
    }

    /// Oracle's value estimate alone.
    pub fn value(&self, x: &Point) -> f64 {
        self.eval(x).value
    }

    /// Worst-case reported inexactness.
    pub fn delta_bound(&self) -> f64 {
        match self {
            Oracle::Exact { .. } => 0.0,
            Oracle::InexactMax { delta_budget, .. } => *delta_budget,
            Oracle::Perturbed { base, noise_dual_norm, q_diameter, .. } => {
                base.delta_bound() + noise_dual_norm * q_diameter
            }
        }
    }

    pub fn lipschitz_bound(&self) -> Option<f64> {
        match self {
            Oracle::Exact { lipschitz_bound, .. }
            | Oracle::InexactMax { lipschitz_bound, .. } => *lipschitz_bound,
            Oracle::Perturbed { base, noise_dual_norm, .. } => {
                base.lipschitz_bound().map(|m| m + noise_dual_norm)
            }
        }
    }

    /// The underlying built-in function, looking through perturbation
    /// wrappers. `None` for inexact-max oracles.
    pub fn base_fn(&self) -> Option<&ConvexFn> {
        match self {
            Oracle::Exact { f, .. } => Some(f),
            Oracle::InexactMax { .. } => None,
            Oracle::Perturbed { base, .. } => base.base_fn(),
        }
    }
}

/// Wrap `base` so that every answer carries an additive dual-vector
/// perturbation of dual norm exactly `noise_dual_norm`, with the reported
/// inexactness widened by `noise_dual_norm * q_diameter`.
///
/// Validity on `Q` follows from the Hoelder inequality: for any `y`,
/// `f(y) - f(x) >= <g, y-x> >= <g + p, y-x> - ||p||_* ||y-x||
/// >= <g + p, y-x> - noise * diameter`.
///
/// The perturbation direction is a pure function of `(seed, x)`, so
/// repeated evaluation is deterministic.
pub fn perturbed_oracle(
    base: Oracle,
    noise_dual_norm: f64,
    q_diameter: f64,
    seed: u64,
    norm: NormKind,
) -> Result<Oracle, OracleError> {
    if noise_dual_norm < 0.0 {
        return Err(OracleError::NegativeNoise(noise_dual_norm));
    }
    Ok(Oracle::Perturbed { base: Box::new(base), noise_dual_norm, q_diameter, seed, norm })
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Unit-dual-norm direction derived from a stateless hash of `(seed, x)`:
/// a Gaussian draw (Box-Muller over the hash stream) normalized by the
/// dual norm, so the l2 case is uniform on the sphere.
fn noise_direction(seed: u64, x: &Point, norm: NormKind, dim: usize) -> DualVector {
    let mut state = seed ^ 0xD1B5_4A32_D192_ED03;
    let _ = splitmix64(&mut state);
    for &c in x.coords() {
        state ^= c.to_bits();
        let _ = splitmix64(&mut state);
    }
    let mut unit = move || {
        let u = splitmix64(&mut state);
        ((u >> 11) as f64 + 1.0) * (1.0 / 9_007_199_254_740_993.0) // (0, 1)
    };
    let mut raw = Vec::with_capacity(dim + 1);
    while raw.len() < dim {
        let r = (-2.0 * unit().ln()).sqrt();
        let phi = 2.0 * std::f64::consts::PI * unit();
        raw.push(r * phi.cos());
        raw.push(r * phi.sin());
    }
    raw.truncate(dim);
    let n = match norm {
        NormKind::L2 => raw.iter().map(|c| c * c).sum::<f64>().sqrt(),
        NormKind::L1 => raw.iter().fold(0.0_f64, |a, &c| a.max(c.abs())),
    };
    if n == 0.0 {
        let mut e = vec![0.0; dim];
        e[0] = 1.0;
        return DualVector::from_vec(e);
    }
    DualVector::from_vec(raw.iter().map(|c| c / n).collect())
}

/// Aggregate of several constraint oracles at `x`: the maximal value, a
/// delta-subgradient usable for the max constraint, and the index of the
/// component it came from (0-based).
///
/// Among components within `delta` of the maximal value the one with the
/// smallest value is used (ties by smallest index). The returned
/// inexactness is the component's own delta plus its gap to the max, so
/// the vector remains a valid delta-subgradient of `max_i g_i`.
pub fn max_constraint(
    constraints: &[Oracle],
    x: &Point,
    delta: f64,
) -> Result<(f64, DeltaSubgradient, usize), OracleError> {
    if constraints.is_empty() {
        return Err(OracleError::EmptyConstraintList);
    }
    if delta < 0.0 {
        return Err(OracleError::NegativeDelta(delta));
    }
    let evals: Vec<DeltaSubgradient> = constraints.iter().map(|c| c.eval(x)).collect();
    let max = evals.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
    let mut chosen: Option<usize> = None;
    for (i, e) in evals.iter().enumerate() {
        if max - e.value <= delta {
            match chosen {
                None => chosen = Some(i),
                Some(c) if e.value < evals[c].value => chosen = Some(i),
                _ => {}
            }
        }
    }
    let chosen = chosen.expect("the maximizing component is always admissible");
    let gap = max - evals[chosen].value;
    let mut sub = evals.into_iter().nth(chosen).unwrap();
    sub.delta += gap;
    Ok((max, sub, chosen))
}
