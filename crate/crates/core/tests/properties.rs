//! Property-based checks of the geometric and oracle invariants:
//! strong convexity of the prox functions, mirror-step optimality, the
//! three-point inequality behind the per-step certificates, dual-norm
//! axioms, and delta-subgradient validity of every built-in oracle.

use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use imd_core::oracle::{inexact_max_oracle, MaxOfFunctions, SmoothComponent};
use imd_core::problems::builtin_catalog;
use imd_core::proximal::{DualVector, FeasibleSet, Point, ProximalSetup};

fn pt(coords: &[f64]) -> Point {
    Point::new(coords.to_vec()).unwrap()
}

fn dv(coords: &[f64]) -> DualVector {
    DualVector::new(coords.to_vec()).unwrap()
}

fn setups() -> Vec<ProximalSetup> {
    vec![
        ProximalSetup::euclidean(
            FeasibleSet::Box { lower: vec![-1.0, -1.0], upper: vec![1.0, 1.0] },
            vec![0.0, 0.0],
        )
        .unwrap(),
        ProximalSetup::euclidean(
            FeasibleSet::Ball { center: vec![0.5, -0.5], radius: 1.5 },
            vec![0.0, 0.0],
        )
        .unwrap(),
        ProximalSetup::entropy_simplex(3).unwrap(),
    ]
}

/// Uniform-ish feasible sample, strictly interior for the simplex.
fn sample_point(set: &FeasibleSet, rng: &mut ChaCha8Rng) -> Point {
    match set {
        FeasibleSet::Box { lower, upper } => pt(&lower
            .iter()
            .zip(upper)
            .map(|(l, u)| rng.gen_range(*l..=*u))
            .collect::<Vec<_>>()),
        FeasibleSet::Ball { center, radius } => loop {
            let coords: Vec<f64> = center
                .iter()
                .map(|c| rng.gen_range(c - radius..=c + radius))
                .collect();
            let dist: f64 = coords
                .iter()
                .zip(center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist <= *radius {
                break pt(&coords);
            }
        },
        FeasibleSet::Simplex { dim } => {
            let raw: Vec<f64> = (0..*dim).map(|_| -rng.gen_range(1e-6..1.0_f64).ln()).collect();
            let total: f64 = raw.iter().sum();
            pt(&raw.iter().map(|r| r / total).collect::<Vec<_>>())
        }
    }
}

#[test]
fn bregman_is_strongly_convex_on_sampled_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for setup in setups() {
        for _ in 0..10_000 {
            let x = sample_point(setup.feasible_set(), &mut rng);
            let y = sample_point(setup.feasible_set(), &mut rng);
            let v = setup.bregman(&y, &x).unwrap();
            let d = setup.distance(&y, &x);
            assert!(
                v >= 0.5 * d * d - 1e-9,
                "strong convexity violated: V = {v}, 1/2 d^2 = {}",
                0.5 * d * d
            );
        }
        // V(x, x) = 0 on sampled points
        for _ in 0..100 {
            let x = sample_point(setup.feasible_set(), &mut rng);
            assert!(setup.bregman(&x, &x).unwrap().abs() <= 1e-12);
        }
    }
}

#[test]
fn mirror_step_is_optimal_against_random_competitors() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for setup in setups() {
        for _ in 0..1_000 {
            let x = sample_point(setup.feasible_set(), &mut rng);
            let p = dv(&(0..setup.dim())
                .map(|_| rng.gen_range(-2.0..2.0))
                .collect::<Vec<_>>());
            let h = rng.gen_range(0.01..2.0);
            let y = setup.mirror_step(&x, &p, h);
            assert!(setup.feasible_set().contains(&y, 1e-10));
            let objective = |u: &Point| {
                let lin: f64 = p
                    .coords()
                    .iter()
                    .zip(u.coords().iter().zip(x.coords()))
                    .map(|(pc, (uc, xc))| h * pc * (uc - xc))
                    .sum();
                lin + setup.bregman(u, &x).unwrap()
            };
            let at_y = objective(&y);
            for _ in 0..100 {
                let z = sample_point(setup.feasible_set(), &mut rng);
                assert!(
                    at_y <= objective(&z) + 1e-8,
                    "mirror step suboptimal: {} > {}",
                    at_y,
                    objective(&z)
                );
            }
        }
    }
}

#[test]
fn three_point_inequality_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for setup in setups() {
        for _ in 0..1_000 {
            let x = sample_point(setup.feasible_set(), &mut rng);
            let p = dv(&(0..setup.dim())
                .map(|_| rng.gen_range(-2.0..2.0))
                .collect::<Vec<_>>());
            let h = rng.gen_range(0.01..1.5);
            let y = setup.mirror_step(&x, &p, h);
            let z = sample_point(setup.feasible_set(), &mut rng);
            let lhs: f64 = h * p
                .coords()
                .iter()
                .zip(x.coords().iter().zip(z.coords()))
                .map(|(pc, (xc, zc))| pc * (xc - zc))
                .sum::<f64>();
            let n = setup.dual_norm(&p);
            let rhs = h * h / 2.0 * n * n + setup.bregman(&z, &x).unwrap()
                - setup.bregman(&z, &y).unwrap();
            assert!(lhs <= rhs + 1e-8, "three-point inequality violated: {lhs} > {rhs}");
        }
    }
}

proptest! {
    #[test]
    fn dual_norms_satisfy_norm_axioms(
        a in proptest::collection::vec(-10.0_f64..10.0, 3),
        b in proptest::collection::vec(-10.0_f64..10.0, 3),
        scale in -8.0_f64..8.0,
    ) {
        let setups = [
            ProximalSetup::euclidean(
                FeasibleSet::Box { lower: vec![-1.0; 3], upper: vec![1.0; 3] },
                vec![0.0; 3],
            )
            .unwrap(),
            ProximalSetup::entropy_simplex(3).unwrap(),
        ];
        for setup in &setups {
            let va = dv(&a);
            let vb = dv(&b);
            let sum = dv(&a.iter().zip(&b).map(|(x, y)| x + y).collect::<Vec<_>>());
            let scaled = dv(&a.iter().map(|x| scale * x).collect::<Vec<_>>());
            // triangle inequality
            prop_assert!(
                setup.dual_norm(&sum) <= setup.dual_norm(&va) + setup.dual_norm(&vb) + 1e-12
            );
            // absolute homogeneity
            prop_assert!(
                (setup.dual_norm(&scaled) - scale.abs() * setup.dual_norm(&va)).abs() <= 1e-12
            );
            // definiteness at zero
            prop_assert_eq!(setup.dual_norm(&DualVector::zero(3)), 0.0);
        }
    }

    #[test]
    fn primal_and_dual_norms_are_hoelder_conjugate(
        p in proptest::collection::vec(-10.0_f64..10.0, 3),
        x in proptest::collection::vec(-10.0_f64..10.0, 3),
    ) {
        for setup in [
            ProximalSetup::euclidean(
                FeasibleSet::Box { lower: vec![-1.0; 3], upper: vec![1.0; 3] },
                vec![0.0; 3],
            )
            .unwrap(),
            ProximalSetup::entropy_simplex(3).unwrap(),
        ] {
            let inner: f64 = p.iter().zip(&x).map(|(a, b)| a * b).sum();
            let bound = setup.dual_norm(&dv(&p)) * setup.primal_norm(&x);
            prop_assert!(inner.abs() <= bound + 1e-9);
        }
    }
}

#[test]
fn builtin_oracles_report_valid_delta_subgradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for spec in builtin_catalog() {
        let problem = spec.build().unwrap();
        let mut oracles = vec![problem.objective.clone()];
        oracles.extend(problem.constraints.iter().cloned());
        // include a perturbed wrapper over the objective
        let diam = problem.setup.feasible_set().diameter(problem.setup.norm_kind());
        oracles.push(
            imd_core::oracle::perturbed_oracle(
                problem.objective.clone(),
                0.05,
                diam,
                17,
                problem.setup.norm_kind(),
            )
            .unwrap(),
        );
        for oracle in &oracles {
            for _ in 0..1_000 {
                let x = sample_point(problem.setup.feasible_set(), &mut rng);
                let y = sample_point(problem.setup.feasible_set(), &mut rng);
                let sx = oracle.eval(&x);
                // true values: exact oracles report them; the perturbed
                // wrapper passes the base value through
                let fx = match oracle {
                    imd_core::oracle::Oracle::Perturbed { base, .. } => base.value(&x),
                    _ => sx.value,
                };
                let fy = match oracle {
                    imd_core::oracle::Oracle::Perturbed { base, .. } => base.value(&y),
                    _ => oracle.value(&y),
                };
                let lin: f64 = sx
                    .vector
                    .coords()
                    .iter()
                    .zip(y.coords().iter().zip(x.coords()))
                    .map(|(g, (yc, xc))| g * (yc - xc))
                    .sum();
                assert!(
                    fy - fx >= lin - sx.delta - 1e-9,
                    "{}: delta-subgradient inequality violated",
                    spec.name
                );
            }
        }
    }
}

#[test]
fn inexact_max_zero_budget_matches_exact_oracle_off_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let m = MaxOfFunctions::new(vec![
        SmoothComponent::Quadratic { curvature: 1.0, center: vec![0.4, 0.0], offset: 0.0 },
        SmoothComponent::Quadratic { curvature: 2.0, center: vec![-0.3, 0.1], offset: -0.05 },
        SmoothComponent::Affine { coeffs: vec![0.2, -0.7], intercept: 0.1 },
    ]);
    let f = imd_core::oracle::ConvexFn::MaxOf(m.clone());
    for _ in 0..1_000 {
        let x = pt(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        let values: Vec<f64> = m.components.iter().map(|c| c.value(&x)).collect();
        let max = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let ties = values.iter().filter(|&&v| (max - v).abs() < 1e-12).count();
        if ties > 1 {
            continue;
        }
        let exact = f.exact_subgradient(&x);
        let inexact = inexact_max_oracle(&m, &x, 0.0).unwrap();
        assert_eq!(exact.vector, inexact.vector);
        assert_eq!(inexact.delta, 0.0);
    }
}

#[test]
fn perturbed_oracle_is_deterministic_across_wrappers() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let base = imd_core::oracle::Oracle::exact(imd_core::oracle::ConvexFn::l1_distance(vec![
        0.0, 0.0,
    ]));
    let a = imd_core::oracle::perturbed_oracle(
        base.clone(),
        0.1,
        2.83,
        99,
        imd_core::proximal::NormKind::L2,
    )
    .unwrap();
    let b = imd_core::oracle::perturbed_oracle(
        base,
        0.1,
        2.83,
        99,
        imd_core::proximal::NormKind::L2,
    )
    .unwrap();
    for _ in 0..200 {
        let x = pt(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        assert_eq!(a.eval(&x), b.eval(&x));
    }
}
