//! Adaptive mirror descent for nonsmooth convex minimization under convex
//! functional constraints, driven entirely by inexact (delta-)subgradient
//! oracles, with every convergence guarantee turned into a
//! machine-checkable certificate on recorded solver traces.
//!
//! The crate is organized around five pieces:
//!
//! * [`proximal`]: feasible sets, prox functions, Bregman divergences and
//!   the mirror-step operator (Euclidean box/ball, entropy simplex),
//! * [`oracle`]: delta-subgradient oracles: exact selections, inexact-max
//!   answers, bounded perturbations, multi-constraint aggregation,
//! * [`solver`]: the three adaptive methods with productive and
//!   non-productive steps and their stopping rules,
//! * [`analysis`]: the certificate engine verifying per-step and terminal
//!   inequalities on traces,
//! * [`problems`]: a benchmark catalog with grid-verified reference optima.
//!
//! ```
//! use imd_core::problems::catalog_problem;
//! use imd_core::solver::{solve_adaptive, StopReason};
//! use imd_core::analysis::{check_terminal_guarantees, DEFAULT_TOLERANCE};
//!
//! let problem = catalog_problem("p1-l1-box").unwrap().build().unwrap();
//! let result = solve_adaptive(&problem, 0.2).unwrap();
//! assert_eq!(result.stop_reason, StopReason::CriterionMet);
//! let certs = check_terminal_guarantees(&result, &problem, 0.2, DEFAULT_TOLERANCE).unwrap();
//! assert!(certs.iter().all(|c| c.satisfied));
//! ```

pub mod analysis;
pub mod oracle;
pub mod problems;
pub mod proximal;
pub mod solver;

pub use analysis::{Certificate, CertificateName, GrowthModulus, DEFAULT_TOLERANCE};
pub use oracle::{ConvexFn, DeltaSubgradient, MaxOfFunctions, Oracle};
pub use proximal::{DualVector, FeasibleSet, NormKind, Point, ProximalSetup};
pub use solver::{
    Algorithm, IterationRecord, Problem, SolveResult, SolverOptions, StopReason,
};
