//! Optimal postprocessing of binary score classifiers to satisfy relaxed
//! equalized odds.
//!
//! The pipeline: load scored, labeled, group-tagged predictions; build each
//! group's ROC curve and its convex hull; solve a small linear program that
//! places every group's operating point inside its hull while bounding all
//! pairwise rate gaps by a slack `alpha`; realize those points as randomized
//! threshold policies; and evaluate, sweep, and compare the results. Setting
//! the slack to infinity "unprocesses" a classifier, recovering the best
//! unconstrained group thresholds it implies.

pub mod analysis;
pub mod data;
pub mod error;
pub mod fmt;
pub mod lp;
pub mod policy;
pub mod rng;
pub mod roc;
pub mod solver;

pub use analysis::{
    bootstrap, select_best, sweep, CandidateScore, FrontierPoint, ModelSelection, SweepConfig,
};
pub use data::{
    load_predictions, prevalences, write_predictions, DataFormat, LabeledPredictions, LossSpec,
    PredictionRow, Prevalences,
};
pub use error::{Error, Result};
pub use policy::{
    evaluate_policy, evaluate_policy_sampled, policy_from_solution, violation, EvalIndex,
    EvalReport, ThresholdPolicy, ThresholdWeight,
};
pub use roc::{
    build_hull, build_roc, contains, decompose, MixtureEntry, RocCurve, RocHull, RocPoint,
    Threshold, VertexMixture,
};
pub use solver::{
    group_geometry, solve_relaxed, solve_strict, unprocess, Alpha, RelaxedProblem, RelaxedSolution,
    SolverOptions,
};
