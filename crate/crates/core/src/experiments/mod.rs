//! Convergence studies on finite spectral models: direct order, slope fits,
//! converse probes and maximal source sets.

mod converse;
mod fit;
mod maximal;
mod study;

pub use converse::{converse_probe, converse_scenarios, ConverseReport, Scenario, TailRatio, TAIL_CAP, TAIL_SLOPE_MIN};
pub use fit::{default_window, fit_order, SlopeFit, MIN_FIT_POINTS};
pub use maximal::{default_generators, maximal_source_demo, CandidateReport, ElementCheck, MaximalReport};
pub use study::{default_study_grid, run_convergence, ConvergenceStudy, StudyContext, StudyRecord};
