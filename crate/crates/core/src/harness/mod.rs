//! Numerical experiments checking the structural properties of the ND map
//! and its logarithm at finite truncation. Each experiment returns an
//! [`ExperimentReport`] carrying its measurements and pass/fail gates.

pub mod boundedness;
pub mod ensemble;
pub mod fd;
pub mod fit;
pub mod linearization;
pub mod lipschitz;
pub mod neumann;
pub mod norm_equiv;
pub mod order;
pub mod report;
pub mod tau_rate;

pub use boundedness::relative_boundedness_experiment;
pub use ensemble::{random_vectors, ConductivityEnsemble, EnsembleRule, MAX_ENSEMBLE};
pub use fd::{fd_check, fd_derivative_check, FdMap};
pub use fit::{fit_line, loglog_fit};
pub use linearization::linearization_error_compare;
pub use lipschitz::dl_lipschitz_check;
pub use neumann::{near_proportional_direction, neumann_series_check, perturbation_norm};
pub use norm_equiv::{norm_equivalence_survey, NormSurveySettings};
pub use order::{loewner_heinz_check, monotonicity_check, order_survey, OrderedPair};
pub use report::{Curve, ExperimentReport, Gate, LineFit, Table};
pub use tau_rate::{tau_rate_experiment, tau_window_grid, TauRateSettings};
