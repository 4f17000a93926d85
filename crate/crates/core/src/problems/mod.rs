//! Built-in split test problems, reference solutions and error metrics.

mod eigen;
mod fhn;
mod linear;
mod mrms;
mod reference;
mod stable_dt;

pub use eigen::{estimate_extreme_eigenvalues, most_negative_symmetric};
pub use fhn::{make_rd_fhn, FhnParams, RdFhn, RdFhnConfig, StimulusSpec};
pub use linear::{expm, make_linear_pair, make_noncommuting, Dense, LinearPair, Noncommuting};
pub use mrms::{mrms, mrms_grouped, MrmsReport};
pub use reference::{compute_reference, reference_solution, ReferenceOptions, ReferenceSolution};
pub use stable_dt::{largest_stable_dt, run_trial, two_sig_fig_grid, DtTrial, DtTrialSetup, StableDt};
