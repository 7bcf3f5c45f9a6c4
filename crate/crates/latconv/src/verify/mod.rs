//! Measurable diagnostics for the decay, local-limit, pointwise-bound and stability
//! behaviour of convolution powers, plus random-walk specializations.

mod bounds;
mod diff;
mod powers;
mod walk;

pub use bounds::{
    derivative_bound_fit, gaussian_bound_fit, llt_error, stability_report, subexp_bound_fit,
    sup_decay_report, BoundReport, BoundRow, LltError, ReportVerdict, BAND_FACTOR, FIT_RATIO,
    STABILITY_FACTOR,
};
pub use diff::{space_diff, space_diff_multi, time_diff};
pub use powers::{
    direct_work, dyadic, for_each_power, windowed_power, PathPolicy, ALIAS_GUARD, DIRECT_WORK_CAP,
};
pub use walk::{
    support_periodicity_check, theta, theta_cosine, walk_profile, PeriodicityCheck, WalkProfile,
};
