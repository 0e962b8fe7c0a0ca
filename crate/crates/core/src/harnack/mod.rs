//! Parabolic Harnack constants, oscillation decay and Hölder continuity of
//! caloric functions, measured on explicit cylinders.

mod oscillation;
mod phi;
mod report;

pub use oscillation::{holder_check, oscillation_profile, HolderReport, LevelCheck, NestedLevel, OscillationReport};
pub use phi::{
    harnack_delta, hat_extremes, holder_exponent, phi_ratio, phi_ratio_of, stabilization_radius, HatExtremes,
    PhiEstimate, PhiFamily,
};
pub use report::{harnack_report, HarnackReport};
