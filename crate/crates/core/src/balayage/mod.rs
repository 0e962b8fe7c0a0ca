//! Caloric functions on space-time cylinders, the réduite on
//! `E = (0,T] x B_1`, and its balayage representation.

mod caloric;
mod cylinder;
mod potential;
mod reduite;

pub(crate) use caloric::check_data;
pub use caloric::{
    caloric_data, caloric_family, caloric_function, caloric_residual, evolve_caloric, CaloricData,
    CaloricField, CaloricSource,
};
pub use cylinder::Cylinder;
pub use potential::{space_time_potential, verify_space_time_potential, PotentialReport};
pub use reduite::{
    balayage_charge, balayage_reduite, balayage_split, reduite_dp, split_form_applies, verify_balayage,
    BalayageCharge, BalayageCheck, BalayageOutcome,
};
