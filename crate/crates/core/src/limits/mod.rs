//! Large-scale limits: diffusion constant, local limit errors, Green's function.

mod diffusion;
mod gaussian;
mod green;
mod llt;

pub use diffusion::{estimate_diffusion, margin_horizon, DiffusionEstimate};
pub use gaussian::{gaussian_cube_mass, gaussian_kernel};
pub use green::{
    centered_graph, compare_boxes, green_ant_equivalence, green_constant, green_profile, green_solve, green_two_box, GreenField, GreenProfile, Shell,
    ShellStats, TwoBoxReport, TwoBoxShell,
};
pub use llt::{llt_error, JTerms, LltGrid, LltParams, LltReport, LltRow};
