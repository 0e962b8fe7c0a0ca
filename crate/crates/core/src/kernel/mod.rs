//! Exact heat kernels: discrete, hatted, killed and continuous time, plus
//! the Dirichlet form and Poincaré constants.

mod continuous;
mod energy;
mod identities;
mod slices;
mod transition;

pub use continuous::{continuous_kernel, continuous_kernels, ContinuousKernel, PoissonTruncation};
pub use energy::{
    dirichlet_energy, metric_ball, poincare_constant, EnergyValue, PoincareMethod, PoincareReport,
    DENSE_LIMIT,
};
pub use identities::{kernel_identities, sample_sources, KernelIdentityReport};
pub use slices::{
    discrete_kernel, hat_kernel, kernel_checkpoints, killed_kernel, KernelEvolution, KernelSlice,
    KernelTime, MAX_STORED_VALUES,
};
pub use transition::{apply_killed_transition, apply_transition, inner_product};
