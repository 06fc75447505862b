//! Gagliardo kernel machinery: weight tables, exterior tails, the energies
//! `K`, `E`, `J_eps`, `F_eps`, the interaction form and the discrete
//! fractional Laplacian.
//!
//! Conventions: no normalizing constant is attached to the kernel; all
//! quantities are raw integrals of `|x - y|^-(n+2s)`.

mod cache;
mod energy;
mod kernel;
pub(crate) mod tails;

pub use cache::{cache_path, load_kernel, load_or_build_kernel, save_kernel, CACHE_VERSION};
pub use energy::{
    energy_e, energy_f_eps, energy_j_eps, f_eps_factor, frac_laplacian, gagliardo_k, interaction_u, potential_term,
    Region,
};
pub(crate) use energy::row_runs_mass;
pub use kernel::{
    build_kernel, check_exponent, unit_near_weights, KernelTable, TailPart, WeightRule, DEFAULT_NEAR_RADIUS,
    DEFAULT_QUAD_TOL,
};
