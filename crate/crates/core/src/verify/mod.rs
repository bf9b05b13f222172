//! Inequality harness: sharp constants, inclusion chains, Rogers-Shephard and
//! Zhang-type checks.

mod checks;
mod constants;
mod report;

pub use checks::{
    chain_check, default_sphere, direction_mesh, general_zhang_check, nu_mass, polar_sphere, rogers_shephard_check,
    zhang_check, zhang_denominator, ChainConcavity, ChainSpec,
};
pub use constants::{berwald_const_f, berwald_const_q, berwald_const_q_numeric, gen_binom};
pub use report::{DirectionRow, VerifyReport};
