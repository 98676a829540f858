//! Fast marching for isotropic, Riemannian and curvature-penalised
//! (Reeds-Shepp forward, Dubins) eikonal equations, reverse-mode sensitivity
//! of the solution w.r.t. the cost, and sensor placement games built on both.

pub mod adjoint;
pub mod cli;
pub mod config;
pub mod eikonal;
pub mod error;
pub mod games;
pub mod geodesic;
pub mod grid;
pub mod io;
pub mod optimize;
pub mod plot;
pub mod stencils;

pub use error::{Error, Result};
