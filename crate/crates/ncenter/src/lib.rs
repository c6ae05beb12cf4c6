//! Planar mechanics with finitely many attracting power-law centers.
//!
//! The library works at fixed energy `h`: trajectories are treated as geodesics
//! of the Jacobi metric `2 (h - V) g |dq|^2` and periodic orbits are found by
//! minimizing Jacobi length inside free-homotopy classes of the punctured
//! plane.  Supporting modules classify the centers by the strength of their
//! singularity, build branched-cover bookkeeping from that classification,
//! provide regularizing cone charts near centers, check geodesic convexity of
//! the domain boundary, and convert minimizing curves back into timed
//! Newtonian trajectories.

pub mod classify;
pub mod convexity;
pub mod dynamics;
pub mod geom;
pub mod homotopy;
pub mod jacobi;
pub mod levicivita;
pub mod minimize;
pub mod model;
pub mod quad;

mod error;

pub use error::{Error, Result};
