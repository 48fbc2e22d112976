//! Numerical toolkit for checking curve characterizations of planar
//! Sobolev-extension domains and for building Whitney-reflection extension
//! operators on grid-sampled functions.
//!
//! The crate is organized around eight subsystems:
//!
//! * [`geom`] — domains, distance queries, inversion;
//! * [`whitney`] — dyadic Whitney decompositions with neighbor queries;
//! * [`metricpath`] — singular-weight path costs and condition-constant
//!   estimation;
//! * [`conformal`] — disk/exterior conformal maps and hyperbolic arcs;
//! * [`capacity`] — discrete conformal-capacity estimation;
//! * [`reflect`] — shadows, reflected-square assignments, chains, and sum
//!   estimates;
//! * [`extend`] — grid functions, Sobolev norms, and the extension operators;
//! * [`report`] — serializable experiment reports shared with the CLI.

pub mod capacity;
pub mod conformal;
pub mod error;
pub mod extend;
pub mod geom;
pub mod metricpath;
pub mod reflect;
pub mod report;
pub mod whitney;

pub use error::{Result, SobexError};
pub use geom::{DomainKind, DomainSpec, Point, RegionTag};
