//! Certified reduced basis solver suite for the parameterized spectral
//! fractional Laplace equation on the unit square.
//!
//! The fractional problem is solved through its local extension to a
//! truncated cylinder with a degenerate diffusion weight `y^{1-2s}`. The
//! crate provides:
//!
//! - the tensorized finite element truth solver on graded meshes ([`fem`],
//!   [`mesh`]),
//! - empirical interpolation of the weight family, restoring an affine
//!   parameter dependence ([`eim`]),
//! - greedy reduced-basis training and `N`-independent online evaluation
//!   ([`rbm`]),
//! - a-posteriori error certification: residual dual norms, lower bounds of
//!   the inf-sup constant, and certified trace-error bounds ([`certify`]),
//! - an analytic spectral oracle on the square ([`oracle`]),
//! - a versioned single-file container for trained models ([`model_io`]),
//! - the command line driver ([`cli`]).

pub mod cli;
pub mod config;
pub mod eim;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod model_io;
pub mod oracle;
pub mod param;
pub mod rbm;
pub mod sparse;

pub mod certify;

pub use error::{Error, Result};
pub use param::{Parameter, Subdomain};
