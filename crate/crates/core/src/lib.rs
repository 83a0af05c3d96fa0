//! Synthesis and execution of parallel addition algorithms for numeration
//! systems with algebraic integer bases.

pub mod convert;
pub mod error;
pub mod phase1;
pub mod phase2;
pub mod ring;
pub mod system;
pub mod symmetry;
pub mod table;

pub use error::{EwmError, Result};
