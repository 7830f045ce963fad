pub mod domain;
pub mod error;
pub mod gaussian;
pub mod numerics;
pub mod ode;
pub mod potentials;
pub mod radial;
pub mod rearrange;
pub mod riccati;
pub mod special;
pub mod verify;

pub use error::{PpwError, Result};
