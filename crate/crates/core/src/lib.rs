//! Reduction and unfolding of integer colored Petri nets into Place/Transition nets.

pub mod approx;
pub mod color;
pub mod error;
pub mod expr;
pub mod io;
pub mod multiset;
pub mod net;
pub mod oracle;
pub mod par;
pub mod pipeline;
pub mod ptnet;
pub mod quotient;
pub mod semantics;
pub mod unfold;

pub use error::{Error, Result};
