//! Arbitrarily varying multiple-access channels: symmetrizability,
//! random-code capacity regions, list-size combinatorics, the symmetrizing
//! jammer and a type-based list decoder.

pub mod capacity;
pub mod channel;
pub mod geometry;
pub mod jammer;
pub mod listcomb;
pub mod listdecode;
pub mod lp;
pub mod symmetrize;
pub mod types;
pub mod util;

pub use channel::{Alphabets, Avmac, ChannelError, Dist};
