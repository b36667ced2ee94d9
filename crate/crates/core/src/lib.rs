//! Blind interference alignment for the `K`-user single-antenna interference
//! channel, with two-mode reconfigurable antennas at the receivers.
//!
//! Without any channel knowledge at the transmitters, every user sends `K-1`
//! symbols over `m = (K+2)(K-1)/2` channel uses. Interference from each pair
//! of users collapses onto one dimension at every other receiver, which is
//! what makes the dimension count reach `2K/(K+2)` per channel use. The crate
//!
//! - builds the receivers' switching patterns and the users' binary
//!   beamformers ([`scheme`]),
//! - models the switched channel ([`channel`]),
//! - checks decodability at every receiver, numerically or exactly
//!   ([`verify`]),
//! - does the DoF bookkeeping in exact rationals ([`dof`]), and
//! - estimates the achieved DoF as a high-SNR sum-rate slope ([`sim`]).
//!
//! Alignment is necessary but not sufficient. With the canonical pattern some
//! receivers cannot tell one desired direction from interference, whatever
//! the channel. A pattern that every receiver can decode exists only for
//! `K = 3` and `K = 4` ([`scheme::PatternMatrix::generate_decodable`]).
//!
//! ```
//! use bia::{channel::ChannelSet, scheme::Scheme, verify::check_conditions};
//!
//! let canonical = Scheme::generate(4)?;
//! assert_eq!(canonical.config.channel_uses, 9);
//! let ch = ChannelSet::draw(4, 2, 7);
//! let passing: Vec<bool> = check_conditions(&ch, &canonical.pattern, &canonical.beams)?
//!     .iter()
//!     .map(|r| r.pass)
//!     .collect();
//! assert_eq!(passing, [false, false, true, true]);
//!
//! let decodable = Scheme::generate_decodable(4)?;
//! let report = check_conditions(&ch, &decodable.pattern, &decodable.beams)?;
//! assert!(report.iter().all(|r| r.pass));
//! # Ok::<(), bia::Error>(())
//! ```
//!
//! A longer walk-through lives in the guide under `book/`.

pub mod channel;
pub mod cli;
pub mod dof;
mod error;
pub mod exact;
pub mod numfmt;
pub mod rng;
pub mod scheme;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};

// Code blocks in the guide run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/patterns.md")]
    mod patterns {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/alignment.md")]
    mod alignment {}
    #[doc = include_str!("../../../book/src/decodability.md")]
    mod decodability {}
    #[doc = include_str!("../../../book/src/dof.md")]
    mod dof {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
