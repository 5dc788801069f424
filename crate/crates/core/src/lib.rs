//! Honeypot-side worm signature generation and thin-client distribution.
//!
//! Captured payloads are grouped into packet sets, packet pairs are mined for
//! long common byte runs, and runs that recur unusually often within a set
//! become signatures. Signatures are broadcast to thin clients that scan
//! their file systems and quarantine matches.
//!
//! The pieces, bottom up:
//!
//! - [`model`], [`pcap`], [`corpus_format`]: packets, sets, corpora and their
//!   on-disk forms.
//! - [`hash`], [`bloom`]: polynomial pattern hashing and the Bloom filter
//!   used as a pre-filter during extraction.
//! - [`extract`]: maximal common patterns between packet pairs.
//! - [`stats`]: coincidence tables and suspect flagging.
//! - [`detector`]: spool intake, periodic detection, the suspects log and
//!   signature generation.
//! - [`distribution`]: the AMP1 wire format, broadcast, and the thin client.
//! - [`sim`]: synthetic traffic and the end-to-end simulation.

mod codec;

pub mod bloom;
pub mod config;
pub mod corpus_format;
pub mod detector;
pub mod distribution;
pub mod error;
pub mod extract;
pub mod hash;
pub mod model;
pub mod pcap;
pub mod shutdown;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use shutdown::Shutdown;

/// The standard 68-byte antivirus test string.
pub const EICAR: &[u8; 68] =
    br"X5O!P%@AP[4\PZX54(P^)7CC)7}$EICAR-STANDARD-ANTIVIRUS-TEST-FILE!$H+H*";
