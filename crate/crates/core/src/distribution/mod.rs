//! Signature distribution and the thin client.

mod broadcast;
mod client;
mod db;
mod packet;
mod quarantine;
mod scan;

pub use broadcast::{
    broadcast_signatures, BroadcastOptions, Broadcaster, Delivery, DeliveryReport, ACK_MALFORMED,
    ACK_OK, MAX_DATAGRAM,
};
pub use client::{ClientConfig, CycleReport, ThinClient};
pub use db::SignatureDb;
pub use packet::{decode_packet, encode_packet, AntiMalwarePacket, AMP_MAGIC, AMP_VERSION};
pub use quarantine::{quarantine, QuarantineRecord};
pub use scan::{scan_path, ScanMatch, Scanner, DEFAULT_CHUNK_SIZE};
