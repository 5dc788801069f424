//! AMP1, the anti-malware packet format used both on the wire and for the
//! client's signature database.
//!
//! ```text
//! "AMP1" | version u16 = 1 | count u16 | { pattern_len u32 | pattern | hash u64 | created_at u64 }*
//! ```

use crate::codec::Reader;
use crate::detector::Signature;
use crate::error::{Error, Result};

pub const AMP_MAGIC: &[u8; 4] = b"AMP1";
pub const AMP_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AntiMalwarePacket {
    pub version: u16,
    pub signatures: Vec<Signature>,
}

impl AntiMalwarePacket {
    pub fn new(signatures: Vec<Signature>) -> Self {
        AntiMalwarePacket {
            version: AMP_VERSION,
            signatures,
        }
    }
}

pub fn encode_packet(packet: &AntiMalwarePacket) -> Result<Vec<u8>> {
    let count = u16::try_from(packet.signatures.len()).map_err(|_| {
        Error::Argument(format!(
            "{} signatures exceed the AMP1 limit of 65535",
            packet.signatures.len()
        ))
    })?;
    let body: usize = packet.signatures.iter().map(|s| 20 + s.bytes().len()).sum();
    let mut out = Vec::with_capacity(8 + body);
    out.extend_from_slice(AMP_MAGIC);
    out.extend_from_slice(&packet.version.to_be_bytes());
    out.extend_from_slice(&count.to_be_bytes());
    for sig in &packet.signatures {
        let len = u32::try_from(sig.bytes().len())
            .map_err(|_| Error::Argument("signature longer than 4 GiB".into()))?;
        out.extend_from_slice(&len.to_be_bytes());
        out.extend_from_slice(sig.bytes());
        out.extend_from_slice(&sig.hash().to_be_bytes());
        out.extend_from_slice(&sig.created_at().to_be_bytes());
    }
    Ok(out)
}

pub fn decode_packet(bytes: &[u8]) -> Result<AntiMalwarePacket> {
    let mut r = Reader::new(bytes);
    r.magic(AMP_MAGIC)?;
    r.version(AMP_VERSION)?;
    let count = r.u16("count")?;
    let mut signatures = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len_at = r.offset();
        let len = r.u32("pattern_len")? as usize;
        if len == 0 {
            return Err(Error::format(
                "pattern_len",
                len_at,
                "empty signature pattern",
            ));
        }
        let pattern = r.bytes(len, "pattern")?;
        let hash = r.u64("hash")?;
        let created_at = r.u64("created_at")?;
        signatures.push(Signature::from_parts(pattern, hash, created_at));
    }
    r.finish("count")?;
    Ok(AntiMalwarePacket {
        version: AMP_VERSION,
        signatures,
    })
}
