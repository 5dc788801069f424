//! The CORP corpus file and its embedded PSET blocks.
//!
//! ```text
//! CORP: "CORP" | version u16 = 1 | created_at u64 | set_count u16 | { block_len u32 | PSET }*
//! PSET: "PSET" | version u16 = 1 | packet_count u32 | { payload_len u32 | payload }*
//! ```
//!
//! All integers are big-endian. Decoding is strict (no trailing bytes, block
//! lengths must match their contents) so that every accepted input
//! re-encodes to the same bytes.

use crate::codec::Reader;
use crate::error::{Error, Result};
use crate::model::{Corpus, Packet, PacketSet, MAX_PAYLOAD_LEN};

pub const CORP_MAGIC: &[u8; 4] = b"CORP";
pub const PSET_MAGIC: &[u8; 4] = b"PSET";
pub const FORMAT_VERSION: u16 = 1;

pub fn write_packet_set(set: &PacketSet) -> Vec<u8> {
    let body: usize = set.packets().iter().map(|p| 4 + p.len()).sum();
    let mut out = Vec::with_capacity(10 + body);
    out.extend_from_slice(PSET_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_be_bytes());
    out.extend_from_slice(&(set.len() as u32).to_be_bytes());
    for packet in set.packets() {
        out.extend_from_slice(&(packet.len() as u32).to_be_bytes());
        out.extend_from_slice(packet.payload());
    }
    out
}

pub fn write_corpus(corpus: &Corpus) -> Result<Vec<u8>> {
    let set_count = u16::try_from(corpus.sets().len()).map_err(|_| {
        Error::Argument(format!(
            "{} sets exceed the CORP limit",
            corpus.sets().len()
        ))
    })?;
    let mut out = Vec::new();
    out.extend_from_slice(CORP_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_be_bytes());
    out.extend_from_slice(&corpus.created_at().to_be_bytes());
    out.extend_from_slice(&set_count.to_be_bytes());
    for set in corpus.sets() {
        let block = write_packet_set(set);
        let len = u32::try_from(block.len())
            .map_err(|_| Error::Argument("packet set block exceeds 4 GiB".into()))?;
        out.extend_from_slice(&len.to_be_bytes());
        out.extend_from_slice(&block);
    }
    Ok(out)
}

fn read_packet_set(r: &mut Reader<'_>) -> Result<PacketSet> {
    r.magic(PSET_MAGIC)?;
    r.version(FORMAT_VERSION)?;
    let count_at = r.offset();
    let count = r.u32("packet_count")? as usize;
    if count == 0 {
        return Err(Error::format(
            "packet_count",
            count_at,
            "packet set is empty",
        ));
    }
    // Each packet needs at least its length prefix.
    if count > r.remaining() / 4 {
        return Err(Error::format(
            "packet_count",
            count_at,
            format!(
                "truncated: {count} packets declared, {} bytes remain",
                r.remaining()
            ),
        ));
    }
    let mut packets = Vec::with_capacity(count);
    for _ in 0..count {
        let len_at = r.offset();
        let len = r.u32("payload_len")? as usize;
        if len > MAX_PAYLOAD_LEN {
            return Err(Error::format(
                "payload_len",
                len_at,
                format!("{len} exceeds {MAX_PAYLOAD_LEN}"),
            ));
        }
        let payload = r.bytes(len, "payload_len")?;
        packets.push(Packet::new(payload)?);
    }
    PacketSet::new(packets)
}

pub fn read_corpus(bytes: &[u8]) -> Result<Corpus> {
    let mut r = Reader::new(bytes);
    r.magic(CORP_MAGIC)?;
    r.version(FORMAT_VERSION)?;
    let created_at = r.u64("created_at")?;
    let set_count = r.u16("set_count")?;
    let mut sets = Vec::with_capacity(set_count as usize);
    for i in 0..set_count {
        let len_at = r.offset();
        let len = r.u32("block_len").map_err(|_| {
            Error::format(
                "set_count",
                len_at,
                format!("truncated: {set_count} sets declared, only {i} present"),
            )
        })? as usize;
        let block_at = r.offset();
        let block = r.bytes(len, "block_len")?;
        let mut inner = Reader::with_base(block, block_at);
        sets.push(read_packet_set(&mut inner)?);
        inner.finish("block_len")?;
    }
    r.finish("set_count")?;
    Ok(Corpus::new(sets, created_at))
}
