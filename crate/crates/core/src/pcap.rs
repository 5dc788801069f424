//! Classic libpcap reader that extracts TCP/UDP payloads from Ethernet/IPv4
//! frames. IPv6, fragments and anything that is not TCP or UDP are skipped.

use crate::error::{Error, Result};
use crate::model::Packet;

const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;
const LINKTYPE_ETHERNET: u32 = 1;

const ETHERTYPE_IPV4: u16 = 0x0800;
const ETHERTYPE_VLAN: u16 = 0x8100;
const IPPROTO_TCP: u8 = 6;
const IPPROTO_UDP: u8 = 17;

#[derive(Clone, Copy)]
enum Endian {
    Big,
    Little,
}

impl Endian {
    fn u32(self, b: &[u8]) -> u32 {
        let b = [b[0], b[1], b[2], b[3]];
        match self {
            Endian::Big => u32::from_be_bytes(b),
            Endian::Little => u32::from_le_bytes(b),
        }
    }
}

/// Parses a pcap capture and returns one [`Packet`] per frame carrying a
/// non-empty TCP or UDP payload, in capture order.
pub fn ingest_pcap(data: &[u8]) -> Result<Vec<Packet>> {
    if data.len() < GLOBAL_HEADER_LEN {
        return Err(Error::format(
            "global_header",
            0,
            format!("truncated: {} of {GLOBAL_HEADER_LEN} bytes", data.len()),
        ));
    }
    let endian = match [data[0], data[1], data[2], data[3]] {
        // microsecond and nanosecond variants
        [0xa1, 0xb2, 0xc3, 0xd4] | [0xa1, 0xb2, 0x3c, 0x4d] => Endian::Big,
        [0xd4, 0xc3, 0xb2, 0xa1] | [0x4d, 0x3c, 0xb2, 0xa1] => Endian::Little,
        other => {
            return Err(Error::format(
                "magic",
                0,
                format!("not a pcap file (magic {})", hex::encode(other)),
            ))
        }
    };
    let linktype = endian.u32(&data[20..24]);
    if linktype != LINKTYPE_ETHERNET {
        return Err(Error::format(
            "linktype",
            20,
            format!("unsupported link type {linktype}, only Ethernet (1) is read"),
        ));
    }

    let mut packets = Vec::new();
    let mut offset = GLOBAL_HEADER_LEN;
    let mut index = 0usize;
    while offset < data.len() {
        if data.len() - offset < RECORD_HEADER_LEN {
            return Err(Error::format(
                "record_header",
                offset,
                "truncated record header",
            ));
        }
        let incl_len = endian.u32(&data[offset + 8..offset + 12]) as usize;
        let frame_at = offset + RECORD_HEADER_LEN;
        if data.len() - frame_at < incl_len {
            return Err(Error::format(
                "record_data",
                frame_at,
                format!(
                    "truncated record: {incl_len} bytes declared, {} remain",
                    data.len() - frame_at
                ),
            ));
        }
        let frame = &data[frame_at..frame_at + incl_len];
        if let Some(payload) = transport_payload(frame).filter(|p| !p.is_empty()) {
            packets.push(Packet::new(payload)?.with_source(format!("pcap#{index}")));
        }
        offset = frame_at + incl_len;
        index += 1;
    }
    Ok(packets)
}

fn be16(b: &[u8], at: usize) -> Option<u16> {
    Some(u16::from_be_bytes([*b.get(at)?, *b.get(at + 1)?]))
}

/// Ethernet -> IPv4 -> TCP|UDP, returning the transport payload.
fn transport_payload(frame: &[u8]) -> Option<&[u8]> {
    let mut ethertype = be16(frame, 12)?;
    let mut l3 = 14;
    if ethertype == ETHERTYPE_VLAN {
        ethertype = be16(frame, 16)?;
        l3 = 18;
    }
    if ethertype != ETHERTYPE_IPV4 {
        return None;
    }
    let ip = frame.get(l3..)?;
    let first = *ip.first()?;
    if first >> 4 != 4 {
        return None;
    }
    let ihl = usize::from(first & 0x0f) * 4;
    let total_len = usize::from(be16(ip, 2)?);
    if ihl < 20 || total_len < ihl {
        return None;
    }
    let flags_frag = be16(ip, 6)?;
    let more_fragments = flags_frag & 0x2000 != 0;
    let frag_offset = flags_frag & 0x1fff;
    if more_fragments || frag_offset != 0 {
        return None;
    }
    // total_len trims Ethernet padding; a snapped capture may hold less.
    let ip = &ip[..total_len.min(ip.len())];
    let protocol = *ip.get(9)?;
    let l4 = ip.get(ihl..)?;
    match protocol {
        IPPROTO_TCP => {
            let data_offset = usize::from(*l4.get(12)? >> 4) * 4;
            if data_offset < 20 {
                return None;
            }
            l4.get(data_offset..)
        }
        IPPROTO_UDP => {
            let udp_len = usize::from(be16(l4, 4)?);
            if udp_len < 8 {
                return None;
            }
            l4.get(8..udp_len.min(l4.len()))
        }
        _ => None,
    }
}
