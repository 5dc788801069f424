//! Honeypot-to-client delivery over UDP.
//!
//! Each endpoint gets one datagram holding an AMP1 packet. In unicast mode
//! the sender waits for the client's one-byte acknowledgement (`0x00` taken,
//! `0x01` malformed), which makes delivery observable; an ICMP refusal or a
//! missing ack within the timeout counts as a failure. In subnet-broadcast
//! mode the datagram is fire-and-forget.

use std::fs;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::path::PathBuf;
use std::time::Duration;

use log::{info, warn};

use super::packet::{encode_packet, AntiMalwarePacket};
use crate::detector::{DetectionReport, DetectionSink, Signature};
use crate::error::{Error, Result};

pub const ACK_OK: u8 = 0x00;
pub const ACK_MALFORMED: u8 = 0x01;
/// Largest UDP payload over IPv4.
pub const MAX_DATAGRAM: usize = 65_507;

#[derive(Debug, Clone)]
pub struct BroadcastOptions {
    /// How long to wait for each acknowledgement; ignored in broadcast mode.
    pub ack_timeout: Duration,
    /// Send with `SO_BROADCAST` and do not wait for acknowledgements.
    pub subnet_broadcast: bool,
}

impl Default for BroadcastOptions {
    fn default() -> Self {
        BroadcastOptions {
            ack_timeout: Duration::from_secs(2),
            subnet_broadcast: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub endpoint: String,
    pub outcome: std::result::Result<(), String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeliveryReport {
    pub deliveries: Vec<Delivery>,
}

impl DeliveryReport {
    pub fn successes(&self) -> usize {
        self.deliveries.iter().filter(|d| d.outcome.is_ok()).count()
    }

    pub fn failures(&self) -> usize {
        self.deliveries.len() - self.successes()
    }
}

fn send_one(
    endpoint: &str,
    datagram: &[u8],
    options: &BroadcastOptions,
) -> std::result::Result<(), String> {
    let addr: SocketAddr = endpoint
        .to_socket_addrs()
        .map_err(|e| format!("cannot resolve: {e}"))?
        .next()
        .ok_or_else(|| "no address".to_string())?;
    let local = if addr.is_ipv4() {
        "0.0.0.0:0"
    } else {
        "[::]:0"
    };
    let socket = UdpSocket::bind(local).map_err(|e| format!("bind: {e}"))?;
    if options.subnet_broadcast {
        socket.set_broadcast(true).map_err(|e| e.to_string())?;
        socket
            .send_to(datagram, addr)
            .map_err(|e| format!("send: {e}"))?;
        return Ok(());
    }
    socket.connect(addr).map_err(|e| format!("connect: {e}"))?;
    socket
        .set_read_timeout(Some(options.ack_timeout))
        .map_err(|e| e.to_string())?;
    socket.send(datagram).map_err(|e| format!("send: {e}"))?;
    let mut ack = [0u8; 1];
    match socket.recv(&mut ack) {
        Ok(1) if ack[0] == ACK_OK => Ok(()),
        Ok(_) => Err(format!("client rejected the packet (ack {:#04x})", ack[0])),
        Err(e) => Err(format!("no acknowledgement: {e}")),
    }
}

/// Sends one AMP1 packet carrying `signatures` to every endpoint. Failures
/// are recorded per endpoint and never stop the remaining sends.
pub fn broadcast_signatures(
    signatures: &[Signature],
    endpoints: &[String],
    options: &BroadcastOptions,
) -> Result<DeliveryReport> {
    if signatures.is_empty() {
        return Err(Error::Argument("nothing to broadcast".into()));
    }
    let datagram = encode_packet(&AntiMalwarePacket::new(signatures.to_vec()))?;
    if datagram.len() > MAX_DATAGRAM {
        return Err(Error::Argument(format!(
            "AMP1 packet of {} bytes does not fit a datagram",
            datagram.len()
        )));
    }
    let deliveries = endpoints
        .iter()
        .map(|endpoint| {
            let outcome = send_one(endpoint, &datagram, options);
            if let Err(reason) = &outcome {
                warn!("delivery to {endpoint} failed: {reason}");
            }
            Delivery {
                endpoint: endpoint.clone(),
                outcome,
            }
        })
        .collect();
    Ok(DeliveryReport { deliveries })
}

/// A [`DetectionSink`] that broadcasts every non-empty signature batch and
/// optionally archives each AMP1 packet it sends.
#[derive(Debug, Clone)]
pub struct Broadcaster {
    pub endpoints: Vec<String>,
    pub options: BroadcastOptions,
    pub archive_dir: Option<PathBuf>,
    sent: usize,
    pub last_report: Option<DeliveryReport>,
}

impl Broadcaster {
    pub fn new(endpoints: Vec<String>, options: BroadcastOptions) -> Self {
        Broadcaster {
            endpoints,
            options,
            archive_dir: None,
            sent: 0,
            last_report: None,
        }
    }

    pub fn with_archive(mut self, dir: PathBuf) -> Self {
        self.archive_dir = Some(dir);
        self
    }

    pub fn publish(&mut self, signatures: &[Signature]) -> Result<DeliveryReport> {
        if let Some(dir) = &self.archive_dir {
            fs::create_dir_all(dir)?;
            let bytes = encode_packet(&AntiMalwarePacket::new(signatures.to_vec()))?;
            fs::write(dir.join(format!("broadcast-{:04}.amp1", self.sent)), bytes)?;
        }
        self.sent += 1;
        let report = broadcast_signatures(signatures, &self.endpoints, &self.options)?;
        info!(
            "broadcast {} signatures: {} delivered, {} failed",
            signatures.len(),
            report.successes(),
            report.failures()
        );
        self.last_report = Some(report.clone());
        Ok(report)
    }
}

impl DetectionSink for Broadcaster {
    fn deliver(&mut self, _report: &DetectionReport, signatures: &[Signature]) {
        if signatures.is_empty() {
            return;
        }
        if let Err(err) = self.publish(signatures) {
            warn!("broadcast failed: {err}");
        }
    }
}
