//! The thin client: receives AMP1 datagrams, updates its database, rescans
//! its root and quarantines matches. Reception runs on its own thread;
//! update/scan/quarantine cycles run one at a time in arrival order.

use std::net::{SocketAddr, UdpSocket};
use std::path::PathBuf;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use log::{error, info, warn};

use super::broadcast::{ACK_MALFORMED, ACK_OK};
use super::db::SignatureDb;
use super::packet::{decode_packet, AntiMalwarePacket};
use super::quarantine::{quarantine, QuarantineRecord};
use super::scan::{ScanMatch, Scanner, DEFAULT_CHUNK_SIZE};
use crate::error::Result;
use crate::shutdown::Shutdown;

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub listen: String,
    pub db_path: PathBuf,
    pub scan_root: PathBuf,
    pub quarantine_dir: PathBuf,
    pub chunk_size: usize,
}

impl ClientConfig {
    pub fn new(
        listen: impl Into<String>,
        db_path: PathBuf,
        scan_root: PathBuf,
        quarantine_dir: PathBuf,
    ) -> Self {
        ClientConfig {
            listen: listen.into(),
            db_path,
            scan_root,
            quarantine_dir,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CycleReport {
    pub new_signatures: usize,
    pub db_size: usize,
    pub matches: Vec<ScanMatch>,
    pub quarantined: Vec<QuarantineRecord>,
}

pub struct ThinClient {
    socket: UdpSocket,
    config: ClientConfig,
    db: SignatureDb,
}

impl ThinClient {
    pub fn bind(config: ClientConfig) -> Result<Self> {
        let db = SignatureDb::load(&config.db_path)?;
        let socket = UdpSocket::bind(&config.listen)?;
        Ok(ThinClient { socket, config, db })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.socket.local_addr()?)
    }

    pub fn db(&self) -> &SignatureDb {
        &self.db
    }

    /// One update, scan and quarantine pass for a received packet.
    pub fn handle_packet(&mut self, packet: &AntiMalwarePacket) -> Result<CycleReport> {
        let new_signatures = self.db.apply(packet, &self.config.db_path)?;
        let scanner = Scanner::from_db(&self.db)?
            .with_chunk_size(self.config.chunk_size)
            .with_exclusions(vec![
                self.config.quarantine_dir.clone(),
                self.config.db_path.clone(),
            ]);
        let matches = scanner.scan_path(&self.config.scan_root)?;
        let mut quarantined = Vec::new();
        let mut last_file = None;
        for m in &matches {
            // One quarantine per file; matches are sorted by path.
            if last_file == Some(&m.file) {
                continue;
            }
            last_file = Some(&m.file);
            match quarantine(m, &self.config.quarantine_dir) {
                Ok(Some(record)) => quarantined.push(record),
                Ok(None) => {}
                Err(err) => error!("quarantine of {} failed: {err}", m.file.display()),
            }
        }
        Ok(CycleReport {
            new_signatures,
            db_size: self.db.len(),
            matches,
            quarantined,
        })
    }

    /// Serves until shutdown, calling `on_cycle` after each completed cycle.
    pub fn run(
        mut self,
        shutdown: &Shutdown,
        mut on_cycle: impl FnMut(&CycleReport),
    ) -> Result<()> {
        let socket = self.socket.try_clone()?;
        socket.set_read_timeout(Some(Duration::from_millis(50)))?;
        let (tx, rx) = mpsc::channel::<AntiMalwarePacket>();
        let stop = shutdown.clone();
        let receiver = thread::spawn(move || receive_loop(&socket, &tx, &stop));

        while !shutdown.is_requested() {
            let packet = match rx.recv_timeout(Duration::from_millis(50)) {
                Ok(packet) => packet,
                Err(mpsc::RecvTimeoutError::Timeout) => continue,
                Err(mpsc::RecvTimeoutError::Disconnected) => break,
            };
            match self.handle_packet(&packet) {
                Ok(report) => {
                    info!(
                        "cycle: {} new signatures, {} matches, {} quarantined",
                        report.new_signatures,
                        report.matches.len(),
                        report.quarantined.len()
                    );
                    on_cycle(&report);
                }
                Err(err) => error!("client cycle failed: {err}"),
            }
        }
        shutdown.request();
        let _ = receiver.join();
        Ok(())
    }
}

fn receive_loop(socket: &UdpSocket, tx: &mpsc::Sender<AntiMalwarePacket>, shutdown: &Shutdown) {
    let mut buf = vec![0u8; 65_536];
    while !shutdown.is_requested() {
        let (n, peer) = match socket.recv_from(&mut buf) {
            Ok(got) => got,
            Err(err)
                if matches!(
                    err.kind(),
                    std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut
                ) =>
            {
                continue
            }
            Err(err) => {
                warn!("receive failed: {err}");
                continue;
            }
        };
        match decode_packet(&buf[..n]) {
            Ok(packet) => {
                let _ = socket.send_to(&[ACK_OK], peer);
                if tx.send(packet).is_err() {
                    return;
                }
            }
            Err(err) => {
                warn!("dropping malformed datagram from {peer}: {err}");
                let _ = socket.send_to(&[ACK_MALFORMED], peer);
            }
        }
    }
}
