//! Corpus push over TCP.
//!
//! The client sends `"CXFR" | length u64 BE | CORP bytes`; the server answers
//! with a single byte, `0x00` if the corpus parsed and was spooled, `0x01`
//! otherwise.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use log::{info, warn};

use super::spool::spool_corpus;
use crate::corpus_format::read_corpus;
use crate::error::{Error, Result};
use crate::shutdown::Shutdown;

pub const CXFR_MAGIC: &[u8; 4] = b"CXFR";
/// Larger announced payloads are refused without reading them.
pub const MAX_PUSH_LEN: u64 = 256 * 1024 * 1024;

const ACCEPTED: u8 = 0x00;
const MALFORMED: u8 = 0x01;
const IO_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PushReply {
    Accepted,
    Malformed,
}

pub fn push_corpus(addr: impl ToSocketAddrs, corpus_bytes: &[u8]) -> Result<PushReply> {
    let mut stream = TcpStream::connect(addr)?;
    stream.set_read_timeout(Some(IO_TIMEOUT))?;
    stream.set_write_timeout(Some(IO_TIMEOUT))?;
    let mut frame = Vec::with_capacity(12 + corpus_bytes.len());
    frame.extend_from_slice(CXFR_MAGIC);
    frame.extend_from_slice(&(corpus_bytes.len() as u64).to_be_bytes());
    frame.extend_from_slice(corpus_bytes);
    stream.write_all(&frame)?;
    stream.flush()?;
    let mut reply = [0u8; 1];
    stream.read_exact(&mut reply)?;
    match reply[0] {
        ACCEPTED => Ok(PushReply::Accepted),
        MALFORMED => Ok(PushReply::Malformed),
        other => Err(Error::format(
            "reply",
            0,
            format!("unknown reply byte {other:#04x}"),
        )),
    }
}

pub struct PushServer {
    listener: TcpListener,
    spool: PathBuf,
}

impl PushServer {
    pub fn bind(addr: impl ToSocketAddrs, spool: &Path) -> Result<Self> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        Ok(PushServer {
            listener,
            spool: spool.to_path_buf(),
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts pushes until shutdown. Connections are handled one at a time.
    pub fn serve(&self, shutdown: &Shutdown) -> Result<()> {
        while !shutdown.is_requested() {
            match self.listener.accept() {
                Ok((stream, peer)) => {
                    if let Err(err) = self.handle(stream) {
                        warn!("push from {peer} failed: {err}");
                    }
                }
                Err(err) if err.kind() == io::ErrorKind::WouldBlock => {
                    thread::sleep(Duration::from_millis(20));
                }
                Err(err) => return Err(err.into()),
            }
        }
        Ok(())
    }

    /// Reads one push and replies. Returns whether the corpus was accepted.
    pub fn handle(&self, mut stream: TcpStream) -> Result<bool> {
        stream.set_nonblocking(false)?;
        stream.set_read_timeout(Some(IO_TIMEOUT))?;
        stream.set_write_timeout(Some(IO_TIMEOUT))?;
        let mut header = [0u8; 12];
        stream.read_exact(&mut header)?;
        let len = u64::from_be_bytes(header[4..].try_into().expect("8 bytes"));
        if &header[..4] != CXFR_MAGIC || len > MAX_PUSH_LEN {
            warn!("refusing push: bad magic or oversized length {len}");
            stream.write_all(&[MALFORMED])?;
            return Ok(false);
        }
        let mut payload = vec![0u8; len as usize];
        stream.read_exact(&mut payload)?;
        let accepted = match read_corpus(&payload) {
            Ok(corpus) => {
                let path = spool_corpus(&self.spool, corpus.created_at(), &payload)?;
                info!("spooled pushed corpus as {}", path.display());
                true
            }
            Err(err) => {
                warn!("refusing malformed pushed corpus: {err}");
                false
            }
        };
        stream.write_all(&[if accepted { ACCEPTED } else { MALFORMED }])?;
        Ok(accepted)
    }
}
