//! Common patterns of two short packets, with their hashes.
use honeycure::extract::{extract_common_patterns, ExtractionConfig};
use honeycure::model::Packet;

fn main() -> honeycure::Result<()> {
    let a = Packet::new(b"ABCDEFGHIJK".to_vec())?;
    let b = Packet::new(b"AMNBCDOPQGHIJR".to_vec())?;
    let cfg = ExtractionConfig::with_min_len(3);
    for p in extract_common_patterns(&a, &b, &cfg)? {
        println!(
            "{:<6} hash={}",
            String::from_utf8_lossy(p.bytes()),
            p.hash()
        );
    }
    Ok(())
}
