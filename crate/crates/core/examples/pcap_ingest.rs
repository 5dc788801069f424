//! Pulls TCP/UDP payloads out of a classic pcap file.
//!
//! `cargo run --example pcap_ingest -- capture.pcap`
use std::env;
use std::fs;

fn main() -> honeycure::Result<()> {
    let Some(path) = env::args().nth(1) else {
        eprintln!("usage: pcap_ingest <file.pcap>");
        std::process::exit(2);
    };
    let packets = honeycure::pcap::ingest_pcap(&fs::read(&path)?)?;
    println!("{} payloads", packets.len());
    for p in packets.iter().take(10) {
        let preview: String = p
            .payload()
            .iter()
            .take(32)
            .map(|&b| if b.is_ascii_graphic() { b as char } else { '.' })
            .collect();
        println!(
            "{:>10} {:>5}B {preview}",
            p.source_id().unwrap_or("-"),
            p.len()
        );
    }
    Ok(())
}
