//! Synthetic traffic with EICAR in half of the packets, run through the detector.
use honeycure::detector::{generate_signatures, run_detection};
use honeycure::extract::ExtractionConfig;
use honeycure::sim::{generate_corpus, SimScenario};
use honeycure::stats::FilterPolicy;

fn main() -> honeycure::Result<()> {
    for fraction in [0.5, 0.0] {
        let scenario = SimScenario {
            inject_fraction: fraction,
            ..SimScenario::eicar(42)
        };
        let traffic = generate_corpus(&scenario)?;
        let report = run_detection(
            &traffic.corpus,
            &ExtractionConfig::default(),
            &FilterPolicy::default(),
        )?;
        println!(
            "fraction {fraction}: {} injected, {} suspects",
            traffic.injected_count(),
            report.suspects.len()
        );
        for s in generate_signatures(&report) {
            println!(
                "  {} ({} bytes)",
                String::from_utf8_lossy(s.bytes()),
                s.bytes().len()
            );
        }
    }
    Ok(())
}
