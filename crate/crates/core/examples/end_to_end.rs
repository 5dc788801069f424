//! The full honeypot-to-client pipeline in one process.
use honeycure::sim::{simulate, SimOptions, SimScenario};

fn main() -> honeycure::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    let workdir = std::env::temp_dir().join(format!("honeycure-sim-{}", std::process::id()));
    let report = simulate(&SimScenario::eicar(seed), &workdir, &SimOptions::default())?;
    print!("{}", report.stage_dump());
    println!("success: {}", report.success());
    if let Some(t) = report.detection_to_quarantine {
        println!("detection to quarantine: {:.3}s", t.as_secs_f64());
    }
    println!("audit trail left in {}", workdir.display());
    Ok(())
}
