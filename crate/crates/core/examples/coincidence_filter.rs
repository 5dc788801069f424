//! Two-stage filtering of a coincidence table with one dominant pattern.
use honeycure::extract::Pattern;
use honeycure::hash::HashParams;
use honeycure::stats::{flag_suspects, mean_std, CoincidenceTable, FilterPolicy};

fn main() -> honeycure::Result<()> {
    let params = HashParams::new(257, 10_000, 4)?;
    let mut table = CoincidenceTable::new(400)?;
    for i in 0..99u32 {
        table.record(&Pattern::new(format!("noise-{i:04}").as_bytes(), &params)?);
    }
    let worm = Pattern::new(b"worm-payload", &params)?;
    for _ in 0..324 {
        table.record(&worm);
    }
    let fractions: Vec<f64> = table.entries().map(|e| e.fraction).collect();
    let (mean, std) = mean_std(&fractions);
    println!("{} entries, mean={mean:.4} std={std:.4}", table.len());
    for e in flag_suspects(&table, &FilterPolicy::default()) {
        println!(
            "flagged {:?} S={} f={:.4}",
            String::from_utf8_lossy(e.pattern.bytes()),
            e.count,
            e.fraction
        );
    }
    Ok(())
}
