//! Predicted vs. measured false-positive rate, and how many insertions a
//! few (m, k) choices can take before crossing 6.1e-4.
use honeycure::bloom::{BloomFilter, BloomParams};
use honeycure::hash::{
    collision_probability, collision_probability_approx, max_insertions_for, HashParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> honeycure::Result<()> {
    let (m, k, n) = (10_000u64, 4u32, 500u64);
    let params = BloomParams {
        m,
        k,
        n_expected: n,
    };
    let hash = HashParams::new(257, m, 1)?;
    let mut filter = BloomFilter::new(params, &hash)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..n {
        let item: [u8; 24] = rng.gen();
        filter.insert(&item);
    }
    let probes = 100_000;
    // 32-byte probes cannot equal any 24-byte item.
    let hits = (0..probes)
        .filter(|_| filter.contains(&rng.gen::<[u8; 32]>()))
        .count();
    println!("m={m} k={k} n={n}");
    println!("  exact       {:.6e}", collision_probability(m, k, n));
    println!(
        "  approx      {:.6e}",
        collision_probability_approx(m, k, n)
    );
    println!("  measured    {:.6e}", hits as f64 / probes as f64);

    println!("\ninsertions before 6.1e-4:");
    for m in [10_000u64, 20_000] {
        for k in 1..=8 {
            if let Some(n) = max_insertions_for(m, k, 6.1e-4) {
                println!("  m={m:<6} k={k} n<={n}");
            }
        }
    }
    Ok(())
}
