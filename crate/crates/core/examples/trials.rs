//! Monte Carlo encode/decode against the exact expected length.

use std::path::Path;

use privcache::cli::load_config;
use privcache::pipeline::simulate_trials;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = load_config(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/example1.cfg"))?.with_seed(5);
    let summary = simulate_trials(&config, 20_000)?;
    for d in &summary.per_demand {
        let band = 5.0 * d.length_std_dev / (d.trials as f64).sqrt();
        println!(
            "d={}: empirical {:.4}, exact {:.4}, band ±{band:.4}, decode failures {}",
            d.demand, d.empirical_mean, d.analytical_mean, d.decode_failures
        );
    }
    let first = &summary.per_demand[0].transcript[..3];
    for t in first {
        println!("x={} y={:?} key={} sent {}", t.x, t.files, t.key, t.codeword);
    }
    assert!(summary.is_ok());
    Ok(())
}
