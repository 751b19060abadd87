//! Closed-form bounds for every demand vector, at several leakage levels.

use std::path::Path;

use privcache::cli::load_config;
use privcache::pipeline::bounds_only;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = load_config(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/example1.cfg"))?;
    for eps in [0.0, 0.5, 1.0] {
        let config = base.clone().with_epsilon(eps)?;
        let (_, report) = bounds_only(&config)?;
        println!("eps = {eps}");
        for b in &report.per_demand {
            println!(
                "  d={}: sum H(C'|x) = {:.4}, entropy bound {:.4}, cardinality bound {}, X-determined bound {}",
                b.demand,
                b.upper.sum_conditional_entropy,
                b.upper.entropy,
                b.upper.cardinality,
                b.upper.deterministic.map_or("n/a".into(), |v| v.to_string()),
            );
        }
        println!(
            "  L1 = {:.4}, L2 stated = {:?}, L2 cut-set = {:?}",
            report.lb_l1, report.lb_l2.stated, report.lb_l2.cutset
        );
    }
    Ok(())
}
