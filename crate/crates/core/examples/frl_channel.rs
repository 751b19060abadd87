//! Zero-leakage representation of a target correlated with a private `X`.
//!
//! Prints each per-`x` interval partition, their common refinement, and the
//! audit of the resulting channel.

use privcache::dist::{ratio, Distribution};
use privcache::frl::{build_frl, verify_channel, Representation};

fn main() -> privcache::Result<()> {
    // (x, target) with P(target | x) differing across x.
    let joint = Distribution::from_masses([
        ((0usize, 0u64), ratio(1, 8)),
        ((0, 1), ratio(3, 8)),
        ((1, 0), ratio(3, 8)),
        ((1, 1), ratio(1, 8)),
    ])?;
    let channel = build_frl(&joint);

    for (x, part) in channel.partitions() {
        let cells: Vec<String> = part
            .symbols
            .iter()
            .zip(part.breakpoints.windows(2))
            .map(|(c, w)| format!("[{}, {}) -> {c}", w[0], w[1]))
            .collect();
        println!("x={x}: {}", cells.join(", "));
    }
    let cuts: Vec<String> = channel.breakpoints().iter().map(ToString::to_string).collect();
    println!("refinement breakpoints: {}", cuts.join(" "));

    for x in [0usize, 1] {
        for u in 0..channel.cell_count() {
            println!("phi(x={x}, u={u}) = {}", channel.invert_phi(&x, &u)?);
        }
    }

    let report = verify_channel(&channel);
    println!(
        "|U| = {} (bound {}), H(U) = {:.4} (bound {:.4}), U independent of X: {}",
        report.cardinality,
        report.cardinality_bound,
        report.u_entropy_bits,
        report.entropy_bound_bits,
        report.exact_independent
    );
    assert!(report.is_ok());
    Ok(())
}
