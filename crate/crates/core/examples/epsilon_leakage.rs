//! Representations that leak a chosen amount `ε` of information about `X`.

use privcache::dist::{ratio, to_f64, Distribution};
use privcache::frl::{build_efrl, verify_channel};

fn main() -> privcache::Result<()> {
    let joint = Distribution::from_masses([
        ((0usize, 0u64), ratio(1, 4)),
        ((1, 1), ratio(1, 4)),
        ((2, 0), ratio(1, 8)),
        ((2, 1), ratio(1, 8)),
        ((3, 1), ratio(1, 4)),
    ])?;
    let hx = 2.0;
    println!("{:>6} {:>8} {:>14} {:>6} {:>10}", "eps", "alpha", "I(U;X)", "|U|", "H(U)");
    for step in 0..=8 {
        let eps = hx * f64::from(step) / 8.0;
        let channel = build_efrl(&joint, eps)?;
        let report = verify_channel(&channel);
        println!(
            "{eps:>6.3} {:>8.4} {:>14.12} {:>6} {:>10.4}",
            to_f64(channel.alpha()),
            report.leakage_bits,
            report.cardinality,
            report.u_entropy_bits
        );
        assert!(report.is_ok(), "{:?}", report.violations);
    }
    Ok(())
}
