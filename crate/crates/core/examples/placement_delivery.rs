//! Uncoded placement, XOR delivery and per-user decoding for every demand vector.
//!
//! Two users, two 2-bit files, each user caching one file's worth of bits.

use privcache::caching::{decode_demand, deliver, place, DemandVector, SystemParams};
use privcache::dist::ratio;

fn main() -> privcache::Result<()> {
    let params = SystemParams::new(2, 2, 2, ratio(1, 1), 4)?;
    let files = [0b10u64, 0b01];
    let caches = place(&files, &params)?;

    for cache in &caches {
        let held: Vec<String> = cache
            .subfiles
            .iter()
            .map(|(id, bits)| format!("Y{}[{:?}]={bits}", id.file + 1, id.subset))
            .collect();
        println!("user {} caches {} ({} bits)", cache.user + 1, held.join(" "), cache.stored_bits());
    }

    for d in DemandVector::all(&params) {
        let payload = deliver(&files, &d, &params)?;
        let decoded: Vec<u64> = (0..params.users())
            .map(|k| decode_demand(k, &payload, &caches[k], &d, &params))
            .collect::<privcache::Result<_>>()?;
        println!(
            "d={d}: payload {} bits = {:0width$b}, users decode {:?}",
            payload.bit_len(),
            payload.value(),
            decoded,
            width = payload.bit_len() as usize
        );
        for (k, y) in decoded.iter().enumerate() {
            assert_eq!(*y, files[d.as_slice()[k]]);
        }
    }
    Ok(())
}
