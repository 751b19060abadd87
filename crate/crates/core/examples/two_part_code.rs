//! The private broadcast for one demand vector: one-time-padded `X`, then a
//! Huffman codeword for the representation of the delivery payload.

use std::path::Path;

use privcache::caching::{deliver, payload_distribution, place, DemandVector};
use privcache::cli::load_config;
use privcache::dist::sample_exact;
use privcache::frl::build_frl;
use privcache::privcode::TwoPartCode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = load_config(&Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/example1.cfg"))?;
    let (model, params) = (&config.model, &config.params);
    let d = DemandVector::from_one_based(&[1, 2], params)?;

    let joint = payload_distribution(model, &d, params)?;
    let code = TwoPartCode::new(build_frl(&joint), model.x_alphabet().len())?;
    println!("pad: {} bits", code.part1_len());
    for (u, word) in code.codebook().iter() {
        println!("u={u}: {word}");
    }
    let lengths = code.expected_length()?;
    println!("expected length per key: {:?}", lengths.per_key.iter().map(ToString::to_string).collect::<Vec<_>>());

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let weights: Vec<_> = model.outcomes().iter().map(|o| (o.clone(), o.mass.clone())).collect();
    for _ in 0..5 {
        let outcome = sample_exact(&weights, &mut rng)?;
        let key = rng.gen_range(0..code.key_size());
        let payload = deliver(&outcome.files, &d, params)?.value();
        let word = code.encode(outcome.x, payload, key, &mut rng)?;
        let caches = place(&outcome.files, params)?;
        let decoded: Vec<u64> = (0..params.users())
            .map(|k| code.decode_user(k, &word, key, &caches[k], &d, params))
            .collect::<privcache::Result<_>>()?;
        println!(
            "x={} y={:?} key={key}: sends {} -> users decode {decoded:?}",
            model.x_alphabet().symbols()[outcome.x],
            outcome.files,
            word.bits
        );
    }
    Ok(())
}
