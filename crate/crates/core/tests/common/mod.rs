#![allow(dead_code)]

use std::path::PathBuf;

use num_bigint::BigInt;
use privcache::caching::SystemParams;
use privcache::cli::load_config;
use privcache::dist::{Alphabet, Distribution, JointModel, Rational};
use privcache::pipeline::ExperimentConfig;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

pub fn example1() -> ExperimentConfig {
    load_config(&config_path("example1.cfg")).expect("bundled config parses")
}

pub fn example2() -> ExperimentConfig {
    load_config(&config_path("example2.cfg")).expect("bundled config parses")
}

fn rational(num: u64, den: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Random positive integer weights normalised to an exact pmf.
fn random_masses(rng: &mut ChaCha8Rng, count: usize) -> Vec<Rational> {
    let weights: Vec<u64> = (0..count).map(|_| rng.gen_range(1..=12)).collect();
    let total: u64 = weights.iter().sum();
    weights.into_iter().map(|w| rational(w, total)).collect()
}

/// A random small instance: `N = K = 2`, `|X| <= 4` (at least `min_x`),
/// `F <= 2`, `M` on the grid, every `x` with positive mass and `T = |X|`.
pub fn random_config(seed: u64, min_x: usize) -> ExperimentConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_size = rng.gen_range(min_x.max(1)..=4);
    let m = rng.gen_range(1..=2u64);
    // M = 1 splits each file across both users, so F must be even.
    let f: u32 = if m == 1 { 2 } else { rng.gen_range(1..=2) };
    let values = 1u64 << f;

    let mut points: Vec<(usize, Vec<u64>)> = Vec::new();
    for x in 0..x_size {
        for a in 0..values {
            for b in 0..values {
                points.push((x, vec![a, b]));
            }
        }
    }
    points.shuffle(&mut rng);
    let extra = rng.gen_range(0..=6usize);
    let mut chosen: Vec<(usize, Vec<u64>)> = Vec::new();
    for x in 0..x_size {
        let first = points.iter().position(|(px, _)| *px == x).expect("every x has points");
        chosen.push(points.remove(first));
    }
    chosen.extend(points.into_iter().take(extra));

    let masses = random_masses(&mut rng, chosen.len());
    let entries = chosen
        .into_iter()
        .zip(masses)
        .map(|((x, ys), p)| (x, ys, p))
        .collect();
    let alphabet = Alphabet::new((0..x_size).map(|i| format!("x{i}")).collect()).unwrap();
    let model = JointModel::new(alphabet, 2, f, entries).expect("generated model is valid");
    let params = SystemParams::new(2, 2, f, rational(m, 1), x_size as u64).expect("grid point");
    ExperimentConfig::new(model, params)
        .expect("valid config")
        .with_seed(seed)
}

/// A random joint of `(X, target)` with `|X| <= 5` and target alphabet `<= 8`.
pub fn random_joint(seed: u64) -> Distribution<(usize, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_size = rng.gen_range(1..=5usize);
    let targets = rng.gen_range(1..=8u64);
    let mut cells: Vec<(usize, u64)> = (0..x_size).flat_map(|x| (0..targets).map(move |c| (x, c))).collect();
    cells.shuffle(&mut rng);
    // One in four joints makes X a function of the target.
    let functional = rng.gen_bool(0.25);
    let keep: Vec<(usize, u64)> = if functional {
        let owner: Vec<usize> = (0..targets).map(|_| rng.gen_range(0..x_size)).collect();
        (0..targets).map(|c| (owner[c as usize], c)).collect()
    } else {
        let count = rng.gen_range(1..=cells.len());
        cells.into_iter().take(count).collect()
    };
    let masses = random_masses(&mut rng, keep.len());
    Distribution::from_masses(keep.into_iter().zip(masses)).unwrap()
}
