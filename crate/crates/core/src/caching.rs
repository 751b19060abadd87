//! Uncoded placement and XOR-multicast delivery.
//!
//! Conventions, fixed once for every caller:
//! users and files are zero-based internally and printed one-based;
//! `p`-subsets of users are enumerated lexicographically over sorted members;
//! within a file, subfiles in that subset order are big-endian bit slices
//! (the first subset holds the most significant bits).

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::ToPrimitive;

use crate::dist::{Distribution, JointModel, Rational};
use crate::error::{Error, Result};

/// Largest delivery payload, in bits, that the crate represents as one integer.
pub const MAX_PAYLOAD_BITS: u32 = 63;

/// A value of `width` bits, stored in the low bits of `value`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits {
    pub value: u64,
    pub width: u32,
}

impl Bits {
    pub fn new(value: u64, width: u32) -> Self {
        debug_assert!(width == 64 || value >> width == 0);
        Self { value, width }
    }

    fn xor(self, other: Bits) -> Result<Bits> {
        if self.width != other.width {
            return Err(Error::protocol(format!(
                "xor of {}-bit and {}-bit blocks",
                self.width, other.width
            )));
        }
        Ok(Bits::new(self.value ^ other.value, self.width))
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.width).rev() {
            write!(f, "{}", (self.value >> i) & 1)?;
        }
        Ok(())
    }
}

/// `N` files of `F` bits, `K` users with caches of `M` files, key size `T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemParams {
    files: usize,
    users: usize,
    file_bits: u32,
    cache_files: Rational,
    key_size: u64,
    replication: usize,
    cache_subsets: Vec<Vec<usize>>,
    delivery_subsets: Vec<Vec<usize>>,
}

impl SystemParams {
    pub fn new(
        files: usize,
        users: usize,
        file_bits: u32,
        cache_files: Rational,
        key_size: u64,
    ) -> Result<Self> {
        if users == 0 || files == 0 {
            return Err(Error::config("N and K must be positive"));
        }
        if files < users {
            return Err(Error::config(format!(
                "N = {files} < K = {users}: only N >= K is supported"
            )));
        }
        if key_size == 0 {
            return Err(Error::config("key size T must be positive"));
        }
        if file_bits == 0 || file_bits > 32 {
            return Err(Error::config(format!(
                "file size {file_bits} bits outside the supported range 1..=32"
            )));
        }
        let grid = || {
            (1..=users)
                .map(|i| Rational::new(BigInt::from(i * files), BigInt::from(users)).to_string())
                .join(", ")
        };
        let p = &cache_files * Rational::from_integer(BigInt::from(users))
            / Rational::from_integer(BigInt::from(files));
        let replication = match (p.is_integer(), p.to_integer().to_usize()) {
            (true, Some(p)) if (1..=users).contains(&p) => p,
            _ => {
                return Err(Error::config(format!(
                    "cache size M = {cache_files} is not on the grid {{{}}}",
                    grid()
                )))
            }
        };
        let parts = binomial(users as u64, replication as u64);
        if u64::from(file_bits) % parts != 0 {
            return Err(Error::config(format!(
                "F = {file_bits} is not divisible by C(K,p) = C({users},{replication}) = {parts}"
            )));
        }
        let subfile_bits = u64::from(file_bits) / parts;
        let blocks = if replication < users {
            binomial(users as u64, replication as u64 + 1)
        } else {
            0
        };
        if blocks * subfile_bits > u64::from(MAX_PAYLOAD_BITS) {
            return Err(Error::config(format!(
                "delivery payload of {} bits exceeds the {MAX_PAYLOAD_BITS}-bit limit",
                blocks * subfile_bits
            )));
        }
        Ok(Self {
            files,
            users,
            file_bits,
            cache_files,
            key_size,
            replication,
            cache_subsets: (0..users).combinations(replication).collect(),
            delivery_subsets: (0..users).combinations(replication + 1).collect(),
        })
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn file_bits(&self) -> u32 {
        self.file_bits
    }

    /// Cache size `M`, in files.
    pub fn cache_files(&self) -> &Rational {
        &self.cache_files
    }

    pub fn key_size(&self) -> u64 {
        self.key_size
    }

    /// `p = MK/N`, the number of users caching each subfile.
    pub fn replication(&self) -> usize {
        self.replication
    }

    pub fn subfile_bits(&self) -> u32 {
        self.file_bits / self.cache_subsets.len() as u32
    }

    /// The `p`-subsets Ω in canonical order.
    pub fn cache_subsets(&self) -> &[Vec<usize>] {
        &self.cache_subsets
    }

    /// The `(p+1)`-subsets γ in canonical order (empty when `p = K`).
    pub fn delivery_subsets(&self) -> &[Vec<usize>] {
        &self.delivery_subsets
    }

    pub fn payload_bits(&self) -> u32 {
        self.delivery_subsets.len() as u32 * self.subfile_bits()
    }

    /// Replace the key size, keeping everything else.
    pub fn with_key_size(mut self, key_size: u64) -> Result<Self> {
        if key_size == 0 {
            return Err(Error::config("key size T must be positive"));
        }
        self.key_size = key_size;
        Ok(self)
    }

    pub fn check_model(&self, model: &JointModel) -> Result<()> {
        if model.file_count() != self.files || model.file_bits() != self.file_bits {
            return Err(Error::config(format!(
                "model has N = {}, F = {} but parameters say N = {}, F = {}",
                model.file_count(),
                model.file_bits(),
                self.files,
                self.file_bits
            )));
        }
        Ok(())
    }
}

/// Subfile `Y_{n,Ω}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubfileId {
    pub file: usize,
    pub subset: Vec<usize>,
}

/// Demands `(d_1, …, d_K)`, zero-based file indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DemandVector(Vec<usize>);

impl DemandVector {
    pub fn new(demands: Vec<usize>, params: &SystemParams) -> Result<Self> {
        if demands.len() != params.users() {
            return Err(Error::config(format!(
                "demand vector has {} entries for {} users",
                demands.len(),
                params.users()
            )));
        }
        if let Some(d) = demands.iter().find(|&&d| d >= params.files()) {
            return Err(Error::config(format!(
                "demanded file {} outside 1..={}",
                d + 1,
                params.files()
            )));
        }
        Ok(Self(demands))
    }

    /// Builds from one-based file numbers.
    pub fn from_one_based(demands: &[usize], params: &SystemParams) -> Result<Self> {
        if demands.contains(&0) {
            return Err(Error::config("file numbers are one-based"));
        }
        Self::new(demands.iter().map(|d| d - 1).collect(), params)
    }

    /// All `N^K` vectors in lexicographic order.
    pub fn all(params: &SystemParams) -> Vec<Self> {
        (0..params.users())
            .map(|_| 0..params.files())
            .multi_cartesian_product()
            .map(Self)
            .collect()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for DemandVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.iter().map(|d| d + 1).join(","))
    }
}

/// Split a file value into its subfiles, in canonical subset order.
pub fn split_file(y: u64, params: &SystemParams) -> Result<Vec<(Vec<usize>, Bits)>> {
    let f = params.file_bits();
    if y >> f != 0 {
        return Err(Error::config(format!("file value {y} does not fit in {f} bits")));
    }
    let width = params.subfile_bits();
    let mask = (1u64 << width) - 1;
    let parts = params.cache_subsets().len() as u32;
    Ok(params
        .cache_subsets()
        .iter()
        .enumerate()
        .map(|(i, omega)| {
            let shift = (parts - 1 - i as u32) * width;
            (omega.clone(), Bits::new((y >> shift) & mask, width))
        })
        .collect())
}

/// Concatenate subfiles, in order, back into a file value.
pub fn assemble_file(parts: impl IntoIterator<Item = Bits>) -> u64 {
    parts
        .into_iter()
        .fold(0u64, |acc, b| (acc << b.width) | b.value)
}

/// Which subfiles each user stores.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheLayout {
    pub subfile_bits: u32,
    pub per_user: Vec<Vec<SubfileId>>,
}

impl CacheLayout {
    pub fn new(params: &SystemParams) -> Self {
        let per_user = (0..params.users())
            .map(|k| {
                (0..params.files())
                    .flat_map(|n| {
                        params
                            .cache_subsets()
                            .iter()
                            .filter(move |omega| omega.contains(&k))
                            .map(move |omega| SubfileId {
                                file: n,
                                subset: omega.clone(),
                            })
                    })
                    .collect()
            })
            .collect();
        Self {
            subfile_bits: params.subfile_bits(),
            per_user,
        }
    }

    pub fn stored_bits(&self, user: usize) -> u64 {
        self.per_user[user].len() as u64 * u64::from(self.subfile_bits)
    }
}

/// The contents `Z_k` of one user's cache.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserCache {
    pub user: usize,
    pub subfiles: BTreeMap<SubfileId, Bits>,
}

impl UserCache {
    pub fn stored_bits(&self) -> u64 {
        self.subfiles.values().map(|b| u64::from(b.width)).sum()
    }

    fn get(&self, id: &SubfileId) -> Result<Bits> {
        self.subfiles.get(id).copied().ok_or_else(|| {
            Error::protocol(format!(
                "user {} has no cached subfile of file {} for subset {:?}",
                self.user + 1,
                id.file + 1,
                id.subset
            ))
        })
    }
}

/// Fill every cache: user `k` stores `Y_{n,Ω}` for every `n` and every `Ω ∋ k`.
pub fn place(files: &[u64], params: &SystemParams) -> Result<Vec<UserCache>> {
    if files.len() != params.files() {
        return Err(Error::config(format!(
            "{} file values for N = {}",
            files.len(),
            params.files()
        )));
    }
    let split: Vec<_> = files
        .iter()
        .map(|&y| split_file(y, params))
        .collect::<Result<_>>()?;
    Ok((0..params.users())
        .map(|k| UserCache {
            user: k,
            subfiles: split
                .iter()
                .enumerate()
                .flat_map(|(n, parts)| {
                    parts
                        .iter()
                        .filter(|(omega, _)| omega.contains(&k))
                        .map(move |(omega, bits)| {
                            (
                                SubfileId {
                                    file: n,
                                    subset: omega.clone(),
                                },
                                *bits,
                            )
                        })
                })
                .collect(),
        })
        .collect())
}

/// The unencrypted delivery message: one XOR block per `(p+1)`-subset γ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeliveryPayload {
    pub block_bits: u32,
    pub blocks: Vec<(Vec<usize>, Bits)>,
}

impl DeliveryPayload {
    pub fn bit_len(&self) -> u32 {
        self.block_bits * self.blocks.len() as u32
    }

    /// Blocks concatenated in γ order, first block most significant.
    pub fn value(&self) -> u64 {
        assemble_file(self.blocks.iter().map(|(_, b)| *b))
    }

    /// Number of distinct payload values, `2^bits`.
    pub fn alphabet_size(params: &SystemParams) -> u64 {
        1u64 << params.payload_bits()
    }

    /// Inverse of [`DeliveryPayload::value`].
    pub fn from_value(value: u64, params: &SystemParams) -> Result<Self> {
        let width = params.subfile_bits();
        let count = params.delivery_subsets().len() as u32;
        if value >> params.payload_bits() != 0 {
            return Err(Error::protocol(format!(
                "payload value {value} wider than {} bits",
                params.payload_bits()
            )));
        }
        let mask = (1u64 << width) - 1;
        let blocks = params
            .delivery_subsets()
            .iter()
            .enumerate()
            .map(|(i, gamma)| {
                let shift = (count - 1 - i as u32) * width;
                (gamma.clone(), Bits::new((value >> shift) & mask, width))
            })
            .collect();
        Ok(Self {
            block_bits: width,
            blocks,
        })
    }
}

/// `C_γ = XOR_{j ∈ γ} Y_{d_j, γ \ {j}}` for every γ.
pub fn deliver(files: &[u64], demands: &DemandVector, params: &SystemParams) -> Result<DeliveryPayload> {
    let split: Vec<BTreeMap<Vec<usize>, Bits>> = files
        .iter()
        .map(|&y| split_file(y, params).map(|v| v.into_iter().collect()))
        .collect::<Result<_>>()?;
    if split.len() != params.files() {
        return Err(Error::config("file count does not match N"));
    }
    let width = params.subfile_bits();
    let blocks = params
        .delivery_subsets()
        .iter()
        .map(|gamma| {
            let block = gamma.iter().fold(Bits::new(0, width), |acc, &j| {
                let rest: Vec<usize> = gamma.iter().copied().filter(|&u| u != j).collect();
                let part = split[demands.as_slice()[j]][&rest];
                Bits::new(acc.value ^ part.value, width)
            });
            (gamma.clone(), block)
        })
        .collect();
    Ok(DeliveryPayload {
        block_bits: width,
        blocks,
    })
}

/// User `k` rebuilds `Y_{d_k}` from the payload and its own cache.
pub fn decode_demand(
    user: usize,
    payload: &DeliveryPayload,
    cache: &UserCache,
    demands: &DemandVector,
    params: &SystemParams,
) -> Result<u64> {
    if user >= params.users() || cache.user != user {
        return Err(Error::protocol(format!(
            "cache of user {} used to decode for user {}",
            cache.user + 1,
            user + 1
        )));
    }
    let width = params.subfile_bits();
    if payload.block_bits != width || payload.blocks.len() != params.delivery_subsets().len() {
        return Err(Error::protocol(format!(
            "payload has {} blocks of {} bits, expected {} blocks of {width} bits",
            payload.blocks.len(),
            payload.block_bits,
            params.delivery_subsets().len()
        )));
    }
    let d = demands.as_slice();
    let wanted = d[user];
    let blocks: BTreeMap<&Vec<usize>, Bits> = payload.blocks.iter().map(|(g, b)| (g, *b)).collect();
    let mut parts = Vec::with_capacity(params.cache_subsets().len());
    for omega in params.cache_subsets() {
        let id = SubfileId {
            file: wanted,
            subset: omega.clone(),
        };
        if omega.contains(&user) {
            parts.push(cache.get(&id)?);
            continue;
        }
        let mut gamma = omega.clone();
        gamma.push(user);
        gamma.sort_unstable();
        let mut acc = *blocks
            .get(&gamma)
            .ok_or_else(|| Error::protocol(format!("payload lacks block for {gamma:?}")))?;
        for &j in gamma.iter().filter(|&&j| j != user) {
            let rest: Vec<usize> = gamma.iter().copied().filter(|&u| u != j).collect();
            acc = acc.xor(cache.get(&SubfileId {
                file: d[j],
                subset: rest,
            })?)?;
        }
        parts.push(acc);
    }
    Ok(assemble_file(parts))
}

/// Exact joint of `(X, C')` for one demand vector, `C'` as its packed value.
pub fn payload_distribution(
    model: &JointModel,
    demands: &DemandVector,
    params: &SystemParams,
) -> Result<Distribution<(usize, u64)>> {
    params.check_model(model)?;
    let entries: Vec<_> = model
        .outcomes()
        .iter()
        .map(|o| Ok(((o.x, deliver(&o.files, demands, params)?.value()), o.mass.clone())))
        .collect::<Result<_>>()?;
    Distribution::from_masses(entries)
}

/// Whether the payload always has the same value: nothing to send beyond `X`.
pub fn payload_is_trivial(joint: &Distribution<(usize, u64)>) -> bool {
    let mut values = joint.iter().map(|((_, c), _)| c);
    match values.next() {
        Some(first) => values.all(|c| c == first),
        None => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ratio;

    fn params(n: usize, k: usize, f: u32, m: (i64, i64)) -> SystemParams {
        SystemParams::new(n, k, f, ratio(m.0, m.1), 4).unwrap()
    }

    #[test]
    fn rejects_off_grid_cache_size() {
        let err = SystemParams::new(2, 2, 2, ratio(1, 2), 4).unwrap_err();
        assert!(err.to_string().contains("1, 2"), "{err}");
        assert!(SystemParams::new(1, 2, 2, ratio(1, 1), 4).is_err());
        assert!(SystemParams::new(3, 3, 2, ratio(1, 1), 4).is_err(), "F=2 not divisible by 3");
    }

    #[test]
    fn split_two_halves() {
        let p = params(2, 2, 2, (1, 1));
        let parts = split_file(0b10, &p).unwrap();
        assert_eq!(parts, vec![(vec![0], Bits::new(1, 1)), (vec![1], Bits::new(0, 1))]);
    }

    #[test]
    fn split_identity_when_everyone_caches_everything() {
        let p = params(2, 2, 2, (2, 1));
        assert_eq!(split_file(0b10, &p).unwrap(), vec![(vec![0, 1], Bits::new(2, 2))]);
    }

    #[test]
    fn split_four_one_bit_slices() {
        let p = params(4, 4, 4, (1, 1));
        let bits: Vec<u64> = split_file(0b1010, &p).unwrap().iter().map(|(_, b)| b.value).collect();
        assert_eq!(bits, vec![1, 0, 1, 0]);
    }

    #[test]
    fn split_assemble_round_trip() {
        for (n, k, f, m) in [(2, 2, 2, (1, 1)), (3, 3, 6, (1, 1)), (3, 3, 6, (2, 1)), (4, 4, 12, (2, 1))] {
            let p = params(n, k, f, m);
            for y in 0..(1u64 << f) {
                let parts = split_file(y, &p).unwrap();
                assert_eq!(assemble_file(parts.into_iter().map(|(_, b)| b)), y);
            }
        }
    }

    #[test]
    fn placement_of_small_example() {
        let p = params(2, 2, 2, (1, 1));
        let caches = place(&[0b01, 0b11], &p).unwrap();
        let z1: Vec<u64> = caches[0].subfiles.values().map(|b| b.value).collect();
        let z2: Vec<u64> = caches[1].subfiles.values().map(|b| b.value).collect();
        assert_eq!(z1, vec![0, 1]);
        assert_eq!(z2, vec![1, 1]);
    }

    #[test]
    fn memory_equality_holds() {
        for (n, k, f, m) in [
            (2, 2, 2, (1, 1)),
            (2, 2, 2, (2, 1)),
            (3, 3, 6, (1, 1)),
            (3, 3, 6, (2, 1)),
            (4, 3, 6, (4, 3)),
            (5, 4, 12, (5, 2)),
        ] {
            let p = params(n, k, f, m);
            let layout = CacheLayout::new(&p);
            let mf = p.cache_files() * Rational::from_integer(BigInt::from(f));
            for user in 0..k {
                assert_eq!(Rational::from_integer(BigInt::from(layout.stored_bits(user))), mf);
            }
            let caches = place(&vec![0; n], &p).unwrap();
            assert!(caches.iter().all(|c| c.stored_bits() == layout.stored_bits(c.user)));
        }
    }

    #[test]
    fn everyone_caches_everything_when_m_is_n() {
        let p = params(2, 2, 2, (2, 1));
        let caches = place(&[1, 2], &p).unwrap();
        assert!(caches.iter().all(|c| c.stored_bits() == 4));
        let d = DemandVector::new(vec![0, 1], &p).unwrap();
        let payload = deliver(&[1, 2], &d, &p).unwrap();
        assert!(payload.blocks.is_empty());
        assert_eq!(decode_demand(0, &payload, &caches[0], &d, &p).unwrap(), 1);
        assert_eq!(decode_demand(1, &payload, &caches[1], &d, &p).unwrap(), 2);
    }

    #[test]
    fn payload_size_matches_rate() {
        for (n, k, f, m) in [(2, 2, 2, (1, 1)), (3, 3, 6, (1, 1)), (4, 4, 12, (2, 1))] {
            let p = params(n, k, f, m);
            let d = DemandVector::new(vec![0; k], &p).unwrap();
            let payload = deliver(&vec![0; n], &d, &p).unwrap();
            let blocks = binomial(k as u64, p.replication() as u64 + 1);
            assert_eq!(u64::from(payload.bit_len()), blocks * u64::from(p.subfile_bits()));
        }
    }

    #[test]
    fn exhaustive_decodability() {
        for (n, k, f, m) in [(2, 2, 2, (1, 1)), (3, 3, 3, (1, 1)), (3, 3, 3, (2, 1))] {
            let p = params(n, k, f, m);
            let caches_for = |files: &[u64]| place(files, &p).unwrap();
            let all_files: Vec<Vec<u64>> = (0..n).map(|_| 0..(1u64 << f)).multi_cartesian_product().collect();
            for files in &all_files {
                let caches = caches_for(files);
                for d in DemandVector::all(&p) {
                    let payload = deliver(files, &d, &p).unwrap();
                    let rebuilt = DeliveryPayload::from_value(payload.value(), &p).unwrap();
                    assert_eq!(rebuilt, payload);
                    for k in 0..k {
                        let y = decode_demand(k, &payload, &caches[k], &d, &p).unwrap();
                        assert_eq!(y, files[d.as_slice()[k]]);
                    }
                }
            }
        }
    }

    #[test]
    fn mismatched_widths_are_protocol_errors() {
        let p = params(2, 2, 2, (1, 1));
        let caches = place(&[0, 0], &p).unwrap();
        let d = DemandVector::new(vec![0, 1], &p).unwrap();
        let mut payload = deliver(&[0, 0], &d, &p).unwrap();
        payload.block_bits = 2;
        assert!(matches!(
            decode_demand(0, &payload, &caches[0], &d, &p),
            Err(Error::Protocol(_))
        ));
        let payload = deliver(&[0, 0], &d, &p).unwrap();
        assert!(matches!(
            decode_demand(0, &payload, &caches[1], &d, &p),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn demand_display_is_one_based() {
        let p = params(2, 2, 2, (1, 1));
        let d = DemandVector::from_one_based(&[1, 2], &p).unwrap();
        assert_eq!(d.to_string(), "(1,2)");
        assert!(DemandVector::from_one_based(&[0, 2], &p).is_err());
        assert!(DemandVector::from_one_based(&[3, 2], &p).is_err());
        assert_eq!(DemandVector::all(&p).len(), 4);
    }
}
