//! Two-part private code.
//!
//! Wire layout of a codeword: `⌈log2 |X|⌉` bits of the padded private value
//! `x̃ = x + w mod |X|` (big-endian), followed by the Huffman codeword of `U`.
//! Packed into bytes MSB-first.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;

use crate::caching::{decode_demand, DeliveryPayload, DemandVector, SystemParams, UserCache};
use crate::dist::{Distribution, Rational, Symbol};
use crate::error::{Error, Result};
use crate::frl::Representation;

/// `⌈log2 n⌉` for `n >= 1`, computed on the integer.
pub fn ceil_log2(n: u64) -> u32 {
    assert!(n >= 1, "ceil_log2 of zero");
    u64::BITS - (n - 1).leading_zeros()
}

/// `x̃ = (x + w) mod size`.
pub fn otp_encode(x: usize, key: usize, size: usize) -> Result<usize> {
    if x >= size || key >= size {
        return Err(Error::domain(format!("one-time pad inputs ({x}, {key}) outside 0..{size}")));
    }
    Ok((x + key) % size)
}

/// `x = (x̃ + size - w) mod size`.
pub fn otp_decode(padded: usize, key: usize, size: usize) -> Result<usize> {
    if padded >= size || key >= size {
        return Err(Error::domain(format!(
            "one-time pad inputs ({padded}, {key}) outside 0..{size}"
        )));
    }
    Ok((padded + size - key) % size)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(pub Vec<bool>);

impl BitString {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn from_uint(value: u64, width: u32) -> Self {
        Self((0..width).rev().map(|i| (value >> i) & 1 == 1).collect())
    }

    pub fn to_uint(bits: &[bool]) -> u64 {
        bits.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.starts_with(&self.0)
    }

    /// MSB-first packing; the last byte is zero-padded.
    pub fn pack(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)))
            })
            .collect()
    }

    pub fn unpack(bytes: &[u8], bit_len: usize) -> Result<Self> {
        if bit_len > bytes.len() * 8 {
            return Err(Error::protocol(format!(
                "{bit_len} bits requested from {} bytes",
                bytes.len()
            )));
        }
        Ok(Self(
            (0..bit_len)
                .map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1 == 1)
                .collect(),
        ))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Huffman codebook.
///
/// Ties are broken by canonical symbol order: among minimal masses the two
/// subtrees whose smallest member comes first are merged, and the subtree
/// with the earlier member takes bit `0`. A single-symbol support gets the
/// empty codeword.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixCodebook<S: Symbol> {
    codes: BTreeMap<S, BitString>,
    lookup: HashMap<BitString, S>,
    max_len: usize,
}

enum Node {
    Leaf(usize),
    Merge(usize, usize),
}

pub fn build_prefix_code<S: Symbol>(d: &Distribution<S>) -> PrefixCodebook<S> {
    let symbols = d.alphabet().symbols();
    let mut nodes: Vec<Node> = (0..symbols.len()).map(Node::Leaf).collect();
    // (mass, smallest canonical member, node id)
    let mut heap: BinaryHeap<Reverse<(Rational, usize, usize)>> = d
        .iter()
        .enumerate()
        .map(|(i, (_, p))| Reverse((p.clone(), i, i)))
        .collect();
    while heap.len() > 1 {
        let Reverse((pa, ka, a)) = heap.pop().expect("len > 1");
        let Reverse((pb, kb, b)) = heap.pop().expect("len > 1");
        let (left, right) = if ka < kb { (a, b) } else { (b, a) };
        nodes.push(Node::Merge(left, right));
        heap.push(Reverse((pa + pb, ka.min(kb), nodes.len() - 1)));
    }

    let mut codes = BTreeMap::new();
    if let Some(Reverse((_, _, root))) = heap.pop() {
        let mut stack = vec![(root, Vec::new())];
        while let Some((id, prefix)) = stack.pop() {
            match nodes[id] {
                Node::Leaf(i) => {
                    codes.insert(symbols[i].clone(), BitString(prefix));
                }
                Node::Merge(l, r) => {
                    let mut zero = prefix.clone();
                    zero.push(false);
                    let mut one = prefix;
                    one.push(true);
                    stack.push((r, one));
                    stack.push((l, zero));
                }
            }
        }
    }
    let lookup = codes.iter().map(|(s, c)| (c.clone(), s.clone())).collect();
    let max_len = codes.values().map(BitString::len).max().unwrap_or(0);
    PrefixCodebook { codes, lookup, max_len }
}

impl<S: Symbol> PrefixCodebook<S> {
    pub fn codeword(&self, s: &S) -> Option<&BitString> {
        self.codes.get(s)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S, &BitString)> {
        self.codes.iter()
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Kraft sum `Σ 2^{-len}`, exact.
    pub fn kraft_sum(&self) -> Rational {
        self.codes
            .values()
            .map(|c| Rational::new(BigInt::one(), BigInt::one() << c.len()))
            .sum()
    }

    /// Exact expected codeword length under `d`.
    pub fn expected_length(&self, d: &Distribution<S>) -> Rational {
        d.expectation(|s| {
            Rational::from_integer(BigInt::from(self.codes.get(s).map_or(0, BitString::len)))
        })
    }

    /// Reads one codeword from the front of `bits`; returns it and the bits consumed.
    pub fn decode_prefix(&self, bits: &[bool]) -> Result<(S, usize)> {
        for len in 0..=self.max_len.min(bits.len()) {
            if let Some(s) = self.lookup.get(&BitString(bits[..len].to_vec())) {
                return Ok((s.clone(), len));
            }
        }
        Err(Error::protocol(format!(
            "no codeword matches the {} remaining bits",
            bits.len()
        )))
    }
}

/// A transmitted codeword: fixed-width padded `X`, then the code for `U`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Codeword {
    pub bits: BitString,
    pub part1_len: usize,
}

impl Codeword {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn padded_part(&self) -> &[bool] {
        &self.bits.0[..self.part1_len]
    }

    pub fn representation_part(&self) -> &[bool] {
        &self.bits.0[self.part1_len..]
    }
}

/// Exact expected codeword length, conditioned on each key value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpectedLength {
    pub per_key: Vec<Rational>,
}

impl ExpectedLength {
    pub fn max(&self) -> Rational {
        self.per_key.iter().max().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn all_equal(&self) -> bool {
        self.per_key.windows(2).all(|w| w[0] == w[1])
    }
}

/// Encoder and decoders for one demand vector.
///
/// `X` symbols are indices into the model's x alphabet and the target is the
/// packed delivery payload value.
#[derive(Clone, Debug)]
pub struct TwoPartCode<R: Representation<X = usize, Target = u64>> {
    channel: R,
    codebook: PrefixCodebook<R::U>,
    x_size: usize,
    part1_len: usize,
}

impl<R: Representation<X = usize, Target = u64>> TwoPartCode<R> {
    /// `x_size` is `|X|`, which is also the key size.
    pub fn new(channel: R, x_size: usize) -> Result<Self> {
        if x_size == 0 {
            return Err(Error::config("empty x alphabet"));
        }
        if let Some(((x, _), _)) = channel.source().iter().find(|((x, _), _)| *x >= x_size) {
            return Err(Error::config(format!("x index {x} outside alphabet of {x_size}")));
        }
        let codebook = build_prefix_code(&channel.u_distribution());
        Ok(Self {
            channel,
            codebook,
            x_size,
            part1_len: ceil_log2(x_size as u64) as usize,
        })
    }

    pub fn channel(&self) -> &R {
        &self.channel
    }

    pub fn codebook(&self) -> &PrefixCodebook<R::U> {
        &self.codebook
    }

    pub fn key_size(&self) -> usize {
        self.x_size
    }

    pub fn part1_len(&self) -> usize {
        self.part1_len
    }

    /// Deterministic half of the encoder, once `u` has been drawn.
    pub fn encode_with_u(&self, x: usize, u: &R::U, key: usize) -> Result<Codeword> {
        let padded = otp_encode(x, key, self.x_size)?;
        let tail = self
            .codebook
            .codeword(u)
            .ok_or_else(|| Error::domain(format!("{u:?} has no codeword")))?;
        let mut bits = BitString::from_uint(padded as u64, self.part1_len as u32);
        bits.0.extend_from_slice(&tail.0);
        Ok(Codeword {
            bits,
            part1_len: self.part1_len,
        })
    }

    pub fn encode<G: Rng + ?Sized>(&self, x: usize, payload: u64, key: usize, rng: &mut G) -> Result<Codeword> {
        let u = self.channel.sample_u(&x, &payload, rng)?;
        self.encode_with_u(x, &u, key)
    }

    /// Recovers `(x, u)` from a codeword. The codeword must be consumed exactly.
    pub fn parse(&self, bits: &BitString, key: usize) -> Result<(usize, R::U)> {
        if bits.len() < self.part1_len {
            return Err(Error::protocol(format!(
                "codeword of {} bits is shorter than the {}-bit pad",
                bits.len(),
                self.part1_len
            )));
        }
        let padded = BitString::to_uint(&bits.0[..self.part1_len]) as usize;
        if padded >= self.x_size {
            return Err(Error::protocol(format!("padded value {padded} outside 0..{}", self.x_size)));
        }
        let x = otp_decode(padded, key, self.x_size)?;
        let rest = &bits.0[self.part1_len..];
        let (u, used) = self.codebook.decode_prefix(rest)?;
        if used != rest.len() {
            return Err(Error::protocol(format!("{} trailing bits after codeword", rest.len() - used)));
        }
        Ok((x, u))
    }

    /// Recovers the delivery payload: one-time-pad decode, prefix decode, then `phi`.
    pub fn decode_payload(&self, bits: &BitString, key: usize) -> Result<u64> {
        let (x, u) = self.parse(bits, key)?;
        self.channel
            .invert_phi(&x, &u)
            .map_err(|e| Error::protocol(format!("representation does not invert: {e}")))
    }

    /// Full user-side chain: payload, then the user's demanded file.
    pub fn decode_user(
        &self,
        user: usize,
        codeword: &Codeword,
        key: usize,
        cache: &UserCache,
        demands: &DemandVector,
        params: &SystemParams,
    ) -> Result<u64> {
        let value = self.decode_payload(&codeword.bits, key)?;
        let payload = DeliveryPayload::from_value(value, params)?;
        decode_demand(user, &payload, cache, demands, params)
    }

    /// Exact `E[L | W = w]` for every key value.
    pub fn expected_length(&self) -> Result<ExpectedLength> {
        let mut per_key = Vec::with_capacity(self.x_size);
        for key in 0..self.x_size {
            let mut total = Rational::zero();
            for ((x, c), p) in self.channel.source().iter() {
                for (u, q) in self.channel.u_given(x, c)? {
                    let len = self.encode_with_u(*x, &u, key)?.len();
                    total += p * q * Rational::from_integer(BigInt::from(len));
                }
            }
            per_key.push(total);
        }
        Ok(ExpectedLength { per_key })
    }

    /// Distribution of the total codeword length (independent of the key).
    pub fn length_distribution(&self) -> Distribution<usize> {
        self.channel
            .u_distribution()
            .map(|u| self.part1_len + self.codebook.codeword(u).map_or(0, BitString::len))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{entropy_bits, ratio, to_f64};
    use crate::frl::build_frl;

    fn lengths<S: Symbol>(book: &PrefixCodebook<S>) -> Vec<usize> {
        book.iter().map(|(_, c)| c.len()).collect()
    }

    #[test]
    fn ceil_log2_exact_at_powers() {
        let expected = [(1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (8, 3), (9, 4), (1 << 20, 20)];
        for (n, e) in expected {
            assert_eq!(ceil_log2(n), e, "n = {n}");
        }
    }

    #[test]
    fn otp_examples() {
        assert_eq!(otp_encode(0, 0, 4).unwrap(), 0);
        assert_eq!(otp_encode(3, 2, 4).unwrap(), 1);
        assert_eq!(otp_decode(1, 2, 4).unwrap(), 3);
        assert!(otp_encode(4, 0, 4).is_err());
        assert!(otp_decode(0, 4, 4).is_err());
        for size in 1..=16 {
            for x in 0..size {
                assert_eq!(otp_decode(x, 0, size).unwrap(), x);
                let mut seen = vec![false; size];
                for w in 0..size {
                    let t = otp_encode(x, w, size).unwrap();
                    assert!(!seen[t]);
                    seen[t] = true;
                    assert_eq!(otp_decode(t, w, size).unwrap(), x);
                }
            }
        }
    }

    #[test]
    fn huffman_uniform_four() {
        let d = Distribution::uniform(0u8..4).unwrap();
        let book = build_prefix_code(&d);
        assert_eq!(lengths(&book), vec![2, 2, 2, 2]);
        assert_eq!(book.expected_length(&d), ratio(2, 1));
        assert_eq!(book.kraft_sum(), ratio(1, 1));
    }

    #[test]
    fn huffman_textbook() {
        let d = Distribution::from_masses(vec![(0u8, ratio(1, 2)), (1, ratio(1, 4)), (2, ratio(1, 4))]).unwrap();
        let book = build_prefix_code(&d);
        assert_eq!(lengths(&book), vec![1, 2, 2]);
        assert_eq!(book.expected_length(&d), ratio(3, 2));
        assert_eq!(book.codeword(&0).unwrap().to_string(), "0");
    }

    #[test]
    fn huffman_single_symbol_is_empty() {
        let book = build_prefix_code(&Distribution::point(7u8));
        assert_eq!(book.codeword(&7).unwrap().len(), 0);
        assert_eq!(book.decode_prefix(&[]).unwrap(), (7, 0));
    }

    #[test]
    fn huffman_is_deterministic_under_ties() {
        let d = Distribution::uniform(0u8..5).unwrap();
        let a = build_prefix_code(&d);
        let b = build_prefix_code(&d);
        assert_eq!(a, b);
        let codes: Vec<String> = a.iter().map(|(_, c)| c.to_string()).collect();
        for (i, c) in codes.iter().enumerate() {
            for (j, o) in codes.iter().enumerate() {
                if i != j {
                    assert!(!o.starts_with(c.as_str()), "{c} prefixes {o}");
                }
            }
        }
    }

    #[test]
    fn pack_unpack() {
        let b = BitString::from_uint(0b1_0110_0101, 9);
        let packed = b.pack();
        assert_eq!(packed, vec![0b1011_0010, 0b1000_0000]);
        assert_eq!(BitString::unpack(&packed, 9).unwrap(), b);
        assert!(BitString::unpack(&packed, 17).is_err());
    }

    fn example_channel() -> crate::frl::FrlChannel<usize, u64> {
        let cells = [
            ((0usize, 0u64), (1, 32)),
            ((0, 1), (7, 32)),
            ((1, 0), (7, 32)),
            ((1, 1), (1, 32)),
            ((2, 0), (7, 32)),
            ((2, 1), (1, 32)),
            ((3, 0), (1, 32)),
            ((3, 1), (7, 32)),
        ];
        build_frl(&Distribution::from_masses(cells.iter().map(|&(s, (n, d))| (s, ratio(n, d)))).unwrap())
    }

    #[test]
    fn two_part_round_trip_and_length() {
        let code = TwoPartCode::new(example_channel(), 4).unwrap();
        assert_eq!(code.part1_len(), 2);
        let u = code.channel().u_distribution();
        let e_u = to_f64(&code.codebook().expected_length(&u));
        assert!(e_u <= entropy_bits(&u) + 1.0);
        assert!(e_u <= 3.1743);
        for key in 0..4 {
            for ((x, c), _) in code.channel().source().iter() {
                for (u, _) in code.channel().u_given(x, c).unwrap() {
                    let cw = code.encode_with_u(*x, &u, key).unwrap();
                    assert_eq!(code.decode_payload(&cw.bits, key).unwrap(), *c);
                }
            }
        }
        let e = code.expected_length().unwrap();
        assert!(e.all_equal());
        assert_eq!(e.max(), ratio(13, 4));
    }

    #[test]
    fn truncated_codeword_is_a_protocol_error() {
        let code = TwoPartCode::new(example_channel(), 4).unwrap();
        let cw = code.encode_with_u(0, &1, 0).unwrap();
        let mut short = cw.bits.clone();
        short.0.pop();
        assert!(matches!(code.parse(&short, 0), Err(Error::Protocol(_))));
        assert!(matches!(code.parse(&BitString(vec![true]), 0), Err(Error::Protocol(_))));
        let mut long = cw.bits.clone();
        long.0.push(false);
        assert!(matches!(code.parse(&long, 0), Err(Error::Protocol(_))));
    }
}
