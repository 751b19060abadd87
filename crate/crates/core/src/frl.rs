//! Constructive functional representations.
//!
//! For a joint `(X, Y)` the zero-leakage construction draws `U` uniformly on
//! `[0, 1)` and quantizes it: for every `x` the unit interval is cut into
//! consecutive half-open intervals of widths `P(Y = y | X = x)` (targets in
//! ascending order), and `U` is the cell of the common refinement of all those
//! partitions. Then `U` is independent of `X`, `Y = phi(X, U)`, and the number
//! of cells is at most `sum_x (|supp Y|x| - 1) + 1`.
//!
//! The ε-leakage construction adjoins a randomized-response component that
//! reveals `X` with probability `α = ε / H(X)`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use rand::Rng;

use crate::dist::{
    binary_entropy, condition_on, entropy_bits, exact_independence, mutual_information_bits,
    rational_from_f64, sample_exact, split_marginals, to_f64, Distribution, Rational, Symbol,
};
use crate::error::{Error, Result};

/// Tolerance, in bits, applied to every floating-point bound check.
pub const BOUND_SLACK_BITS: f64 = 1e-9;

/// A channel producing a representation `U` of a target given the private `X`.
pub trait Representation: Send + Sync {
    type X: Symbol;
    type Target: Symbol;
    type U: Symbol;

    /// The joint of `(X, target)` the channel was built for.
    fn source(&self) -> &Distribution<(Self::X, Self::Target)>;

    fn u_distribution(&self) -> Distribution<Self::U>;

    /// Exact `P(U = u | X = x, target = c)`, positive entries only.
    fn u_given(&self, x: &Self::X, c: &Self::Target) -> Result<Vec<(Self::U, Rational)>>;

    /// The target value determined by `(x, u)`.
    fn invert_phi(&self, x: &Self::X, u: &Self::U) -> Result<Self::Target>;

    /// Leakage `I(U;X)` the construction promises, in bits.
    fn promised_leakage_bits(&self) -> f64;

    fn cardinality_bound(&self) -> usize;

    /// Bound that applies when `X` is a function of the target.
    fn deterministic_cardinality_bound(&self) -> Option<usize>;

    fn entropy_bound_bits(&self) -> f64;

    fn sample_u<R: Rng + ?Sized>(&self, x: &Self::X, c: &Self::Target, rng: &mut R) -> Result<Self::U> {
        sample_exact(&self.u_given(x, c)?, rng)
    }

    /// Exact joint of `(X, U)`.
    fn x_u_joint(&self) -> Distribution<(Self::X, Self::U)> {
        let mut cells = Vec::new();
        for ((x, c), p) in self.source().iter() {
            for (u, q) in self.u_given(x, c).expect("source point is in support") {
                cells.push(((x.clone(), u), p * q));
            }
        }
        Distribution::from_masses(cells).expect("channel conserves mass")
    }
}

/// The per-`x` cumulative partition of `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalPartition<C> {
    /// `0 = b_0 < b_1 < … < b_m = 1`.
    pub breakpoints: Vec<Rational>,
    /// Target of cell `[b_j, b_{j+1})`.
    pub symbols: Vec<C>,
}

impl<C: Symbol> IntervalPartition<C> {
    fn from_conditional(cond: &Distribution<C>) -> Self {
        let mut breakpoints = vec![Rational::zero()];
        let mut symbols = Vec::with_capacity(cond.support_size());
        let mut acc = Rational::zero();
        for (c, p) in cond.iter() {
            acc += p;
            breakpoints.push(acc.clone());
            symbols.push(c.clone());
        }
        Self { breakpoints, symbols }
    }
}

/// Summary of the source joint needed by the cardinality bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SupportSizes {
    pub x: usize,
    pub target: usize,
    /// Whether `X` is a deterministic function of the target.
    pub x_determined_by_target: bool,
}

impl SupportSizes {
    pub fn of<X: Symbol, C: Symbol>(joint: &Distribution<(X, C)>) -> Self {
        let (px, pc) = split_marginals(joint);
        let mut owner: BTreeMap<&C, &X> = BTreeMap::new();
        let mut determined = true;
        for ((x, c), _) in joint.iter() {
            if let Some(prev) = owner.insert(c, x) {
                determined &= prev == x;
            }
        }
        Self {
            x: px.support_size(),
            target: pc.support_size(),
            x_determined_by_target: determined,
        }
    }

    /// `|X|(|Y| - 1) + 1`.
    pub fn frl_bound(&self) -> usize {
        self.x * (self.target - 1) + 1
    }

    /// `|Y| - |X| + 1`, when `X` is a function of `Y`.
    pub fn frl_deterministic_bound(&self) -> Option<usize> {
        self.x_determined_by_target
            .then(|| self.target + 1 - self.x)
    }
}

/// Zero-leakage representation channel.
#[derive(Clone, Debug)]
pub struct FrlChannel<X: Symbol, C: Symbol> {
    source: Distribution<(X, C)>,
    xs: Vec<X>,
    x_index: BTreeMap<X, usize>,
    targets: Vec<C>,
    target_index: BTreeMap<C, usize>,
    partitions: Vec<IntervalPartition<C>>,
    cuts: Vec<Rational>,
    widths: Vec<Rational>,
    /// `phi[x][u]`, an index into `targets`.
    phi: Vec<Vec<usize>>,
    /// `P(c | x)` keyed by target index.
    cond: Vec<BTreeMap<usize, Rational>>,
    sizes: SupportSizes,
    entropy_bound: f64,
}

/// Builds the zero-leakage channel for `joint` of `(X, target)`.
pub fn build_frl<X: Symbol, C: Symbol>(joint: &Distribution<(X, C)>) -> FrlChannel<X, C> {
    let (px, pc) = split_marginals(joint);
    let xs: Vec<X> = px.alphabet().symbols().to_vec();
    let targets: Vec<C> = pc.alphabet().symbols().to_vec();
    let target_index: BTreeMap<C, usize> = targets.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();

    let conditionals: Vec<Distribution<C>> = xs
        .iter()
        .map(|x| condition_on(joint, x).expect("x is in the support"))
        .collect();
    let partitions: Vec<IntervalPartition<C>> =
        conditionals.iter().map(IntervalPartition::from_conditional).collect();

    let cuts: Vec<Rational> = partitions
        .iter()
        .flat_map(|p| p.breakpoints.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let widths: Vec<Rational> = cuts.windows(2).map(|w| &w[1] - &w[0]).collect();

    let phi = partitions
        .iter()
        .map(|part| {
            let mut j = 0;
            cuts[..cuts.len() - 1]
                .iter()
                .map(|start| {
                    while part.breakpoints[j + 1] <= *start {
                        j += 1;
                    }
                    target_index[&part.symbols[j]]
                })
                .collect()
        })
        .collect();

    let cond = conditionals
        .iter()
        .map(|d| d.iter().map(|(c, p)| (target_index[c], p.clone())).collect())
        .collect();

    let entropy_bound = conditionals.iter().map(entropy_bits).sum();

    FrlChannel {
        source: joint.clone(),
        x_index: xs.iter().cloned().enumerate().map(|(i, x)| (x, i)).collect(),
        xs,
        targets,
        target_index,
        partitions,
        cuts,
        widths,
        phi,
        cond,
        sizes: SupportSizes::of(joint),
        entropy_bound,
    }
}

impl<X: Symbol, C: Symbol> FrlChannel<X, C> {
    pub fn partitions(&self) -> impl Iterator<Item = (&X, &IntervalPartition<C>)> {
        self.xs.iter().zip(self.partitions.iter())
    }

    /// Refinement breakpoints, `0` first and `1` last.
    pub fn breakpoints(&self) -> &[Rational] {
        &self.cuts
    }

    /// Width of every refinement cell, which is also `P(U = u)`.
    pub fn widths(&self) -> &[Rational] {
        &self.widths
    }

    pub fn cell_count(&self) -> usize {
        self.widths.len()
    }

    pub fn support_sizes(&self) -> SupportSizes {
        self.sizes
    }

    fn x_pos(&self, x: &X) -> Result<usize> {
        self.x_index
            .get(x)
            .copied()
            .ok_or_else(|| Error::domain(format!("{x:?} is outside the support of X")))
    }
}

impl<X: Symbol, C: Symbol> Representation for FrlChannel<X, C> {
    type X = X;
    type Target = C;
    type U = usize;

    fn source(&self) -> &Distribution<(X, C)> {
        &self.source
    }

    fn u_distribution(&self) -> Distribution<usize> {
        Distribution::from_masses(self.widths.iter().cloned().enumerate()).expect("widths sum to one")
    }

    fn u_given(&self, x: &X, c: &C) -> Result<Vec<(usize, Rational)>> {
        let xi = self.x_pos(x)?;
        let ci = self.target_index.get(c).copied();
        let pc = ci.and_then(|ci| self.cond[xi].get(&ci)).ok_or_else(|| {
            Error::domain(format!("({x:?}, {c:?}) is outside the joint support"))
        })?;
        let ci = ci.expect("checked above");
        Ok(self.phi[xi]
            .iter()
            .enumerate()
            .filter(|&(_, &t)| t == ci)
            .map(|(u, _)| (u, &self.widths[u] / pc))
            .collect())
    }

    fn invert_phi(&self, x: &X, u: &usize) -> Result<C> {
        let xi = self.x_pos(x)?;
        self.phi[xi]
            .get(*u)
            .map(|&t| self.targets[t].clone())
            .ok_or_else(|| Error::domain(format!("cell {u} does not exist")))
    }

    fn promised_leakage_bits(&self) -> f64 {
        0.0
    }

    fn cardinality_bound(&self) -> usize {
        self.sizes.frl_bound()
    }

    fn deterministic_cardinality_bound(&self) -> Option<usize> {
        self.sizes.frl_deterministic_bound()
    }

    fn entropy_bound_bits(&self) -> f64 {
        self.entropy_bound
    }
}

/// Second component of an ε-leakage representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reveal<X> {
    /// The reserved constant, outside every alphabet.
    Hidden,
    Shown(X),
}

/// Symbol of an ε-leakage representation: refinement cell plus reveal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EfrlSymbol<X> {
    pub cell: usize,
    pub reveal: Reveal<X>,
}

/// ε-leakage representation `U = (Ũ, J)`.
#[derive(Clone, Debug)]
pub struct EfrlChannel<X: Symbol, C: Symbol> {
    base: FrlChannel<X, C>,
    epsilon: f64,
    alpha: Rational,
    x_entropy: f64,
}

/// Builds the ε-leakage channel; `0 <= epsilon <= H(X)`.
pub fn build_efrl<X: Symbol, C: Symbol>(joint: &Distribution<(X, C)>, epsilon: f64) -> Result<EfrlChannel<X, C>> {
    let (px, _) = split_marginals(joint);
    let x_entropy = entropy_bits(&px);
    let alpha = alpha_for(epsilon, x_entropy)?;
    Ok(EfrlChannel {
        base: build_frl(joint),
        epsilon,
        alpha,
        x_entropy,
    })
}

/// `α = ε / H(X)` as the exact rational value of the `f64` quotient.
pub fn alpha_for(epsilon: f64, x_entropy: f64) -> Result<Rational> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::domain(format!("leakage ε = {epsilon} must be a finite value >= 0")));
    }
    if epsilon == 0.0 {
        return Ok(Rational::zero());
    }
    if x_entropy <= 0.0 {
        return Err(Error::domain(format!("ε = {epsilon} > 0 requires H(X) > 0")));
    }
    if epsilon > x_entropy * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "ε = {epsilon} exceeds H(X) = {x_entropy:.9} bits"
        )));
    }
    let a = (epsilon / x_entropy).min(1.0);
    Ok(rational_from_f64(a).expect("finite"))
}

impl<X: Symbol, C: Symbol> EfrlChannel<X, C> {
    pub fn base(&self) -> &FrlChannel<X, C> {
        &self.base
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn x_entropy_bits(&self) -> f64 {
        self.x_entropy
    }

    fn reveal_weights(&self, x: &X) -> Vec<(Reveal<X>, Rational)> {
        let mut out = Vec::with_capacity(2);
        if self.alpha < Rational::one() {
            out.push((Reveal::Hidden, Rational::one() - &self.alpha));
        }
        if !self.alpha.is_zero() {
            out.push((Reveal::Shown(x.clone()), self.alpha.clone()));
        }
        out
    }
}

impl<X: Symbol, C: Symbol> Representation for EfrlChannel<X, C> {
    type X = X;
    type Target = C;
    type U = EfrlSymbol<X>;

    fn source(&self) -> &Distribution<(X, C)> {
        self.base.source()
    }

    fn u_distribution(&self) -> Distribution<EfrlSymbol<X>> {
        let (px, _) = split_marginals(self.source());
        let mut cells = Vec::new();
        for (cell, w) in self.base.widths.iter().enumerate() {
            if self.alpha < Rational::one() {
                cells.push((
                    EfrlSymbol { cell, reveal: Reveal::Hidden },
                    w * (Rational::one() - &self.alpha),
                ));
            }
            if !self.alpha.is_zero() {
                for (x, p) in px.iter() {
                    cells.push((
                        EfrlSymbol { cell, reveal: Reveal::Shown(x.clone()) },
                        w * p * &self.alpha,
                    ));
                }
            }
        }
        Distribution::from_masses(cells).expect("product of distributions")
    }

    fn u_given(&self, x: &X, c: &C) -> Result<Vec<(EfrlSymbol<X>, Rational)>> {
        let base = self.base.u_given(x, c)?;
        let reveals = self.reveal_weights(x);
        Ok(base
            .iter()
            .flat_map(|(cell, w)| {
                reveals.iter().map(move |(reveal, q)| {
                    (
                        EfrlSymbol { cell: *cell, reveal: reveal.clone() },
                        w * q,
                    )
                })
            })
            .collect())
    }

    fn invert_phi(&self, x: &X, u: &EfrlSymbol<X>) -> Result<C> {
        if let Reveal::Shown(shown) = &u.reveal {
            if shown != x {
                return Err(Error::domain(format!("{u:?} reveals a different value than {x:?}")));
            }
        }
        self.base.invert_phi(x, &u.cell)
    }

    fn promised_leakage_bits(&self) -> f64 {
        self.epsilon
    }

    fn cardinality_bound(&self) -> usize {
        self.base.sizes.frl_bound() * (self.base.sizes.x + 1)
    }

    fn deterministic_cardinality_bound(&self) -> Option<usize> {
        self.base
            .sizes
            .frl_deterministic_bound()
            .map(|b| b * (self.base.sizes.x + 1))
    }

    fn entropy_bound_bits(&self) -> f64 {
        let alpha = to_f64(&self.alpha);
        self.base.entropy_bound + self.epsilon + binary_entropy(alpha)
    }
}

/// Everything [`verify_channel`] measures.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelReport {
    pub leakage_bits: f64,
    pub promised_leakage_bits: f64,
    pub exact_independent: bool,
    /// `H(target | U, X)`.
    pub residual_target_bits: f64,
    pub target_determined: bool,
    pub cardinality: usize,
    pub cardinality_bound: usize,
    pub deterministic_cardinality_bound: Option<usize>,
    pub u_entropy_bits: f64,
    pub entropy_bound_bits: f64,
    /// Set when ε exceeds `I(X; target)`; reported, not rejected.
    pub epsilon_exceeds_source_information: bool,
    pub violations: Vec<String>,
}

impl ChannelReport {
    pub fn entropy_bound_slack(&self) -> f64 {
        self.entropy_bound_bits - self.u_entropy_bits
    }

    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audits a built channel against its own promises, from exact joints.
pub fn verify_channel<R: Representation>(ch: &R) -> ChannelReport {
    let mut violations = Vec::new();
    let mut xuc = Vec::new();
    for ((x, c), p) in ch.source().iter() {
        match ch.u_given(x, c) {
            Ok(us) => {
                let total: Rational = us.iter().map(|(_, q)| q).sum();
                if !total.is_one() {
                    violations.push(format!("sampler mass for ({x:?}, {c:?}) sums to {total}"));
                }
                for (u, q) in us {
                    match ch.invert_phi(x, &u) {
                        Ok(back) if back == *c => {}
                        _ => violations.push(format!("phi({x:?}, {u:?}) does not return {c:?}")),
                    }
                    xuc.push((((x.clone(), u), c.clone()), p * q));
                }
            }
            Err(e) => violations.push(format!("sampler failed on support point: {e}")),
        }
    }
    let xuc = Distribution::from_masses(xuc).expect("channel conserves mass");
    let xu = xuc.map(|(xu, _)| xu.clone());
    let (_, u_marginal) = split_marginals(&xu);
    if u_marginal != ch.u_distribution() {
        violations.push("declared U distribution differs from the induced marginal".into());
    }

    let determined = xu.support_size() == xuc.support_size();
    let residual = entropy_bits(&xuc) - entropy_bits(&xu);
    if !determined {
        violations.push(format!("target not determined by (U, X): H = {residual:.3e}"));
    }

    let leakage = mutual_information_bits(&xu);
    let exact_independent = exact_independence(&xu);
    let promised = ch.promised_leakage_bits();
    if promised == 0.0 {
        if !exact_independent {
            violations.push("U and X are not exactly independent".into());
        }
    } else if (leakage - promised).abs() > BOUND_SLACK_BITS {
        violations.push(format!("leakage {leakage:.12} differs from ε = {promised}"));
    }

    let cardinality = u_marginal.support_size();
    let cardinality_bound = ch.cardinality_bound();
    if cardinality > cardinality_bound {
        violations.push(format!("|U| = {cardinality} exceeds bound {cardinality_bound}"));
    }
    let deterministic = ch.deterministic_cardinality_bound();
    if let Some(b) = deterministic {
        if cardinality > b {
            violations.push(format!("|U| = {cardinality} exceeds deterministic bound {b}"));
        }
    }
    let u_entropy = entropy_bits(&u_marginal);
    let entropy_bound = ch.entropy_bound_bits();
    if u_entropy > entropy_bound + BOUND_SLACK_BITS {
        violations.push(format!("H(U) = {u_entropy:.9} exceeds bound {entropy_bound:.9}"));
    }

    ChannelReport {
        leakage_bits: leakage,
        promised_leakage_bits: promised,
        exact_independent,
        residual_target_bits: if determined { 0.0 } else { residual },
        target_determined: determined,
        cardinality,
        cardinality_bound,
        deterministic_cardinality_bound: deterministic,
        u_entropy_bits: u_entropy,
        entropy_bound_bits: entropy_bound,
        epsilon_exceeds_source_information: promised > mutual_information_bits(ch.source()),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ratio;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// `((x, target), (numerator, denominator))`.
    type Cell = ((u8, u8), (i64, i64));

    fn joint(cells: &[Cell]) -> Distribution<(u8, u8)> {
        Distribution::from_masses(cells.iter().map(|&(s, (n, d))| (s, ratio(n, d)))).unwrap()
    }

    /// `(X, C')` for the two-file example with demands (1,2): C' = 1 - x-parity
    /// shaped conditionals 1/8 and 7/8.
    fn example_like() -> Distribution<(u8, u8)> {
        joint(&[
            ((0, 0), (1, 32)),
            ((0, 1), (7, 32)),
            ((1, 0), (7, 32)),
            ((1, 1), (1, 32)),
            ((2, 0), (7, 32)),
            ((2, 1), (1, 32)),
            ((3, 0), (1, 32)),
            ((3, 1), (7, 32)),
        ])
    }

    #[test]
    fn independent_target_is_copied() {
        let j = joint(&[((0, 0), (1, 6)), ((0, 1), (2, 6)), ((1, 0), (1, 6)), ((1, 1), (2, 6))]);
        let ch = build_frl(&j);
        assert_eq!(ch.cell_count(), 2);
        let r = verify_channel(&ch);
        assert!(r.is_ok(), "{r:?}");
        assert!(r.exact_independent);
        for u in 0..2 {
            assert_eq!(ch.invert_phi(&0, &u).unwrap(), ch.invert_phi(&1, &u).unwrap());
        }
    }

    #[test]
    fn identity_target_needs_one_cell() {
        let j = joint(&[((0, 0), (1, 3)), ((1, 1), (1, 3)), ((2, 2), (1, 3))]);
        let ch = build_frl(&j);
        assert_eq!(ch.cell_count(), 1);
        assert_eq!(ch.deterministic_cardinality_bound(), Some(1));
        assert!(verify_channel(&ch).is_ok());
        for x in 0..3u8 {
            assert_eq!(ch.invert_phi(&x, &0).unwrap(), x);
        }
    }

    #[test]
    fn refinement_of_eighths() {
        let ch = build_frl(&example_like());
        assert_eq!(ch.breakpoints(), &[ratio(0, 1), ratio(1, 8), ratio(7, 8), ratio(1, 1)]);
        assert_eq!(ch.widths(), &[ratio(1, 8), ratio(3, 4), ratio(1, 8)]);
        let r = verify_channel(&ch);
        assert!(r.is_ok(), "{r:?}");
        assert!(r.cardinality <= 5);
        assert!(r.u_entropy_bits <= 2.1743 + 1e-4);
        assert!((r.entropy_bound_bits - 4.0 * binary_entropy(0.125)).abs() < 1e-12);
    }

    #[test]
    fn widths_within_interval_sum_to_conditional() {
        let j = example_like();
        let ch = build_frl(&j);
        for ((x, c), p) in j.iter() {
            let px: Rational = j.iter().filter(|((a, _), _)| a == x).map(|(_, q)| q).sum();
            let total: Rational = ch
                .u_given(x, c)
                .unwrap()
                .iter()
                .map(|(u, _)| ch.widths()[*u].clone())
                .sum();
            assert_eq!(total, p / px);
        }
    }

    #[test]
    fn efrl_degenerates_at_zero() {
        let ch = build_efrl(&example_like(), 0.0).unwrap();
        let u = ch.u_distribution();
        assert_eq!(u.support_size(), ch.base().cell_count());
        assert!(u.iter().all(|(s, _)| s.reveal == Reveal::Hidden));
        let r = verify_channel(&ch);
        assert!(r.exact_independent && r.is_ok());
    }

    #[test]
    fn efrl_full_revelation() {
        let j = example_like();
        let hx = 2.0;
        let ch = build_efrl(&j, hx).unwrap();
        assert!(ch.alpha().is_one());
        let r = verify_channel(&ch);
        assert!((r.leakage_bits - hx).abs() < 1e-9, "{r:?}");
        assert!(r.is_ok());
    }

    #[test]
    fn efrl_half_bit() {
        let ch = build_efrl(&example_like(), 0.5).unwrap();
        assert_eq!(ch.alpha(), &ratio(1, 4));
        let r = verify_channel(&ch);
        assert!((r.leakage_bits - 0.5).abs() < 1e-9);
        assert!(r.is_ok(), "{r:?}");
        assert!(r.epsilon_exceeds_source_information);
    }

    #[test]
    fn efrl_rejects_bad_epsilon() {
        let j = example_like();
        assert!(build_efrl(&j, -0.1).is_err());
        assert!(build_efrl(&j, 2.5).is_err());
        assert!(build_efrl(&j, f64::NAN).is_err());
        let constant_x = joint(&[((0, 0), (1, 2)), ((0, 1), (1, 2))]);
        assert!(build_efrl(&constant_x, 0.1).is_err());
        assert!(build_efrl(&constant_x, 0.0).is_ok());
    }

    #[test]
    fn invert_phi_rejects_impossible_pairs() {
        let ch = build_frl(&example_like());
        assert!(ch.invert_phi(&9, &0).is_err());
        assert!(ch.invert_phi(&0, &7).is_err());
        let e = build_efrl(&example_like(), 1.0).unwrap();
        let u = EfrlSymbol { cell: 0, reveal: Reveal::Shown(1u8) };
        assert!(e.invert_phi(&0, &u).is_err());
        assert!(ch.u_given(&0, &5).is_err());
    }

    #[test]
    fn sampling_round_trips_and_is_reproducible() {
        let j = example_like();
        let ch = build_frl(&j);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for ((x, c), _) in j.iter() {
            for _ in 0..50 {
                let u = ch.sample_u(x, c, &mut rng).unwrap();
                assert_eq!(&ch.invert_phi(x, &u).unwrap(), c);
            }
        }
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20).map(|_| ch.sample_u(&0, &1, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
    }

    #[test]
    fn single_admissible_cell_ignores_seed() {
        let ch = build_frl(&example_like());
        // x = 0 and c' = 0 covers only the first cell.
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(ch.sample_u(&0, &0, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn empirical_frequencies_match_conditional() {
        let ch = build_frl(&example_like());
        let exact = ch.u_given(&0, &1).unwrap();
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = BTreeMap::new();
        for _ in 0..n {
            *counts.entry(ch.sample_u(&0, &1, &mut rng).unwrap()).or_insert(0usize) += 1;
        }
        for (u, p) in exact {
            let p = to_f64(&p);
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            let freq = counts.get(&u).copied().unwrap_or(0) as f64 / n as f64;
            assert!((freq - p).abs() <= 5.0 * sigma, "u={u} freq={freq} p={p}");
        }
    }
}
