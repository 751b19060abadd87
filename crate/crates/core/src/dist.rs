//! Exact finite probability engine.
//!
//! Every probability mass is a big-integer rational. Logarithms are the only
//! floating-point step, so independence and support questions are decided
//! exactly while entropies are reported in bits as `f64`.

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact probability mass.
pub type Rational = BigRational;

/// Bounds shared by every symbol type a [`Distribution`] can carry.
pub trait Symbol: Clone + Eq + Hash + Ord + Debug + Send + Sync {}

impl<T: Clone + Eq + Hash + Ord + Debug + Send + Sync> Symbol for T {}

/// Builds `num/den` in lowest terms. Panics when `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact conversion of a finite `f64` (every finite double is a dyadic rational).
pub fn rational_from_f64(value: f64) -> Option<Rational> {
    Rational::from_float(value)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `-p log2 p`, with `0 log 0 = 0`.
fn surprisal_term(p: &Rational) -> f64 {
    if p.is_zero() {
        return 0.0;
    }
    let f = to_f64(p);
    -f * f.log2()
}

/// Ordered, duplicate-free list of labels. The order is fixed at construction
/// and drives every tie-break downstream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet<S: Symbol> {
    symbols: Vec<S>,
    index: HashMap<S, usize>,
}

impl<S: Symbol> Alphabet<S> {
    pub fn new(symbols: Vec<S>) -> Result<Self> {
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::usage(format!("duplicate alphabet label {s:?}")));
            }
        }
        Ok(Self { symbols, index })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[S] {
        &self.symbols
    }

    pub fn get(&self, i: usize) -> Option<&S> {
        self.symbols.get(i)
    }

    pub fn position(&self, s: &S) -> Option<usize> {
        self.index.get(s).copied()
    }
}

/// Finite distribution over its support.
///
/// Zero-mass outcomes never appear; the support is computed, not declared.
/// Symbols are stored in ascending `Ord` order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution<S: Symbol> {
    alphabet: Alphabet<S>,
    masses: Vec<Rational>,
}

impl<S: Symbol> Distribution<S> {
    /// Accumulates `(symbol, mass)` pairs. Repeated symbols are summed; the
    /// total must be exactly one and no mass may be negative.
    pub fn from_masses<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Rational)>,
    {
        let mut acc: std::collections::BTreeMap<S, Rational> = Default::default();
        for (s, p) in entries {
            if p.is_negative() {
                return Err(Error::domain(format!("negative mass {p} for {s:?}")));
            }
            *acc.entry(s).or_insert_with(Rational::zero) += p;
        }
        acc.retain(|_, p| !p.is_zero());
        let total: Rational = acc.values().sum();
        if !total.is_one() {
            return Err(Error::domain(format!("masses sum to {total}, expected 1")));
        }
        let (symbols, masses): (Vec<_>, Vec<_>) = acc.into_iter().unzip();
        Ok(Self {
            alphabet: Alphabet::new(symbols)?,
            masses,
        })
    }

    /// Uniform distribution over distinct symbols.
    pub fn uniform(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<S> = symbols.into_iter().collect();
        if symbols.is_empty() {
            return Err(Error::domain("uniform distribution over no symbols"));
        }
        let p = Rational::new(BigInt::one(), BigInt::from(symbols.len()));
        Self::from_masses(symbols.into_iter().map(|s| (s, p.clone())))
    }

    pub fn point(symbol: S) -> Self {
        Self {
            alphabet: Alphabet::new(vec![symbol]).expect("single label"),
            masses: vec![Rational::one()],
        }
    }

    pub fn alphabet(&self) -> &Alphabet<S> {
        &self.alphabet
    }

    pub fn support_size(&self) -> usize {
        self.masses.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S, &Rational)> {
        self.alphabet.symbols().iter().zip(self.masses.iter())
    }

    pub fn mass(&self, s: &S) -> Rational {
        self.alphabet
            .position(s)
            .map(|i| self.masses[i].clone())
            .unwrap_or_else(Rational::zero)
    }

    /// Pushforward through `f`.
    pub fn map<T: Symbol>(&self, mut f: impl FnMut(&S) -> T) -> Distribution<T> {
        Distribution::from_masses(self.iter().map(|(s, p)| (f(s), p.clone())))
            .expect("pushforward preserves total mass")
    }

    /// Exact expectation of an integer-valued function.
    pub fn expectation(&self, mut f: impl FnMut(&S) -> Rational) -> Rational {
        self.iter().map(|(s, p)| f(s) * p).sum()
    }
}

/// Draws one symbol with exactly the given rational probabilities.
///
/// The weights must be positive and sum to one. A single uniform big integer
/// below the common denominator selects the outcome, so no rounding occurs.
pub fn sample_exact<S: Clone, R: rand::Rng + ?Sized>(weights: &[(S, Rational)], rng: &mut R) -> Result<S> {
    use num_bigint::RandBigInt;
    use num_integer::Integer;

    let Some(first) = weights.first() else {
        return Err(Error::domain("sampling from an empty support"));
    };
    if weights.len() == 1 {
        return Ok(first.0.clone());
    }
    let denom = weights
        .iter()
        .fold(BigInt::one(), |acc, (_, p)| acc.lcm(p.denom()));
    let draw = rng.gen_bigint_range(&BigInt::zero(), &denom);
    let mut cumulative = BigInt::zero();
    for (s, p) in weights {
        cumulative += p.numer() * (&denom / p.denom());
        if draw < cumulative {
            return Ok(s.clone());
        }
    }
    Err(Error::domain("sampling weights do not sum to one"))
}

/// Shannon entropy in bits.
pub fn entropy_bits<S: Symbol>(d: &Distribution<S>) -> f64 {
    d.masses.iter().map(surprisal_term).sum()
}

/// Binary entropy `h(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}

/// Marginals of a two-variable joint.
pub fn split_marginals<A: Symbol, B: Symbol>(
    joint: &Distribution<(A, B)>,
) -> (Distribution<A>, Distribution<B>) {
    (joint.map(|(a, _)| a.clone()), joint.map(|(_, b)| b.clone()))
}

/// `I(A;B) = H(A) + H(B) - H(A,B)`, clamped at zero against rounding.
pub fn mutual_information_bits<A: Symbol, B: Symbol>(joint: &Distribution<(A, B)>) -> f64 {
    let (pa, pb) = split_marginals(joint);
    (entropy_bits(&pa) + entropy_bits(&pb) - entropy_bits(joint)).max(0.0)
}

/// Exact test of `P(a,b) = P(a)P(b)` on every cell of the product alphabet.
pub fn exact_independence<A: Symbol, B: Symbol>(joint: &Distribution<(A, B)>) -> bool {
    let (pa, pb) = split_marginals(joint);
    // The product support must coincide with the joint support.
    if pa.support_size() * pb.support_size() != joint.support_size() {
        return false;
    }
    joint
        .iter()
        .all(|((a, b), p)| *p == pa.mass(a) * pb.mass(b))
}

/// Conditional distribution of `B` given `A = a` from a two-variable joint.
pub fn condition_on<A: Symbol, B: Symbol>(
    joint: &Distribution<(A, B)>,
    a: &A,
) -> Result<Distribution<B>> {
    let pa: Rational = joint.iter().filter(|((x, _), _)| x == a).map(|(_, p)| p).sum();
    if pa.is_zero() {
        return Err(Error::domain(format!("conditioning event {a:?} has zero mass")));
    }
    Distribution::from_masses(
        joint
            .iter()
            .filter(|((x, _), _)| x == a)
            .map(|((_, b), p)| (b.clone(), p / &pa)),
    )
}

/// `H(B|A) = sum_a P(a) H(B|A=a)`.
pub fn conditional_entropy_pair<A: Symbol, B: Symbol>(joint: &Distribution<(A, B)>) -> f64 {
    let pa = joint.map(|(a, _)| a.clone());
    pa.iter()
        .map(|(a, p)| {
            let cond = condition_on(joint, a).expect("a is in the support");
            to_f64(p) * entropy_bits(&cond)
        })
        .sum()
}

/// A random variable of a [`JointModel`]. Files and bits are zero-based;
/// `bit: 0` is the most significant bit of the file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    X,
    File(usize),
    FileBit { file: usize, bit: u32 },
}

/// One support point of a [`JointModel`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub x: usize,
    pub files: Vec<u64>,
    pub mass: Rational,
}

/// Exact joint pmf of the private variable `X` and the `N` files of a database.
#[derive(Clone, Debug)]
pub struct JointModel {
    x_alphabet: Alphabet<String>,
    file_bits: u32,
    file_count: usize,
    outcomes: Vec<Outcome>,
}

impl JointModel {
    /// Validates and stores the pmf. Entries are `(x index, file values, mass)`;
    /// repeated points are rejected, zero masses dropped.
    pub fn new(
        x_alphabet: Alphabet<String>,
        file_count: usize,
        file_bits: u32,
        entries: Vec<(usize, Vec<u64>, Rational)>,
    ) -> Result<Self> {
        if x_alphabet.is_empty() {
            return Err(Error::config("x alphabet is empty"));
        }
        if file_count == 0 {
            return Err(Error::config("file count must be positive"));
        }
        if file_bits == 0 || file_bits > 32 {
            return Err(Error::config(format!(
                "file size {file_bits} bits outside the supported range 1..=32"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        let mut total = Rational::zero();
        let mut outcomes = Vec::with_capacity(entries.len());
        for (x, files, mass) in entries {
            if x >= x_alphabet.len() {
                return Err(Error::config(format!("x index {x} outside the alphabet")));
            }
            if files.len() != file_count {
                return Err(Error::config(format!(
                    "entry has {} file values, expected {file_count}",
                    files.len()
                )));
            }
            if let Some(y) = files.iter().find(|&&y| y >> file_bits != 0) {
                return Err(Error::config(format!("file value {y} does not fit in {file_bits} bits")));
            }
            if mass.is_negative() {
                return Err(Error::config(format!("negative mass {mass}")));
            }
            if !seen.insert((x, files.clone())) {
                return Err(Error::config(format!("repeated pmf point x={x} y={files:?}")));
            }
            total += &mass;
            if !mass.is_zero() {
                outcomes.push(Outcome { x, files, mass });
            }
        }
        if !total.is_one() {
            return Err(Error::config(format!("pmf sums to {total}, expected 1")));
        }
        outcomes.sort_by(|a, b| (a.x, &a.files).cmp(&(b.x, &b.files)));
        Ok(Self {
            x_alphabet,
            file_bits,
            file_count,
            outcomes,
        })
    }

    pub fn x_alphabet(&self) -> &Alphabet<String> {
        &self.x_alphabet
    }

    pub fn file_count(&self) -> usize {
        self.file_count
    }

    pub fn file_bits(&self) -> u32 {
        self.file_bits
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    fn value_of(&self, o: &Outcome, v: Variable) -> Result<u64> {
        match v {
            Variable::X => Ok(o.x as u64),
            Variable::File(n) if n < self.file_count => Ok(o.files[n]),
            Variable::FileBit { file, bit } if file < self.file_count && bit < self.file_bits => {
                Ok((o.files[file] >> (self.file_bits - 1 - bit)) & 1)
            }
            other => Err(Error::usage(format!("variable {other:?} is not in the model"))),
        }
    }

    fn values_of(&self, o: &Outcome, vars: &[Variable]) -> Result<Vec<u64>> {
        vars.iter().map(|&v| self.value_of(o, v)).collect()
    }

    /// Joint distribution of an arbitrary pair of statistics of each outcome.
    pub fn pushforward<A: Symbol, B: Symbol>(
        &self,
        mut f: impl FnMut(&Outcome) -> (A, B),
    ) -> Distribution<(A, B)> {
        Distribution::from_masses(self.outcomes.iter().map(|o| (f(o), o.mass.clone())))
            .expect("model pmf sums to one")
    }

    /// Marginal of `X`, keyed by x index.
    pub fn x_marginal(&self) -> Distribution<usize> {
        Distribution::from_masses(self.outcomes.iter().map(|o| (o.x, o.mass.clone())))
            .expect("model pmf sums to one")
    }

    pub fn x_entropy_bits(&self) -> f64 {
        entropy_bits(&self.x_marginal())
    }
}

/// Marginal of the selected variables, as value tuples in selector order.
pub fn marginal(model: &JointModel, which: &[Variable]) -> Result<Distribution<Vec<u64>>> {
    if which.is_empty() {
        return Err(Error::usage("empty variable selector"));
    }
    let entries: Result<Vec<_>> = model
        .outcomes
        .iter()
        .map(|o| Ok((model.values_of(o, which)?, o.mass.clone())))
        .collect();
    Distribution::from_masses(entries?)
}

/// Conditional of `target` given an assignment of other variables.
pub fn conditional(
    model: &JointModel,
    target: &[Variable],
    given: &[(Variable, u64)],
) -> Result<Distribution<Vec<u64>>> {
    if target.is_empty() {
        return Err(Error::usage("empty variable selector"));
    }
    let mut event_mass = Rational::zero();
    let mut hits = Vec::new();
    for o in &model.outcomes {
        let mut matches = true;
        for &(v, want) in given {
            if model.value_of(o, v)? != want {
                matches = false;
                break;
            }
        }
        if matches {
            event_mass += &o.mass;
            hits.push((model.values_of(o, target)?, o.mass.clone()));
        }
    }
    if event_mass.is_zero() {
        return Err(Error::domain(format!("conditioning event {given:?} has zero mass")));
    }
    Distribution::from_masses(hits.into_iter().map(|(v, p)| (v, p / &event_mass)))
}

/// `H(target | given) = sum_g P(g) H(target | given = g)`.
pub fn conditional_entropy_bits(
    model: &JointModel,
    target: &[Variable],
    given: &[Variable],
) -> Result<f64> {
    if target.is_empty() {
        return Err(Error::usage("empty variable selector"));
    }
    let entries: Result<Vec<_>> = model
        .outcomes
        .iter()
        .map(|o| Ok(((model.values_of(o, given)?, model.values_of(o, target)?), o.mass.clone())))
        .collect();
    let joint = Distribution::from_masses(entries?)?;
    Ok(conditional_entropy_pair(&joint))
}

/// `max_x H(target | X = x)` over the support of `X`.
pub fn max_conditional_entropy_given_x(model: &JointModel, target: &[Variable]) -> Result<f64> {
    let px = model.x_marginal();
    let mut best = 0.0f64;
    for (x, _) in px.iter() {
        let cond = conditional(model, target, &[(Variable::X, *x as u64)])?;
        best = best.max(entropy_bits(&cond));
    }
    Ok(best)
}
