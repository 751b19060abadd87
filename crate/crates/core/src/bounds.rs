//! Closed-form upper and lower bounds on the private code length.

use num_traits::ToPrimitive;

use crate::caching::{payload_distribution, DemandVector, SystemParams};
use crate::dist::{
    binary_entropy, condition_on, entropy_bits, max_conditional_entropy_given_x, split_marginals,
    to_f64, Distribution, JointModel, Rational, Variable,
};
use crate::error::Result;
use crate::frl::{alpha_for, SupportSizes};
use crate::privcode::ceil_log2;

/// Upper bounds for one demand vector, in bits.
#[derive(Clone, Debug, PartialEq)]
pub struct UpperBounds {
    /// `Σ_x H(C'|X=x)`.
    pub sum_conditional_entropy: f64,
    /// Entropy form, including the `+1` Huffman slack.
    pub entropy: f64,
    pub cardinality: u32,
    /// Present only when `X` is a deterministic function of `C'`.
    pub deterministic: Option<u32>,
}

impl UpperBounds {
    /// Smallest applicable bound.
    pub fn min(&self) -> f64 {
        let mut best = self.entropy.min(f64::from(self.cardinality));
        if let Some(d) = self.deterministic {
            best = best.min(f64::from(d));
        }
        best
    }

    /// `Σ_x H(C'|X=x) + ⌈log2 |X|⌉`: the length figure obtained by charging
    /// the representation its entropy bound with no integer-length slack.
    pub fn entropy_accounted_length(&self, x_alphabet_size: usize) -> f64 {
        self.sum_conditional_entropy + f64::from(ceil_log2(x_alphabet_size as u64))
    }
}

fn sum_conditional_entropy<X: crate::dist::Symbol, C: crate::dist::Symbol>(
    joint: &Distribution<(X, C)>,
) -> f64 {
    let (px, _) = split_marginals(joint);
    px.iter()
        .map(|(x, _)| entropy_bits(&condition_on(joint, x).expect("x in support")))
        .sum()
}

/// Bounds from the `(X, C')` joint. `epsilon = None` is the perfect-privacy case.
pub fn upper_bounds_for_joint(
    joint: &Distribution<(usize, u64)>,
    x_alphabet_size: usize,
    epsilon: Option<f64>,
) -> Result<UpperBounds> {
    let sizes = SupportSizes::of(joint);
    let sum = sum_conditional_entropy(joint);
    let pad = ceil_log2(x_alphabet_size as u64);
    let (extra_entropy, factor) = match epsilon {
        None => (0.0, 1u64),
        Some(eps) => {
            let (px, _) = split_marginals(joint);
            let alpha = to_f64(&alpha_for(eps, entropy_bits(&px))?);
            (binary_entropy(alpha) + eps, sizes.x as u64 + 1)
        }
    };
    Ok(UpperBounds {
        sum_conditional_entropy: sum,
        entropy: sum + extra_entropy + 1.0 + f64::from(pad),
        cardinality: ceil_log2(sizes.frl_bound() as u64 * factor) + pad,
        deterministic: sizes
            .frl_deterministic_bound()
            .map(|b| ceil_log2(b as u64 * factor) + pad),
    })
}

/// Perfect-privacy upper bounds for demand vector `d`.
pub fn ub_perfect(model: &JointModel, d: &DemandVector, params: &SystemParams) -> Result<UpperBounds> {
    let joint = payload_distribution(model, d, params)?;
    upper_bounds_for_joint(&joint, model.x_alphabet().len(), None)
}

/// ε-leakage upper bounds for demand vector `d`; `0 <= epsilon <= H(X)`.
pub fn ub_epsilon(
    model: &JointModel,
    d: &DemandVector,
    params: &SystemParams,
    epsilon: f64,
) -> Result<UpperBounds> {
    let joint = payload_distribution(model, d, params)?;
    upper_bounds_for_joint(&joint, model.x_alphabet().len(), Some(epsilon))
}

/// `max_{t ≤ K} max_x H(Y_1, …, Y_{t⌊N/t⌋} | X = x)`, files in index order.
pub fn lb_l1(model: &JointModel, users: usize) -> Result<f64> {
    let n = model.file_count();
    let mut best = 0.0f64;
    for t in 1..=users {
        let prefix = t * (n / t);
        if prefix == 0 {
            continue;
        }
        let files: Vec<Variable> = (0..prefix).map(Variable::File).collect();
        best = best.max(max_conditional_entropy_given_x(model, &files)?);
    }
    Ok(best)
}

/// Preconditions of the second lower bound, asserted by the caller.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct L2Preconditions {
    pub uncoded_placement: bool,
    pub independent_files: bool,
    /// Every file uniform on its `F` bits, so the files carry `F` bits each.
    pub uniform_files: bool,
}

impl L2Preconditions {
    pub fn holds(&self) -> bool {
        self.uncoded_placement && self.independent_files && self.uniform_files
    }
}

/// The second lower bound in two algebraic forms; `None` when inapplicable.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct L2Bounds {
    /// `max_t [(t - t/(⌊N/t⌋ M)) F - log T]`, as written.
    pub stated: Option<f64>,
    /// `max_t [tF - tMF/⌊N/t⌋ - log(T)/⌊N/t⌋]`, solved from the cut-set inequality
    /// `⌊N/t⌋ H(U) + tMF + log T >= t⌊N/t⌋F`.
    pub cutset: Option<f64>,
}

pub fn lb_l2(params: &SystemParams, pre: L2Preconditions) -> L2Bounds {
    if !pre.holds() {
        return L2Bounds::default();
    }
    let n = params.files();
    let f = f64::from(params.file_bits());
    let m = params.cache_files().to_f64().unwrap_or(f64::NAN);
    let log_t = (params.key_size() as f64).log2();
    let mut stated = f64::NEG_INFINITY;
    let mut cutset = f64::NEG_INFINITY;
    for t in 1..=params.users() {
        let batches = (n / t) as f64;
        if batches == 0.0 {
            continue;
        }
        let t = t as f64;
        stated = stated.max((t - t / (batches * m)) * f - log_t);
        cutset = cutset.max(t * f - t * m * f / batches - log_t / batches);
    }
    L2Bounds {
        stated: Some(stated),
        cutset: Some(cutset),
    }
}

/// Exact test that `Y_1, …, Y_N` are mutually independent under the model.
pub fn files_independent(model: &JointModel) -> bool {
    let marginals: Vec<Distribution<u64>> = (0..model.file_count())
        .map(|n| {
            Distribution::from_masses(model.outcomes().iter().map(|o| (o.files[n], o.mass.clone())))
                .expect("model pmf sums to one")
        })
        .collect();
    let joint = Distribution::from_masses(
        model
            .outcomes()
            .iter()
            .map(|o| (o.files.clone(), o.mass.clone())),
    )
    .expect("model pmf sums to one");
    let product_support: usize = marginals.iter().map(Distribution::support_size).product();
    product_support == joint.support_size()
        && joint.iter().all(|(ys, p)| {
            let product: Rational = ys
                .iter()
                .zip(&marginals)
                .map(|(y, m)| m.mass(y))
                .product();
            *p == product
        })
}

/// Exact test that every file is uniform over its `2^F` values.
pub fn files_uniform(model: &JointModel) -> bool {
    let values = 1u64 << model.file_bits();
    let share = Rational::new(1.into(), values.into());
    (0..model.file_count()).all(|n| {
        let marginal = Distribution::from_masses(model.outcomes().iter().map(|o| (o.files[n], o.mass.clone())))
            .expect("model pmf sums to one");
        marginal.support_size() as u64 == values && marginal.iter().all(|(_, p)| *p == share)
    })
}

/// Preconditions of the second lower bound under the placement used here.
pub fn l2_preconditions(model: &JointModel) -> L2Preconditions {
    L2Preconditions {
        uncoded_placement: true,
        independent_files: files_independent(model),
        uniform_files: files_uniform(model),
    }
}

/// Bounds and achieved length for one demand vector.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandBounds {
    pub demand: DemandVector,
    pub upper: UpperBounds,
    pub entropy_accounted_length: f64,
    pub achieved_expected_length: f64,
}

/// Every bound for a configuration, next to what the code achieved.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub per_demand: Vec<DemandBounds>,
    pub lb_l1: f64,
    pub lb_l2: L2Bounds,
    pub worst_case_achieved: f64,
    pub worst_case_entropy_accounted: f64,
}

impl BoundReport {
    /// `max(L1, cut-set L2)`; the stated L2 form is reported but not used.
    pub fn lower_bound(&self) -> f64 {
        self.lb_l1.max(self.lb_l2.cutset.unwrap_or(f64::NEG_INFINITY))
    }

    /// Worst-case achieved length minus the lower bound.
    pub fn lower_slack(&self) -> f64 {
        self.worst_case_achieved - self.lower_bound()
    }

    /// Smallest per-demand `min upper bound - achieved`.
    pub fn upper_slack(&self) -> f64 {
        self.per_demand
            .iter()
            .map(|d| d.upper.min() - d.achieved_expected_length)
            .fold(f64::INFINITY, f64::min)
    }
}
