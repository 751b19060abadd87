//! End-to-end runs: one private code per demand vector, audited exactly.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::{
    l2_preconditions, lb_l1, lb_l2, upper_bounds_for_joint, BoundReport, DemandBounds, UpperBounds,
};
use crate::caching::{deliver, payload_distribution, place, DemandVector, SystemParams};
use crate::dist::{
    exact_independence, mutual_information_bits, sample_exact, to_f64, Distribution, JointModel, Rational,
};
use crate::error::{Error, Result};
use crate::frl::{alpha_for, build_efrl, build_frl, verify_channel, ChannelReport, Representation};
use crate::privcode::{BitString, TwoPartCode};

/// Largest demand sweep run without an explicit cap.
pub const DEFAULT_DEMAND_CAP: usize = 4096;

/// Tolerance on `|I(C;X) - ε|` and on bound comparisons, in bits.
pub const TOLERANCE_BITS: f64 = 1e-9;

/// Which demand vectors a run covers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DemandSet {
    /// Every vector in `[N]^K`.
    All,
    List(Vec<DemandVector>),
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub model: JointModel,
    pub params: SystemParams,
    /// Allowed leakage in bits; `0` asks for perfect privacy.
    pub epsilon: f64,
    pub seed: u64,
    pub demands: DemandSet,
    pub demand_cap: usize,
}

impl ExperimentConfig {
    /// A perfect-privacy config over all demand vectors with seed `0`.
    pub fn new(model: JointModel, params: SystemParams) -> Result<Self> {
        let config = Self {
            model,
            params,
            epsilon: 0.0,
            seed: 0,
            demands: DemandSet::All,
            demand_cap: DEFAULT_DEMAND_CAP,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.epsilon = epsilon;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_demands(mut self, demands: DemandSet) -> Self {
        self.demands = demands;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.check_model(&self.model)?;
        let t = self.model.x_alphabet().len() as u64;
        if self.params.key_size() != t {
            return Err(Error::config(format!(
                "key size T = {} must equal |X| = {t}",
                self.params.key_size()
            )));
        }
        alpha_for(self.epsilon, self.model.x_entropy_bits())?;
        Ok(())
    }

    /// The demand vectors to run, in order. Errors rather than truncating past the cap.
    pub fn demand_vectors(&self) -> Result<Vec<DemandVector>> {
        let vectors = match &self.demands {
            DemandSet::All => {
                let count = u32::try_from(self.params.users())
                    .ok()
                    .and_then(|k| self.params.files().checked_pow(k));
                match count {
                    Some(c) if c <= self.demand_cap => DemandVector::all(&self.params),
                    _ => {
                        return Err(Error::config(format!(
                            "{}^{} demand vectors exceed the cap of {}",
                            self.params.files(),
                            self.params.users(),
                            self.demand_cap
                        )))
                    }
                }
            }
            DemandSet::List(list) => {
                if list.is_empty() {
                    return Err(Error::config("empty demand list"));
                }
                if list.len() > self.demand_cap {
                    return Err(Error::config(format!(
                        "{} demand vectors exceed the cap of {}",
                        list.len(),
                        self.demand_cap
                    )));
                }
                for d in list {
                    DemandVector::new(d.as_slice().to_vec(), &self.params)?;
                }
                list.clone()
            }
        };
        Ok(vectors)
    }

    fn perfect(&self) -> bool {
        self.epsilon == 0.0
    }
}

/// A breached invariant. `demand` is `None` for global checks.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub demand: Option<DemandVector>,
    pub invariant: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.demand {
            Some(d) => write!(f, "d={d}: {}: {}", self.invariant, self.detail),
            None => write!(f, "global: {}: {}", self.invariant, self.detail),
        }
    }
}

/// Exact audit of the code for one demand vector.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandAudit {
    pub demand: DemandVector,
    /// `I(C; X)` computed from the exact joint of `X` and the codeword bits.
    pub leakage_bits: f64,
    /// Whether that joint factorizes exactly.
    pub exact_independent: bool,
    /// `E[L | W = w]` for every key.
    pub expected_length_per_key: Vec<Rational>,
    pub decode_checks: usize,
    pub decode_errors: usize,
    pub codebook_size: usize,
    pub channel: ChannelReport,
    pub upper: UpperBounds,
    pub violations: Vec<Violation>,
}

impl DemandAudit {
    /// Expected length under the worst key (all keys agree when the audit passes).
    pub fn expected_length(&self) -> Rational {
        self.expected_length_per_key.iter().max().cloned().unwrap_or_else(Rational::zero)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditResult {
    pub epsilon: f64,
    pub per_demand: Vec<DemandAudit>,
    pub worst_case_length: f64,
    pub worst_case_demand: DemandVector,
    /// `max |I(C;X) - ε|` over demands.
    pub max_leakage_deviation: f64,
    /// Global checks that name no single demand.
    pub global_violations: Vec<Violation>,
}

impl AuditResult {
    pub fn violations(&self) -> impl Iterator<Item = &Violation> {
        self.per_demand
            .iter()
            .flat_map(|d| d.violations.iter())
            .chain(self.global_violations.iter())
    }

    pub fn is_ok(&self) -> bool {
        self.violations().next().is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub audit: AuditResult,
    pub bounds: BoundReport,
}

fn violation(d: &DemandVector, invariant: &'static str, detail: impl Into<String>) -> Violation {
    Violation {
        demand: Some(d.clone()),
        invariant,
        detail: detail.into(),
    }
}

fn audit_code<R>(config: &ExperimentConfig, d: &DemandVector, code: &TwoPartCode<R>) -> Result<DemandAudit>
where
    R: Representation<X = usize, Target = u64>,
{
    let channel = code.channel();
    let t = code.key_size();
    let mut violations = Vec::new();

    let mut seen = BTreeSet::new();
    let u_support = channel.u_distribution();
    for padded in 0..t {
        for (u, _) in u_support.iter() {
            // Key 0 sends x as the padded value.
            let bits = code.encode_with_u(padded, u, 0)?.bits;
            if !seen.insert(bits.clone()) {
                violations.push(violation(d, "codeword injectivity", format!("{bits} is produced twice")));
            }
        }
    }

    let key_mass = Rational::new(1.into(), t.into());
    let mut cells = Vec::new();
    for ((x, c), p) in channel.source().iter() {
        let admissible = channel.u_given(x, c)?;
        for key in 0..t {
            for (u, q) in &admissible {
                let bits = code.encode_with_u(*x, u, key)?.bits;
                cells.push(((*x, bits), p * q * &key_mass));
            }
        }
    }
    let joint: Distribution<(usize, BitString)> = Distribution::from_masses(cells)?;
    let leakage = mutual_information_bits(&joint);
    let exact_independent = exact_independence(&joint);
    if config.perfect() {
        if !exact_independent {
            violations.push(violation(
                d,
                "perfect privacy",
                format!("codeword and X do not factorize; I = {leakage:.3e}"),
            ));
        }
    } else if (leakage - config.epsilon).abs() > TOLERANCE_BITS {
        violations.push(violation(
            d,
            "leakage equality",
            format!("I = {leakage:.12}, ε = {}", config.epsilon),
        ));
    }

    let mut decode_checks = 0;
    let mut decode_errors = 0;
    let params = &config.params;
    for outcome in config.model.outcomes() {
        let payload = deliver(&outcome.files, d, params)?.value();
        let caches = place(&outcome.files, params)?;
        let admissible = channel.u_given(&outcome.x, &payload)?;
        for key in 0..t {
            for (u, _) in &admissible {
                let codeword = code.encode_with_u(outcome.x, u, key)?;
                for (user, cache) in caches.iter().enumerate() {
                    decode_checks += 1;
                    match code.decode_user(user, &codeword, key, cache, d, params) {
                        Ok(y) if y == outcome.files[d.as_slice()[user]] => {}
                        _ => decode_errors += 1,
                    }
                }
            }
        }
    }
    if decode_errors > 0 {
        violations.push(violation(
            d,
            "zero-error decoding",
            format!("{decode_errors} of {decode_checks} decodes failed"),
        ));
    }

    let lengths = code.expected_length()?;
    if !lengths.all_equal() {
        violations.push(violation(
            d,
            "per-key length equality",
            format!("expected lengths differ across keys: {:?}", lengths.per_key),
        ));
    }

    let report = verify_channel(channel);
    for v in &report.violations {
        violations.push(violation(d, "representation", v.clone()));
    }

    let eps = (!config.perfect()).then_some(config.epsilon);
    let upper = upper_bounds_for_joint(channel.source(), t, eps)?;
    let achieved = to_f64(&lengths.max());
    if achieved > upper.min() + TOLERANCE_BITS {
        violations.push(violation(
            d,
            "upper bound",
            format!("expected length {achieved:.9} exceeds {:.9}", upper.min()),
        ));
    }

    Ok(DemandAudit {
        demand: d.clone(),
        leakage_bits: leakage,
        exact_independent,
        expected_length_per_key: lengths.per_key,
        decode_checks,
        decode_errors,
        codebook_size: code.codebook().len(),
        channel: report,
        upper,
        violations,
    })
}

fn audit_demand(config: &ExperimentConfig, d: &DemandVector) -> Result<DemandAudit> {
    let joint = payload_distribution(&config.model, d, &config.params)?;
    let t = config.model.x_alphabet().len();
    if config.perfect() {
        audit_code(config, d, &TwoPartCode::new(build_frl(&joint), t)?)
    } else {
        audit_code(config, d, &TwoPartCode::new(build_efrl(&joint, config.epsilon)?, t)?)
    }
}

/// Builds and audits the code for every configured demand vector.
///
/// Demands run in parallel; results keep the demand order.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let demands = config.demand_vectors()?;
    let per_demand: Vec<DemandAudit> = demands
        .par_iter()
        .map(|d| audit_demand(config, d))
        .collect::<Result<_>>()?;

    let mut worst = 0;
    for (i, a) in per_demand.iter().enumerate() {
        if a.expected_length() > per_demand[worst].expected_length() {
            worst = i;
        }
    }
    let worst_case_length = to_f64(&per_demand[worst].expected_length());
    let max_leakage_deviation = per_demand
        .iter()
        .map(|a| (a.leakage_bits - config.epsilon).abs())
        .fold(0.0, f64::max);

    let t = config.model.x_alphabet().len();
    let per_bounds: Vec<DemandBounds> = per_demand
        .iter()
        .map(|a| DemandBounds {
            demand: a.demand.clone(),
            upper: a.upper.clone(),
            entropy_accounted_length: a.upper.entropy_accounted_length(t),
            achieved_expected_length: to_f64(&a.expected_length()),
        })
        .collect();
    let bounds = BoundReport {
        worst_case_entropy_accounted: per_bounds
            .iter()
            .map(|b| b.entropy_accounted_length)
            .fold(f64::NEG_INFINITY, f64::max),
        per_demand: per_bounds,
        lb_l1: lb_l1(&config.model, config.params.users())?,
        lb_l2: lb_l2(&config.params, l2_preconditions(&config.model)),
        worst_case_achieved: worst_case_length,
    };

    let mut global_violations = Vec::new();
    // The lower bounds are stated for perfect privacy only.
    if config.perfect() && bounds.lower_slack() < -TOLERANCE_BITS {
        global_violations.push(Violation {
            demand: None,
            invariant: "lower bound",
            detail: format!(
                "worst-case length {:.9} is below max(L1 = {:.9}, L2 = {})",
                worst_case_length,
                bounds.lb_l1,
                bounds.lb_l2.cutset.map_or("n/a".to_string(), |v| format!("{v:.9}")),
            ),
        });
    }

    Ok(RunOutput {
        audit: AuditResult {
            epsilon: config.epsilon,
            worst_case_demand: per_demand[worst].demand.clone(),
            per_demand,
            worst_case_length,
            max_leakage_deviation,
            global_violations,
        },
        bounds,
    })
}

/// Bounds only, without building any code.
pub fn bounds_only(config: &ExperimentConfig) -> Result<(Vec<(DemandVector, UpperBounds)>, BoundReport)> {
    config.validate()?;
    let t = config.model.x_alphabet().len();
    let eps = (!config.perfect()).then_some(config.epsilon);
    let rows = config
        .demand_vectors()?
        .into_iter()
        .map(|d| {
            let joint = payload_distribution(&config.model, &d, &config.params)?;
            Ok((d, upper_bounds_for_joint(&joint, t, eps)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = BoundReport {
        per_demand: rows
            .iter()
            .map(|(d, u)| DemandBounds {
                demand: d.clone(),
                upper: u.clone(),
                entropy_accounted_length: u.entropy_accounted_length(t),
                achieved_expected_length: f64::NAN,
            })
            .collect(),
        lb_l1: lb_l1(&config.model, config.params.users())?,
        lb_l2: lb_l2(&config.params, l2_preconditions(&config.model)),
        worst_case_achieved: f64::NAN,
        worst_case_entropy_accounted: rows
            .iter()
            .map(|(_, u)| u.entropy_accounted_length(t))
            .fold(f64::NEG_INFINITY, f64::max),
    };
    Ok((rows, report))
}

/// One simulated transmission.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    pub x: usize,
    pub files: Vec<u64>,
    pub key: usize,
    pub codeword: BitString,
    pub decoded_ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemandTrials {
    pub demand: DemandVector,
    pub trials: usize,
    pub empirical_mean: f64,
    pub analytical_mean: f64,
    /// Standard deviation of a single codeword length.
    pub length_std_dev: f64,
    pub decode_failures: usize,
    pub transcript: Vec<TrialRecord>,
}

impl DemandTrials {
    /// `|empirical - analytical| <= 5σ/√n`; exact agreement when `σ = 0`.
    pub fn within_band(&self) -> bool {
        let band = 5.0 * self.length_std_dev / (self.trials as f64).sqrt();
        (self.empirical_mean - self.analytical_mean).abs() <= band.max(1e-12)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialSummary {
    pub seed: u64,
    pub per_demand: Vec<DemandTrials>,
}

impl TrialSummary {
    pub fn is_ok(&self) -> bool {
        self.per_demand
            .iter()
            .all(|d| d.decode_failures == 0 && d.within_band())
    }
}

fn simulate_code<R>(
    config: &ExperimentConfig,
    d: &DemandVector,
    code: &TwoPartCode<R>,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DemandTrials>
where
    R: Representation<X = usize, Target = u64>,
{
    let params = &config.params;
    let weights: Vec<(usize, Rational)> = config
        .model
        .outcomes()
        .iter()
        .enumerate()
        .map(|(i, o)| (i, o.mass.clone()))
        .collect();
    let lengths = code.length_distribution();
    let mean = to_f64(&lengths.expectation(|l| Rational::from_integer((*l).into())));
    let second = to_f64(&lengths.expectation(|l| Rational::from_integer((l * l).into())));
    let std_dev = (second - mean * mean).max(0.0).sqrt();

    let mut transcript = Vec::with_capacity(trials);
    let mut total = 0usize;
    let mut failures = 0;
    for _ in 0..trials {
        let outcome = &config.model.outcomes()[sample_exact(&weights, rng)?];
        let key = rng.gen_range(0..code.key_size());
        let payload = deliver(&outcome.files, d, params)?.value();
        let codeword = code.encode(outcome.x, payload, key, rng)?;
        let caches = place(&outcome.files, params)?;
        let decoded_ok = caches.iter().enumerate().all(|(user, cache)| {
            code.decode_user(user, &codeword, key, cache, d, params)
                .is_ok_and(|y| y == outcome.files[d.as_slice()[user]])
        });
        if !decoded_ok {
            failures += 1;
        }
        total += codeword.len();
        transcript.push(TrialRecord {
            x: outcome.x,
            files: outcome.files.clone(),
            key,
            codeword: codeword.bits,
            decoded_ok,
        });
    }
    Ok(DemandTrials {
        demand: d.clone(),
        trials,
        empirical_mean: total as f64 / trials as f64,
        analytical_mean: mean,
        length_std_dev: std_dev,
        decode_failures: failures,
        transcript,
    })
}

/// Monte Carlo sanity pass over the analytical audit: `trials` draws per demand vector.
///
/// Demand `i` draws from the ChaCha stream `i` of `seed`, so the transcript
/// depends only on the config, the seed and the trial count.
pub fn simulate_trials(config: &ExperimentConfig, trials: usize) -> Result<TrialSummary> {
    if trials == 0 {
        return Err(Error::usage("at least one trial is required"));
    }
    config.validate()?;
    let t = config.model.x_alphabet().len();
    let per_demand = config
        .demand_vectors()?
        .par_iter()
        .enumerate()
        .map(|(i, d)| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            let joint = payload_distribution(&config.model, d, &config.params)?;
            if config.perfect() {
                simulate_code(config, d, &TwoPartCode::new(build_frl(&joint), t)?, trials, &mut rng)
            } else {
                let code = TwoPartCode::new(build_efrl(&joint, config.epsilon)?, t)?;
                simulate_code(config, d, &code, trials, &mut rng)
            }
        })
        .collect::<Result<_>>()?;
    Ok(TrialSummary {
        seed: config.seed,
        per_demand,
    })
}
