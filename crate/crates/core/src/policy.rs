//! Load-aware pricing: a scalarized target function weighing the CP's
//! equilibrium benefit against the server-load reduction, the price gap that
//! makes the mixed-audience target independent of the premium count, the
//! large-audience closed-form prices, and the calibration of the
//! load-to-benefit constant from a desired price ratio.
//!
//! Two solve modes ship side by side. `asymptotic` applies the
//! large-audience approximations and returns finite prices. `exact` solves
//! the finite-audience indifference system without approximation; that
//! system forces a zero premium price and a negative standard price, so the
//! solver reports the solution with its feasibility flag and the per-count
//! target residuals instead of hiding the collapse.

use num::{One, Signed, Zero};

use crate::benefits::{self, BenefitError};
use crate::model::{Cohort, Money, MoneyRate, PriceSchedule, Scenario};
use crate::numeric::{int, ratio, uint, Rat};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("benefit weight must be positive for this operation")]
    ZeroBenefitWeight,
    #[error("load weight must be positive for this operation")]
    ZeroLoadWeight,
    #[error("price ratio must exceed 1")]
    InvalidRatio,
    #[error("weights must be nonnegative and sum to 1, phi must be positive")]
    InvalidWeights,
    #[error(transparent)]
    Benefit(#[from] BenefitError),
}

/// Objective weights: `benefit_weight + load_weight = 1`, and the constant
/// `phi` converting one unit of load reduction into cost units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyWeights {
    pub benefit_weight: Rat,
    pub load_weight: Rat,
    pub phi: Rat,
}

impl PolicyWeights {
    pub fn new(benefit_weight: Rat, load_weight: Rat, phi: Rat) -> Result<Self, PolicyError> {
        if benefit_weight.is_negative()
            || load_weight.is_negative()
            || &benefit_weight + &load_weight != Rat::one()
            || !phi.is_positive()
        {
            return Err(PolicyError::InvalidWeights);
        }
        Ok(PolicyWeights {
            benefit_weight,
            load_weight,
            phi,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyMode {
    Asymptotic,
    Exact,
}

impl std::fmt::Display for PolicyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PolicyMode::Asymptotic => "asymptotic",
            PolicyMode::Exact => "exact",
        })
    }
}

/// Solved prices. The fields are signed: an infeasible solve can produce a
/// negative standard price, and reporting it is the point.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyPrices {
    pub premium_price: Rat,
    pub standard_price: Rat,
    pub mode: PolicyMode,
    /// True iff `premium > standard > delivery fee` all hold.
    pub feasible: bool,
    /// Exact mode only: |TF(mixed, y) - TF(all premium)| for each premium
    /// count y in 1..=x-1.
    pub residuals: Vec<Rat>,
}

impl PolicyPrices {
    pub fn max_residual(&self) -> Rat {
        self.residuals
            .iter()
            .cloned()
            .max()
            .unwrap_or_else(Rat::zero)
    }
}

/// `benefit_weight * Ben_CP + load_weight * phi * LR`, with the benefit in
/// its equilibrium form.
pub fn target_function(
    weights: &PolicyWeights,
    schedule: &PriceSchedule,
    cohort: &Cohort,
) -> Result<Money, PolicyError> {
    let benefit = benefits::ben_cp_eq(schedule, cohort)?;
    let load = benefits::load_reduction(cohort);
    Ok(Money::new(
        &weights.benefit_weight * benefit.rat() + &weights.load_weight * &weights.phi * load,
    ))
}

/// The premium/standard price gap that removes the premium count from the
/// mixed-audience target: `2*p_n + 2*b*phi / (a*f*x)`.
pub fn price_gap(
    weights: &PolicyWeights,
    delivery_fee: &MoneyRate,
    file_size: u64,
    users: u64,
) -> Result<MoneyRate, PolicyError> {
    if weights.benefit_weight.is_zero() {
        return Err(PolicyError::ZeroBenefitWeight);
    }
    let extra = int(2) * &weights.load_weight * &weights.phi
        / (&weights.benefit_weight * uint(file_size) * uint(users));
    let gap = int(2) * delivery_fee.rat() + extra;
    Ok(MoneyRate::new(gap).expect("gap terms are nonnegative"))
}

/// Large-audience prices: `p_b = 2*b*phi/(a*f)` and `p_std = p_b - 2*p_n`.
///
/// Feasible iff the implied standard price still exceeds the delivery fee,
/// i.e. `2*b*phi/(a*f) > 3*p_n`; an infeasible result is data, not an error.
pub fn asymptotic_policy(
    weights: &PolicyWeights,
    delivery_fee: &MoneyRate,
    file_size: u64,
) -> Result<PolicyPrices, PolicyError> {
    if weights.benefit_weight.is_zero() {
        return Err(PolicyError::ZeroBenefitWeight);
    }
    let premium = int(2) * &weights.load_weight * &weights.phi
        / (&weights.benefit_weight * uint(file_size));
    let standard = &premium - int(2) * delivery_fee.rat();
    let feasible = &standard > delivery_fee.rat();
    Ok(PolicyPrices {
        premium_price: premium,
        standard_price: standard,
        mode: PolicyMode::Asymptotic,
        feasible,
        residuals: Vec::new(),
    })
}

/// Solves `phi` so the asymptotic prices hit a target ratio `r`:
/// `phi = p_n * a * f / (b * (1 - 1/r))`.
pub fn calibrate_phi(
    target_ratio: &Rat,
    benefit_weight: &Rat,
    load_weight: &Rat,
    delivery_fee: &MoneyRate,
    file_size: u64,
) -> Result<Rat, PolicyError> {
    if target_ratio <= &Rat::one() {
        return Err(PolicyError::InvalidRatio);
    }
    if benefit_weight.is_zero() {
        return Err(PolicyError::ZeroBenefitWeight);
    }
    if load_weight.is_zero() {
        return Err(PolicyError::ZeroLoadWeight);
    }
    let shortfall = Rat::one() - Rat::one() / target_ratio; // 1 - 1/r
    Ok(delivery_fee.rat() * benefit_weight * uint(file_size) / (load_weight * shortfall))
}

/// The price multiples implied by the large-audience gap at a given ratio
/// margin `delta = r - 1`: `n = 2/delta`, `m = n + 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MnRelation {
    pub n: Rat,
    pub m: Rat,
    /// Whether `n > 1` still holds; small margins satisfy it, large margins
    /// push `n` below the standing price floor and are flagged, not
    /// rejected.
    pub n_above_one: bool,
}

pub fn mn_relation(delta: &Rat) -> Result<MnRelation, PolicyError> {
    if !delta.is_positive() {
        return Err(PolicyError::InvalidRatio);
    }
    let n = int(2) / delta;
    let m = &n + int(2);
    let n_above_one = n > Rat::one();
    Ok(MnRelation { n, m, n_above_one })
}

/// Target function over raw signed prices; the solver needs to evaluate
/// candidate prices that no valid schedule can carry.
fn tf_all_premium(w: &PolicyWeights, p_b: &Rat, p_n: &Rat, f: &Rat, x: &Rat) -> Rat {
    &w.benefit_weight * f * ((p_b - p_n) * x)
}

fn tf_all_standard(w: &PolicyWeights, p_std: &Rat, p_n: &Rat, f: &Rat, x: &Rat) -> Rat {
    let benefit = f * (p_std * (x - int(1)) * ratio(1, 2) - p_n);
    let load = (x - int(1)) / x;
    &w.benefit_weight * benefit + &w.load_weight * &w.phi * load
}

fn tf_mixed(w: &PolicyWeights, p_b: &Rat, p_std: &Rat, p_n: &Rat, f: &Rat, x: &Rat, y: &Rat) -> Rat {
    let pooled = p_b * y + p_std * (x - y - int(1));
    let benefit = f * (pooled * ratio(1, 2) - p_n * (y + int(1)));
    let load = (x - y - int(1)) / x;
    &w.benefit_weight * benefit + &w.load_weight * &w.phi * load
}

/// Solves the finite-audience system {TF(all premium) = TF(all standard),
/// gap condition} exactly and reports what comes out.
///
/// The constancy of the mixed target under the gap pins TF(mixed, y) to the
/// all-standard value for every y, so equating it with the all-premium value
/// forces `p_b = 0` and `p_std = -gap`: three-way indifference at finite x
/// has no feasible prices. The residuals document the (zero) spread.
pub fn exact_indifference(
    weights: &PolicyWeights,
    delivery_fee: &MoneyRate,
    file_size: u64,
    users: u64,
) -> Result<PolicyPrices, PolicyError> {
    if weights.benefit_weight.is_zero() {
        return Err(PolicyError::ZeroBenefitWeight);
    }
    let gap = price_gap(weights, delivery_fee, file_size, users)?.into_rat();
    let a = &weights.benefit_weight;
    let b = &weights.load_weight;
    let phi = &weights.phi;
    let f = uint(file_size);
    let x = uint(users);
    let p_n = delivery_fee.rat();

    // Substitute p_b = p_std + gap into a*f*(p_b - p_n)*x =
    // a*f*(p_std*(x-1)/2 - p_n) + b*phi*(x-1)/x and solve for p_std:
    let numer = a * &f * p_n * (&x - int(1)) - a * &f * &x * &gap + b * phi * (&x - int(1)) / &x;
    let standard = numer * int(2) / (a * &f * (&x + int(1)));
    let premium = &standard + &gap;
    let feasible = &premium > &standard && &standard > p_n;

    let tf2 = tf_all_premium(weights, &premium, p_n, &f, &x);
    debug_assert_eq!(
        tf_all_standard(weights, &standard, p_n, &f, &x),
        tf2,
        "the solve equalizes the two pure-scenario targets"
    );
    let residuals = (1..users)
        .map(|y| {
            let tf3 = tf_mixed(weights, &premium, &standard, p_n, &f, &x, &uint(y));
            (&tf3 - &tf2).abs()
        })
        .collect();

    Ok(PolicyPrices {
        premium_price: premium,
        standard_price: standard,
        mode: PolicyMode::Exact,
        feasible,
        residuals,
    })
}

/// One scenario candidate scored by the target function.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedCandidate {
    pub premium: u64,
    pub scenario: Scenario,
    pub score: Money,
}

/// Ranks candidate premium counts by the target function, highest first;
/// ties keep the smaller premium count first.
pub fn recommend(
    weights: &PolicyWeights,
    candidate_premium_counts: &[u64],
    cohort: &Cohort,
    schedule: &PriceSchedule,
) -> Result<Vec<RankedCandidate>, PolicyError> {
    let mut ranked = Vec::with_capacity(candidate_premium_counts.len());
    for &premium in candidate_premium_counts {
        let candidate = Cohort::new(cohort.users(), premium, cohort.file_size()).map_err(|_| {
            PolicyError::Benefit(BenefitError::DegenerateCohort {
                x: cohort.users(),
                y: premium,
                requirement: "candidate premium count must not exceed the audience",
            })
        })?;
        let score = target_function(weights, schedule, &candidate)?;
        ranked.push(RankedCandidate {
            premium,
            scenario: candidate.scenario(),
            score,
        });
    }
    ranked.sort_by(|left, right| {
        right
            .score
            .rat()
            .cmp(left.score.rat())
            .then(left.premium.cmp(&right.premium))
    });
    Ok(ranked)
}
