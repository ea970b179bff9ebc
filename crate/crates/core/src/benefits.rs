//! Closed-form benefit and server-load-reduction functions for the three
//! audience scenarios, in raw (reward-dependent) form, in bargaining
//! equilibrium form, and in the normalized dimensionless form used by sweeps.
//!
//! Raw forms price every delivery event explicitly and therefore depend on
//! the sharing reward; equilibrium forms substitute the Nash-bargaining
//! midpoint, after which the reward cancels. The protocol simulator in
//! [`crate::sim`] reproduces every raw form from its ledger, entry by entry.

use num::Zero;

use crate::model::{Cohort, Money, MoneyRate, NormalizedPrices, PriceSchedule, Scenario};
use crate::numeric::{int, ratio, uint, Rat};

/// A cohort outside the domain of an equilibrium formula.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BenefitError {
    #[error("cohort (x={x}, y={y}) is degenerate here: requires {requirement}")]
    DegenerateCohort {
        x: u64,
        y: u64,
        requirement: &'static str,
    },
}

fn degenerate(cohort: &Cohort, requirement: &'static str) -> BenefitError {
    BenefitError::DegenerateCohort {
        x: cohort.users(),
        y: cohort.premium(),
        requirement,
    }
}

/// Equilibrium benefits and load reduction for one cohort, bundled for
/// reporting. `sharer` is absent when everyone is premium and nobody shares;
/// the common per-user benefit there is `-f * p_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenefitReport {
    pub scenario: Scenario,
    pub cp: Money,
    pub sharer: Option<Money>,
    pub load_reduction: Rat,
}

/// CP benefit with every payment priced explicitly, including the reward.
///
/// One standard seed delivery is assumed whenever a standard user exists;
/// the single-user audience reduces to `f * (p_std - p_n)`.
pub fn ben_cp_raw(schedule: &PriceSchedule, cohort: &Cohort) -> Money {
    let f = uint(cohort.file_size());
    let x = uint(cohort.users());
    let y = uint(cohort.premium());
    let p_n = schedule.delivery_fee.rat();
    let p_b = schedule.premium_price.rat();
    let p_std = schedule.standard_price.rat();
    let p_u = schedule.share_reward.rat();
    let value = match cohort.scenario() {
        Scenario::AllStandard => {
            let shares = &x - int(1);
            &f * (p_std * &x - p_n - p_u * shares)
        }
        Scenario::AllPremium => &f * ((p_b - p_n) * &x),
        Scenario::Mixed => {
            let shares = &x - &y - int(1);
            let revenue = p_b * &y + p_std * (&x - &y);
            let delivery_cost = p_n * (&y + int(1));
            let rewards = p_u * shares;
            &f * (revenue - delivery_cost - rewards)
        }
    };
    Money::new(value)
}

/// Designated sharer's benefit in raw form; the per-user value `-f * p_b`
/// when everyone is premium.
pub fn ben_sharer_raw(schedule: &PriceSchedule, cohort: &Cohort) -> Money {
    let f = uint(cohort.file_size());
    let x = uint(cohort.users());
    let y = uint(cohort.premium());
    let p_b = schedule.premium_price.rat();
    let p_std = schedule.standard_price.rat();
    let p_u = schedule.share_reward.rat();
    let s = schedule.energy_cost.rat();
    let value = match cohort.scenario() {
        Scenario::AllStandard => {
            let shares = &x - int(1);
            &f * (p_u * &shares - p_std - s * &shares)
        }
        Scenario::AllPremium => -(&f * p_b),
        Scenario::Mixed => {
            let shares = &x - &y - int(1);
            &f * (p_u * &shares - p_std - s * &shares)
        }
    };
    Money::new(value)
}

/// CP benefit at the bargaining equilibrium (reward eliminated).
pub fn ben_cp_eq(schedule: &PriceSchedule, cohort: &Cohort) -> Result<Money, BenefitError> {
    let f = uint(cohort.file_size());
    let x = uint(cohort.users());
    let y = uint(cohort.premium());
    let p_n = schedule.delivery_fee.rat();
    let p_b = schedule.premium_price.rat();
    let p_std = schedule.standard_price.rat();
    let half = ratio(1, 2);
    let value = match cohort.scenario() {
        Scenario::AllStandard => {
            if cohort.users() < 2 {
                return Err(degenerate(cohort, "x >= 2 for the all-standard settlement"));
            }
            &f * (p_std * (&x - int(1)) * &half - p_n)
        }
        Scenario::AllPremium => &f * ((p_b - p_n) * &x),
        Scenario::Mixed => {
            let pooled = p_b * &y + p_std * (&x - &y - int(1));
            &f * (pooled * &half - p_n * (&y + int(1)))
        }
    };
    Ok(Money::new(value))
}

/// User-side benefit at the bargaining equilibrium: the designated sharer's
/// in sharing scenarios, the common per-user value when everyone is premium.
pub fn ben_user_eq(schedule: &PriceSchedule, cohort: &Cohort) -> Result<Money, BenefitError> {
    let f = uint(cohort.file_size());
    let x = uint(cohort.users());
    let y = uint(cohort.premium());
    let p_b = schedule.premium_price.rat();
    let p_std = schedule.standard_price.rat();
    let s = schedule.energy_cost.rat();
    let half = ratio(1, 2);
    let value = match cohort.scenario() {
        Scenario::AllStandard => {
            if cohort.users() < 2 {
                return Err(degenerate(cohort, "x >= 2 for the all-standard settlement"));
            }
            let shares = &x - int(1);
            &f * (p_std * &shares * &half - s * &shares)
        }
        Scenario::AllPremium => -(&f * p_b),
        Scenario::Mixed => {
            let shares = &x - &y - int(1);
            let pooled = p_b * &y + p_std * &shares;
            &f * (pooled * &half - s * &shares)
        }
    };
    Ok(Money::new(value))
}

/// Fraction of users not served from the CP server: `1 - deliveries / x`.
pub fn load_reduction(cohort: &Cohort) -> Rat {
    let x = uint(cohort.users());
    match cohort.scenario() {
        Scenario::AllStandard => (&x - int(1)) / &x,
        Scenario::AllPremium => Rat::zero(),
        Scenario::Mixed => {
            let y = uint(cohort.premium());
            (&x - &y - int(1)) / &x
        }
    }
}

/// Mixed-scenario equilibrium CP benefit in normalized form:
/// `f * p_n * (n * (r*k*x + x - k*x - 1) / 2 - (k*x + 1))`.
///
/// `k` may be any real fraction in `[0, 1]`; when `k * x` is integral this
/// agrees exactly with [`ben_cp_eq`] on the denormalized schedule.
pub fn ben_cp_eq_normalized(
    np: &NormalizedPrices,
    users: u64,
    delivery_fee: &MoneyRate,
    file_size: u64,
) -> Money {
    let x = uint(users);
    let f = uint(file_size);
    let kx = &np.k * &x;
    let pooled = &np.n * (&np.r * &kx + &x - &kx - int(1)) * ratio(1, 2);
    let value = &f * delivery_fee.rat() * (pooled - (&kx + int(1)));
    Money::new(value)
}

/// Equilibrium benefits plus load reduction for one cohort.
pub fn equilibrium_report(
    schedule: &PriceSchedule,
    cohort: &Cohort,
) -> Result<BenefitReport, BenefitError> {
    let scenario = cohort.scenario();
    let cp = ben_cp_eq(schedule, cohort)?;
    let sharer = match scenario {
        Scenario::AllPremium => None,
        _ => Some(ben_user_eq(schedule, cohort)?),
    };
    Ok(BenefitReport {
        scenario,
        cp,
        sharer,
        load_reduction: load_reduction(cohort),
    })
}
