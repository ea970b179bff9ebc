//! Deterministic message-level simulation of the hybrid delivery protocol
//! with a double-entry ledger.
//!
//! Every run processes download requests in (tick, agent-id) order. A premium
//! requester is always served from the CP server. A standard requester first
//! queries every other standard agent; availability reflects ownership as of
//! the end of the previous tick, so two requests in the same tick cannot see
//! each other's downloads. If the designated sharer already owns the content,
//! the delivery is peer-to-peer: the requester pays the CP the standard
//! price, the CP pays the sharer the reward, and the sharer pays the energy
//! cost. Otherwise the CP serves the request and pays the network provider's
//! delivery fee, and the requester becomes the designated sharer if nobody
//! is yet.
//!
//! Money only moves between named parties (an explicit energy sink absorbs
//! transmission costs), so every ledger is zero-sum. The per-party nets
//! reproduce the closed-form benefit expressions exactly; [`oracle_check`]
//! asserts that equivalence for randomized cohorts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead, Write};

use num::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::benefits;
use crate::model::{Cohort, Money, MoneyRate, PriceSchedule};
use crate::numeric::{self, uint, Rat};

/// Service class of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Premium,
    Standard,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Premium => "premium",
            Role::Standard => "standard",
        })
    }
}

/// Anyone money can flow between.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Party {
    Cp,
    Np,
    /// Absorbs energy costs so the system stays closed.
    EnergySink,
    User(String),
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Cp => f.write_str("CP"),
            Party::Np => f.write_str("NP"),
            Party::EnergySink => f.write_str("energy_sink"),
            Party::User(id) => f.write_str(id),
        }
    }
}

/// Ids a user may not take; they name the built-in parties.
pub const RESERVED_IDS: [&str; 3] = ["CP", "NP", "energy_sink"];

/// One participant. At most one agent may start as the designated sharer,
/// and a premium agent never shares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserAgent {
    pub id: String,
    pub role: Role,
    pub owns_content: bool,
    pub designated_sharer: bool,
}

impl UserAgent {
    pub fn standard(id: impl Into<String>) -> Self {
        UserAgent {
            id: id.into(),
            role: Role::Standard,
            owns_content: false,
            designated_sharer: false,
        }
    }

    pub fn premium(id: impl Into<String>) -> Self {
        UserAgent {
            id: id.into(),
            role: Role::Premium,
            owns_content: false,
            designated_sharer: false,
        }
    }
}

/// A download request at an integer tick. Ticks may repeat; ties are
/// processed in agent-id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestEvent {
    pub time: u64,
    pub user: String,
}

impl RequestEvent {
    pub fn new(time: u64, user: impl Into<String>) -> Self {
        RequestEvent {
            time,
            user: user.into(),
        }
    }
}

/// Why money moved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryReason {
    ContentPricePremium,
    ContentPriceStandard,
    NpDeliveryFee,
    ShareReward,
    EnergyCost,
}

impl fmt::Display for EntryReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryReason::ContentPricePremium => "content_price_premium",
            EntryReason::ContentPriceStandard => "content_price_standard",
            EntryReason::NpDeliveryFee => "np_delivery_fee",
            EntryReason::ShareReward => "share_reward",
            EntryReason::EnergyCost => "energy_cost",
        })
    }
}

/// One money movement. Amounts are strictly positive; zero-rate payments
/// (e.g. a zero energy cost) produce no entry.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub time: u64,
    pub payer: Party,
    pub payee: Party,
    pub amount: Money,
    pub reason: EntryReason,
}

/// Protocol traffic, in emission order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolMessage {
    AvailabilityQuery { time: u64, from: String, to: String },
    NegativeResponse { time: u64, from: String, to: String },
    PositiveResponse { time: u64, from: String, to: String },
    CpRequest { time: u64, from: String },
    CpDelivery { time: u64, to: String },
    PeerDelivery { time: u64, from: String, to: String },
}

/// Everything a run consumed, kept so outcomes can be replayed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimInputs {
    pub schedule: PriceSchedule,
    pub file_size: u64,
    pub agents: Vec<UserAgent>,
    pub requests: Vec<RequestEvent>,
}

/// The complete result of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub ledger: Vec<LedgerEntry>,
    /// Net money per party (received minus paid); sums to zero.
    pub net: BTreeMap<Party, Money>,
    pub server_deliveries: u64,
    pub shares: u64,
    pub message_log: Vec<ProtocolMessage>,
    pub designated_sharer: Option<String>,
    pub inputs: SimInputs,
}

impl SimOutcome {
    /// Audience implied by the served requests: every request is one user.
    pub fn implied_cohort(&self) -> Option<Cohort> {
        let roles: BTreeMap<&str, Role> = self
            .inputs
            .agents
            .iter()
            .map(|a| (a.id.as_str(), a.role))
            .collect();
        let premium = self
            .inputs
            .requests
            .iter()
            .filter(|r| roles.get(r.user.as_str()) == Some(&Role::Premium))
            .count() as u64;
        Cohort::new(
            self.inputs.requests.len() as u64,
            premium,
            self.inputs.file_size,
        )
        .ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("request references unknown agent {0:?}")]
    UnknownAgent(String),
    #[error("agent {0:?} requests more than once")]
    DuplicateRequest(String),
    #[error("agent {0:?} declared more than once")]
    DuplicateAgent(String),
    #[error("more than one designated sharer declared")]
    MultipleSharers,
    #[error("premium agent {0:?} cannot be the designated sharer")]
    PremiumSharer(String),
    #[error("scenario file line {line}: {message}")]
    Parse { line: usize, message: String },
}

struct AgentState {
    role: Role,
    owns_content: bool,
}

/// Runs the protocol for one content of `file_size` bytes.
pub fn run(
    schedule: &PriceSchedule,
    file_size: u64,
    agents: &[UserAgent],
    requests: &[RequestEvent],
) -> Result<SimOutcome, SimError> {
    let mut states: BTreeMap<String, AgentState> = BTreeMap::new();
    let mut sharer: Option<String> = None;
    for agent in agents {
        if states.contains_key(&agent.id) {
            return Err(SimError::DuplicateAgent(agent.id.clone()));
        }
        if agent.designated_sharer {
            if agent.role == Role::Premium {
                return Err(SimError::PremiumSharer(agent.id.clone()));
            }
            if sharer.replace(agent.id.clone()).is_some() {
                return Err(SimError::MultipleSharers);
            }
        }
        states.insert(
            agent.id.clone(),
            AgentState {
                role: agent.role,
                owns_content: agent.owns_content,
            },
        );
    }

    let mut seen = BTreeSet::new();
    for request in requests {
        if !states.contains_key(&request.user) {
            return Err(SimError::UnknownAgent(request.user.clone()));
        }
        if !seen.insert(request.user.clone()) {
            return Err(SimError::DuplicateRequest(request.user.clone()));
        }
    }

    let mut ordered: Vec<&RequestEvent> = requests.iter().collect();
    ordered.sort_by(|a, b| a.time.cmp(&b.time).then_with(|| a.user.cmp(&b.user)));

    let f = uint(file_size);
    let pay = |ledger: &mut Vec<LedgerEntry>,
               time: u64,
               payer: Party,
               payee: Party,
               rate: &MoneyRate,
               reason: EntryReason| {
        let amount = &f * rate.rat();
        if amount.is_zero() {
            return;
        }
        ledger.push(LedgerEntry {
            time,
            payer,
            payee,
            amount: Money::new(amount),
            reason,
        });
    };

    let mut ledger = Vec::new();
    let mut messages = Vec::new();
    let mut server_deliveries = 0u64;
    let mut shares = 0u64;

    let mut index = 0;
    while index < ordered.len() {
        let tick = ordered[index].time;
        // Ownership as of the end of the previous tick; everything inside
        // this tick queries against this frozen view.
        let owned_before: BTreeSet<String> = states
            .iter()
            .filter(|(_, s)| s.owns_content)
            .map(|(id, _)| id.clone())
            .collect();
        while index < ordered.len() && ordered[index].time == tick {
            let requester = ordered[index].user.clone();
            index += 1;
            let role = states[&requester].role;
            match role {
                Role::Premium => {
                    messages.push(ProtocolMessage::CpRequest {
                        time: tick,
                        from: requester.clone(),
                    });
                    messages.push(ProtocolMessage::CpDelivery {
                        time: tick,
                        to: requester.clone(),
                    });
                    pay(
                        &mut ledger,
                        tick,
                        Party::User(requester.clone()),
                        Party::Cp,
                        &schedule.premium_price,
                        EntryReason::ContentPricePremium,
                    );
                    pay(
                        &mut ledger,
                        tick,
                        Party::Cp,
                        Party::Np,
                        &schedule.delivery_fee,
                        EntryReason::NpDeliveryFee,
                    );
                    server_deliveries += 1;
                }
                Role::Standard => {
                    let peers: Vec<String> = states
                        .iter()
                        .filter(|(id, s)| s.role == Role::Standard && *id != &requester)
                        .map(|(id, _)| id.clone())
                        .collect();
                    for peer in &peers {
                        messages.push(ProtocolMessage::AvailabilityQuery {
                            time: tick,
                            from: requester.clone(),
                            to: peer.clone(),
                        });
                    }
                    for peer in &peers {
                        let message = if owned_before.contains(peer) {
                            ProtocolMessage::PositiveResponse {
                                time: tick,
                                from: peer.clone(),
                                to: requester.clone(),
                            }
                        } else {
                            ProtocolMessage::NegativeResponse {
                                time: tick,
                                from: peer.clone(),
                                to: requester.clone(),
                            }
                        };
                        messages.push(message);
                    }
                    let sharer_can_serve = sharer
                        .as_ref()
                        .map(|id| owned_before.contains(id))
                        .unwrap_or(false);
                    if sharer_can_serve {
                        let source = sharer.clone().expect("checked above");
                        messages.push(ProtocolMessage::PeerDelivery {
                            time: tick,
                            from: source.clone(),
                            to: requester.clone(),
                        });
                        pay(
                            &mut ledger,
                            tick,
                            Party::User(requester.clone()),
                            Party::Cp,
                            &schedule.standard_price,
                            EntryReason::ContentPriceStandard,
                        );
                        pay(
                            &mut ledger,
                            tick,
                            Party::Cp,
                            Party::User(source.clone()),
                            &schedule.share_reward,
                            EntryReason::ShareReward,
                        );
                        pay(
                            &mut ledger,
                            tick,
                            Party::User(source),
                            Party::EnergySink,
                            &schedule.energy_cost,
                            EntryReason::EnergyCost,
                        );
                        shares += 1;
                    } else {
                        messages.push(ProtocolMessage::CpRequest {
                            time: tick,
                            from: requester.clone(),
                        });
                        messages.push(ProtocolMessage::CpDelivery {
                            time: tick,
                            to: requester.clone(),
                        });
                        pay(
                            &mut ledger,
                            tick,
                            Party::User(requester.clone()),
                            Party::Cp,
                            &schedule.standard_price,
                            EntryReason::ContentPriceStandard,
                        );
                        pay(
                            &mut ledger,
                            tick,
                            Party::Cp,
                            Party::Np,
                            &schedule.delivery_fee,
                            EntryReason::NpDeliveryFee,
                        );
                        server_deliveries += 1;
                        if sharer.is_none() {
                            sharer = Some(requester.clone());
                        }
                    }
                }
            }
            states
                .get_mut(&requester)
                .expect("validated above")
                .owns_content = true;
        }
    }

    let mut net: BTreeMap<Party, Money> = BTreeMap::new();
    net.insert(Party::Cp, Money::zero());
    net.insert(Party::Np, Money::zero());
    net.insert(Party::EnergySink, Money::zero());
    for agent in agents {
        net.insert(Party::User(agent.id.clone()), Money::zero());
    }
    for entry in &ledger {
        let paid = net.get_mut(&entry.payer).expect("all parties present");
        *paid = Money::new(paid.rat() - entry.amount.rat());
        let received = net.get_mut(&entry.payee).expect("all parties present");
        *received = Money::new(received.rat() + entry.amount.rat());
    }

    Ok(SimOutcome {
        ledger,
        net,
        server_deliveries,
        shares,
        message_log: messages,
        designated_sharer: sharer,
        inputs: SimInputs {
            schedule: schedule.clone(),
            file_size,
            agents: agents.to_vec(),
            requests: requests.to_vec(),
        },
    })
}

/// Re-runs an outcome's inputs; the result is identical by construction and
/// asserting so pins the determinism contract.
pub fn replay(outcome: &SimOutcome) -> Result<SimOutcome, SimError> {
    run(
        &outcome.inputs.schedule,
        outcome.inputs.file_size,
        &outcome.inputs.agents,
        &outcome.inputs.requests,
    )
}

/// One failed ledger-versus-formula equality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub check: String,
    pub expected: String,
    pub actual: String,
}

/// Every equality [`oracle_check`] found violated.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct MismatchReport {
    pub mismatches: Vec<Mismatch>,
}

impl fmt::Display for MismatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} ledger/formula mismatch(es):", self.mismatches.len())?;
        for m in &self.mismatches {
            writeln!(f, "  {}: expected {}, got {}", m.check, m.expected, m.actual)?;
        }
        Ok(())
    }
}

/// Summary of a passed oracle run.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub cp_net: Money,
    pub sharer_net: Option<Money>,
    pub load_reduction: Rat,
    pub server_deliveries: u64,
    pub shares: u64,
}

/// Compares a finished run against the closed-form benefit expressions for
/// the cohort it served. Assumes the run served every user and seeded the
/// content at most once, which holds for any schedule of distinct-tick
/// requests.
pub fn check_against_formulas(
    outcome: &SimOutcome,
    cohort: &Cohort,
) -> Result<OracleReport, MismatchReport> {
    fn check(mismatches: &mut Vec<Mismatch>, name: String, expected: &Rat, actual: &Rat) {
        if expected != actual {
            mismatches.push(Mismatch {
                check: name,
                expected: numeric::format_number(expected),
                actual: numeric::format_number(actual),
            });
        }
    }

    let schedule = &outcome.inputs.schedule;
    let mut mismatches = Vec::new();

    let zero_sum: Rat = outcome.net.values().map(|m| m.rat().clone()).sum();
    check(&mut mismatches, "sum of party nets".into(), &Rat::zero(), &zero_sum);

    let cp_net = outcome.net[&Party::Cp].clone();
    let expected_cp = benefits::ben_cp_raw(schedule, cohort);
    check(&mut mismatches, "CP net".into(), expected_cp.rat(), cp_net.rat());

    let roles: BTreeMap<&str, Role> = outcome
        .inputs
        .agents
        .iter()
        .map(|a| (a.id.as_str(), a.role))
        .collect();

    let f = uint(cohort.file_size());
    let sharer_net = outcome.designated_sharer.as_ref().map(|id| {
        let net = outcome.net[&Party::User(id.clone())].clone();
        let expected = benefits::ben_sharer_raw(schedule, cohort);
        check(
            &mut mismatches,
            format!("designated sharer {} net", id),
            expected.rat(),
            net.rat(),
        );
        net
    });
    if cohort.standard() > 0 && outcome.designated_sharer.is_none() {
        mismatches.push(Mismatch {
            check: "designated sharer exists".into(),
            expected: "one standard seed".into(),
            actual: "none".into(),
        });
    }

    let minus_standard = -(&f * schedule.standard_price.rat());
    let minus_premium = -(&f * schedule.premium_price.rat());
    for (party, net) in &outcome.net {
        let Party::User(id) = party else { continue };
        if outcome.designated_sharer.as_deref() == Some(id.as_str()) {
            continue;
        }
        match roles.get(id.as_str()) {
            Some(Role::Standard) => check(
                &mut mismatches,
                format!("standard user {} net", id),
                &minus_standard,
                net.rat(),
            ),
            Some(Role::Premium) => check(
                &mut mismatches,
                format!("premium user {} net", id),
                &minus_premium,
                net.rat(),
            ),
            None => {}
        }
    }

    let lr_sim = Rat::one() - Rat::new(outcome.server_deliveries.into(), cohort.users().into());
    let lr_formula = benefits::load_reduction(cohort);
    check(&mut mismatches, "load reduction".into(), &lr_formula, &lr_sim);

    if mismatches.is_empty() {
        Ok(OracleReport {
            cp_net,
            sharer_net,
            load_reduction: lr_formula,
            server_deliveries: outcome.server_deliveries,
            shares: outcome.shares,
        })
    } else {
        Err(MismatchReport { mismatches })
    }
}

/// Builds a randomized request ordering for the cohort (one request per
/// tick), runs the simulator, and asserts that every party's net equals its
/// closed-form benefit and that the load reduction matches.
pub fn oracle_check(
    schedule: &PriceSchedule,
    cohort: &Cohort,
    seed: u64,
) -> Result<OracleReport, MismatchReport> {
    let width = cohort.users().to_string().len();
    let mut agents = Vec::with_capacity(cohort.users() as usize);
    for i in 0..cohort.users() {
        let id = format!("u{:0width$}", i + 1, width = width);
        if i < cohort.premium() {
            agents.push(UserAgent::premium(id));
        } else {
            agents.push(UserAgent::standard(id));
        }
    }
    let mut order: Vec<usize> = (0..agents.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let requests: Vec<RequestEvent> = order
        .iter()
        .enumerate()
        .map(|(tick, &agent)| RequestEvent::new(tick as u64 + 1, agents[agent].id.clone()))
        .collect();
    let outcome = run(schedule, cohort.file_size(), &agents, &requests)
        .expect("generated scenario is well-formed");
    check_against_formulas(&outcome, cohort)
}

/// A parsed scenario file: price block plus the request timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub schedule: PriceSchedule,
    pub file_size: u64,
    pub agents: Vec<UserAgent>,
    pub requests: Vec<RequestEvent>,
}

impl ScenarioSpec {
    pub fn run(&self) -> Result<SimOutcome, SimError> {
        run(&self.schedule, self.file_size, &self.agents, &self.requests)
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> SimError {
    SimError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses the line-oriented scenario format:
///
/// ```text
/// f=1
/// p_n=1
/// p_b=4
/// p_std=2
/// p_u=4      # optional, defaults to 0
/// s=0.1      # optional, defaults to 0
/// tick,user_id,role
/// 1,u3,standard
/// 2,u2,standard
/// 2,u4,premium
/// ```
///
/// Blank lines and `#` comments are ignored; the column header line is
/// optional. Each user's role comes from its first request line.
pub fn parse_scenario<R: BufRead>(reader: R) -> Result<ScenarioSpec, SimError> {
    let mut file_size: Option<u64> = None;
    let mut prices: BTreeMap<String, MoneyRate> = BTreeMap::new();
    let mut agents: Vec<UserAgent> = Vec::new();
    let mut requests: Vec<RequestEvent> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_error(lineno, format!("read failed: {e}")))?;
        let line = match line.split_once('#') {
            Some((before, _)) => before.trim(),
            None => line.trim(),
        };
        if line.is_empty() {
            continue;
        }
        if line == "tick,user_id,role" {
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            let key = key.trim();
            let value = value.trim();
            match key {
                "f" => {
                    let f: u64 = value
                        .parse()
                        .map_err(|_| parse_error(lineno, "f must be a positive integer"))?;
                    if f == 0 {
                        return Err(parse_error(lineno, "f must be at least 1"));
                    }
                    file_size = Some(f);
                }
                "p_n" | "p_b" | "p_std" | "p_u" | "s" => {
                    let rate = MoneyRate::parse(value)
                        .map_err(|e| parse_error(lineno, format!("bad rate for {key}: {e}")))?;
                    prices.insert(key.to_string(), rate);
                }
                other => {
                    return Err(parse_error(lineno, format!("unknown key {other:?}")));
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_error(lineno, "expected `tick,user_id,role`"));
        }
        let tick: u64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| parse_error(lineno, "tick must be a nonnegative integer"))?;
        let user = fields[1].trim();
        if user.is_empty() {
            return Err(parse_error(lineno, "user id is empty"));
        }
        if RESERVED_IDS.contains(&user) {
            return Err(parse_error(lineno, format!("user id {user:?} is reserved")));
        }
        let role = match fields[2].trim() {
            "premium" => Role::Premium,
            "standard" => Role::Standard,
            other => {
                return Err(parse_error(
                    lineno,
                    format!("role must be `premium` or `standard`, got {other:?}"),
                ));
            }
        };
        if !agents.iter().any(|a| a.id == user) {
            agents.push(match role {
                Role::Premium => UserAgent::premium(user),
                Role::Standard => UserAgent::standard(user),
            });
        }
        requests.push(RequestEvent::new(tick, user));
    }

    let file_size = file_size.ok_or_else(|| parse_error(0, "missing `f=` header"))?;
    let mut take = |key: &str| -> Result<MoneyRate, SimError> {
        prices
            .remove(key)
            .ok_or_else(|| parse_error(0, format!("missing `{key}=` in price block")))
    };
    let schedule = PriceSchedule::new(
        take("p_n")?,
        take("p_b")?,
        take("p_std")?,
        prices.remove("p_u").unwrap_or_else(MoneyRate::zero),
        prices.remove("s").unwrap_or_else(MoneyRate::zero),
    );
    Ok(ScenarioSpec {
        schedule,
        file_size,
        agents,
        requests,
    })
}

/// Writes the ledger as `time,payer,payee,amount,reason` CSV.
pub fn write_ledger_csv<W: Write>(writer: &mut W, ledger: &[LedgerEntry]) -> io::Result<()> {
    writeln!(writer, "time,payer,payee,amount,reason")?;
    for entry in ledger {
        writeln!(
            writer,
            "{},{},{},{},{}",
            entry.time, entry.payer, entry.payee, entry.amount, entry.reason
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::numeric::{int, ratio};

    fn rate(s: &str) -> MoneyRate {
        MoneyRate::parse(s).unwrap()
    }

    fn schedule(p_n: &str, p_b: &str, p_std: &str, p_u: &str, s: &str) -> PriceSchedule {
        PriceSchedule::new(rate(p_n), rate(p_b), rate(p_std), rate(p_u), rate(s))
    }

    /// Four users, one premium: u3 downloads first, then u2 (peer-served)
    /// and u4 (premium) in the same tick.
    fn four_user_timeline() -> (PriceSchedule, Vec<UserAgent>, Vec<RequestEvent>) {
        let s = schedule("1", "4", "2", "4", "0.1");
        let agents = vec![
            UserAgent::standard("u1"),
            UserAgent::standard("u2"),
            UserAgent::standard("u3"),
            UserAgent::premium("u4"),
        ];
        let requests = vec![
            RequestEvent::new(1, "u3"),
            RequestEvent::new(2, "u2"),
            RequestEvent::new(2, "u4"),
        ];
        (s, agents, requests)
    }

    #[test]
    fn three_download_checkpoint_matches_the_worked_example() {
        let (s, agents, requests) = four_user_timeline();
        let outcome = run(&s, 1, &agents, &requests).unwrap();
        // CP net = f*(p_b + 2*p_std - 2*p_n - p_u) = 4 + 4 - 2 - 4 = 2
        let expected = s.premium_price.rat() + int(2) * s.standard_price.rat()
            - int(2) * s.delivery_fee.rat()
            - s.share_reward.rat();
        assert_eq!(outcome.net[&Party::Cp].rat(), &expected);
        assert_eq!(outcome.server_deliveries, 2);
        assert_eq!(outcome.shares, 1);
        assert_eq!(outcome.designated_sharer.as_deref(), Some("u3"));
        // u2 was served by u3, not by the CP.
        assert!(outcome.message_log.contains(&ProtocolMessage::PeerDelivery {
            time: 2,
            from: "u3".into(),
            to: "u2".into(),
        }));
    }

    #[test]
    fn continued_run_settles_cp_at_zero() {
        let (s, agents, mut requests) = four_user_timeline();
        requests.push(RequestEvent::new(3, "u1"));
        let outcome = run(&s, 1, &agents, &requests).unwrap();
        assert_eq!(outcome.net[&Party::Cp].rat(), &Rat::zero());
        // Sharer: 2*p_u - p_std - 2*s = 8 - 2 - 0.2 = 5.8
        assert_eq!(outcome.net[&Party::User("u3".into())].rat(), &ratio(29, 5));
        let cohort = outcome.implied_cohort().unwrap();
        assert_eq!((cohort.users(), cohort.premium()), (4, 1));
        check_against_formulas(&outcome, &cohort).unwrap();
    }

    #[test]
    fn single_standard_user_worst_case() {
        let s = schedule("1", "4", "2", "4", "0.1");
        let agents = vec![UserAgent::standard("u1")];
        let requests = vec![RequestEvent::new(1, "u1")];
        let outcome = run(&s, 1, &agents, &requests).unwrap();
        // f*(p_std - p_n) = 1
        assert_eq!(outcome.net[&Party::Cp].rat(), &int(1));
        assert_eq!(outcome.server_deliveries, 1);
        assert_eq!(outcome.shares, 0);
    }

    #[test]
    fn same_tick_requests_see_the_previous_tick_only() {
        // Both standard users request at tick 1 with no prior owner: the
        // frozen availability forces two server deliveries, and only the
        // first (by id) becomes the designated sharer.
        let s = schedule("1", "4", "2", "4", "0.1");
        let agents = vec![UserAgent::standard("a"), UserAgent::standard("b")];
        let requests = vec![RequestEvent::new(1, "b"), RequestEvent::new(1, "a")];
        let outcome = run(&s, 1, &agents, &requests).unwrap();
        assert_eq!(outcome.server_deliveries, 2);
        assert_eq!(outcome.shares, 0);
        assert_eq!(outcome.designated_sharer.as_deref(), Some("a"));
    }

    #[test]
    fn input_order_of_same_tick_requests_is_irrelevant() {
        let (s, agents, requests) = four_user_timeline();
        let mut reversed = requests.clone();
        reversed.reverse();
        let a = run(&s, 1, &agents, &requests).unwrap();
        let b = run(&s, 1, &agents, &reversed).unwrap();
        assert_eq!(a.ledger, b.ledger);
        assert_eq!(a.message_log, b.message_log);
        assert_eq!(a.net, b.net);
    }

    #[test]
    fn replay_is_bitwise_identical() {
        let (s, agents, requests) = four_user_timeline();
        let outcome = run(&s, 1, &agents, &requests).unwrap();
        let again = replay(&outcome).unwrap();
        assert_eq!(outcome, again);
    }

    #[test]
    fn unknown_and_duplicate_requests_are_rejected() {
        let s = schedule("1", "4", "2", "0", "0");
        let agents = vec![UserAgent::standard("u1")];
        assert_eq!(
            run(&s, 1, &agents, &[RequestEvent::new(1, "ghost")]),
            Err(SimError::UnknownAgent("ghost".into()))
        );
        assert_eq!(
            run(
                &s,
                1,
                &agents,
                &[RequestEvent::new(1, "u1"), RequestEvent::new(2, "u1")]
            ),
            Err(SimError::DuplicateRequest("u1".into()))
        );
    }

    #[test]
    fn sharer_invariants_are_validated() {
        let s = schedule("1", "4", "2", "0", "0");
        let mut premium_sharer = UserAgent::premium("p1");
        premium_sharer.designated_sharer = true;
        assert_eq!(
            run(&s, 1, &[premium_sharer], &[]),
            Err(SimError::PremiumSharer("p1".into()))
        );
        let mut a = UserAgent::standard("a");
        a.designated_sharer = true;
        let mut b = UserAgent::standard("b");
        b.designated_sharer = true;
        assert_eq!(run(&s, 1, &[a, b], &[]), Err(SimError::MultipleSharers));
    }

    #[test]
    fn oracle_examples() {
        let s = schedule("1", "4", "2", "4", "0.1");
        let report = oracle_check(&s, &Cohort::new(10, 5, 1).unwrap(), 1).unwrap();
        assert_eq!(report.cp_net.rat(), &int(8));

        let report = oracle_check(&s, &Cohort::new(10, 10, 1).unwrap(), 7).unwrap();
        assert_eq!(report.cp_net.rat(), &int(30));
        assert_eq!(report.load_reduction, Rat::zero());

        let report = oracle_check(&s, &Cohort::new(2, 1, 1).unwrap(), 3).unwrap();
        assert_eq!(report.shares, 0);
        assert_eq!(report.sharer_net.unwrap().rat(), &int(-2)); // pays p_std, shares nothing
    }

    #[test]
    fn scenario_file_round_trip() {
        let text = "\
# demo
f=1
p_n=1
p_b=4
p_std=2
p_u=4
s=0.1

tick,user_id,role
1,u3,standard
2,u2,standard
2,u4,premium
";
        let spec = parse_scenario(text.as_bytes()).unwrap();
        assert_eq!(spec.file_size, 1);
        assert_eq!(spec.agents.len(), 3);
        assert_eq!(spec.requests.len(), 3);
        let outcome = spec.run().unwrap();
        assert_eq!(outcome.server_deliveries, 2);

        let mut csv = Vec::new();
        write_ledger_csv(&mut csv, &outcome.ledger).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.starts_with("time,payer,payee,amount,reason\n"));
        assert!(csv.contains("2,CP,u3,4,share_reward"));
        assert!(csv.contains("2,u3,energy_sink,0.1,energy_cost"));
    }

    #[test]
    fn scenario_parser_reports_line_numbers() {
        let missing_field = "f=1\np_n=1\np_b=4\np_std=2\n1,u1\n";
        match parse_scenario(missing_field.as_bytes()) {
            Err(SimError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected parse error, got {:?}", other),
        }
        let bad_role = "f=1\np_n=1\np_b=4\np_std=2\n1,u1,gold\n";
        assert!(matches!(
            parse_scenario(bad_role.as_bytes()),
            Err(SimError::Parse { line: 5, .. })
        ));
        let missing_price = "f=1\np_n=1\np_std=2\n1,u1,standard\n";
        assert!(parse_scenario(missing_price.as_bytes()).is_err());
    }

    prop_compose! {
        fn random_case()(
            x in 1u64..30,
            y_frac in 0.0f64..=1.0,
            pn_num in 1i64..10,
            std_gap in 1i64..10,
            prem_gap in 1i64..10,
            reward_num in 0i64..12,
            energy_num in 0i64..6,
            f in 1u64..4,
            seed in 0u64..u64::MAX,
        ) -> (PriceSchedule, Cohort, u64) {
            let p_n = ratio(pn_num, 3);
            let p_std = &p_n + ratio(std_gap, 3);
            let p_b = &p_std + ratio(prem_gap, 3);
            let schedule = PriceSchedule::new(
                MoneyRate::new(p_n).unwrap(),
                MoneyRate::new(p_b).unwrap(),
                MoneyRate::new(p_std).unwrap(),
                MoneyRate::new(ratio(reward_num, 5)).unwrap(),
                MoneyRate::new(ratio(energy_num, 7)).unwrap(),
            );
            let y = (((x as f64) * y_frac) as u64).min(x);
            (schedule, Cohort::new(x, y, f).unwrap(), seed)
        }
    }

    proptest! {
        /// Ledger and formulas agree for arbitrary cohorts and request
        /// orderings; nets are zero-sum; delivery counts match.
        #[test]
        fn randomized_runs_match_the_formulas((schedule, cohort, seed) in random_case()) {
            let report = oracle_check(&schedule, &cohort, seed);
            prop_assert!(report.is_ok(), "{}", report.unwrap_err());
        }

        /// Peer deliveries only ever originate at the designated sharer, and
        /// deliveries partition the audience.
        #[test]
        fn single_sharer_and_delivery_partition((schedule, cohort, seed) in random_case()) {
            let width = cohort.users().to_string().len();
            let mut agents = Vec::new();
            for i in 0..cohort.users() {
                let id = format!("u{:0width$}", i + 1, width = width);
                if i < cohort.premium() {
                    agents.push(UserAgent::premium(id));
                } else {
                    agents.push(UserAgent::standard(id));
                }
            }
            let mut order: Vec<usize> = (0..agents.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            order.shuffle(&mut rng);
            let requests: Vec<RequestEvent> = order
                .iter()
                .enumerate()
                .map(|(t, &i)| RequestEvent::new(t as u64 + 1, agents[i].id.clone()))
                .collect();
            let outcome = run(&schedule, cohort.file_size(), &agents, &requests).unwrap();
            for message in &outcome.message_log {
                if let ProtocolMessage::PeerDelivery { from, .. } = message {
                    prop_assert_eq!(Some(from.as_str()), outcome.designated_sharer.as_deref());
                }
            }
            prop_assert_eq!(outcome.server_deliveries + outcome.shares, cohort.users());
            let expected_deliveries = if cohort.premium() == cohort.users() {
                cohort.users()
            } else {
                cohort.premium() + 1
            };
            prop_assert_eq!(outcome.server_deliveries, expected_deliveries);
        }
    }
}
