//! GHZ resource sharing with a sacrificial security check.
//!
//! A designated preparer creates `K = L + S` registers and sends every
//! other holder its particle. `S` times, a random non-preparer names an
//! untested register `j'` and a bit `h`; every holder applies `H^h` to its
//! particle, the preparer measures and announces first, then everyone else.
//! With `h = 0` all outcomes must agree, with `h = 1` their XOR must be 0.
//! Any violation or missing announcement aborts the run.

use std::collections::BTreeSet;

use rand::Rng;

use super::{PreparerBehavior, ProtocolConfig, ProtocolError};
use crate::ghz::{RegisterId, SimRng};
use crate::netsim::{
    AbortReason, ChannelTap, Ctx, Endpoint, NetError, Network, PartyId, PartyMachine, RunStatus,
    Transcript,
};
use crate::seed::{stream_rng, Role, StageStream};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharingPlan {
    /// Qubits per register: `n`, or `n + 1` when the third party takes part.
    pub arity: usize,
    /// `L`: registers kept after the check.
    pub retained: usize,
    /// `S`: registers sacrificed to the check.
    pub security: usize,
    pub preparer: usize,
    pub behavior: PreparerBehavior,
    pub refusing: BTreeSet<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SharingOutcome {
    /// Surviving registers, in preparation order.
    Shared(Vec<RegisterId>),
    Aborted(AbortReason),
}

impl SharingOutcome {
    pub fn is_aborted(&self) -> bool {
        matches!(self, SharingOutcome::Aborted(_))
    }
}

#[derive(Clone, Debug)]
pub struct SharingRun {
    pub outcome: SharingOutcome,
    pub preparer: usize,
    pub transcript: Transcript,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CheckStep {
    Announce(usize),
    Rotate,
    PreparerReveal,
    OthersReveal,
    Verify,
}

struct Holder {
    id: PartyId,
    is_preparer: bool,
    refuses: bool,
    announcers: Vec<PartyId>,
    untested: Vec<RegisterId>,
    holders: Vec<PartyId>,
    rng: SimRng,
    current: Option<(RegisterId, u8)>,
}

impl Holder {
    fn current(&self) -> Result<(RegisterId, u8), NetError> {
        self.current.ok_or(NetError::PartyFailed {
            party: self.id,
            round: 0,
            message: "no security announcement to act on".into(),
        })
    }

    fn reveal(&mut self, ctx: &mut Ctx<'_>) -> Result<(), NetError> {
        let (reg, _) = self.current()?;
        let bit = ctx.measure(reg)?;
        if !self.refuses {
            ctx.broadcast(reg, bit)?;
        }
        Ok(())
    }
}

impl PartyMachine<CheckStep> for Holder {
    fn id(&self) -> PartyId {
        self.id
    }

    fn step(&mut self, step: &CheckStep, ctx: &mut Ctx<'_>) -> Result<(), NetError> {
        match *step {
            CheckStep::Announce(t) => {
                if self.announcers[t] == self.id {
                    let reg = self.untested[self.rng.random_range(0..self.untested.len())];
                    let h = self.rng.random_range(0..2u8);
                    ctx.announce_security(reg, h);
                }
            }
            CheckStep::Rotate => {
                let (_, reg, h) = ctx.last_security_announce().ok_or(NetError::PartyFailed {
                    party: self.id,
                    round: ctx.round(),
                    message: "security announcement missing".into(),
                })?;
                self.untested.retain(|r| *r != reg);
                self.current = Some((reg, h));
                if h == 1 {
                    ctx.apply_hadamard(reg)?;
                }
            }
            CheckStep::PreparerReveal if self.is_preparer => self.reveal(ctx)?,
            CheckStep::OthersReveal if !self.is_preparer => self.reveal(ctx)?,
            CheckStep::PreparerReveal | CheckStep::OthersReveal => {}
            CheckStep::Verify => {
                let (reg, h) = self.current()?;
                let bits = ctx.visible_bits(reg);
                if let Some(&missing) = self
                    .holders
                    .iter()
                    .find(|p| !bits.iter().any(|(s, _)| s == *p))
                {
                    ctx.abort(AbortReason::MissingAnnouncement {
                        register: reg,
                        party: missing,
                    });
                    return Ok(());
                }
                let consistent = if h == 0 {
                    bits.iter().all(|(_, b)| *b == bits[0].1)
                } else {
                    bits.iter().fold(0, |acc, (_, b)| acc ^ b) == 0
                };
                if !consistent {
                    ctx.abort(AbortReason::InconsistentOutcomes { register: reg, h });
                }
            }
        }
        Ok(())
    }
}

/// Runs resource sharing on an existing network. `stage` keeps the random
/// streams of separate sharing rounds in one pipeline apart.
pub fn share_on(
    net: &mut Network,
    plan: &SharingPlan,
    seed: u64,
    stage: StageStream,
    tap: Option<&mut dyn ChannelTap>,
) -> Result<SharingOutcome, ProtocolError> {
    let n = net.agents();
    if plan.retained == 0 {
        return Err(ProtocolError::Config(format!(
            "K = L + S = {} leaves no shared state after {} checks",
            plan.security, plan.security
        )));
    }
    if n < 2 {
        return Err(ProtocolError::Config(
            "resource sharing needs at least 2 agents".into(),
        ));
    }
    let total = plan.retained + plan.security;
    let registers = (0..total)
        .map(|_| match plan.behavior {
            PreparerBehavior::Honest => net.create_register(plan.arity),
            PreparerBehavior::ProductState => net.create_product_register(plan.arity, 0),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let assignment = net.canonical_assignment(&registers)?;
    let preparer = PartyId::Agent(plan.preparer);
    net.deal_particles(&registers, &assignment, Endpoint::Party(preparer), tap)?;

    let mut public = stream_rng(seed, stage, Role::Public);
    let others: Vec<PartyId> = (1..=n)
        .filter(|i| *i != plan.preparer)
        .map(PartyId::Agent)
        .collect();
    let announcers: Vec<PartyId> = (0..plan.security)
        .map(|_| others[public.random_range(0..others.len())])
        .collect();

    let mut holders: Vec<PartyId> = (1..=n).map(PartyId::Agent).collect();
    if plan.arity > n {
        holders.push(PartyId::ThirdParty);
    }
    let mut machines: Vec<Holder> = holders
        .iter()
        .map(|&id| Holder {
            id,
            is_preparer: id == preparer,
            refuses: id.agent_index().is_some_and(|i| plan.refusing.contains(&i)),
            announcers: announcers.clone(),
            untested: registers.clone(),
            holders: holders.clone(),
            rng: stream_rng(seed, stage, Role::Party(id)),
            current: None,
        })
        .collect();

    let mut schedule = Vec::with_capacity(5 * plan.security);
    for t in 0..plan.security {
        schedule.extend([
            CheckStep::Announce(t),
            CheckStep::Rotate,
            CheckStep::PreparerReveal,
            CheckStep::OthersReveal,
            CheckStep::Verify,
        ]);
    }
    let mut refs: Vec<&mut dyn PartyMachine<CheckStep>> = machines
        .iter_mut()
        .map(|m| m as &mut dyn PartyMachine<CheckStep>)
        .collect();
    match net.run_rounds(&mut refs, &schedule)? {
        RunStatus::Aborted(reason) => Ok(SharingOutcome::Aborted(reason)),
        RunStatus::Completed => Ok(SharingOutcome::Shared(machines[0].untested.clone())),
    }
}

pub(crate) fn resolve_preparer(config: &ProtocolConfig, stage: StageStream) -> usize {
    config.preparer.unwrap_or_else(|| {
        let mut public = stream_rng(config.seed, stage, Role::Public);
        // burn one draw so the preparer choice is independent of announcer picks
        public.set_word_pos(1 << 20);
        public.random_range(1..=config.n)
    })
}

/// Standalone resource sharing among the `n` agents (registers of arity `n`).
pub fn run_resource_sharing(
    config: &ProtocolConfig,
    tap: Option<&mut dyn ChannelTap>,
) -> Result<SharingRun, ProtocolError> {
    config.check_common()?;
    let preparer = resolve_preparer(config, StageStream::Sharing);
    let mut net = Network::new(
        config.n,
        false,
        config.backend,
        stream_rng(config.seed, StageStream::Network, Role::Nature),
    );
    let plan = SharingPlan {
        arity: config.n,
        retained: config.l,
        security: config.s,
        preparer,
        behavior: config.preparer_behavior,
        refusing: config.refusing_parties.clone(),
    };
    let outcome = share_on(&mut net, &plan, config.seed, StageStream::Sharing, tap)?;
    Ok(SharingRun {
        outcome,
        preparer,
        transcript: net.finish(),
    })
}
