//! Resource sharing, receiver-anonymous notification and comparison chained
//! on one network.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::compare::{compare_on, slots_per_bit, BitLayout, ComparisonOutcome, Scheme, Verdict};
use super::qan::modified_qan_on;
use super::sharing::{resolve_preparer, share_on, SharingOutcome, SharingPlan};
use super::{ProtocolConfig, ProtocolError, QanOutcome};
use crate::netsim::{AbortReason, ChannelTap, Network, PartyId, Transcript};
use crate::seed::{stream_rng, Role, StageStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    ResourceSharing,
    Notification,
    Comparison,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PipelineResult {
    Completed {
        verdict: Verdict,
        notification: QanOutcome,
        comparison: ComparisonOutcome,
    },
    Aborted {
        stage: Stage,
        reason: AbortReason,
    },
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub result: PipelineResult,
    pub scheme: Scheme,
    pub preparer: usize,
    pub transcript: Transcript,
}

/// Runs the full pipeline with no eavesdropper.
pub fn run_full_pipeline(config: &ProtocolConfig) -> Result<PipelineRun, ProtocolError> {
    run_full_pipeline_with(config, None)
}

/// Runs the full pipeline; `tap` sees every particle of both sharing rounds.
///
/// The third party notifies `tp_targets`, or every secret holder when that
/// set is empty. Two targets select the two-party scheme, more select the
/// multi-party one; resources are sized accordingly before notification.
pub fn run_full_pipeline_with(
    config: &ProtocolConfig,
    mut tap: Option<&mut dyn ChannelTap>,
) -> Result<PipelineRun, ProtocolError> {
    config.check_common()?;
    let (m, secrets) = config.parsed_secrets()?;
    if m == 0 {
        return Err(ProtocolError::Config(
            "the pipeline needs secrets to compare".into(),
        ));
    }
    let targets: Vec<usize> = if config.tp_targets.is_empty() {
        secrets.keys().filter_map(|p| p.agent_index()).collect()
    } else {
        config.tp_targets.iter().copied().collect()
    };
    if targets.len() < 2 {
        return Err(ProtocolError::TooFewCompetitors(targets.len()));
    }
    let scheme = if targets.len() == 2 {
        Scheme::TwoParty
    } else {
        Scheme::Multi
    };
    let n = config.n;
    let preparer = resolve_preparer(config, StageStream::Sharing);
    let mut net = Network::new(
        n,
        true,
        config.backend,
        stream_rng(config.seed, StageStream::Network, Role::Nature),
    );

    let mut pools = Vec::with_capacity(2);
    for (arity, retained, stage) in [
        (n, m, StageStream::Sharing),
        (
            n + 1,
            m * slots_per_bit(scheme, n),
            StageStream::SharingSecond,
        ),
    ] {
        let plan = SharingPlan {
            arity,
            retained,
            security: config.s,
            preparer,
            behavior: config.preparer_behavior,
            refusing: config.refusing_parties.clone(),
        };
        match share_on(
            &mut net,
            &plan,
            config.seed,
            stage,
            tap.as_mut().map(|t| &mut **t as &mut dyn ChannelTap),
        )? {
            SharingOutcome::Shared(regs) => pools.push(regs),
            SharingOutcome::Aborted(reason) => {
                if let Some(t) = tap {
                    t.after_run(&mut net)?;
                }
                return Ok(PipelineRun {
                    result: PipelineResult::Aborted {
                        stage: Stage::ResourceSharing,
                        reason,
                    },
                    scheme,
                    preparer,
                    transcript: net.finish(),
                });
            }
        }
    }

    let notification = modified_qan_on(&mut net, &targets, config.p_z, config.k, config.seed)?;
    let competitors = notification.notified_set();
    if competitors.len() < 2 {
        return Err(ProtocolError::TooFewCompetitors(competitors.len()));
    }
    let competing: BTreeMap<PartyId, Vec<u8>> = competitors
        .iter()
        .map(|&i| {
            secrets
                .get(&PartyId::Agent(i))
                .map(|s| (PartyId::Agent(i), s.clone()))
                .ok_or_else(|| ProtocolError::Config(format!("notified agent {i} has no secret")))
        })
        .collect::<Result<_, _>>()?;

    let layouts = BitLayout::from_pools(scheme, n, &pools[0], &pools[1])?;
    let comparison = compare_on(&mut net, &competing, layouts, scheme)?;
    if let Some(t) = tap {
        t.after_run(&mut net)?;
    }
    Ok(PipelineRun {
        result: PipelineResult::Completed {
            verdict: comparison.verdict.clone(),
            notification,
            comparison,
        },
        scheme,
        preparer,
        transcript: net.finish(),
    })
}
