//! Attack models and the statistics reported for them.
//!
//! Outside attackers tamper with particles during resource sharing and are
//! scored on detection and on what they learn. Inside observers (a
//! coalition of agents, or the third party) play guessing games whose
//! strategy is the exact Bayesian posterior over their legitimate view.

mod games;
mod posterior;
mod tamper;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

pub use games::{
    coalition_trial, tp_trace_posterior, tp_trace_trial, GameTrial, Objective, Reveal,
    MAX_GAME_REPETITIONS,
};
pub use posterior::{
    map_guess, posterior, uniform_deviation, Evidence, Hypothesis, LikelihoodOracle,
};
pub use tamper::{
    tamper_trial, EntangleResend, InterceptResend, TamperKind, TamperScope, TamperTrial,
};

use crate::ghz::{Backend, EngineError};
use crate::protocols::{ProtocolConfig, ProtocolError};
use crate::seed::derive_run_seed;
use crate::stats::{wilson_interval, z_score};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("attack needs the {required} backend, config selects {got}")]
    BackendMismatch { required: Backend, got: Backend },
    #[error("ill-posed game: {0}")]
    IllPosed(String),
    #[error("invalid attack configuration: {0}")]
    Config(String),
    #[error("inconsistent evidence: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

fn full_fraction() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "attack", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackSpec {
    InterceptResend {
        /// Probability that each qubit in transit is targeted.
        #[serde(default = "full_fraction")]
        fraction: f64,
        #[serde(default)]
        scope: TamperScope,
    },
    EntangleResend {
        #[serde(default = "full_fraction")]
        fraction: f64,
        #[serde(default)]
        scope: TamperScope,
    },
    CoalitionGuess {
        members: BTreeSet<usize>,
        objective: Objective,
        #[serde(default)]
        reveal: Reveal,
    },
    TpTrace {
        #[serde(default)]
        reveal_k: bool,
    },
}

impl AttackSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AttackSpec::InterceptResend { .. } => "intercept_resend",
            AttackSpec::EntangleResend { .. } => "entangle_resend",
            AttackSpec::CoalitionGuess { .. } => "coalition_guess",
            AttackSpec::TpTrace { .. } => "tp_trace",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub attack: String,
    pub params: serde_json::Value,
    pub trials: u64,
    pub successes: u64,
    pub empirical_rate: f64,
    pub chance_level: f64,
    /// `None` when the chance level has zero variance and the rate differs.
    pub z_score: Option<f64>,
    /// Wilson interval of the success rate at 3σ.
    pub ci_low: f64,
    pub ci_high: f64,
    /// Fraction of runs aborted by the security check (tampering only).
    pub detection_rate: Option<f64>,
    /// Largest distance of any exact posterior from uniform (games only).
    pub max_posterior_deviation: Option<f64>,
}

impl AttackReport {
    pub const CSV_HEADER: [&'static str; 9] = [
        "attack",
        "params",
        "trials",
        "successes",
        "rate",
        "chance",
        "z",
        "detection_rate",
        "max_posterior_deviation",
    ];

    fn build(
        attack: &AttackSpec,
        params: serde_json::Value,
        chance: f64,
        successes: u64,
        trials: u64,
    ) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials, 3.0);
        AttackReport {
            attack: attack.name().to_string(),
            params,
            trials,
            successes,
            empirical_rate: successes as f64 / trials as f64,
            chance_level: chance,
            z_score: z_score(successes, trials, chance),
            ci_low,
            ci_high,
            detection_rate: None,
            max_posterior_deviation: None,
        }
    }

    /// Fields in [`CSV_HEADER`](Self::CSV_HEADER) order.
    pub fn csv_record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.attack.clone(),
            self.params.to_string(),
            self.trials.to_string(),
            self.successes.to_string(),
            self.empirical_rate.to_string(),
            self.chance_level.to_string(),
            opt(self.z_score),
            opt(self.detection_rate),
            opt(self.max_posterior_deviation),
        ]
    }
}

fn params(spec: &AttackSpec, config: &ProtocolConfig) -> serde_json::Value {
    json!({
        "spec": spec,
        "n": config.n,
        "K": config.k,
        "L": config.l,
        "S": config.s,
        "P_Z": config.p_z,
        "backend": config.backend,
    })
}

/// Runs `trials` independent trials of `spec`; trial `i` uses seed
/// `derive_run_seed(master_seed, i)`. Results do not depend on the number
/// of worker threads.
pub fn run_attack(
    spec: &AttackSpec,
    config: &ProtocolConfig,
    trials: u64,
    master_seed: u64,
) -> Result<AttackReport, AdversaryError> {
    if trials == 0 {
        return Err(AdversaryError::Config("trials must be at least 1".into()));
    }
    let seeds = (0..trials)
        .into_par_iter()
        .map(|i| derive_run_seed(master_seed, i));
    match spec {
        AttackSpec::InterceptResend { fraction, scope }
        | AttackSpec::EntangleResend { fraction, scope } => {
            let kind = if matches!(spec, AttackSpec::InterceptResend { .. }) {
                TamperKind::InterceptResend
            } else {
                TamperKind::EntangleResend
            };
            let runs: Vec<TamperTrial> = seeds
                .map(|s| tamper_trial(kind, *scope, config, *fraction, s))
                .collect::<Result<_, _>>()?;
            let successes = runs.iter().filter(|t| t.guessed).count() as u64;
            let detected = runs.iter().filter(|t| t.detected).count();
            let mut report =
                AttackReport::build(spec, params(spec, config), 0.5, successes, trials);
            report.detection_rate = Some(detected as f64 / trials as f64);
            Ok(report)
        }
        AttackSpec::CoalitionGuess {
            members,
            objective,
            reveal,
        } => {
            let runs: Vec<GameTrial> = seeds
                .map(|s| coalition_trial(config, members, *objective, *reveal, s))
                .collect::<Result<_, _>>()?;
            Ok(game_report(spec, config, &runs))
        }
        AttackSpec::TpTrace { reveal_k } => {
            let runs: Vec<GameTrial> = seeds
                .map(|s| tp_trace_trial(config, *reveal_k, s))
                .collect::<Result<_, _>>()?;
            Ok(game_report(spec, config, &runs))
        }
    }
}

fn game_report(spec: &AttackSpec, config: &ProtocolConfig, runs: &[GameTrial]) -> AttackReport {
    let successes = runs.iter().filter(|t| t.success).count() as u64;
    let chance = 1.0 / runs[0].candidates as f64;
    let mut report = AttackReport::build(
        spec,
        params(spec, config),
        chance,
        successes,
        runs.len() as u64,
    );
    report.max_posterior_deviation = Some(runs.iter().map(|t| t.deviation).fold(0.0, f64::max));
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_json_round_trip() {
        let json =
            r#"{"attack": "coalition_guess", "members": [1, 3], "objective": "identify_notified"}"#;
        let spec: AttackSpec = serde_json::from_str(json).unwrap();
        assert_eq!(
            spec,
            AttackSpec::CoalitionGuess {
                members: [1, 3].into(),
                objective: Objective::IdentifyNotified,
                reveal: Reveal::default(),
            }
        );
        let spec: AttackSpec = serde_json::from_str(r#"{"attack": "intercept_resend"}"#).unwrap();
        assert_eq!(
            spec,
            AttackSpec::InterceptResend {
                fraction: 1.0,
                scope: TamperScope::Sharing
            }
        );
        assert!(
            serde_json::from_str::<AttackSpec>(r#"{"attack": "tp_trace", "bogus": 1}"#).is_err()
        );
    }

    #[test]
    fn single_trial_report_is_well_formed() {
        let r = run_attack(
            &AttackSpec::TpTrace { reveal_k: false },
            &ProtocolConfig::new(4),
            1,
            9,
        )
        .unwrap();
        assert_eq!(r.trials, 1);
        assert_eq!(r.chance_level, 0.5);
        assert_eq!(r.empirical_rate, r.successes as f64);
        assert_eq!(r.csv_record().len(), AttackReport::CSV_HEADER.len());
    }

    #[test]
    fn reports_are_reproducible() {
        let mut c = ProtocolConfig::new(4).with_backend(Backend::Dense);
        c.s = 2;
        let spec = AttackSpec::InterceptResend {
            fraction: 1.0,
            scope: TamperScope::Sharing,
        };
        let a = run_attack(&spec, &c, 200, 5).unwrap();
        let b = run_attack(&spec, &c, 200, 5).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(run_attack(
            &AttackSpec::TpTrace { reveal_k: false },
            &ProtocolConfig::new(4),
            0,
            0
        )
        .is_err());
    }
}
