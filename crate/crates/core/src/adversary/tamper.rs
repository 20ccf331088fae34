//! Outside attackers on the quantum channel during resource sharing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AdversaryError;
use crate::ghz::{Backend, EngineError, GhzRegister, RegisterId, SimRng};
use crate::netsim::{ChannelTap, Network, Transit};
use crate::protocols::{
    run_full_pipeline_with, share_on, PipelineResult, PreparerBehavior, ProtocolConfig,
    SharingOutcome, SharingPlan,
};
use crate::seed::{stream_rng, Role, StageStream};

/// Which protocol the tampered particles feed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TamperScope {
    /// Standalone resource sharing among the agents. The adversary then
    /// tries to predict the preparer's computational-basis outcome on the
    /// first surviving register.
    #[default]
    Sharing,
    /// The full pipeline with secrets drawn uniformly per trial. The
    /// adversary tries to guess the first competitor's first secret bit.
    Pipeline,
}

/// Measures targeted qubits in transit in the computational basis and
/// forwards the collapsed particle.
pub struct InterceptResend {
    fraction: f64,
    rng: SimRng,
    pub intercepted: Vec<(RegisterId, usize, u8)>,
}

impl InterceptResend {
    pub fn new(fraction: f64, rng: SimRng) -> Self {
        InterceptResend {
            fraction,
            rng,
            intercepted: Vec::new(),
        }
    }
}

impl ChannelTap for InterceptResend {
    fn on_transit(
        &mut self,
        t: &Transit,
        reg: &mut GhzRegister,
    ) -> Result<Option<String>, EngineError> {
        if !self.rng.random_bool(self.fraction) {
            return Ok(None);
        }
        let bit = reg.intercept_measure(t.qubit, &mut self.rng)?;
        self.intercepted.push((t.register, t.qubit, bit));
        Ok(Some("intercept_resend".into()))
    }
}

/// Copies targeted qubits onto fresh ancillas with a CNOT and measures the
/// ancillas once the protocol has finished.
pub struct EntangleResend {
    fraction: f64,
    rng: SimRng,
    pub ancillas: Vec<(RegisterId, usize)>,
    /// Ancilla outcomes, in attachment order, for registers still alive at
    /// the end of the run.
    pub readouts: Vec<(RegisterId, u8)>,
}

impl EntangleResend {
    pub fn new(fraction: f64, rng: SimRng) -> Self {
        EntangleResend {
            fraction,
            rng,
            ancillas: Vec::new(),
            readouts: Vec::new(),
        }
    }
}

impl ChannelTap for EntangleResend {
    fn on_transit(
        &mut self,
        t: &Transit,
        reg: &mut GhzRegister,
    ) -> Result<Option<String>, EngineError> {
        if !self.rng.random_bool(self.fraction) {
            return Ok(None);
        }
        let a = reg.attach_ancilla()?;
        reg.apply_cnot(t.qubit, a)?;
        self.ancillas.push((t.register, a));
        Ok(Some("entangle_resend".into()))
    }

    fn after_run(&mut self, net: &mut Network) -> Result<(), EngineError> {
        for &(r, a) in &self.ancillas {
            if let Some(reg) = net.register_mut(r) {
                let bit = reg.measure_computational(a, &mut self.rng)?;
                self.readouts.push((r, bit));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TamperKind {
    InterceptResend,
    EntangleResend,
}

/// Outcome of one tampered run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TamperTrial {
    pub detected: bool,
    pub guessed: bool,
}

enum Tap {
    Intercept(InterceptResend),
    Entangle(EntangleResend),
}

impl Tap {
    fn new(kind: TamperKind, fraction: f64, seed: u64) -> Self {
        let rng = stream_rng(seed, StageStream::Game, Role::Adversary);
        match kind {
            TamperKind::InterceptResend => Tap::Intercept(InterceptResend::new(fraction, rng)),
            TamperKind::EntangleResend => Tap::Entangle(EntangleResend::new(fraction, rng)),
        }
    }

    fn as_tap(&mut self) -> &mut dyn ChannelTap {
        match self {
            Tap::Intercept(t) => t,
            Tap::Entangle(t) => t,
        }
    }

    /// The adversary's data about `register`, if it holds any.
    fn bit_for(&self, register: Option<RegisterId>) -> Option<u8> {
        match self {
            Tap::Intercept(t) => t
                .intercepted
                .iter()
                .find(|(r, _, _)| register.is_none_or(|x| x == *r))
                .map(|x| x.2),
            Tap::Entangle(t) => t
                .readouts
                .iter()
                .find(|(r, _)| register.is_none_or(|x| x == *r))
                .map(|x| x.1),
        }
    }

    fn after_run(&mut self, net: &mut Network) -> Result<(), EngineError> {
        self.as_tap().after_run(net)
    }
}

fn check_tamper_config(config: &ProtocolConfig, fraction: f64) -> Result<(), AdversaryError> {
    if config.backend != Backend::Dense {
        return Err(AdversaryError::BackendMismatch {
            required: Backend::Dense,
            got: config.backend,
        });
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(AdversaryError::Config(format!(
            "fraction {fraction} outside [0, 1]"
        )));
    }
    Ok(())
}

/// One tampered run with seed `seed`.
pub fn tamper_trial(
    kind: TamperKind,
    scope: TamperScope,
    config: &ProtocolConfig,
    fraction: f64,
    seed: u64,
) -> Result<TamperTrial, AdversaryError> {
    check_tamper_config(config, fraction)?;
    let mut tap = Tap::new(kind, fraction, seed);
    let mut game = stream_rng(seed, StageStream::Game, Role::Nature);
    let blind = |rng: &mut SimRng| rng.random_bool(0.5);
    match scope {
        TamperScope::Sharing => {
            let mut cfg = config.clone();
            cfg.seed = seed;
            cfg.check_common()?;
            let preparer = crate::protocols::resolve_preparer(&cfg, StageStream::Sharing);
            let mut net = Network::new(
                cfg.n,
                false,
                Backend::Dense,
                stream_rng(seed, StageStream::Network, Role::Nature),
            );
            let plan = SharingPlan {
                arity: cfg.n,
                retained: cfg.l,
                security: cfg.s,
                preparer,
                behavior: PreparerBehavior::Honest,
                refusing: Default::default(),
            };
            let outcome = share_on(
                &mut net,
                &plan,
                seed,
                StageStream::Sharing,
                Some(tap.as_tap()),
            )?;
            tap.after_run(&mut net)?;
            match outcome {
                SharingOutcome::Aborted(_) => Ok(TamperTrial {
                    detected: true,
                    guessed: blind(&mut game),
                }),
                SharingOutcome::Shared(regs) => {
                    let target = regs[0];
                    let guess = match tap.bit_for(Some(target)) {
                        Some(b) => b,
                        None => u8::from(blind(&mut game)),
                    };
                    let truth = net
                        .register_mut(target)
                        .expect("survivor exists")
                        .measure_computational(preparer, &mut game)?;
                    Ok(TamperTrial {
                        detected: false,
                        guessed: guess == truth,
                    })
                }
            }
        }
        TamperScope::Pipeline => {
            let (m, secrets) = config.parsed_secrets()?;
            if secrets.len() < 2 {
                return Err(AdversaryError::Config(
                    "pipeline scope needs at least 2 secret holders".into(),
                ));
            }
            let mut cfg = config.clone();
            cfg.seed = seed;
            cfg.secrets = secrets
                .keys()
                .map(|p| {
                    let s: String = (0..m)
                        .map(|_| if game.random_bool(0.5) { '1' } else { '0' })
                        .collect();
                    (p.agent_index().expect("secret holders are agents"), s)
                })
                .collect();
            let first = *secrets.keys().next().expect("non-empty");
            let truth = cfg.secrets[&first.agent_index().unwrap()].as_bytes()[0] - b'0';
            let run = run_full_pipeline_with(&cfg, Some(tap.as_tap()))?;
            match run.result {
                PipelineResult::Aborted { .. } => Ok(TamperTrial {
                    detected: true,
                    guessed: blind(&mut game),
                }),
                PipelineResult::Completed { .. } => {
                    let guess = tap
                        .bit_for(None)
                        .unwrap_or_else(|| u8::from(blind(&mut game)));
                    Ok(TamperTrial {
                        detected: false,
                        guessed: guess == truth,
                    })
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(n: usize, s: usize) -> ProtocolConfig {
        let mut c = ProtocolConfig::new(n).with_backend(Backend::Dense);
        c.s = s;
        c
    }

    #[test]
    fn phase_backend_is_rejected() {
        let c = ProtocolConfig::new(4);
        let r = tamper_trial(
            TamperKind::InterceptResend,
            TamperScope::Sharing,
            &c,
            1.0,
            0,
        );
        assert!(matches!(r, Err(AdversaryError::BackendMismatch { .. })));
    }

    #[test]
    fn no_targets_no_detection() {
        for kind in [TamperKind::InterceptResend, TamperKind::EntangleResend] {
            for seed in 0..50 {
                let t = tamper_trial(kind, TamperScope::Sharing, &dense(4, 4), 0.0, seed).unwrap();
                assert!(!t.detected);
            }
        }
    }

    #[test]
    fn undetected_intercept_reveals_shared_bit() {
        // S = 0: never detected, and the intercepted bit equals every
        // party's computational outcome on the collapsed register
        for seed in 0..50 {
            let t = tamper_trial(
                TamperKind::InterceptResend,
                TamperScope::Sharing,
                &dense(3, 0),
                1.0,
                seed,
            )
            .unwrap();
            assert!(!t.detected);
            assert!(t.guessed);
        }
    }

    #[test]
    fn entangle_ancillas_exceeding_cap_error() {
        // arity 9 plus 8 ancillas exceeds the 16-qubit cap
        let r = tamper_trial(
            TamperKind::EntangleResend,
            TamperScope::Sharing,
            &dense(9, 1),
            1.0,
            0,
        );
        let msg = r.unwrap_err().to_string();
        assert!(msg.contains("at most 16 qubits"), "{msg}");
    }

    #[test]
    fn pipeline_scope_runs() {
        let c = dense(4, 2).with_secrets([(1, "1"), (2, "0")]);
        for kind in [TamperKind::InterceptResend, TamperKind::EntangleResend] {
            for seed in 0..5 {
                tamper_trial(kind, TamperScope::Pipeline, &c, 1.0, seed).unwrap();
                let t = tamper_trial(kind, TamperScope::Pipeline, &c, 0.0, seed).unwrap();
                assert!(!t.detected);
            }
        }
    }
}
