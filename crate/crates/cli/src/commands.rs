use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use qanon::adversary::{run_attack, AttackReport, AttackSpec};
use qanon::netsim::Transcript;
use qanon::protocols::{
    run_comparison, run_full_pipeline, run_modified_qan, run_qan, run_resource_sharing,
    PipelineResult, PreparerBehavior, ProtocolConfig, ProtocolError, Scheme, SharingOutcome,
};
use qanon::seed::derive_run_seed;
use qanon::verify;
use rayon::prelude::*;
use serde_json::json;

use crate::args::SchemeArg;
use crate::output::{summarize, Metric, Output};
use crate::{CliError, Run, Status};

impl Run {
    pub fn config_for(&self, run: u64) -> ProtocolConfig {
        self.config
            .clone()
            .with_seed(derive_run_seed(self.master_seed, run))
    }

    /// Runs `f` for every trial on the worker pool, in trial order.
    fn each<T: Send>(
        &self,
        f: impl Fn(u64, ProtocolConfig) -> Result<T, CliError> + Sync,
    ) -> Result<Vec<T>, CliError> {
        (0..self.trials)
            .into_par_iter()
            .map(|i| f(i, self.config_for(i)))
            .collect()
    }
}

fn write_transcript(path: Option<&Path>, t: &Transcript) -> Result<(), CliError> {
    if let Some(p) = path {
        fs::write(p, t.to_ndjson())
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

fn count(flags: impl IntoIterator<Item = bool>) -> u64 {
    flags.into_iter().filter(|b| *b).count() as u64
}

/// Probability that an agent flipped by `senders` independent notifiers is
/// notified at least once in `k` repetitions (flips cancel in pairs).
fn notify_probability(senders: usize, p_z: f64, k: usize) -> f64 {
    let per_run = (1.0 - (1.0 - 2.0 * p_z).powi(senders as i32)) / 2.0;
    1.0 - (1.0 - per_run).powi(k as i32)
}

pub fn notify(
    run: &Run,
    modified: bool,
    transcript: Option<&Path>,
) -> Result<(Output, Status), CliError> {
    let c = &run.config;
    let go = |cfg: &ProtocolConfig| {
        if modified {
            run_modified_qan(cfg)
        } else {
            run_qan(cfg)
        }
    };
    if transcript.is_some() {
        write_transcript(transcript, &go(&run.config_for(0))?.transcript)?;
    }
    let runs = run.each(|_, cfg| Ok(go(&cfg)?.outcome.notified_set()))?;
    let mut out = Output::with_header(&Metric::CSV_HEADER);
    for (i, notified) in runs.iter().enumerate() {
        out.record(
            "run",
            json!({ "run": i, "seed": run.config_for(i as u64).seed, "notified": notified }),
        );
    }
    let metrics = (1..=c.n)
        .map(|j| {
            let senders = if modified {
                usize::from(c.tp_targets.contains(&j))
            } else {
                c.notify_requests.values().filter(|r| **r == j).count()
            };
            let hits = count(runs.iter().map(|s| s.contains(&j)));
            Metric::new(
                format!("notified_agent_{j}"),
                hits,
                run.trials,
                Some(notify_probability(senders, c.p_z, c.k)),
            )
        })
        .collect();
    summarize(
        &mut out,
        if modified {
            "notify_modified"
        } else {
            "notify"
        },
        metrics,
    );
    Ok((out, Status::Ok))
}

pub fn share(run: &Run, transcript: Option<&Path>) -> Result<(Output, Status), CliError> {
    let c = &run.config;
    let mut out = Output::with_header(&Metric::CSV_HEADER);
    if c.s == 0 {
        eprintln!("warning: S = 0, resource sharing runs without a security check");
    }
    if transcript.is_some() {
        write_transcript(
            transcript,
            &run_resource_sharing(&run.config_for(0), None)?.transcript,
        )?;
    }
    let runs = run.each(|_, cfg| Ok(run_resource_sharing(&cfg, None)?))?;
    for (i, r) in runs.iter().enumerate() {
        let body = match &r.outcome {
            SharingOutcome::Shared(regs) => json!({ "outcome": "shared", "registers": regs }),
            SharingOutcome::Aborted(reason) => json!({ "outcome": "aborted", "reason": reason }),
        };
        let mut body = body.as_object().cloned().expect("object");
        body.insert("run".into(), json!(i));
        body.insert("seed".into(), json!(run.config_for(i as u64).seed));
        body.insert("preparer".into(), json!(r.preparer));
        out.record("run", body);
    }
    let expected = match (c.preparer_behavior, c.refusing_parties.is_empty()) {
        (PreparerBehavior::Honest, true) => Some(0.0),
        // a product state passes h = 0 tests and fails h = 1 tests half the time
        (PreparerBehavior::ProductState, true) => Some(1.0 - 0.75f64.powi(c.s as i32)),
        _ => None,
    };
    let aborted = count(runs.iter().map(|r| r.outcome.is_aborted()));
    summarize(
        &mut out,
        "share",
        vec![Metric::new("aborted", aborted, run.trials, expected)],
    );
    let status = if run.trials == 1 && aborted == 1 {
        Status::Aborted
    } else {
        Status::Ok
    };
    Ok((out, status))
}

fn resolve_scheme(arg: SchemeArg, c: &ProtocolConfig) -> Scheme {
    match arg {
        SchemeArg::Two => Scheme::TwoParty,
        SchemeArg::Multi => Scheme::Multi,
        SchemeArg::Auto if c.secrets.len() == 2 => Scheme::TwoParty,
        SchemeArg::Auto => Scheme::Multi,
    }
}

pub fn compare(
    run: &Run,
    scheme: SchemeArg,
    transcript: Option<&Path>,
) -> Result<(Output, Status), CliError> {
    let scheme = resolve_scheme(scheme, &run.config);
    let (m, secrets) = run.config.parsed_secrets()?;
    if transcript.is_some() {
        write_transcript(
            transcript,
            &run_comparison(&run.config_for(0), scheme, None)?.transcript,
        )?;
    }
    let runs = run.each(|_, cfg| Ok(run_comparison(&cfg, scheme, None)?.outcome))?;
    let mut out = Output::with_header(&Metric::CSV_HEADER);
    for (i, o) in runs.iter().enumerate() {
        out.record(
            "run",
            json!({
                "run": i,
                "seed": run.config_for(i as u64).seed,
                "scheme": scheme,
                "equal": o.verdict.overall.is_equal(),
                "per_bit": o.verdict.per_bit.iter().map(|b| b.is_equal()).collect::<Vec<_>>(),
                "k": o.k,
            }),
        );
    }
    let values: Vec<&Vec<u8>> = secrets.values().collect();
    let truth = |bit: Option<usize>| {
        let same = values.iter().all(|v| match bit {
            Some(j) => v[j] == values[0][j],
            None => *v == values[0],
        });
        Some(if same { 1.0 } else { 0.0 })
    };
    let mut metrics = vec![Metric::new(
        "equal",
        count(runs.iter().map(|o| o.verdict.overall.is_equal())),
        run.trials,
        truth(None),
    )];
    for j in 0..m {
        let hits = count(runs.iter().map(|o| o.verdict.per_bit[j].is_equal()));
        metrics.push(Metric::new(
            format!("equal_bit_{j}"),
            hits,
            run.trials,
            truth(Some(j)),
        ));
    }
    summarize(&mut out, "compare", metrics);
    Ok((out, Status::Ok))
}

pub fn pipeline(run: &Run, transcript: Option<&Path>) -> Result<(Output, Status), CliError> {
    let c = &run.config;
    let (_, secrets) = c.parsed_secrets()?;
    let holders: BTreeSet<usize> = secrets.keys().filter_map(|p| p.agent_index()).collect();
    let targets = if c.tp_targets.is_empty() {
        holders.clone()
    } else {
        c.tp_targets.clone()
    };
    if targets.len() < 2 {
        return Err(CliError::Config(format!(
            "the pipeline needs at least 2 targets, found {}",
            targets.len()
        )));
    }
    if let Some(t) = targets.iter().find(|t| !holders.contains(t)) {
        return Err(CliError::Config(format!("target {t} has no secret")));
    }
    let attempt = |cfg: &ProtocolConfig| match run_full_pipeline(cfg) {
        Ok(r) => Ok(Some(r)),
        Err(ProtocolError::TooFewCompetitors(_)) => Ok(None),
        Err(e) => Err(CliError::from(e)),
    };
    if let Some(r) = attempt(&run.config_for(0))?.filter(|_| transcript.is_some()) {
        write_transcript(transcript, &r.transcript)?;
    }
    let runs = run.each(|_, cfg| attempt(&cfg).map(|r| r.map(|r| (r.result, r.preparer))))?;
    let mut out = Output::with_header(&Metric::CSV_HEADER);
    let (mut completed, mut aborted, mut equal) = (0, 0, 0);
    for (i, r) in runs.iter().enumerate() {
        let seed = run.config_for(i as u64).seed;
        let body = match r {
            None => json!({ "run": i, "seed": seed, "outcome": "too_few_notified" }),
            Some((PipelineResult::Aborted { stage, reason }, preparer)) => {
                aborted += 1;
                json!({ "run": i, "seed": seed, "outcome": "aborted", "stage": stage, "reason": reason, "preparer": preparer })
            }
            Some((
                PipelineResult::Completed {
                    verdict,
                    notification,
                    ..
                },
                preparer,
            )) => {
                completed += 1;
                equal += u64::from(verdict.overall.is_equal());
                json!({
                    "run": i,
                    "seed": seed,
                    "outcome": "completed",
                    "preparer": preparer,
                    "notified": notification.notified_set(),
                    "equal": verdict.overall.is_equal(),
                    "per_bit": verdict.per_bit.iter().map(|b| b.is_equal()).collect::<Vec<_>>(),
                })
            }
        };
        out.record("run", body);
    }
    summarize(
        &mut out,
        "pipeline",
        vec![
            Metric::new("completed", completed, run.trials, None),
            Metric::new("aborted", aborted, run.trials, None),
            Metric::new("equal", equal, run.trials, None),
        ],
    );
    let status = if run.trials == 1 && completed == 0 {
        Status::Aborted
    } else {
        Status::Ok
    };
    Ok((out, status))
}

pub fn load_attack(spec: &str) -> Result<AttackSpec, CliError> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        fs::read_to_string(spec)
            .map_err(|e| CliError::Config(format!("cannot read {spec}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid attack spec: {e}")))
}

pub fn report_output(header_prefix: &[&str]) -> Output {
    let header: Vec<&str> = header_prefix
        .iter()
        .chain(AttackReport::CSV_HEADER.iter())
        .copied()
        .collect();
    Output::with_header(&header)
}

pub fn report_note(r: &AttackReport) -> String {
    let mut s = format!(
        "{} {}: {}/{} = {:.6} (3σ CI [{:.6}, {:.6}], chance {:.6})",
        r.attack,
        r.params["spec"],
        r.successes,
        r.trials,
        r.empirical_rate,
        r.ci_low,
        r.ci_high,
        r.chance_level
    );
    if let Some(d) = r.detection_rate {
        s.push_str(&format!(", detection {d:.6}"));
    }
    if let Some(d) = r.max_posterior_deviation {
        s.push_str(&format!(", max posterior deviation {d:e}"));
    }
    s
}

pub fn attack(run: &Run, spec: &str) -> Result<(Output, Status), CliError> {
    let spec = load_attack(spec)?;
    let report = run_attack(&spec, &run.config, run.trials, run.master_seed)?;
    let mut out = report_output(&[]);
    out.row(report.csv_record());
    out.notes.push(report_note(&report));
    out.record("report", &report);
    Ok((out, Status::Ok))
}

pub fn verify(run: &Run) -> Result<(Output, Status), CliError> {
    let results = verify::run_all(run.master_seed);
    let mut out = Output::with_header(&["check", "passed", "cases", "failure"]);
    for r in &results {
        out.row(vec![
            r.name.clone(),
            r.passed.to_string(),
            r.cases.to_string(),
            r.failure.clone().unwrap_or_default(),
        ]);
        out.notes.push(match &r.failure {
            None if r.passed => format!("PASS {} ({} cases)", r.name, r.cases),
            None => format!("FAIL {}: no cases ran", r.name),
            Some(f) => format!("FAIL {}: {f}", r.name),
        });
        out.record("check", r);
    }
    let status = if results.iter().all(|r| r.passed) {
        Status::Ok
    } else {
        Status::VerifyFailed
    };
    Ok((out, status))
}
