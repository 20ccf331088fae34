//! Parameter grids. Grid point `p` uses master seed
//! `derive_run_seed(master, p)`, so points never share trial seeds.

use qanon::adversary::{run_attack, AttackSpec, Objective, Reveal, TamperScope};
use qanon::ghz::Backend;
use qanon::protocols::{run_comparison, run_qan, Scheme};
use qanon::seed::derive_run_seed;
use rayon::prelude::*;
use serde_json::json;

use crate::args::Grid;
use crate::commands::{report_note, report_output};
use crate::output::{Metric, Output};
use crate::{CliError, Run, Status};

pub struct Axes {
    pub ns: Vec<usize>,
    pub multi_ns: Vec<usize>,
    pub ss: Vec<usize>,
    pub p_zs: Vec<f64>,
    pub ks: Vec<usize>,
    pub seeds: u64,
}

fn or_default<T: Clone>(given: &[T], default: &[T]) -> Vec<T> {
    if given.is_empty() {
        default.to_vec()
    } else {
        given.to_vec()
    }
}

pub fn sweep(run: &Run, grid: Grid, axes: &Axes) -> Result<(Output, Status), CliError> {
    let out = match grid {
        Grid::Detection => detection(run, &or_default(&axes.ss, &[1, 2, 3, 4, 5, 6, 7, 8]))?,
        Grid::Notify => notify(
            run,
            &or_default(&axes.p_zs, &[0.25, 0.5, 1.0]),
            &or_default(&axes.ks, &[1, 5, 10]),
        )?,
        Grid::Compare => compare(
            run,
            &or_default(&axes.ns, &[3, 4, 5, 6]),
            &axes.multi_ns,
            axes.seeds,
        )?,
        Grid::Anonymity => anonymity(run, &or_default(&axes.ns, &[4, 5, 6]))?,
        Grid::Traceless => traceless(run, &or_default(&axes.ns, &[3, 4, 5, 6]))?,
    };
    Ok((out, Status::Ok))
}

fn point_seed(run: &Run, point: usize) -> u64 {
    derive_run_seed(run.master_seed, point as u64)
}

fn detection(run: &Run, ss: &[usize]) -> Result<Output, CliError> {
    let mut out = report_output(&["grid", "S"]);
    let mut cfg = run.config.clone();
    if !run.backend_forced {
        cfg.backend = Backend::Dense;
    }
    let spec = AttackSpec::InterceptResend {
        fraction: 1.0,
        scope: TamperScope::Sharing,
    };
    for (p, &s) in ss.iter().enumerate() {
        cfg.s = s;
        let r = run_attack(&spec, &cfg, run.trials, point_seed(run, p))?;
        let mut row = vec!["detection".to_string(), s.to_string()];
        row.extend(r.csv_record());
        out.row(row);
        out.notes.push(report_note(&r));
        out.record("point", json!({ "grid": "detection", "S": s, "report": r }));
    }
    Ok(out)
}

/// Agent 1 notifies agent 2; every other agent should stay silent.
fn notify(run: &Run, p_zs: &[f64], ks: &[usize]) -> Result<Output, CliError> {
    let n = run.config.n;
    if n < 3 {
        return Err(CliError::Config("the notification grid needs n ≥ 3".into()));
    }
    let mut header = vec!["grid", "n", "P_Z", "K"];
    header.extend(&Metric::CSV_HEADER[1..]);
    header.push("non_target_notified");
    let mut out = Output::with_header(&header);
    let mut point = 0;
    for &p_z in p_zs {
        for &k in ks {
            let mut cfg = run.config.clone();
            cfg.p_z = p_z;
            cfg.k = k;
            cfg.notify_requests = [(1, 2)].into();
            let master = point_seed(run, point);
            point += 1;
            let runs: Vec<Vec<usize>> = (0..run.trials)
                .into_par_iter()
                .map(|i| {
                    Ok(run_qan(&cfg.clone().with_seed(derive_run_seed(master, i)))?
                        .outcome
                        .notified_set())
                })
                .collect::<Result<_, CliError>>()?;
            let hits = runs.iter().filter(|s| s.contains(&2)).count() as u64;
            let stray = runs.iter().filter(|s| s.iter().any(|j| *j != 2)).count() as u64;
            let metric = Metric::new(
                "target_notified",
                hits,
                run.trials,
                Some(1.0 - (1.0 - p_z).powi(k as i32)),
            );
            let mut row = vec![
                "notify".into(),
                n.to_string(),
                p_z.to_string(),
                k.to_string(),
            ];
            row.extend(metric.csv_row("").into_iter().skip(1));
            row.push(stray.to_string());
            out.row(row);
            out.notes.push(format!(
                "P_Z={p_z} K={k} {}, non-target notified {stray}",
                metric.note()
            ));
            out.record(
                "point",
                json!({ "grid": "notify", "n": n, "P_Z": p_z, "K": k, "target": metric, "non_target_notified": stray }),
            );
        }
    }
    Ok(out)
}

struct Case {
    scheme: Scheme,
    n: usize,
    backend: Backend,
    p: usize,
}

fn compare(run: &Run, ns: &[usize], multi_ns: &[usize], seeds: u64) -> Result<Output, CliError> {
    let mut out = Output::with_header(&[
        "grid",
        "scheme",
        "n",
        "backend",
        "p",
        "runs",
        "false_verdicts",
        "registers_per_bit",
    ]);
    let mut cases = Vec::new();
    for &n in ns {
        for backend in [Backend::Phase, Backend::Dense] {
            cases.push(Case {
                scheme: Scheme::TwoParty,
                n,
                backend,
                p: 2,
            });
        }
    }
    for &n in multi_ns {
        for p in 2..=n.min(4) {
            cases.push(Case {
                scheme: Scheme::Multi,
                n,
                backend: run.config.backend,
                p,
            });
        }
    }
    for (point, case) in cases.iter().enumerate() {
        let master = point_seed(run, point);
        // (secret vector, k) pairs; k is enumerated only for two parties
        let inputs: Vec<(Vec<u8>, Option<u8>)> = (0..1u32 << case.p)
            .flat_map(|v| {
                let bits: Vec<u8> = (0..case.p).map(|i| (v >> i & 1) as u8).collect();
                let ks: Vec<Option<u8>> = match case.scheme {
                    Scheme::TwoParty => vec![Some(0), Some(1)],
                    Scheme::Multi => vec![None],
                };
                ks.into_iter().map(move |k| (bits.clone(), k))
            })
            .collect();
        let jobs: Vec<(usize, u64)> = (0..inputs.len())
            .flat_map(|x| (0..seeds).map(move |s| (x, s)))
            .collect();
        let results: Vec<(bool, usize)> = jobs
            .par_iter()
            .map(|&(x, s)| {
                let (bits, k) = &inputs[x];
                let mut cfg = run.config.clone().with_backend(case.backend);
                cfg.n = case.n;
                cfg.m = 1;
                cfg.seed = derive_run_seed(master, (x as u64) * seeds + s);
                cfg.secrets = bits
                    .iter()
                    .enumerate()
                    .map(|(i, b)| (i + 1, b.to_string()))
                    .collect();
                let fixed = k.map(|k| [k]);
                let r = run_comparison(&cfg, case.scheme, fixed.as_ref().map(|k| &k[..]))?;
                let truth = bits.iter().all(|b| *b == bits[0]);
                Ok((
                    r.outcome.verdict.overall.is_equal() != truth,
                    r.outcome.layouts[0].slots.len(),
                ))
            })
            .collect::<Result<_, CliError>>()?;
        let wrong = results.iter().filter(|r| r.0).count();
        let per_bit = results.first().map(|r| r.1).unwrap_or(0);
        let scheme = match case.scheme {
            Scheme::TwoParty => "two_party",
            Scheme::Multi => "multi",
        };
        out.row(vec![
            "compare".into(),
            scheme.into(),
            case.n.to_string(),
            case.backend.to_string(),
            case.p.to_string(),
            results.len().to_string(),
            wrong.to_string(),
            per_bit.to_string(),
        ]);
        out.notes.push(format!(
            "{scheme} n={} {} p={}: {wrong} false verdicts in {} runs, {per_bit} registers per bit",
            case.n,
            case.backend,
            case.p,
            results.len()
        ));
        out.record(
            "point",
            json!({
                "grid": "compare",
                "scheme": scheme,
                "n": case.n,
                "backend": case.backend,
                "p": case.p,
                "runs": results.len(),
                "false_verdicts": wrong,
                "registers_per_bit": per_bit,
            }),
        );
    }
    Ok(out)
}

fn anonymity(run: &Run, ns: &[usize]) -> Result<Output, CliError> {
    let mut out = report_output(&["grid", "n", "c", "objective"]);
    let mut point = 0;
    for &n in ns {
        for c in 1..=n.saturating_sub(2) {
            for objective in [Objective::IdentifyNotifier, Objective::IdentifyNotified] {
                let spec = AttackSpec::CoalitionGuess {
                    members: (1..=c).collect(),
                    objective,
                    reveal: Reveal::default(),
                };
                let mut cfg = run.config.clone();
                cfg.n = n;
                let r = run_attack(&spec, &cfg, run.trials, point_seed(run, point))?;
                point += 1;
                let name = serde_json::to_value(objective).expect("serializes");
                let name = name.as_str().unwrap_or_default();
                let mut row = vec![
                    "anonymity".into(),
                    n.to_string(),
                    c.to_string(),
                    name.to_string(),
                ];
                row.extend(r.csv_record());
                out.row(row);
                out.notes.push(report_note(&r));
                out.record("point", json!({ "grid": "anonymity", "n": n, "c": c, "objective": objective, "report": r }));
            }
        }
    }
    if point == 0 {
        return Err(CliError::Config(
            "the anonymity grid is empty; every n must be at least 3".into(),
        ));
    }
    Ok(out)
}

fn traceless(run: &Run, ns: &[usize]) -> Result<Output, CliError> {
    let mut out = report_output(&["grid", "n", "reveal_k"]);
    let mut point = 0;
    for &n in ns {
        for reveal_k in [false, true] {
            let mut cfg = run.config.clone();
            cfg.n = n;
            let r = run_attack(
                &AttackSpec::TpTrace { reveal_k },
                &cfg,
                run.trials,
                point_seed(run, point),
            )?;
            point += 1;
            let mut row = vec!["traceless".into(), n.to_string(), reveal_k.to_string()];
            row.extend(r.csv_record());
            out.row(row);
            out.notes.push(report_note(&r));
            out.record(
                "point",
                json!({ "grid": "traceless", "n": n, "reveal_k": reveal_k, "report": r }),
            );
        }
    }
    Ok(out)
}
