//! Text and machine renderings of a run.
//!
//! The machine format is JSON with a fixed key order and every float written
//! with 17 significant digits; non-finite values become `null`. It carries
//! no timings, so repeated runs give identical bytes.

use std::fmt::Write as _;

use conflab::identities::IdentityReport;

use crate::runner::{RunReport, ScenarioResult};
use crate::scenario::Format;

pub fn emit(report: &RunReport, format: Format) -> String {
    match format {
        Format::Text => text(report),
        Format::Machine => machine(report),
    }
}

const HEADER: [&str; 8] = ["scenario", "identity", "lhs", "rhs", "residual", "tol", "verdict", "seconds"];

fn sci(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6e}")
    } else {
        "-".into()
    }
}

pub fn text(report: &RunReport) -> String {
    let mut rows: Vec<[String; 8]> = vec![HEADER.map(String::from)];
    let mut notes = Vec::new();
    for r in &report.results {
        match &r.outcome {
            Ok(rep) => {
                for (depth, sub) in nested(rep, 0) {
                    let label = format!("{}{}", "  ".repeat(depth), if depth == 0 { r.name.as_str() } else { "" });
                    rows.push([
                        label,
                        sub.name.clone(),
                        sci(sub.lhs),
                        sci(sub.rhs),
                        sci(sub.relative),
                        sci(sub.tolerance),
                        sub.verdict.name().into(),
                        if depth == 0 { format!("{:.2}", r.seconds) } else { String::new() },
                    ]);
                    if let Some(m) = &sub.message {
                        notes.push(format!("{}: {m}", sub.name));
                    }
                    if depth == 0 {
                        if let Some(c) = sub.calibration {
                            notes.push(format!("{}: calibration residual {}", sub.name, sci(c)));
                        }
                    }
                }
            }
            Err(e) => {
                rows.push([
                    r.name.clone(),
                    r.identity.clone(),
                    "-".into(),
                    "-".into(),
                    "-".into(),
                    "-".into(),
                    "error".into(),
                    format!("{:.2}", r.seconds),
                ]);
                notes.push(format!("{}: {e}", r.name));
            }
        }
    }
    let widths: Vec<usize> = (0..8).map(|c| rows.iter().map(|row| row[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &rows {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    for n in notes {
        out.push_str(&n);
        out.push('\n');
    }
    let _ = writeln!(out, "suite: {}", if report.passed() { "pass" } else { "fail" });
    out
}

fn nested(r: &IdentityReport, depth: usize) -> Vec<(usize, &IdentityReport)> {
    let mut out = vec![(depth, r)];
    for s in &r.secondary {
        out.extend(nested(s, depth + 1));
    }
    out
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "null".into(), num)
}

fn identity_json(r: &IdentityReport) -> String {
    let history: Vec<String> = r
        .history
        .iter()
        .map(|h| {
            format!(
                "{{\"level\":{},\"lhs\":{},\"rhs\":{},\"residual\":{},\"relative\":{},\"scale\":{}}}",
                h.level,
                num(h.lhs),
                num(h.rhs),
                num(h.residual()),
                num(h.relative()),
                num(h.scale)
            )
        })
        .collect();
    let gates: Vec<String> = r
        .gates
        .iter()
        .map(|(n, v, t)| format!("{{\"name\":{},\"value\":{},\"threshold\":{}}}", string(n), num(*v), num(*t)))
        .collect();
    let levels: Vec<String> = r.levels.iter().map(usize::to_string).collect();
    let secondary: Vec<String> = r.secondary.iter().map(identity_json).collect();
    format!(
        "{{\"name\":{},\"verdict\":{},\"lhs\":{},\"rhs\":{},\"residual\":{},\"relative\":{},\"tolerance\":{},\"calibration\":{},\"levels\":[{}],\"history\":[{}],\"gates\":[{}],\"message\":{},\"secondary\":[{}]}}",
        string(&r.name),
        string(r.verdict.name()),
        num(r.lhs),
        num(r.rhs),
        num(r.residual),
        num(r.relative),
        num(r.tolerance),
        opt_num(r.calibration),
        levels.join(","),
        history.join(","),
        gates.join(","),
        r.message.as_deref().map_or_else(|| "null".into(), string),
        secondary.join(",")
    )
}

fn scenario_json(r: &ScenarioResult) -> String {
    let (report, error) = match &r.outcome {
        Ok(rep) => (identity_json(rep), "null".to_string()),
        Err(e) => ("null".to_string(), string(e)),
    };
    format!(
        "{{\"scenario\":{},\"identity\":{},\"verdict\":{},\"error\":{},\"report\":{}}}",
        string(&r.name),
        string(&r.identity),
        string(r.verdict_name()),
        error,
        report
    )
}

pub fn machine(report: &RunReport) -> String {
    let records: Vec<String> = report.results.iter().map(scenario_json).collect();
    format!(
        "{{\"suite_verdict\":{},\"exit_code\":{},\"scenarios\":[{}]}}\n",
        string(if report.passed() { "pass" } else { "fail" }),
        report.exit_code(),
        records.join(",")
    )
}

#[cfg(test)]
mod tests {
    use conflab::identities::{LevelRecord, Verdict};

    use super::*;

    fn sample() -> RunReport {
        let rep = IdentityReport::from_history(
            "demo",
            vec![LevelRecord { level: 2, lhs: 1.0, rhs: 1.0 + 1e-9, scale: 1.0 }],
            1e-6,
            Some(1e-12),
        );
        RunReport {
            results: vec![ScenarioResult { name: "one".into(), identity: "demo".into(), outcome: Ok(rep), seconds: 0.5 }],
        }
    }

    #[test]
    fn empty_report() {
        let r = RunReport::default();
        assert_eq!(machine(&r), "{\"suite_verdict\":\"pass\",\"exit_code\":0,\"scenarios\":[]}\n");
        let t = text(&r);
        assert!(t.starts_with("scenario"));
        assert_eq!(t.lines().count(), 2);
    }

    #[test]
    fn machine_format_is_valid_json_with_full_precision() {
        let out = machine(&sample());
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        let rep = &v["scenarios"][0]["report"];
        assert_eq!(v["scenarios"][0]["verdict"], "pass");
        assert!(rep["tolerance"].is_number());
        assert!(out.contains("\"tolerance\":9.9999999999999995e-7"), "{out}");
        for x in [1e-6, 1.0 + 1e-9, std::f64::consts::PI, -2.5e-300] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert!(!out.contains("seconds"));
        let keys: Vec<&str> = rep.as_object().unwrap().keys().map(String::as_str).collect();
        assert!(keys.contains(&"residual") && keys.contains(&"history"));
    }

    #[test]
    fn failing_and_errored_scenarios() {
        let mut r = sample();
        if let Ok(rep) = &mut r.results[0].outcome {
            rep.verdict = Verdict::Fail;
        }
        r.results.push(ScenarioResult {
            name: "two".into(),
            identity: "x".into(),
            outcome: Err("bad \"key\"".into()),
            seconds: 0.0,
        });
        let out = machine(&r);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["suite_verdict"], "fail");
        assert_eq!(v["scenarios"][0]["verdict"], "fail");
        assert_eq!(v["scenarios"][1]["error"], "bad \"key\"");
        assert!(v["scenarios"][0]["report"]["residual"].is_number());
        let t = text(&r);
        assert!(t.contains("fail") && t.contains("error") && t.ends_with("suite: fail\n"));
    }

    #[test]
    fn non_finite_values_are_null() {
        assert_eq!(num(f64::NAN), "null");
        assert_eq!(opt_num(None), "null");
        assert_eq!(sci(f64::INFINITY), "-");
    }
}
