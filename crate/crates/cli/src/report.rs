//! Machine-readable JSON reports: a common envelope (version, command,
//! tolerance, input digest) around per-command results. Keys are sorted by
//! the serializer, so byte-identical inputs produce byte-identical reports.

use serde_json::{json, Value};

use hrmod_core::ci::{CiVerdict, CriterionResidual, Ternary};
use hrmod_core::index_set::IndexSet;
use hrmod_core::tol::ZeroClass;

use crate::model_file::LoadedModel;

pub fn envelope(command: &str, tol: f64, input: Option<&LoadedModel>, results: Value) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "tol": tol,
        "input": input.map(|m| json!({
            "path": m.path,
            "sha256": m.sha256,
            "d": m.file.d,
            "kind": m.file.kind.tag(),
            "name": m.file.name,
        })),
        "results": results,
    })
}

pub fn print_report(report: &Value) {
    print_line(&serde_json::to_string_pretty(report).expect("report serializes"));
}

/// Write a line to stdout, ignoring a closed pipe (conventional CLI
/// behaviour under `head` and friends).
pub fn print_line(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

pub fn ternary_str(t: Ternary) -> &'static str {
    match t {
        Ternary::Holds => "holds",
        Ternary::Fails => "fails",
        Ternary::Indeterminate => "indeterminate",
    }
}

pub fn zero_class_str(z: ZeroClass) -> &'static str {
    match z {
        ZeroClass::Zero => "zero",
        ZeroClass::Band => "band",
        ZeroClass::NonZero => "nonzero",
    }
}

pub fn set_json(s: &IndexSet) -> Value {
    Value::from(s.one_based())
}

pub fn residuals_json(residuals: &[CriterionResidual]) -> Value {
    Value::from(
        residuals
            .iter()
            .map(|r| {
                json!({
                    "criterion": r.criterion,
                    "residual": r.residual,
                    "class": zero_class_str(r.class),
                    "note": r.note,
                })
            })
            .collect::<Vec<_>>(),
    )
}

pub fn verdict_json(v: &CiVerdict) -> Value {
    json!({
        "statement": {
            "a": set_json(&v.statement.a),
            "b": set_json(&v.statement.b),
            "c": set_json(&v.statement.c),
        },
        "verdict": ternary_str(v.verdict),
        "method": v.method.tag(),
        "gap": v.gap,
        "residuals": residuals_json(&v.residuals),
        "applicability": v.applicability.map(|a| json!({
            "emtp2_on_margin": a.emtp2_on_margin,
            "p_positive_on_margin": a.p_positive_on_margin,
            "p_nonnegative_on_margin": a.p_nonnegative_on_margin,
        })),
    })
}
