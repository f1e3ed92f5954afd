//! Command bodies shared by the binary and the test suite. Each returns the
//! text to print on success or a failure carrying the process exit code.

use std::fs;
use std::io::Read;
use std::path::Path;

use sici_core::analysis::{parameter_count, ParamReport};
use sici_core::oracle::{compare_cpts, oracle_cpt};
use sici_core::structure::{verify_ci_statements, AmbientGraph, CiVerdict};
use sici_core::{Cpt, Error as CoreError, LocalSpec, Variant};

use crate::document::{ambient_from_doc, document_to_spec, parse_document, AmbientDoc};
use crate::error::CliError;
use crate::output::{parse_cpt_artifact, to_csv, to_json, Format};

/// Exit code contract: 0 success, 1 validation/parse failure, 2 compile
/// failure, 3 size-guard refusal.
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_COMPILE: i32 = 2;
pub const EXIT_SIZE_GUARD: i32 = 3;

#[derive(Debug)]
pub struct Failure {
    pub exit: i32,
    pub message: String,
}

impl Failure {
    fn validation(e: impl std::fmt::Display) -> Self {
        Failure { exit: EXIT_VALIDATION, message: e.to_string() }
    }

    fn from_core(e: CoreError) -> Self {
        let exit = match e {
            CoreError::SizeGuard { .. } => EXIT_SIZE_GUARD,
            _ => EXIT_COMPILE,
        };
        Failure { exit, message: e.to_string() }
    }
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        Failure::validation(e)
    }
}

/// Read a spec or artifact; `-` means standard input.
pub fn read_input(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Failure::validation(format!("stdin: {e}")))?;
        Ok(buf)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::validation(format!("{path}: {e}")))
    }
}

pub fn load_spec(text: &str, normalize: bool) -> Result<(LocalSpec, Option<AmbientGraph>), Failure> {
    let doc = parse_document(text)?;
    let spec = document_to_spec(&doc, normalize)?;
    Ok((spec, doc.ambient.as_ref().map(ambient_from_doc)))
}

pub fn cmd_compile(text: &str, format: Format, normalize: bool) -> Result<String, Failure> {
    let (spec, _) = load_spec(text, normalize)?;
    let cpt = sici_core::compile(&spec).map_err(Failure::from_core)?;
    let parent_names: Vec<String> = spec.parents.iter().map(|p| p.name.clone()).collect();
    Ok(match format {
        Format::Csv => to_csv(&parent_names, &cpt),
        Format::Json => to_json(&parent_names, &spec.child.name, &cpt),
    })
}

fn embedded_tables(spec: &LocalSpec) -> Vec<(String, &Cpt)> {
    fn push_all<'a>(out: &mut Vec<(String, &'a Cpt)>, label: &str, cpts: &'a [Cpt]) {
        for (i, c) in cpts.iter().enumerate() {
            out.push((format!("{label}[{i}]"), c));
        }
    }
    let mut out: Vec<(String, &Cpt)> = Vec::new();
    match &spec.variant {
        Variant::Ici { mechanism_cpts, .. }
        | Variant::PiciAverage { mechanism_cpts }
        | Variant::NoisyMax { mechanism_cpts } => push_all(&mut out, "mechanism", mechanism_cpts),
        Variant::Pici { mechanism_cpts, lower_cpt } => {
            push_all(&mut out, "mechanism", mechanism_cpts);
            out.push(("combination_table".into(), lower_cpt));
        }
        Variant::Scm { lower_cpt, .. } => out.push(("noise_table".into(), lower_cpt)),
        Variant::LsSici { lower_cpt, .. } => out.push(("combination_table".into(), lower_cpt)),
        Variant::UsSici { block_cpts, .. } => push_all(&mut out, "block", block_cpts),
        Variant::DsSici { block_cpts, lower_cpt, .. } => {
            push_all(&mut out, "block", block_cpts);
            out.push(("combination_table".into(), lower_cpt));
        }
        Variant::NoisyOr { .. }
        | Variant::SurjectiveNoisyOr { .. }
        | Variant::HassallBinary { .. } => {}
    }
    out
}

pub fn cmd_check(
    text: &str,
    ambient_file: Option<&Path>,
    tolerance: f64,
) -> Result<String, Failure> {
    let (spec, inline_ambient) = load_spec(text, false)?;
    let ambient = match ambient_file {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
            let doc: AmbientDoc = serde_json::from_str(&text)
                .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
            Some(ambient_from_doc(&doc))
        }
        None => inline_ambient,
    };

    let mut report = String::new();
    let mut all_ok = true;

    for (label, cpt) in embedded_tables(&spec) {
        let violations = cpt.validate(tolerance);
        if violations.is_empty() {
            report.push_str(&format!("table {label}: ok\n"));
        } else {
            all_ok = false;
            for v in violations {
                report.push_str(&format!("table {label}: {v:?}\n"));
            }
        }
    }
    for warning in spec.warnings() {
        report.push_str(&format!("warning: {warning}\n"));
    }

    let checks = verify_ci_statements(&spec, ambient.as_ref()).map_err(|e| Failure {
        exit: EXIT_VALIDATION,
        message: e.to_string(),
    })?;
    for check in &checks {
        let verdict = match check.verdict {
            CiVerdict::Pass => "pass",
            CiVerdict::Vacuous => "vacuous",
            CiVerdict::Fail => {
                all_ok = false;
                "FAIL"
            }
        };
        report.push_str(&format!(
            "statement ({}): {:?} _||_ {:?} | {:?} -> {verdict}\n",
            check.statement, check.a, check.b, check.z
        ));
    }

    if all_ok {
        report.push_str("check: ok\n");
        Ok(report)
    } else {
        Err(Failure { exit: EXIT_VALIDATION, message: report })
    }
}

fn render_report(report: &ParamReport, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut out = String::new();
            out.push_str(&format!("direct,{}\n", report.direct_count));
            out.push_str(&format!("model,{}\n", report.model_count));
            out.push_str(&format!("saving,{}\n", report.saving));
            for item in &report.breakdown {
                out.push_str(&format!("breakdown.{},{}\n", item.label, item.count));
            }
            out
        }
        Format::Json => {
            let breakdown: Vec<serde_json::Value> = report
                .breakdown
                .iter()
                .map(|i| serde_json::json!({"label": i.label, "count": i.count}))
                .collect();
            let mut text = serde_json::to_string_pretty(&serde_json::json!({
                "direct": report.direct_count,
                "model": report.model_count,
                "saving": report.saving,
                "breakdown": breakdown,
            }))
            .expect("report serialization is total");
            text.push('\n');
            text
        }
    }
}

pub fn cmd_count(text: &str, format: Format) -> Result<String, Failure> {
    let (spec, _) = load_spec(text, false)?;
    let report = parameter_count(&spec).map_err(Failure::from_core)?;
    Ok(render_report(&report, format))
}

pub fn cmd_verify(text: &str, tolerance: f64, inject_error: bool) -> Result<String, Failure> {
    let (spec, _) = load_spec(text, false)?;
    // brute force first: its size guard refuses oversized specs before the
    // compiler sinks time into an enormous table
    let brute = oracle_cpt(&spec).map_err(Failure::from_core)?;
    let compiled = sici_core::compile(&spec).map_err(Failure::from_core)?;
    let compiled = if inject_error {
        let mut rows = compiled.rows().to_vec();
        rows[0][0] += 1e-6;
        Cpt::new(
            compiled.parent_spaces().to_vec(),
            compiled.child_space().clone(),
            rows,
        )
        .expect("same shape")
    } else {
        compiled
    };
    let (diff, at) = compare_cpts(&compiled, &brute).map_err(Failure::from_core)?;
    if diff <= tolerance {
        Ok(format!("max diff {diff:e} at row {}, column {}: PASS\n", at.0, at.1))
    } else {
        Err(Failure {
            exit: EXIT_VALIDATION,
            message: format!("max diff {diff:e} at row {}, column {}: FAIL\n", at.0, at.1),
        })
    }
}

pub fn cmd_diff(text_a: &str, text_b: &str, tolerance: f64) -> Result<String, Failure> {
    let a = parse_cpt_artifact(text_a)?;
    let b = parse_cpt_artifact(text_b)?;
    if a.row_count() != b.row_count()
        || a.child_space().cardinality() != b.child_space().cardinality()
    {
        return Err(Failure {
            exit: EXIT_VALIDATION,
            message: format!(
                "shape mismatch: {} rows x {} states vs {} rows x {} states",
                a.row_count(),
                a.child_space().cardinality(),
                b.row_count(),
                b.child_space().cardinality()
            ),
        });
    }
    let (max_diff, at) = compare_cpts(&a, &b).map_err(Failure::from_core)?;
    let differing_rows = a
        .rows()
        .iter()
        .zip(b.rows())
        .filter(|(ra, rb)| ra.iter().zip(rb.iter()).any(|(&x, &y)| (x - y).abs() > tolerance))
        .count();
    Ok(format!(
        "max abs diff {max_diff:e} at row {}, column {}\n{differing_rows} differing rows at tolerance {tolerance:e}\n",
        at.0, at.1
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const NOISY_OR: &str = r#"{
        "schema_version": 1,
        "child": {"name": "Y", "states": ["false", "true"]},
        "parents": [
            {"name": "X1", "states": ["false", "true"]},
            {"name": "X2", "states": ["false", "true"]},
            {"name": "X3", "states": ["false", "true"]}
        ],
        "model": {"type": "noisy_or", "inhibitor_probabilities": [0.1, 0.2, 0.3]}
    }"#;

    #[test]
    fn compile_csv_has_expected_shape() {
        let csv = cmd_compile(NOISY_OR, Format::Csv, false).unwrap();
        assert_eq!(csv.lines().count(), 9); // header + 2^3 rows
        assert!(csv.starts_with("X1,X2,X3,p(false),p(true)\n"));
    }

    #[test]
    fn check_reports_statement_verdicts() {
        let report = cmd_check(NOISY_OR, None, 1e-9).unwrap();
        assert!(report.contains("statement (2)"));
        assert!(report.contains("check: ok"));
    }

    #[test]
    fn verify_passes_and_injection_fails() {
        assert!(cmd_verify(NOISY_OR, 1e-12, false).unwrap().contains("PASS"));
        let failure = cmd_verify(NOISY_OR, 1e-12, true).unwrap_err();
        assert_eq!(failure.exit, EXIT_VALIDATION);
        assert!(failure.message.contains("FAIL"));
    }

    #[test]
    fn diff_of_identical_outputs_is_zero() {
        let csv = cmd_compile(NOISY_OR, Format::Csv, false).unwrap();
        let report = cmd_diff(&csv, &csv, 1e-12).unwrap();
        assert!(report.contains("0 differing rows"));
    }

    #[test]
    fn count_matches_parent_count() {
        let report = cmd_count(NOISY_OR, Format::Csv).unwrap();
        assert!(report.contains("direct,8"));
        assert!(report.contains("model,3"));
        assert!(report.contains("saving,5"));
    }
}
