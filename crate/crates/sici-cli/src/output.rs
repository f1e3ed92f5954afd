//! Compiled-table artifacts: CSV for spreadsheets and byte-stable diffing,
//! JSON for programmatic use. Both can be read back for `diff`.

use serde::{Deserialize, Serialize};

use sici_core::{Cpt, StateSpace};

use crate::document::VarDoc;
use crate::error::{CliError, ErrorCode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// JSON table artifact; `rows` are in canonical order (first parent most
/// significant).
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct CptArtifact {
    pub parents: Vec<VarDoc>,
    pub child: VarDoc,
    pub rows: Vec<Vec<f64>>,
}

impl CptArtifact {
    pub fn from_cpt(parent_names: &[String], child_name: &str, cpt: &Cpt) -> Self {
        CptArtifact {
            parents: parent_names
                .iter()
                .zip(cpt.parent_spaces())
                .map(|(name, space)| VarDoc { name: name.clone(), states: space.labels().to_vec() })
                .collect(),
            child: VarDoc {
                name: child_name.to_string(),
                states: cpt.child_space().labels().to_vec(),
            },
            rows: cpt.rows().to_vec(),
        }
    }

    pub fn to_cpt(&self) -> Result<Cpt, CliError> {
        let parent_spaces = self
            .parents
            .iter()
            .enumerate()
            .map(|(i, p)| {
                StateSpace::new(p.states.iter().cloned()).map_err(|e| {
                    CliError::new(ErrorCode::Schema, format!("parents[{i}].states"), e.to_string())
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let child_space = StateSpace::new(self.child.states.iter().cloned())
            .map_err(|e| CliError::new(ErrorCode::Schema, "child.states", e.to_string()))?;
        Cpt::new(parent_spaces, child_space, self.rows.clone())
            .map_err(|e| CliError::new(ErrorCode::Shape, "rows", e.to_string()))
    }
}

/// Fixed 17-significant-digit decimals so equal tables produce identical
/// bytes and diffs are meaningful.
fn format_probability(p: f64) -> String {
    format!("{p:.16e}")
}

/// CSV rendering: header of parent names then one column per child state,
/// data rows in canonical order with parent state labels.
pub fn to_csv(parent_names: &[String], cpt: &Cpt) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = parent_names.to_vec();
    for label in cpt.child_space().labels() {
        header.push(format!("p({label})"));
    }
    out.push_str(&header.join(","));
    out.push('\n');
    let indexer = cpt.indexer();
    for (row, config) in indexer.iter().enumerate() {
        let mut cells: Vec<String> = config
            .iter()
            .zip(cpt.parent_spaces())
            .map(|(&s, space)| space.labels()[s].clone())
            .collect();
        cells.extend(cpt.row(row).iter().map(|&p| format_probability(p)));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn to_json(parent_names: &[String], child_name: &str, cpt: &Cpt) -> String {
    let artifact = CptArtifact::from_cpt(parent_names, child_name, cpt);
    let mut text = serde_json::to_string_pretty(&artifact).expect("artifact serialization is total");
    text.push('\n');
    text
}

/// Read a table artifact in either format; JSON is tried first, then CSV.
pub fn parse_cpt_artifact(text: &str) -> Result<Cpt, CliError> {
    if text.trim_start().starts_with('{') {
        let artifact: CptArtifact = serde_json::from_str(text)
            .map_err(|e| CliError::new(ErrorCode::Syntax, "-", e.to_string()))?;
        return artifact.to_cpt();
    }
    parse_csv_cpt(text)
}

/// Rebuild a table from our own CSV output. Columns whose header matches
/// `p(<label>)` are probability columns; the rest are parent columns whose
/// state labels are collected from the data in first-seen order, which for
/// canonical row order reproduces the original label order.
fn parse_csv_cpt(text: &str) -> Result<Cpt, CliError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| CliError::new(ErrorCode::Syntax, "-", "empty CSV input"))?
        .split(',')
        .collect();
    let prob_start = header
        .iter()
        .position(|h| h.starts_with("p(") && h.ends_with(')'))
        .ok_or_else(|| CliError::new(ErrorCode::Syntax, "header", "no probability columns"))?;
    if !header[prob_start..].iter().all(|h| h.starts_with("p(") && h.ends_with(')')) {
        return Err(CliError::new(
            ErrorCode::Syntax,
            "header",
            "probability columns must be rightmost",
        ));
    }
    let child_states: Vec<String> =
        header[prob_start..].iter().map(|h| h[2..h.len() - 1].to_string()).collect();

    let mut parent_labels: Vec<Vec<String>> = vec![Vec::new(); prob_start];
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(CliError::new(
                ErrorCode::Shape,
                format!("row[{lineno}]"),
                format!("expected {} cells, got {}", header.len(), cells.len()),
            ));
        }
        for (labels, &cell) in parent_labels.iter_mut().zip(&cells[..prob_start]) {
            if !labels.iter().any(|l| l == cell) {
                labels.push(cell.to_string());
            }
        }
        let row = cells[prob_start..]
            .iter()
            .map(|c| {
                c.parse::<f64>().map_err(|_| {
                    CliError::new(
                        ErrorCode::Syntax,
                        format!("row[{lineno}]"),
                        format!("{c:?} is not a number"),
                    )
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }

    let parent_spaces = parent_labels
        .iter()
        .enumerate()
        .map(|(i, labels)| {
            StateSpace::new(labels.iter().cloned()).map_err(|e| {
                CliError::new(ErrorCode::Schema, format!("column[{i}]"), e.to_string())
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let child_space = StateSpace::new(child_states)
        .map_err(|e| CliError::new(ErrorCode::Schema, "header", e.to_string()))?;
    Cpt::new(parent_spaces, child_space, rows)
        .map_err(|e| CliError::new(ErrorCode::Shape, "rows", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sici_core::oracle::compare_cpts;

    fn small_cpt() -> Cpt {
        Cpt::new(
            vec![StateSpace::binary(), StateSpace::binary()],
            StateSpace::binary(),
            vec![
                vec![1.0, 0.0],
                vec![0.25, 0.75],
                vec![1.0 / 3.0, 2.0 / 3.0],
                vec![0.1, 0.9],
            ],
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trips_exactly() {
        let cpt = small_cpt();
        let names = vec!["X1".to_string(), "X2".to_string()];
        let csv = to_csv(&names, &cpt);
        assert!(csv.starts_with("X1,X2,p(false),p(true)\n"));
        assert_eq!(csv.lines().count(), 5);
        let parsed = parse_cpt_artifact(&csv).unwrap();
        let (diff, _) = compare_cpts(&cpt, &parsed).unwrap();
        assert_eq!(diff, 0.0, "17 significant digits round-trip f64 exactly");
    }

    #[test]
    fn json_round_trips_exactly() {
        let cpt = small_cpt();
        let names = vec!["X1".to_string(), "X2".to_string()];
        let parsed = parse_cpt_artifact(&to_json(&names, "Y", &cpt)).unwrap();
        let (diff, _) = compare_cpts(&cpt, &parsed).unwrap();
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn csv_output_is_deterministic() {
        let cpt = small_cpt();
        let names = vec!["A".to_string(), "B".to_string()];
        assert_eq!(to_csv(&names, &cpt), to_csv(&names, &cpt));
    }
}
