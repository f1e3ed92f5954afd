//! The on-disk spec format: a JSON document declaring the child, the
//! parents, and one model payload. Parsing produces a fully validated
//! `LocalSpec`; serializing a spec produces a document that parses back to
//! an equal document.

use serde::{Deserialize, Serialize};

use sici_core::structure::AmbientGraph;
use sici_core::{Cpt, GateFn, LocalSpec, StateSpace, Surjection, VarKind, VariableDecl, Variant};

use crate::error::{CliError, ErrorCode};
use crate::gate_text::{parse_gate, render_gate};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    pub schema_version: u32,
    pub child: VarDoc,
    pub parents: Vec<VarDoc>,
    pub model: ModelDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient: Option<AmbientDoc>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VarDoc {
    pub name: String,
    pub states: Vec<String>,
}

/// Stochastic mechanism: its state labels plus `p(m|x)` rows in canonical
/// order over the mechanism's own inputs.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MechanismDoc {
    pub states: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Deterministic block: named mechanism over a subset of parents, combined
/// by a gate expression whose inputs are the block's parent names.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GateBlockDoc {
    pub mechanism: String,
    pub parents: Vec<String>,
    pub gate: String,
}

/// Stochastic block: named mechanism with state labels and a `p(m|x_(i))`
/// table over the block's parents.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TableBlockDoc {
    pub mechanism: String,
    pub parents: Vec<String>,
    pub states: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelDoc {
    Ici { mechanisms: Vec<MechanismDoc>, combiner: String },
    Pici { mechanisms: Vec<MechanismDoc>, combination_table: Vec<Vec<f64>> },
    PiciAverage { mechanisms: Vec<MechanismDoc> },
    Scm { gate: String, noise_table: Vec<Vec<f64>> },
    LsSici { blocks: Vec<GateBlockDoc>, combination_table: Vec<Vec<f64>> },
    UsSici { blocks: Vec<TableBlockDoc>, combiner: String },
    DsSici { blocks: Vec<TableBlockDoc>, combination_table: Vec<Vec<f64>> },
    NoisyOr { inhibitor_probabilities: Vec<f64> },
    NoisyMax { mechanisms: Vec<MechanismDoc> },
    SurjectiveNoisyOr { blocks: Vec<GateBlockDoc>, inhibitor_probabilities: Vec<f64> },
    HassallBinary { weights: Vec<f64> },
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct AmbientDoc {
    #[serde(default)]
    pub nodes: Vec<String>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
}

const KNOWN_TYPES: [&str; 11] = [
    "ici",
    "pici",
    "pici_average",
    "scm",
    "ls_sici",
    "us_sici",
    "ds_sici",
    "noisy_or",
    "noisy_max",
    "surjective_noisy_or",
    "hassall_binary",
];

/// Parse document text. Two-stage so failure categories stay distinct:
/// JSON syntax, then version / model-type checks, then the typed schema.
pub fn parse_document(text: &str) -> Result<SpecDocument, CliError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::new(ErrorCode::Syntax, "-", e.to_string()))?;
    let version = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| CliError::new(ErrorCode::Schema, "schema_version", "missing or non-integer"))?;
    if version != SCHEMA_VERSION as u64 {
        return Err(CliError::new(
            ErrorCode::Schema,
            "schema_version",
            format!("unsupported version {version}, expected {SCHEMA_VERSION}"),
        ));
    }
    if let Some(tag) = value.get("model").and_then(|m| m.get("type")).and_then(|t| t.as_str()) {
        if !KNOWN_TYPES.contains(&tag) {
            return Err(CliError::new(
                ErrorCode::UnknownVariant,
                "model.type",
                format!("unknown model type {tag:?}; expected one of {KNOWN_TYPES:?}"),
            ));
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::new(ErrorCode::Schema, "-", e.to_string()))
}

pub fn serialize_document(doc: &SpecDocument) -> String {
    let mut out = serde_json::to_string_pretty(doc).expect("document serialization is total");
    out.push('\n');
    out
}

fn space_from(states: &[String], path: &str) -> Result<StateSpace, CliError> {
    StateSpace::new(states.iter().cloned())
        .map_err(|e| CliError::new(ErrorCode::Schema, path, e.to_string()))
}

fn cpt_from(
    parent_spaces: Vec<StateSpace>,
    child_space: StateSpace,
    rows: &[Vec<f64>],
    normalize: bool,
    path: &str,
) -> Result<Cpt, CliError> {
    let mut cpt = Cpt::new(parent_spaces, child_space, rows.to_vec())
        .map_err(|e| CliError::new(ErrorCode::Shape, path, e.to_string()))?;
    if normalize {
        cpt.normalize_rows()
            .map_err(|e| CliError::new(ErrorCode::Range, path, e.to_string()))?;
    }
    Ok(cpt)
}

struct Names<'a> {
    parents: &'a [VarDoc],
}

impl<'a> Names<'a> {
    fn index(&self, name: &str, path: &str) -> Result<usize, CliError> {
        self.parents.iter().position(|p| p.name == name).ok_or_else(|| {
            CliError::new(
                ErrorCode::UnknownName,
                path,
                format!("{name:?} is not a declared parent"),
            )
        })
    }
}

/// Resolve a block list into a surjection. Blocks must partition the parent
/// set; each block must list its parents in declaration order.
fn surjection_from_blocks(
    block_parents: &[Vec<String>],
    names: &Names,
    mech_names: &[&str],
    path: &str,
) -> Result<Surjection, CliError> {
    let n = names.parents.len();
    let mut assignment = vec![usize::MAX; n];
    for (b, parents) in block_parents.iter().enumerate() {
        if parents.is_empty() {
            return Err(CliError::new(
                ErrorCode::NonSurjective,
                format!("{path}[{b}].parents"),
                format!("block {:?} has no parents", mech_names[b]),
            ));
        }
        let mut last = None;
        for (j, name) in parents.iter().enumerate() {
            let idx = names.index(name, &format!("{path}[{b}].parents[{j}]"))?;
            if assignment[idx] != usize::MAX {
                return Err(CliError::new(
                    ErrorCode::NonSurjective,
                    format!("{path}[{b}].parents[{j}]"),
                    format!("parent {name:?} appears in more than one block"),
                ));
            }
            if let Some(prev) = last {
                if idx < prev {
                    return Err(CliError::new(
                        ErrorCode::Schema,
                        format!("{path}[{b}].parents[{j}]"),
                        "block parents must be listed in declaration order",
                    ));
                }
            }
            last = Some(idx);
            assignment[idx] = b;
        }
    }
    if let Some(missing) = assignment.iter().position(|&a| a == usize::MAX) {
        return Err(CliError::new(
            ErrorCode::NonSurjective,
            path,
            format!("parent {:?} is not assigned to any block", names.parents[missing].name),
        ));
    }
    Surjection::new(assignment, block_parents.len())
        .map_err(|e| CliError::new(ErrorCode::NonSurjective, path, e.to_string()))
}

fn unique_mechanism_names(names: &[&str], path: &str) -> Result<(), CliError> {
    for (i, name) in names.iter().enumerate() {
        if names[..i].contains(name) {
            return Err(CliError::new(
                ErrorCode::Schema,
                format!("{path}[{i}].mechanism"),
                format!("duplicate mechanism name {name:?}"),
            ));
        }
    }
    Ok(())
}

/// Build the validated spec a document describes. With `normalize` set,
/// every embedded stochastic table is row-normalized before validation.
pub fn document_to_spec(doc: &SpecDocument, normalize: bool) -> Result<LocalSpec, CliError> {
    let child_space = space_from(&doc.child.states, "child.states")?;
    let child = VariableDecl::new(doc.child.name.clone(), child_space.clone(), VarKind::Child);
    let mut parents = Vec::new();
    for (i, p) in doc.parents.iter().enumerate() {
        let space = space_from(&p.states, &format!("parents[{i}].states"))?;
        parents.push(VariableDecl::new(p.name.clone(), space, VarKind::Parent));
    }
    let names = Names { parents: &doc.parents };
    let parent_spaces: Vec<StateSpace> = parents.iter().map(|p| p.space.clone()).collect();
    let n = parents.len();

    let per_parent_mechanisms = |mechanisms: &[MechanismDoc]| -> Result<Vec<Cpt>, CliError> {
        if mechanisms.len() != n {
            return Err(CliError::new(
                ErrorCode::Shape,
                "model.mechanisms",
                format!("expected one mechanism per parent ({n}), got {}", mechanisms.len()),
            ));
        }
        mechanisms
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let space = space_from(&m.states, &format!("model.mechanisms[{i}].states"))?;
                cpt_from(
                    vec![parent_spaces[i].clone()],
                    space,
                    &m.rows,
                    normalize,
                    &format!("model.mechanisms[{i}].rows"),
                )
            })
            .collect()
    };

    let table_blocks = |blocks: &[TableBlockDoc]| -> Result<(Surjection, Vec<Cpt>), CliError> {
        let mech_names: Vec<&str> = blocks.iter().map(|b| b.mechanism.as_str()).collect();
        unique_mechanism_names(&mech_names, "model.blocks")?;
        let block_parents: Vec<Vec<String>> = blocks.iter().map(|b| b.parents.clone()).collect();
        let phi = surjection_from_blocks(&block_parents, &names, &mech_names, "model.blocks")?;
        let cpts = blocks
            .iter()
            .enumerate()
            .map(|(b, blk)| {
                let space = space_from(&blk.states, &format!("model.blocks[{b}].states"))?;
                let spaces = blk
                    .parents
                    .iter()
                    .map(|p| Ok(parent_spaces[names.index(p, "model.blocks")?].clone()))
                    .collect::<Result<Vec<_>, CliError>>()?;
                cpt_from(spaces, space, &blk.rows, normalize, &format!("model.blocks[{b}].rows"))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok((phi, cpts))
    };

    let gate_blocks = |blocks: &[GateBlockDoc]| -> Result<(Surjection, Vec<GateFn>), CliError> {
        let mech_names: Vec<&str> = blocks.iter().map(|b| b.mechanism.as_str()).collect();
        unique_mechanism_names(&mech_names, "model.blocks")?;
        let block_parents: Vec<Vec<String>> = blocks.iter().map(|b| b.parents.clone()).collect();
        let phi = surjection_from_blocks(&block_parents, &names, &mech_names, "model.blocks")?;
        let gates = blocks
            .iter()
            .enumerate()
            .map(|(b, blk)| {
                let input_names: Vec<&str> = blk.parents.iter().map(String::as_str).collect();
                let spaces = blk
                    .parents
                    .iter()
                    .map(|p| Ok(parent_spaces[names.index(p, "model.blocks")?].clone()))
                    .collect::<Result<Vec<_>, CliError>>()?;
                parse_gate(&blk.gate, &input_names, &spaces, &format!("model.blocks[{b}].gate"))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok((phi, gates))
    };

    let lower_cpt = |mech_spaces: Vec<StateSpace>, rows: &[Vec<f64>]| -> Result<Cpt, CliError> {
        cpt_from(mech_spaces, child_space.clone(), rows, normalize, "model.combination_table")
    };

    let combiner_gate = |text: &str,
                         mech_names: Vec<String>,
                         mech_spaces: Vec<StateSpace>|
     -> Result<GateFn, CliError> {
        let refs: Vec<&str> = mech_names.iter().map(String::as_str).collect();
        parse_gate(text, &refs, &mech_spaces, "model.combiner")
    };

    let probabilities_in_range = |probs: &[f64], path: &str| -> Result<(), CliError> {
        for (i, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(CliError::new(
                    ErrorCode::Range,
                    format!("{path}[{i}]"),
                    format!("{p} is not a probability"),
                ));
            }
        }
        Ok(())
    };

    let variant = match &doc.model {
        ModelDoc::Ici { mechanisms, combiner } => {
            let mechanism_cpts = per_parent_mechanisms(mechanisms)?;
            let mech_spaces: Vec<StateSpace> =
                mechanism_cpts.iter().map(|c| c.child_space().clone()).collect();
            let mech_names: Vec<String> = (1..=n).map(|i| format!("m{i}")).collect();
            let lower_gate = combiner_gate(combiner, mech_names, mech_spaces)?;
            Variant::Ici { mechanism_cpts, lower_gate }
        }
        ModelDoc::Pici { mechanisms, combination_table } => {
            let mechanism_cpts = per_parent_mechanisms(mechanisms)?;
            let mech_spaces: Vec<StateSpace> =
                mechanism_cpts.iter().map(|c| c.child_space().clone()).collect();
            Variant::Pici { mechanism_cpts, lower_cpt: lower_cpt(mech_spaces, combination_table)? }
        }
        ModelDoc::PiciAverage { mechanisms } => {
            Variant::PiciAverage { mechanism_cpts: per_parent_mechanisms(mechanisms)? }
        }
        ModelDoc::Scm { gate, noise_table } => {
            let input_names: Vec<&str> = doc.parents.iter().map(|p| p.name.as_str()).collect();
            let gate = parse_gate(gate, &input_names, &parent_spaces, "model.gate")?;
            let noise = cpt_from(
                vec![gate.output_space().clone()],
                child_space.clone(),
                noise_table,
                normalize,
                "model.noise_table",
            )?;
            Variant::Scm { gate, lower_cpt: noise }
        }
        ModelDoc::LsSici { blocks, combination_table } => {
            let (phi, block_gates) = gate_blocks(blocks)?;
            let mech_spaces: Vec<StateSpace> =
                block_gates.iter().map(|g| g.output_space().clone()).collect();
            Variant::LsSici {
                phi,
                block_gates,
                lower_cpt: lower_cpt(mech_spaces, combination_table)?,
            }
        }
        ModelDoc::UsSici { blocks, combiner } => {
            let (phi, block_cpts) = table_blocks(blocks)?;
            let mech_spaces: Vec<StateSpace> =
                block_cpts.iter().map(|c| c.child_space().clone()).collect();
            let mech_names: Vec<String> = blocks.iter().map(|b| b.mechanism.clone()).collect();
            let lower_gate = combiner_gate(combiner, mech_names, mech_spaces)?;
            Variant::UsSici { phi, block_cpts, lower_gate }
        }
        ModelDoc::DsSici { blocks, combination_table } => {
            let (phi, block_cpts) = table_blocks(blocks)?;
            let mech_spaces: Vec<StateSpace> =
                block_cpts.iter().map(|c| c.child_space().clone()).collect();
            Variant::DsSici { phi, block_cpts, lower_cpt: lower_cpt(mech_spaces, combination_table)? }
        }
        ModelDoc::NoisyOr { inhibitor_probabilities } => {
            probabilities_in_range(inhibitor_probabilities, "model.inhibitor_probabilities")?;
            Variant::NoisyOr { inhibitor_probs: inhibitor_probabilities.clone() }
        }
        ModelDoc::NoisyMax { mechanisms } => {
            Variant::NoisyMax { mechanism_cpts: per_parent_mechanisms(mechanisms)? }
        }
        ModelDoc::SurjectiveNoisyOr { blocks, inhibitor_probabilities } => {
            let (phi, block_gates) = gate_blocks(blocks)?;
            probabilities_in_range(inhibitor_probabilities, "model.inhibitor_probabilities")?;
            if inhibitor_probabilities.len() != blocks.len() {
                return Err(CliError::new(
                    ErrorCode::Shape,
                    "model.inhibitor_probabilities",
                    format!(
                        "expected one probability per block ({}), got {}",
                        blocks.len(),
                        inhibitor_probabilities.len()
                    ),
                ));
            }
            Variant::SurjectiveNoisyOr {
                phi,
                block_gates,
                block_inhibitor_probs: inhibitor_probabilities.clone(),
            }
        }
        ModelDoc::HassallBinary { weights } => Variant::HassallBinary { weights: weights.clone() },
    };

    LocalSpec::new(child, parents, variant)
        .map_err(|e| CliError::new(ErrorCode::Validation, "model", e.to_string()))
}

pub fn ambient_from_doc(doc: &AmbientDoc) -> AmbientGraph {
    AmbientGraph { nodes: doc.nodes.clone(), edges: doc.edges.clone() }
}

fn var_doc(decl: &VariableDecl) -> VarDoc {
    VarDoc { name: decl.name.clone(), states: decl.space.labels().to_vec() }
}

fn mechanism_doc(cpt: &Cpt) -> MechanismDoc {
    MechanismDoc { states: cpt.child_space().labels().to_vec(), rows: cpt.rows().to_vec() }
}

/// Express a spec as a document. Mechanism names are generated (`m1…` for
/// per-parent models, `M1…` for blocks); gates are rendered in the text
/// grammar.
pub fn spec_to_document(spec: &LocalSpec) -> SpecDocument {
    let parent_names: Vec<&str> = spec.parents.iter().map(|p| p.name.as_str()).collect();
    let blocks_of = |phi: &Surjection| -> Vec<Vec<usize>> { phi.blocks() };

    let model = match &spec.variant {
        Variant::Ici { mechanism_cpts, lower_gate } => {
            let mech_names: Vec<String> =
                (1..=mechanism_cpts.len()).map(|i| format!("m{i}")).collect();
            let refs: Vec<&str> = mech_names.iter().map(String::as_str).collect();
            ModelDoc::Ici {
                mechanisms: mechanism_cpts.iter().map(mechanism_doc).collect(),
                combiner: render_gate(lower_gate.expr(), &refs),
            }
        }
        Variant::Pici { mechanism_cpts, lower_cpt } => ModelDoc::Pici {
            mechanisms: mechanism_cpts.iter().map(mechanism_doc).collect(),
            combination_table: lower_cpt.rows().to_vec(),
        },
        Variant::PiciAverage { mechanism_cpts } => ModelDoc::PiciAverage {
            mechanisms: mechanism_cpts.iter().map(mechanism_doc).collect(),
        },
        Variant::Scm { gate, lower_cpt } => ModelDoc::Scm {
            gate: render_gate(gate.expr(), &parent_names),
            noise_table: lower_cpt.rows().to_vec(),
        },
        Variant::LsSici { phi, block_gates, lower_cpt } => ModelDoc::LsSici {
            blocks: blocks_of(phi)
                .iter()
                .zip(block_gates)
                .enumerate()
                .map(|(k, (block, gate))| {
                    let block_names: Vec<&str> = block.iter().map(|&p| parent_names[p]).collect();
                    GateBlockDoc {
                        mechanism: format!("M{}", k + 1),
                        parents: block_names.iter().map(|s| s.to_string()).collect(),
                        gate: render_gate(gate.expr(), &block_names),
                    }
                })
                .collect(),
            combination_table: lower_cpt.rows().to_vec(),
        },
        Variant::UsSici { phi, block_cpts, lower_gate } => {
            let mech_names: Vec<String> =
                (1..=block_cpts.len()).map(|k| format!("M{k}")).collect();
            let refs: Vec<&str> = mech_names.iter().map(String::as_str).collect();
            ModelDoc::UsSici {
                blocks: table_block_docs(phi, block_cpts, &parent_names),
                combiner: render_gate(lower_gate.expr(), &refs),
            }
        }
        Variant::DsSici { phi, block_cpts, lower_cpt } => ModelDoc::DsSici {
            blocks: table_block_docs(phi, block_cpts, &parent_names),
            combination_table: lower_cpt.rows().to_vec(),
        },
        Variant::NoisyOr { inhibitor_probs } => {
            ModelDoc::NoisyOr { inhibitor_probabilities: inhibitor_probs.clone() }
        }
        Variant::NoisyMax { mechanism_cpts } => ModelDoc::NoisyMax {
            mechanisms: mechanism_cpts.iter().map(mechanism_doc).collect(),
        },
        Variant::SurjectiveNoisyOr { phi, block_gates, block_inhibitor_probs } => {
            ModelDoc::SurjectiveNoisyOr {
                blocks: blocks_of(phi)
                    .iter()
                    .zip(block_gates)
                    .enumerate()
                    .map(|(k, (block, gate))| {
                        let block_names: Vec<&str> =
                            block.iter().map(|&p| parent_names[p]).collect();
                        GateBlockDoc {
                            mechanism: format!("M{}", k + 1),
                            parents: block_names.iter().map(|s| s.to_string()).collect(),
                            gate: render_gate(gate.expr(), &block_names),
                        }
                    })
                    .collect(),
                inhibitor_probabilities: block_inhibitor_probs.clone(),
            }
        }
        Variant::HassallBinary { weights } => ModelDoc::HassallBinary { weights: weights.clone() },
    };

    SpecDocument {
        schema_version: SCHEMA_VERSION,
        child: var_doc(&spec.child),
        parents: spec.parents.iter().map(var_doc).collect(),
        model,
        ambient: None,
    }
}

fn table_block_docs(phi: &Surjection, block_cpts: &[Cpt], parent_names: &[&str]) -> Vec<TableBlockDoc> {
    phi.blocks()
        .iter()
        .zip(block_cpts)
        .enumerate()
        .map(|(k, (block, cpt))| TableBlockDoc {
            mechanism: format!("M{}", k + 1),
            parents: block.iter().map(|&p| parent_names[p].to_string()).collect(),
            states: cpt.child_space().labels().to_vec(),
            rows: cpt.rows().to_vec(),
        })
        .collect()
}
