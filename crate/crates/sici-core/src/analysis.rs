//! Parameter accounting: how many free numbers a structured model needs
//! versus the full conditional table it stands in for, plus helpers for
//! spotting structure (shared rows) in an expanded table.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Result;
use crate::spec::{LocalSpec, Variant};
use crate::state::{cpt_entry_count, Cpt, StateSpace};
use crate::fabs;

/// One named contribution to a model's parameter count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamItem {
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamReport {
    /// Free parameters of the unstructured table over all parents.
    pub direct_count: usize,
    /// Free parameters of the structured model.
    pub model_count: usize,
    /// `direct_count - model_count`; negative when structure costs more.
    pub saving: i64,
    pub breakdown: Vec<ParamItem>,
}

fn product(spaces: &[StateSpace]) -> usize {
    spaces.iter().map(|s| s.cardinality()).product()
}

/// Count the free parameters of a spec and of the table it expands to.
///
/// Deterministic gates contribute zero; stochastic tables contribute
/// `(rows) * (columns - 1)`; per-cause probabilities contribute one each;
/// weighted-sum weights contribute one each.
pub fn parameter_count(spec: &LocalSpec) -> Result<ParamReport> {
    spec.validate()?;
    let parent_spaces = spec.parent_spaces();
    let direct_count = cpt_entry_count(&parent_spaces, &spec.child.space);

    let mech_spaces = spec.mechanism_spaces();
    let phi = spec.surjection();
    let blocks = phi.blocks();
    let child_card = spec.child.space.cardinality();

    let mut breakdown: Vec<ParamItem> = Vec::new();
    let mut push = |label: &str, count: usize| {
        breakdown.push(ParamItem { label: String::from(label), count });
    };

    let per_parent_mechanisms = |mechanism_cpts: &Vec<Cpt>| -> usize {
        mechanism_cpts
            .iter()
            .map(|c| cpt_entry_count(c.parent_spaces(), c.child_space()))
            .sum()
    };

    match &spec.variant {
        Variant::Ici { mechanism_cpts, .. } => {
            push("mechanism tables", per_parent_mechanisms(mechanism_cpts));
            push("combination gate", 0);
        }
        Variant::Pici { mechanism_cpts, lower_cpt } => {
            push("mechanism tables", per_parent_mechanisms(mechanism_cpts));
            push(
                "combination table",
                cpt_entry_count(lower_cpt.parent_spaces(), lower_cpt.child_space()),
            );
        }
        Variant::PiciAverage { mechanism_cpts } => {
            push("mechanism tables", per_parent_mechanisms(mechanism_cpts));
            push("averaging rule", 0);
        }
        Variant::Scm { .. } => {
            push("aggregation gate", 0);
            push("noise table", product(&mech_spaces) * (child_card - 1));
        }
        Variant::LsSici { lower_cpt, .. } => {
            push("block gates", 0);
            push(
                "combination table",
                cpt_entry_count(lower_cpt.parent_spaces(), lower_cpt.child_space()),
            );
        }
        Variant::UsSici { block_cpts, .. } => {
            push(
                "block tables",
                block_cpts
                    .iter()
                    .map(|c| cpt_entry_count(c.parent_spaces(), c.child_space()))
                    .sum(),
            );
            push("combination gate", 0);
        }
        Variant::DsSici { block_cpts, lower_cpt, .. } => {
            push(
                "block tables",
                block_cpts
                    .iter()
                    .map(|c| cpt_entry_count(c.parent_spaces(), c.child_space()))
                    .sum(),
            );
            push(
                "combination table",
                cpt_entry_count(lower_cpt.parent_spaces(), lower_cpt.child_space()),
            );
        }
        Variant::NoisyOr { inhibitor_probs } => {
            push("inhibition probabilities", inhibitor_probs.len());
        }
        Variant::NoisyMax { mechanism_cpts } => {
            push("mechanism tables", per_parent_mechanisms(mechanism_cpts));
            push("max gate", 0);
        }
        Variant::SurjectiveNoisyOr { block_inhibitor_probs, .. } => {
            push("block gates", 0);
            push("block inhibition probabilities", block_inhibitor_probs.len());
        }
        Variant::HassallBinary { weights } => {
            push("weights", weights.len());
        }
    }
    let _ = blocks; // block structure already folded into the tables above

    let model_count = breakdown.iter().map(|i| i.count).sum();
    Ok(ParamReport {
        direct_count,
        model_count,
        saving: direct_count as i64 - model_count as i64,
        breakdown,
    })
}

/// Group row indices whose entries agree within `tolerance` (transitively,
/// via a representative: each row joins the first group whose leader it
/// matches). Groups are ordered by first occurrence; indices ascend within
/// a group.
pub fn shared_row_groups(cpt: &Cpt, tolerance: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    'rows: for (i, row) in cpt.rows().iter().enumerate() {
        for group in groups.iter_mut() {
            let leader = &cpt.rows()[group[0]];
            if leader.iter().zip(row).all(|(&a, &b)| fabs(a - b) <= tolerance) {
                group.push(i);
                continue 'rows;
            }
        }
        groups.push(alloc::vec![i]);
    }
    groups
}

/// One line of the growth comparison for the all-binary independent-cause
/// model with a deterministic combiner: direct table size vs model size as
/// the number of parents grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrowthRow {
    pub parents: usize,
    pub direct: u128,
    pub model: u128,
}

/// Exponential-versus-linear growth table for 1..=max_parents binary
/// parents: direct needs 2^n free parameters, the structured model 2n.
pub fn growth_table(max_parents: usize) -> Vec<GrowthRow> {
    (1..=max_parents)
        .map(|n| GrowthRow { parents: n, direct: 1u128 << n, model: 2 * n as u128 })
        .collect()
}
