//! The declarative local-structure specification: a child, its parents and
//! one model variant's payload.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gates::GateFn;
use crate::state::{Cpt, StateSpace, VariableDecl};
use crate::structure::Surjection;
use crate::ROW_SUM_TOLERANCE;

/// Payload for one of the supported local model variants.
#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    /// Stochastic mechanisms `p(m_i|x_i)`, one per parent, combined by a
    /// deterministic gate.
    Ici { mechanism_cpts: Vec<Cpt>, lower_gate: GateFn },
    /// Stochastic mechanisms combined by a stochastic lower table `p(y|m)`.
    Pici { mechanism_cpts: Vec<Cpt>, lower_cpt: Cpt },
    /// PICI with the averaging lower table `p(y|m) = |{i: m_i=y}|/n`.
    PiciAverage { mechanism_cpts: Vec<Cpt> },
    /// All parents combine deterministically into a single intermediate
    /// node; the child is stochastic given that node.
    Scm { gate: GateFn, lower_cpt: Cpt },
    /// Deterministic block gates, stochastic lower table.
    LsSici { phi: Surjection, block_gates: Vec<GateFn>, lower_cpt: Cpt },
    /// Stochastic block tables `p(m_i|x_(i))`, deterministic lower gate.
    UsSici { phi: Surjection, block_cpts: Vec<Cpt>, lower_gate: GateFn },
    /// Stochastic block tables and stochastic lower table.
    DsSici { phi: Surjection, block_cpts: Vec<Cpt>, lower_cpt: Cpt },
    /// Binary noisy-OR with one inhibitor probability per parent.
    NoisyOr { inhibitor_probs: Vec<f64> },
    /// ICI with the MAX gate over a shared ordered space.
    NoisyMax { mechanism_cpts: Vec<Cpt> },
    /// Noisy-OR over parent blocks: one gate and one inhibitor per block.
    SurjectiveNoisyOr {
        phi: Surjection,
        block_gates: Vec<GateFn>,
        block_inhibitor_probs: Vec<f64>,
    },
    /// Binary weighted interpolation `P(Y=1|x) = Σw_i·x_i / Σw_i`.
    HassallBinary { weights: Vec<f64> },
}

impl Variant {
    pub fn tag(&self) -> &'static str {
        match self {
            Variant::Ici { .. } => "ici",
            Variant::Pici { .. } => "pici",
            Variant::PiciAverage { .. } => "pici_average",
            Variant::Scm { .. } => "scm",
            Variant::LsSici { .. } => "ls_sici",
            Variant::UsSici { .. } => "us_sici",
            Variant::DsSici { .. } => "ds_sici",
            Variant::NoisyOr { .. } => "noisy_or",
            Variant::NoisyMax { .. } => "noisy_max",
            Variant::SurjectiveNoisyOr { .. } => "surjective_noisy_or",
            Variant::HassallBinary { .. } => "hassall_binary",
        }
    }
}

/// A local structure: child node, ordered parent set and the model payload.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSpec {
    pub child: VariableDecl,
    pub parents: Vec<VariableDecl>,
    pub variant: Variant,
}

fn same_shape(a: &StateSpace, b: &StateSpace) -> bool {
    a.cardinality() == b.cardinality()
}

impl LocalSpec {
    pub fn new(child: VariableDecl, parents: Vec<VariableDecl>, variant: Variant) -> Result<Self> {
        let spec = LocalSpec { child, parents, variant };
        spec.validate()?;
        Ok(spec)
    }

    pub fn parent_count(&self) -> usize {
        self.parents.len()
    }

    pub fn parent_spaces(&self) -> Vec<StateSpace> {
        self.parents.iter().map(|p| p.space.clone()).collect()
    }

    /// The parent→mechanism map: explicit for SICI variants, the identity
    /// bijection for ICI-family variants, a single block for the SCM.
    pub fn surjection(&self) -> Surjection {
        let n = self.parents.len();
        match &self.variant {
            Variant::LsSici { phi, .. }
            | Variant::UsSici { phi, .. }
            | Variant::DsSici { phi, .. }
            | Variant::SurjectiveNoisyOr { phi, .. } => phi.clone(),
            Variant::Scm { .. } => Surjection::single_block(n),
            _ => Surjection::identity(n),
        }
    }

    pub fn mechanism_count(&self) -> usize {
        self.surjection().mechanism_count()
    }

    /// State spaces of the mechanism nodes, in mechanism order.
    pub fn mechanism_spaces(&self) -> Vec<StateSpace> {
        match &self.variant {
            Variant::Ici { mechanism_cpts, .. }
            | Variant::Pici { mechanism_cpts, .. }
            | Variant::PiciAverage { mechanism_cpts }
            | Variant::NoisyMax { mechanism_cpts } => {
                mechanism_cpts.iter().map(|c| c.child_space().clone()).collect()
            }
            Variant::Scm { gate, .. } => alloc::vec![gate.output_space().clone()],
            Variant::LsSici { block_gates, .. } => {
                block_gates.iter().map(|g| g.output_space().clone()).collect()
            }
            Variant::UsSici { block_cpts, .. } | Variant::DsSici { block_cpts, .. } => {
                block_cpts.iter().map(|c| c.child_space().clone()).collect()
            }
            Variant::NoisyOr { inhibitor_probs } => {
                alloc::vec![StateSpace::binary(); inhibitor_probs.len()]
            }
            Variant::SurjectiveNoisyOr { phi, .. } => {
                alloc::vec![StateSpace::binary(); phi.mechanism_count()]
            }
            Variant::HassallBinary { weights } => alloc::vec![StateSpace::binary(); weights.len()],
        }
    }

    /// Whether the variant carries explicit inhibitor roots in its
    /// materialized structure.
    pub fn has_inhibitors(&self) -> bool {
        matches!(self.variant, Variant::NoisyOr { .. } | Variant::SurjectiveNoisyOr { .. })
    }

    fn require_all_binary(&self, what: &str) -> Result<()> {
        if !self.child.space.is_binary() || self.parents.iter().any(|p| !p.space.is_binary()) {
            return Err(Error::Spec(format!("{what} requires all variables to be binary")));
        }
        Ok(())
    }

    fn check_mechanism_cpts(&self, mechanism_cpts: &[Cpt]) -> Result<()> {
        let n = self.parents.len();
        if mechanism_cpts.len() != n {
            return Err(Error::Spec(format!(
                "expected {n} mechanism CPTs (one per parent), got {}",
                mechanism_cpts.len()
            )));
        }
        for (i, cpt) in mechanism_cpts.iter().enumerate() {
            if cpt.parent_spaces().len() != 1 || !same_shape(&cpt.parent_spaces()[0], &self.parents[i].space)
            {
                return Err(Error::Spec(format!(
                    "mechanism CPT {i} must condition on exactly parent '{}'",
                    self.parents[i].name
                )));
            }
            if !cpt.validate(ROW_SUM_TOLERANCE).is_empty() {
                return Err(Error::Spec(format!("mechanism CPT {i} is not row-stochastic")));
            }
        }
        Ok(())
    }

    fn check_block_cpts(&self, phi: &Surjection, block_cpts: &[Cpt]) -> Result<()> {
        let blocks = phi.blocks();
        if block_cpts.len() != blocks.len() {
            return Err(Error::Spec(format!(
                "expected {} block CPTs, got {}",
                blocks.len(),
                block_cpts.len()
            )));
        }
        for (i, (cpt, block)) in block_cpts.iter().zip(&blocks).enumerate() {
            if cpt.parent_spaces().len() != block.len() {
                return Err(Error::Spec(format!(
                    "block CPT {i} conditions on {} variables but block has {}",
                    cpt.parent_spaces().len(),
                    block.len()
                )));
            }
            for (space, &parent) in cpt.parent_spaces().iter().zip(block) {
                if !same_shape(space, &self.parents[parent].space) {
                    return Err(Error::Spec(format!(
                        "block CPT {i} parent spaces do not match block parents"
                    )));
                }
            }
            if !cpt.validate(ROW_SUM_TOLERANCE).is_empty() {
                return Err(Error::Spec(format!("block CPT {i} is not row-stochastic")));
            }
        }
        Ok(())
    }

    fn check_block_gates(&self, phi: &Surjection, block_gates: &[GateFn]) -> Result<()> {
        let blocks = phi.blocks();
        if block_gates.len() != blocks.len() {
            return Err(Error::Spec(format!(
                "expected {} block gates, got {}",
                blocks.len(),
                block_gates.len()
            )));
        }
        for (i, (gate, block)) in block_gates.iter().zip(&blocks).enumerate() {
            if gate.arity() != block.len() {
                return Err(Error::Spec(format!(
                    "block gate {i} has arity {} but block has {} parents",
                    gate.arity(),
                    block.len()
                )));
            }
            for (space, &parent) in gate.input_spaces().iter().zip(block) {
                if !same_shape(space, &self.parents[parent].space) {
                    return Err(Error::Spec(format!(
                        "block gate {i} input spaces do not match block parents"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_lower_gate(&self, lower_gate: &GateFn, mech_spaces: &[StateSpace]) -> Result<()> {
        if lower_gate.arity() != mech_spaces.len() {
            return Err(Error::Spec(format!(
                "lower gate arity {} does not match mechanism count {}",
                lower_gate.arity(),
                mech_spaces.len()
            )));
        }
        for (space, mech) in lower_gate.input_spaces().iter().zip(mech_spaces) {
            if !same_shape(space, mech) {
                return Err(Error::Spec("lower gate input spaces do not match mechanisms".into()));
            }
        }
        if !same_shape(lower_gate.output_space(), &self.child.space) {
            return Err(Error::Spec(format!(
                "lower gate output space has {} states but the child has {}",
                lower_gate.output_space().cardinality(),
                self.child.space.cardinality()
            )));
        }
        Ok(())
    }

    fn check_lower_cpt(&self, lower_cpt: &Cpt, mech_spaces: &[StateSpace]) -> Result<()> {
        if lower_cpt.parent_spaces().len() != mech_spaces.len() {
            return Err(Error::Spec(format!(
                "lower CPT conditions on {} variables but there are {} mechanisms",
                lower_cpt.parent_spaces().len(),
                mech_spaces.len()
            )));
        }
        for (space, mech) in lower_cpt.parent_spaces().iter().zip(mech_spaces) {
            if !same_shape(space, mech) {
                return Err(Error::Spec("lower CPT parent spaces do not match mechanisms".into()));
            }
        }
        if !same_shape(lower_cpt.child_space(), &self.child.space) {
            return Err(Error::Spec("lower CPT child space does not match the child".into()));
        }
        if !lower_cpt.validate(ROW_SUM_TOLERANCE).is_empty() {
            return Err(Error::Spec("lower CPT is not row-stochastic".into()));
        }
        Ok(())
    }

    fn check_probs(probs: &[f64], expected: usize, what: &str) -> Result<()> {
        if probs.len() != expected {
            return Err(Error::Spec(format!(
                "expected {expected} {what}, got {}",
                probs.len()
            )));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Spec(format!("{what}[{i}] = {p} outside [0,1]")));
            }
        }
        Ok(())
    }

    /// Check every structural invariant of the spec.
    pub fn validate(&self) -> Result<()> {
        let n = self.parents.len();
        if n == 0 {
            return Err(Error::Spec("a local structure needs at least one parent".into()));
        }
        for (i, p) in self.parents.iter().enumerate() {
            if p.name == self.child.name {
                return Err(Error::Spec(format!("parent {i} shares the child's name '{}'", p.name)));
            }
            if self.parents[..i].iter().any(|q| q.name == p.name) {
                return Err(Error::Spec(format!("duplicate parent name '{}'", p.name)));
            }
        }
        match &self.variant {
            Variant::Ici { mechanism_cpts, lower_gate } => {
                self.check_mechanism_cpts(mechanism_cpts)?;
                let spaces: Vec<_> = mechanism_cpts.iter().map(|c| c.child_space().clone()).collect();
                self.check_lower_gate(lower_gate, &spaces)
            }
            Variant::Pici { mechanism_cpts, lower_cpt } => {
                self.check_mechanism_cpts(mechanism_cpts)?;
                let spaces: Vec<_> = mechanism_cpts.iter().map(|c| c.child_space().clone()).collect();
                self.check_lower_cpt(lower_cpt, &spaces)
            }
            Variant::PiciAverage { mechanism_cpts } => {
                self.check_mechanism_cpts(mechanism_cpts)?;
                for (i, cpt) in mechanism_cpts.iter().enumerate() {
                    if !same_shape(cpt.child_space(), &self.child.space) {
                        return Err(Error::Spec(format!(
                            "pici_average requires mechanism {i} to share the child's space"
                        )));
                    }
                }
                Ok(())
            }
            Variant::Scm { gate, lower_cpt } => {
                if gate.arity() != n {
                    return Err(Error::Spec(format!(
                        "SCM gate arity {} does not match parent count {n}",
                        gate.arity()
                    )));
                }
                for (space, parent) in gate.input_spaces().iter().zip(&self.parents) {
                    if !same_shape(space, &parent.space) {
                        return Err(Error::Spec("SCM gate input spaces do not match parents".into()));
                    }
                }
                self.check_lower_cpt(lower_cpt, &[gate.output_space().clone()])
            }
            Variant::LsSici { phi, block_gates, lower_cpt } => {
                phi.check_arity(n)?;
                self.check_block_gates(phi, block_gates)?;
                let spaces: Vec<_> = block_gates.iter().map(|g| g.output_space().clone()).collect();
                self.check_lower_cpt(lower_cpt, &spaces)
            }
            Variant::UsSici { phi, block_cpts, lower_gate } => {
                phi.check_arity(n)?;
                self.check_block_cpts(phi, block_cpts)?;
                let spaces: Vec<_> = block_cpts.iter().map(|c| c.child_space().clone()).collect();
                self.check_lower_gate(lower_gate, &spaces)
            }
            Variant::DsSici { phi, block_cpts, lower_cpt } => {
                phi.check_arity(n)?;
                self.check_block_cpts(phi, block_cpts)?;
                let spaces: Vec<_> = block_cpts.iter().map(|c| c.child_space().clone()).collect();
                self.check_lower_cpt(lower_cpt, &spaces)
            }
            Variant::NoisyOr { inhibitor_probs } => {
                self.require_all_binary("noisy-OR")?;
                Self::check_probs(inhibitor_probs, n, "inhibitor probabilities")
            }
            Variant::NoisyMax { mechanism_cpts } => {
                self.check_mechanism_cpts(mechanism_cpts)?;
                for (i, cpt) in mechanism_cpts.iter().enumerate() {
                    if !same_shape(cpt.child_space(), &self.child.space) {
                        return Err(Error::Spec(format!(
                            "noisy-MAX requires mechanism {i} to share the child's ordered space"
                        )));
                    }
                }
                Ok(())
            }
            Variant::SurjectiveNoisyOr { phi, block_gates, block_inhibitor_probs } => {
                self.require_all_binary("surjective noisy-OR")?;
                phi.check_arity(n)?;
                self.check_block_gates(phi, block_gates)?;
                for (i, gate) in block_gates.iter().enumerate() {
                    if !gate.output_space().is_binary() {
                        return Err(Error::Spec(format!("block gate {i} must produce a binary value")));
                    }
                }
                Self::check_probs(block_inhibitor_probs, phi.mechanism_count(), "block inhibitor probabilities")
            }
            Variant::HassallBinary { weights } => {
                self.require_all_binary("Hassall's binary rule")?;
                if weights.len() != n {
                    return Err(Error::Spec(format!(
                        "expected {n} weights, got {}",
                        weights.len()
                    )));
                }
                for (i, &w) in weights.iter().enumerate() {
                    if !(w > 0.0) {
                        return Err(Error::Spec(format!("weight {i} must be strictly positive, got {w}")));
                    }
                }
                Ok(())
            }
        }
    }

    /// Non-fatal modelling smells worth surfacing to the user.
    pub fn warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        let child_card = self.child.space.cardinality();
        for (i, space) in self.mechanism_spaces().iter().enumerate() {
            if space.cardinality() != child_card {
                warnings.push(format!(
                    "mechanism {i} has {} states while the child has {child_card}; \
                     mechanism spaces typically mirror the child's",
                    space.cardinality()
                ));
            }
        }
        // deterministic upper layers with singleton blocks collapse to a relabelling
        if let Variant::LsSici { phi, .. } | Variant::SurjectiveNoisyOr { phi, .. } = &self.variant {
            if phi.mechanism_count() == self.parents.len() {
                warnings.push(
                    "every block is a singleton; deterministic upper relationships add nothing over \
                     the bijective model"
                        .into(),
                );
            }
        }
        warnings
    }
}
