//! Deterministic combination functions as evaluable expression trees.
//!
//! Boolean operators (OR/AND/XOR/NOT/THRESHOLD) work over binary spaces
//! with the convention index 0 = false and 1 = true. MAX/MIN compare state
//! indices within the shared ordered output space. Noise never enters
//! through a gate; stochasticity lives exclusively in CPTs.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::state::{Cpt, StateSpace};

/// A gate expression. Composition depth is unbounded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gate {
    /// The value of declared input slot `i`.
    Input(usize),
    /// A fixed output state.
    Constant(usize),
    Not(Box<Gate>),
    Or(Vec<Gate>),
    And(Vec<Gate>),
    Xor(Vec<Gate>),
    Max(Vec<Gate>),
    Min(Vec<Gate>),
    /// True iff at least `k` operands are true.
    Threshold(usize, Vec<Gate>),
}

impl Gate {
    pub fn not(g: Gate) -> Gate {
        Gate::Not(Box::new(g))
    }
}

/// A gate expression together with its declared input spaces and output
/// space, giving it a checked, evaluable function signature.
#[derive(Debug, Clone, PartialEq)]
pub struct GateFn {
    expr: Gate,
    input_spaces: Vec<StateSpace>,
    output_space: StateSpace,
}

impl GateFn {
    pub fn new(expr: Gate, input_spaces: Vec<StateSpace>, output_space: StateSpace) -> Result<Self> {
        let gate = GateFn { expr, input_spaces, output_space };
        let root_card = gate.check(&gate.expr)?;
        if root_card != gate.output_space.cardinality() {
            return Err(Error::GateType(format!(
                "expression produces a {root_card}-state value but the output space has {} states",
                gate.output_space.cardinality()
            )));
        }
        Ok(gate)
    }

    /// Identity over a single input.
    pub fn identity(space: StateSpace) -> Self {
        GateFn { expr: Gate::Input(0), input_spaces: alloc::vec![space.clone()], output_space: space }
    }

    /// n-ary OR over binary inputs.
    pub fn or_n(n: usize) -> Self {
        let b = StateSpace::binary();
        GateFn {
            expr: Gate::Or((0..n).map(Gate::Input).collect()),
            input_spaces: alloc::vec![b.clone(); n],
            output_space: b,
        }
    }

    /// n-ary MAX over copies of an ordered space.
    pub fn max_n(n: usize, space: StateSpace) -> Self {
        GateFn {
            expr: Gate::Max((0..n).map(Gate::Input).collect()),
            input_spaces: alloc::vec![space.clone(); n],
            output_space: space,
        }
    }

    pub fn expr(&self) -> &Gate {
        &self.expr
    }

    pub fn input_spaces(&self) -> &[StateSpace] {
        &self.input_spaces
    }

    pub fn output_space(&self) -> &StateSpace {
        &self.output_space
    }

    pub fn arity(&self) -> usize {
        self.input_spaces.len()
    }

    /// Cardinality of the value a sub-expression produces, verifying the
    /// typing rules along the way.
    fn check(&self, expr: &Gate) -> Result<usize> {
        match expr {
            Gate::Input(slot) => {
                let space = self.input_spaces.get(*slot).ok_or_else(|| {
                    Error::GateArity(format!(
                        "input slot {slot} referenced but only {} inputs declared",
                        self.input_spaces.len()
                    ))
                })?;
                Ok(space.cardinality())
            }
            Gate::Constant(state) => {
                if *state >= self.output_space.cardinality() {
                    return Err(Error::GateType(format!(
                        "constant state {state} outside the {}-state output space",
                        self.output_space.cardinality()
                    )));
                }
                Ok(self.output_space.cardinality())
            }
            Gate::Not(inner) => {
                self.check_binary(inner, "not")?;
                Ok(2)
            }
            Gate::Or(ops) | Gate::And(ops) | Gate::Xor(ops) => {
                if ops.is_empty() {
                    return Err(Error::GateArity("boolean operator needs at least one operand".into()));
                }
                for op in ops {
                    self.check_binary(op, "boolean operator")?;
                }
                Ok(2)
            }
            Gate::Threshold(k, ops) => {
                if ops.is_empty() {
                    return Err(Error::GateArity("threshold needs at least one operand".into()));
                }
                if *k > ops.len() {
                    return Err(Error::GateArity(format!(
                        "threshold {k} exceeds operand count {}",
                        ops.len()
                    )));
                }
                for op in ops {
                    self.check_binary(op, "threshold")?;
                }
                Ok(2)
            }
            Gate::Max(ops) | Gate::Min(ops) => {
                if ops.is_empty() {
                    return Err(Error::GateArity("max/min needs at least one operand".into()));
                }
                let out = self.output_space.cardinality();
                for op in ops {
                    let card = self.check(op)?;
                    if card != out {
                        return Err(Error::GateType(format!(
                            "max/min operand has {card} states, output space has {out}"
                        )));
                    }
                }
                Ok(out)
            }
        }
    }

    fn check_binary(&self, expr: &Gate, ctx: &str) -> Result<()> {
        let card = self.check(expr)?;
        if card != 2 {
            return Err(Error::GateType(format!("{ctx} applied to a {card}-state operand")));
        }
        Ok(())
    }

    /// Evaluate on one input configuration.
    pub fn eval(&self, inputs: &[usize]) -> Result<usize> {
        if inputs.len() != self.input_spaces.len() {
            return Err(Error::GateArity(format!(
                "{} inputs supplied, {} declared",
                inputs.len(),
                self.input_spaces.len()
            )));
        }
        for (i, (&v, space)) in inputs.iter().zip(&self.input_spaces).enumerate() {
            if v >= space.cardinality() {
                return Err(Error::GateArity(format!(
                    "input {i} has state {v}, beyond cardinality {}",
                    space.cardinality()
                )));
            }
        }
        Ok(self.eval_expr(&self.expr, inputs))
    }

    fn eval_expr(&self, expr: &Gate, inputs: &[usize]) -> usize {
        match expr {
            Gate::Input(slot) => inputs[*slot],
            Gate::Constant(state) => *state,
            Gate::Not(inner) => 1 - self.eval_expr(inner, inputs),
            Gate::Or(ops) => ops.iter().any(|g| self.eval_expr(g, inputs) == 1) as usize,
            Gate::And(ops) => ops.iter().all(|g| self.eval_expr(g, inputs) == 1) as usize,
            Gate::Xor(ops) => ops.iter().map(|g| self.eval_expr(g, inputs)).sum::<usize>() % 2,
            Gate::Threshold(k, ops) => {
                (ops.iter().filter(|g| self.eval_expr(g, inputs) == 1).count() >= *k) as usize
            }
            Gate::Max(ops) => ops.iter().map(|g| self.eval_expr(g, inputs)).max().unwrap(),
            Gate::Min(ops) => ops.iter().map(|g| self.eval_expr(g, inputs)).min().unwrap(),
        }
    }

    /// Expand the gate into a degenerate 0/1 CPT, one row per input
    /// configuration.
    pub fn to_cpt(&self) -> Cpt {
        Cpt::deterministic_from_fn(self.input_spaces.clone(), self.output_space.clone(), |config| {
            self.eval(config).expect("configs come from the declared spaces")
        })
        .expect("gate output always lies in the output space")
    }
}
