//! Discrete variables, state spaces, dense CPTs and mixed-radix
//! configuration indexing.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fabs;

/// An ordered, finite set of named states.
///
/// State order is significant: MAX/MIN gates and ordered-state weight rules
/// rely on it. Index 0 is conventionally "false"/"absent" for binary spaces.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSpace {
    states: Vec<String>,
}

impl StateSpace {
    pub fn new<I, S>(states: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        if states.len() < 2 {
            return Err(Error::Spec(format!(
                "state space needs at least 2 states, got {}",
                states.len()
            )));
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].contains(s) {
                return Err(Error::Spec(format!("duplicate state label '{s}'")));
            }
        }
        Ok(StateSpace { states })
    }

    /// The binary space `["false", "true"]`.
    pub fn binary() -> Self {
        StateSpace { states: alloc::vec!["false".to_string(), "true".to_string()] }
    }

    /// A space `["s0", ..., "s{k-1}"]` of cardinality `k`.
    pub fn with_cardinality(k: usize) -> Result<Self> {
        StateSpace::new((0..k).map(|i| format!("s{i}")))
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn is_binary(&self) -> bool {
        self.states.len() == 2
    }

    pub fn labels(&self) -> &[String] {
        &self.states
    }

    pub fn label(&self, idx: usize) -> Option<&str> {
        self.states.get(idx).map(String::as_str)
    }

    pub fn index_of_label(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// Role of a variable within a local structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Parent,
    Mechanism,
    Child,
    Inhibitor,
    Ambient,
}

/// A named discrete variable.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableDecl {
    pub name: String,
    pub space: StateSpace,
    pub kind: VarKind,
}

impl VariableDecl {
    pub fn new(name: impl Into<String>, space: StateSpace, kind: VarKind) -> Self {
        VariableDecl { name: name.into(), space, kind }
    }
}

/// Bijection between configurations of an ordered variable list and row
/// indices. The first variable is most significant, so rows come out in
/// lexicographic order with the first parent varying slowest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIndexer {
    radices: Vec<usize>,
}

impl ConfigIndexer {
    pub fn new(radices: Vec<usize>) -> Self {
        debug_assert!(radices.iter().all(|&r| r > 0));
        ConfigIndexer { radices }
    }

    pub fn from_spaces(spaces: &[StateSpace]) -> Self {
        ConfigIndexer::new(spaces.iter().map(StateSpace::cardinality).collect())
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    /// Total number of configurations.
    pub fn len(&self) -> usize {
        self.radices.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false // the empty product is 1: there is always at least one config
    }

    /// Mixed-radix rank of `config`.
    pub fn index_of(&self, config: &[usize]) -> Result<usize> {
        if config.len() != self.radices.len() {
            return Err(Error::Index {
                what: "config length",
                value: config.len(),
                bound: self.radices.len(),
            });
        }
        let mut idx = 0usize;
        for (&c, &r) in config.iter().zip(&self.radices) {
            if c >= r {
                return Err(Error::Index { what: "state index", value: c, bound: r });
            }
            idx = idx * r + c;
        }
        Ok(idx)
    }

    /// Inverse of [`ConfigIndexer::index_of`].
    pub fn config_of(&self, index: usize) -> Result<Vec<usize>> {
        let total = self.len();
        if index >= total {
            return Err(Error::Index { what: "row index", value: index, bound: total });
        }
        let mut config = alloc::vec![0usize; self.radices.len()];
        let mut rem = index;
        for (slot, &r) in config.iter_mut().zip(&self.radices).rev() {
            *slot = rem % r;
            rem /= r;
        }
        Ok(config)
    }

    /// Iterate all configurations in canonical (lexicographic) order.
    pub fn iter(&self) -> ConfigIter<'_> {
        ConfigIter { indexer: self, next: 0 }
    }
}

pub struct ConfigIter<'a> {
    indexer: &'a ConfigIndexer,
    next: usize,
}

impl Iterator for ConfigIter<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.next >= self.indexer.len() {
            return None;
        }
        let config = self.indexer.config_of(self.next).expect("in range");
        self.next += 1;
        Some(config)
    }
}

/// One violation found by [`Cpt::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum CptViolation {
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    RowSum { row: usize, sum: f64 },
}

/// A dense, row-stochastic conditional probability table.
///
/// One row per parent configuration (canonical order, first parent most
/// significant), one column per child state.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    parent_spaces: Vec<StateSpace>,
    child_space: StateSpace,
    rows: Vec<Vec<f64>>,
    deterministic: bool,
}

impl Cpt {
    /// Build a table, checking only dimensions. Probabilistic validity is
    /// checked separately by [`Cpt::validate`] so that deliberately broken
    /// tables can still be represented and reported on.
    pub fn new(
        parent_spaces: Vec<StateSpace>,
        child_space: StateSpace,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let expected_rows: usize = parent_spaces.iter().map(StateSpace::cardinality).product();
        let expected_cols = child_space.cardinality();
        let got_cols = rows.iter().map(Vec::len).max().unwrap_or(expected_cols);
        if rows.len() != expected_rows || rows.iter().any(|r| r.len() != expected_cols) {
            return Err(Error::Shape {
                expected: (expected_rows, expected_cols),
                got: (rows.len(), got_cols),
            });
        }
        let deterministic = rows
            .iter()
            .all(|r| r.iter().filter(|&&p| p == 1.0).count() == 1 && r.iter().all(|&p| p == 0.0 || p == 1.0));
        Ok(Cpt { parent_spaces, child_space, rows, deterministic })
    }

    /// A deterministic table putting probability 1 on `target(config)`.
    pub fn deterministic_from_fn(
        parent_spaces: Vec<StateSpace>,
        child_space: StateSpace,
        mut target: impl FnMut(&[usize]) -> usize,
    ) -> Result<Self> {
        let indexer = ConfigIndexer::from_spaces(&parent_spaces);
        let cols = child_space.cardinality();
        let mut rows = Vec::with_capacity(indexer.len());
        for config in indexer.iter() {
            let y = target(&config);
            if y >= cols {
                return Err(Error::Index { what: "target state", value: y, bound: cols });
            }
            let mut row = alloc::vec![0.0; cols];
            row[y] = 1.0;
            rows.push(row);
        }
        Cpt::new(parent_spaces, child_space, rows)
    }

    pub fn parent_spaces(&self) -> &[StateSpace] {
        &self.parent_spaces
    }

    pub fn child_space(&self) -> &StateSpace {
        &self.child_space
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.rows[index]
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    pub fn indexer(&self) -> ConfigIndexer {
        ConfigIndexer::from_spaces(&self.parent_spaces)
    }

    /// Check every entry lies in [0,1] and every row sums to 1 within
    /// `tolerance`. Returns an empty list iff the table is valid.
    pub fn validate(&self, tolerance: f64) -> Vec<CptViolation> {
        let mut violations = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            let mut sum = 0.0;
            for (j, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    violations.push(CptViolation::EntryOutOfRange { row: i, col: j, value: p });
                }
                sum += p;
            }
            if fabs(sum - 1.0) > tolerance {
                violations.push(CptViolation::RowSum { row: i, sum });
            }
        }
        violations
    }

    /// Divide every row by its sum. Errors on a row summing to zero.
    pub fn normalize_rows(&mut self) -> Result<()> {
        for (i, row) in self.rows.iter_mut().enumerate() {
            let sum: f64 = row.iter().sum();
            if sum <= 0.0 {
                return Err(Error::Spec(format!("row {i} sums to {sum}; cannot normalize")));
            }
            for p in row.iter_mut() {
                *p /= sum;
            }
        }
        self.deterministic = self
            .rows
            .iter()
            .all(|r| r.iter().filter(|&&p| p == 1.0).count() == 1 && r.iter().all(|&p| p == 0.0 || p == 1.0));
        Ok(())
    }
}

/// Number of free parameters of a directly elicited CPT: `(∏ s_i)·(s_c − 1)`.
///
/// With no parents this is `s_c − 1`, the free parameters of a root-node
/// marginal (the empty product is 1).
pub fn cpt_entry_count(parent_spaces: &[StateSpace], child_space: &StateSpace) -> usize {
    let rows: usize = parent_spaces.iter().map(StateSpace::cardinality).product();
    rows * (child_space.cardinality() - 1)
}
