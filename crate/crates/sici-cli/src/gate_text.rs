//! Textual syntax for combination-function expressions.
//!
//! Grammar:
//! ```text
//! expr      := call | ident
//! call      := name "(" args ")"            name ∈ {or, and, xor, not, max, min, const}
//!            | "threshold" "(" int ";" args ")"
//!            | "const" "(" int ")"
//! args      := expr ("," expr)*
//! ident     := [A-Za-z_][A-Za-z0-9_]*       resolves to a declared input
//! ```
//! Examples: `or(x1, and(x2, not(x3)))`, `max(m1, m2)`, `threshold(2; x1, x2, x3)`.

use sici_core::{Gate, GateFn, StateSpace};

use crate::error::{CliError, ErrorCode};

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    field: &'a str,
}

impl<'a> Parser<'a> {
    fn err(&self, message: impl Into<String>) -> CliError {
        CliError::new(
            ErrorCode::Gate,
            self.field,
            format!("{} (at offset {} in {:?})", message.into(), self.pos, self.src),
        )
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> Result<(), CliError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(format!("expected {c:?}")))
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn ident(&mut self) -> Result<&'a str, CliError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest
            .char_indices()
            .take_while(|&(i, c)| c == '_' || c.is_ascii_alphabetic() || (i > 0 && c.is_ascii_digit()))
            .count();
        if len == 0 {
            return Err(self.err("expected a name"));
        }
        self.pos += len;
        Ok(&self.src[start..start + len])
    }

    fn integer(&mut self) -> Result<usize, CliError> {
        self.skip_ws();
        let start = self.pos;
        while self.src[self.pos..].starts_with(|c: char| c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.src[start..self.pos]
            .parse()
            .map_err(|_| self.err("expected an integer"))
    }

    fn args(&mut self, inputs: &[&str]) -> Result<Vec<Gate>, CliError> {
        let mut out = vec![self.expr(inputs)?];
        while self.peek() == Some(',') {
            self.eat(',')?;
            out.push(self.expr(inputs)?);
        }
        Ok(out)
    }

    fn expr(&mut self, inputs: &[&str]) -> Result<Gate, CliError> {
        let name = self.ident()?;
        if self.peek() == Some('(') {
            self.eat('(')?;
            let gate = match name {
                "or" | "and" | "xor" | "max" | "min" => {
                    let args = self.args(inputs)?;
                    match name {
                        "or" => Gate::Or(args),
                        "and" => Gate::And(args),
                        "xor" => Gate::Xor(args),
                        "max" => Gate::Max(args),
                        _ => Gate::Min(args),
                    }
                }
                "not" => {
                    let inner = self.expr(inputs)?;
                    Gate::not(inner)
                }
                "threshold" => {
                    let k = self.integer()?;
                    self.eat(';')?;
                    Gate::Threshold(k, self.args(inputs)?)
                }
                "const" => Gate::Constant(self.integer()?),
                other => return Err(self.err(format!("unknown function {other:?}"))),
            };
            self.eat(')')?;
            Ok(gate)
        } else {
            match inputs.iter().position(|&n| n == name) {
                Some(slot) => Ok(Gate::Input(slot)),
                None => Err(CliError::new(
                    ErrorCode::UnknownName,
                    self.field,
                    format!("{name:?} is not a declared input (expected one of {inputs:?})"),
                )),
            }
        }
    }
}

/// Parse an expression over the named `inputs` (slot order = list order).
pub fn parse_gate_expr(text: &str, inputs: &[&str], field: &str) -> Result<Gate, CliError> {
    let mut p = Parser { src: text, pos: 0, field };
    let gate = p.expr(inputs)?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("trailing input after expression"));
    }
    Ok(gate)
}

/// Infer the output space of a parsed expression: boolean connectives are
/// binary; max/min take their first operand's space; a bare input keeps its
/// own space. Bare constants have no inferable space.
pub fn infer_output_space(
    expr: &Gate,
    input_spaces: &[StateSpace],
    field: &str,
) -> Result<StateSpace, CliError> {
    match expr {
        Gate::Input(slot) => input_spaces.get(*slot).cloned().ok_or_else(|| {
            CliError::new(ErrorCode::Gate, field, format!("input slot {slot} out of range"))
        }),
        Gate::Or(_) | Gate::And(_) | Gate::Xor(_) | Gate::Not(_) | Gate::Threshold(..) => {
            Ok(StateSpace::binary())
        }
        Gate::Max(args) | Gate::Min(args) => args
            .first()
            .ok_or_else(|| CliError::new(ErrorCode::Gate, field, "max/min needs an operand"))
            .and_then(|g| infer_output_space(g, input_spaces, field)),
        Gate::Constant(_) => Err(CliError::new(
            ErrorCode::Gate,
            field,
            "cannot infer the output space of a bare constant",
        )),
    }
}

/// Parse and type-check a full gate over named, typed inputs.
pub fn parse_gate(
    text: &str,
    input_names: &[&str],
    input_spaces: &[StateSpace],
    field: &str,
) -> Result<GateFn, CliError> {
    let expr = parse_gate_expr(text, input_names, field)?;
    let output = infer_output_space(&expr, input_spaces, field)?;
    GateFn::new(expr, input_spaces.to_vec(), output)
        .map_err(|e| CliError::new(ErrorCode::Gate, field, e.to_string()))
}

/// Render an expression back to the textual grammar using the given input
/// names. Inverse of [`parse_gate_expr`] up to whitespace.
pub fn render_gate(expr: &Gate, input_names: &[&str]) -> String {
    fn join(args: &[Gate], names: &[&str]) -> String {
        args.iter().map(|g| render_gate(g, names)).collect::<Vec<_>>().join(", ")
    }
    match expr {
        Gate::Input(slot) => input_names[*slot].to_string(),
        Gate::Constant(c) => format!("const({c})"),
        Gate::Not(inner) => format!("not({})", render_gate(inner, input_names)),
        Gate::Or(args) => format!("or({})", join(args, input_names)),
        Gate::And(args) => format!("and({})", join(args, input_names)),
        Gate::Xor(args) => format!("xor({})", join(args, input_names)),
        Gate::Max(args) => format!("max({})", join(args, input_names)),
        Gate::Min(args) => format!("min({})", join(args, input_names)),
        Gate::Threshold(k, args) => format!("threshold({k}; {})", join(args, input_names)),
    }
}
