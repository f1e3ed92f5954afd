//! Materialize the CPT of `Y|X` for every model variant.
//!
//! Every stochastic route sums over mechanism configurations exhaustively
//! (`∏ mechanism cardinalities` terms per row); there are no factorized
//! speedups here. Correctness is cross-checked against the joint-distribution
//! route in [`crate::oracle`].

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gates::GateFn;
use crate::spec::{LocalSpec, Variant};
use crate::state::{ConfigIndexer, Cpt, StateSpace};

/// Compile a spec into the full CPT of `Y|X` in canonical row order.
pub fn compile(spec: &LocalSpec) -> Result<Cpt> {
    spec.validate()?;
    match &spec.variant {
        Variant::Ici { mechanism_cpts, lower_gate } => {
            compile_ici(spec, mechanism_cpts, lower_gate)
        }
        Variant::Pici { mechanism_cpts, lower_cpt } => {
            compile_pici(spec, mechanism_cpts, lower_cpt)
        }
        Variant::PiciAverage { mechanism_cpts } => {
            let lower = pici_average_lower(mechanism_cpts.len(), spec.child.space.clone())?;
            compile_pici(spec, mechanism_cpts, &lower)
        }
        Variant::Scm { gate, lower_cpt } => compile_scm(spec, gate, lower_cpt),
        Variant::LsSici { phi, block_gates, lower_cpt } => {
            compile_ls_sici(spec, phi.blocks(), block_gates, lower_cpt)
        }
        Variant::UsSici { phi, block_cpts, lower_gate } => {
            compile_us_sici(spec, phi.blocks(), block_cpts, lower_gate)
        }
        Variant::DsSici { phi, block_cpts, lower_cpt } => {
            compile_ds_sici(spec, phi.blocks(), block_cpts, lower_cpt)
        }
        Variant::NoisyOr { inhibitor_probs } => compile_noisy_or(spec, inhibitor_probs),
        Variant::NoisyMax { mechanism_cpts } => {
            let gate = GateFn::max_n(mechanism_cpts.len(), spec.child.space.clone());
            compile_ici(spec, mechanism_cpts, &gate)
        }
        Variant::SurjectiveNoisyOr { phi, block_gates, block_inhibitor_probs } => {
            compile_surjective_noisy_or(spec, phi.blocks(), block_gates, block_inhibitor_probs)
        }
        Variant::HassallBinary { weights } => compile_hassall_binary(spec, weights),
    }
}

fn singleton_blocks(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|i| alloc::vec![i]).collect()
}

/// `p(y|x) = Σ_{m: f(m)=y} ∏_i p(m_i|x_i)`.
fn compile_ici(spec: &LocalSpec, mechanism_cpts: &[Cpt], lower_gate: &GateFn) -> Result<Cpt> {
    compile_us_sici(spec, singleton_blocks(mechanism_cpts.len()), mechanism_cpts, lower_gate)
}

/// `p(y|x) = Σ_m p(y|m) ∏_i p(m_i|x_i)`.
fn compile_pici(spec: &LocalSpec, mechanism_cpts: &[Cpt], lower_cpt: &Cpt) -> Result<Cpt> {
    compile_ds_sici(spec, singleton_blocks(mechanism_cpts.len()), mechanism_cpts, lower_cpt)
}

/// The averaging lower table: `p(y|m) = |{i: m_i = y}| / n`. Rows sum to 1
/// by construction.
pub fn pici_average_lower(n: usize, space: StateSpace) -> Result<Cpt> {
    if n == 0 {
        return Err(Error::Spec("pici_average needs at least one mechanism".into()));
    }
    let indexer = ConfigIndexer::new(alloc::vec![space.cardinality(); n]);
    let cols = space.cardinality();
    let mut rows = Vec::with_capacity(indexer.len());
    for m in indexer.iter() {
        let row: Vec<f64> =
            (0..cols).map(|y| m.iter().filter(|&&mi| mi == y).count() as f64 / n as f64).collect();
        rows.push(row);
    }
    Cpt::new(alloc::vec![space.clone(); n], space, rows)
}

/// `p(y|x) = p(y | M = f(x))`: every output row is a row of the lower table.
fn compile_scm(spec: &LocalSpec, gate: &GateFn, lower_cpt: &Cpt) -> Result<Cpt> {
    let parent_spaces = spec.parent_spaces();
    let indexer = ConfigIndexer::from_spaces(&parent_spaces);
    let mut rows = Vec::with_capacity(indexer.len());
    for x in indexer.iter() {
        let m = gate.eval(&x)?;
        rows.push(lower_cpt.row(m).to_vec());
    }
    Cpt::new(parent_spaces, spec.child.space.clone(), rows)
}

/// Evaluate each block gate on its block's sub-configuration.
fn gate_image(
    blocks: &[Vec<usize>],
    block_gates: &[GateFn],
    x: &[usize],
) -> Result<Vec<usize>> {
    blocks
        .iter()
        .zip(block_gates)
        .map(|(block, gate)| {
            let sub: Vec<usize> = block.iter().map(|&p| x[p]).collect();
            gate.eval(&sub)
        })
        .collect()
}

/// `p(y|x) = p(y | m = f(x))` with one deterministic gate per block.
fn compile_ls_sici(
    spec: &LocalSpec,
    blocks: Vec<Vec<usize>>,
    block_gates: &[GateFn],
    lower_cpt: &Cpt,
) -> Result<Cpt> {
    let parent_spaces = spec.parent_spaces();
    let indexer = ConfigIndexer::from_spaces(&parent_spaces);
    let mech_indexer = lower_cpt.indexer();
    let mut rows = Vec::with_capacity(indexer.len());
    for x in indexer.iter() {
        let m = gate_image(&blocks, block_gates, &x)?;
        rows.push(lower_cpt.row(mech_indexer.index_of(&m)?).to_vec());
    }
    Cpt::new(parent_spaces, spec.child.space.clone(), rows)
}

/// Probability of one mechanism configuration given a parent configuration:
/// `∏_i p(m_i | x_(i))`.
fn mech_config_prob(blocks: &[Vec<usize>], block_cpts: &[Cpt], x: &[usize], mech_config: &[usize]) -> f64 {
    blocks
        .iter()
        .zip(block_cpts)
        .zip(mech_config)
        .map(|((block, cpt), &m)| {
            let sub: Vec<usize> = block.iter().map(|&p| x[p]).collect();
            let row = cpt.indexer().index_of(&sub).expect("block config in range");
            cpt.row(row)[m]
        })
        .product()
}

/// `p(y|x) = Σ_mech_config p(y|m) ∏_i p(m_i|x_(i))`.
fn compile_ds_sici(
    spec: &LocalSpec,
    blocks: Vec<Vec<usize>>,
    block_cpts: &[Cpt],
    lower_cpt: &Cpt,
) -> Result<Cpt> {
    let parent_spaces = spec.parent_spaces();
    let indexer = ConfigIndexer::from_spaces(&parent_spaces);
    let mech_indexer =
        ConfigIndexer::new(block_cpts.iter().map(|c| c.child_space().cardinality()).collect());
    let cols = spec.child.space.cardinality();
    let mut rows = Vec::with_capacity(indexer.len());
    for x in indexer.iter() {
        let mut row = alloc::vec![0.0f64; cols];
        for mech_config in mech_indexer.iter() {
            let p_m = mech_config_prob(&blocks, block_cpts, &x, &mech_config);
            if p_m == 0.0 {
                continue;
            }
            let lower_row = lower_cpt.row(mech_indexer.index_of(&mech_config)?);
            for (acc, &p_y) in row.iter_mut().zip(lower_row) {
                *acc += p_y * p_m;
            }
        }
        rows.push(row);
    }
    Cpt::new(parent_spaces, spec.child.space.clone(), rows)
}

/// `p(y|x) = Σ_{mech_config: f(mech_config)=y} ∏_i p(m_i|x_(i))`.
fn compile_us_sici(
    spec: &LocalSpec,
    blocks: Vec<Vec<usize>>,
    block_cpts: &[Cpt],
    lower_gate: &GateFn,
) -> Result<Cpt> {
    let parent_spaces = spec.parent_spaces();
    let indexer = ConfigIndexer::from_spaces(&parent_spaces);
    let mech_indexer =
        ConfigIndexer::new(block_cpts.iter().map(|c| c.child_space().cardinality()).collect());
    let cols = spec.child.space.cardinality();
    let mut rows = Vec::with_capacity(indexer.len());
    for x in indexer.iter() {
        let mut row = alloc::vec![0.0f64; cols];
        for mech_config in mech_indexer.iter() {
            let p_m = mech_config_prob(&blocks, block_cpts, &x, &mech_config);
            if p_m == 0.0 {
                continue;
            }
            row[lower_gate.eval(&mech_config)?] += p_m;
        }
        rows.push(row);
    }
    Cpt::new(parent_spaces, spec.child.space.clone(), rows)
}

/// The folded mechanism CPT of noisy-OR: `(1,0)` when the cause is absent,
/// `(p_i, 1−p_i)` when present.
pub fn noisy_or_mechanism_cpt(p: f64) -> Cpt {
    let b = StateSpace::binary();
    Cpt::new(
        alloc::vec![b.clone()],
        b,
        alloc::vec![alloc::vec![1.0, 0.0], alloc::vec![p, 1.0 - p]],
    )
    .expect("2x2 shape")
}

/// Noisy-OR in folded-CPT form; the closed form is
/// `P(Y=0|x) = ∏_{i: x_i=1} p_i`.
fn compile_noisy_or(spec: &LocalSpec, inhibitor_probs: &[f64]) -> Result<Cpt> {
    let mechanism_cpts: Vec<Cpt> =
        inhibitor_probs.iter().map(|&p| noisy_or_mechanism_cpt(p)).collect();
    compile_ici(spec, &mechanism_cpts, &GateFn::or_n(inhibitor_probs.len()))
}

/// Noisy-OR with the inhibitors materialized literally: inhibitor roots with
/// marginals `(1−p_i, p_i)`, mechanism gates `X_i ∧ ¬I_i`, an OR child, and
/// the inhibitors marginalized back out. Must agree with the folded form.
pub fn noisy_or_explicit_inhibitors(spec: &LocalSpec) -> Result<Cpt> {
    let Variant::NoisyOr { inhibitor_probs } = &spec.variant else {
        return Err(Error::Spec("explicit-inhibitor expansion applies only to noisy_or".into()));
    };
    spec.validate()?;
    let n = inhibitor_probs.len();
    let parent_spaces = spec.parent_spaces();
    let x_indexer = ConfigIndexer::from_spaces(&parent_spaces);
    let i_indexer = ConfigIndexer::new(alloc::vec![2; n]);
    let mut rows = Vec::with_capacity(x_indexer.len());
    for x in x_indexer.iter() {
        let mut p_y1 = 0.0f64;
        for inhibitors in i_indexer.iter() {
            let p_i: f64 = inhibitors
                .iter()
                .zip(inhibitor_probs)
                .map(|(&i, &p)| if i == 1 { p } else { 1.0 - p })
                .product();
            // mechanism i fires iff X_i present and I_i false
            let y = x.iter().zip(&inhibitors).any(|(&xi, &ii)| xi == 1 && ii == 0);
            if y {
                p_y1 += p_i;
            }
        }
        rows.push(alloc::vec![1.0 - p_y1, p_y1]);
    }
    Cpt::new(parent_spaces, spec.child.space.clone(), rows)
}

/// Surjective noisy-OR: block mechanism `P(M_i=1|x_(i)) = (1−p_i)·f_(i)(x_(i))`
/// combined by OR, compiled through the upper-stochastic route.
fn compile_surjective_noisy_or(
    spec: &LocalSpec,
    blocks: Vec<Vec<usize>>,
    block_gates: &[GateFn],
    block_inhibitor_probs: &[f64],
) -> Result<Cpt> {
    let b = StateSpace::binary();
    let mut block_cpts = Vec::with_capacity(blocks.len());
    for ((block, gate), &p) in blocks.iter().zip(block_gates).zip(block_inhibitor_probs) {
        let spaces: Vec<StateSpace> = block.iter().map(|_| b.clone()).collect();
        let indexer = ConfigIndexer::from_spaces(&spaces);
        let mut rows = Vec::with_capacity(indexer.len());
        for sub in indexer.iter() {
            let active = gate.eval(&sub)? as f64;
            let p_m1 = (1.0 - p) * active;
            rows.push(alloc::vec![1.0 - p_m1, p_m1]);
        }
        block_cpts.push(Cpt::new(spaces, b.clone(), rows)?);
    }
    compile_us_sici(spec, blocks, &block_cpts, &GateFn::or_n(block_cpts.len()))
}

/// `P(Y=1|x) = Σ w_i·x_i / Σ w_i` for binary parents.
fn compile_hassall_binary(spec: &LocalSpec, weights: &[f64]) -> Result<Cpt> {
    let parent_spaces = spec.parent_spaces();
    let indexer = ConfigIndexer::from_spaces(&parent_spaces);
    let total: f64 = weights.iter().sum();
    let mut rows = Vec::with_capacity(indexer.len());
    for x in indexer.iter() {
        let active: f64 = x.iter().zip(weights).filter(|(&xi, _)| xi == 1).map(|(_, &w)| w).sum();
        let p1 = active / total;
        rows.push(alloc::vec![1.0 - p1, p1]);
    }
    Cpt::new(parent_spaces, spec.child.space.clone(), rows)
}

/// The Table-style lower CPT obtained by applying the weighted rule to the
/// mechanisms themselves: `P(Y=1|m) = Σ_{i: m_i=1} w_i / Σ w_i`.
pub fn hassall_lower_cpt(weights: &[f64]) -> Result<Cpt> {
    if weights.is_empty() || weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Spec("weights must be a nonempty, strictly positive list".into()));
    }
    let b = StateSpace::binary();
    let indexer = ConfigIndexer::new(alloc::vec![2; weights.len()]);
    let total: f64 = weights.iter().sum();
    let mut rows = Vec::with_capacity(indexer.len());
    for m in indexer.iter() {
        let p1: f64 =
            m.iter().zip(weights).filter(|(&mi, _)| mi == 1).map(|(_, &w)| w).sum::<f64>() / total;
        rows.push(alloc::vec![1.0 - p1, p1]);
    }
    Cpt::new(alloc::vec![b.clone(); weights.len()], b, rows)
}

/// Re-express the binary weighted rule as an explicit PICI model:
/// `M_i|X_i ~ Bernoulli(w_i·x_i)` and `Y|M ~ Bernoulli(Σm_i / Σw_i)`.
///
/// The weights are first normalized to sum to `n`; the construction is then
/// only valid when every normalized weight is at most 1, otherwise a
/// `WeightRange` error is returned and the direct rule must be used instead.
pub fn hassall_as_pici(spec: &LocalSpec) -> Result<LocalSpec> {
    let Variant::HassallBinary { weights } = &spec.variant else {
        return Err(Error::Spec("PICI re-expression applies only to hassall_binary".into()));
    };
    spec.validate()?;
    let n = weights.len();
    let total: f64 = weights.iter().sum();
    let normalized: Vec<f64> = weights.iter().map(|&w| w * n as f64 / total).collect();
    for &w in &normalized {
        if w > 1.0 + 1e-12 {
            return Err(Error::WeightRange(w));
        }
    }
    let b = StateSpace::binary();
    let mechanism_cpts: Vec<Cpt> = normalized
        .iter()
        .map(|&w| {
            let w = w.min(1.0);
            Cpt::new(
                alloc::vec![b.clone()],
                b.clone(),
                alloc::vec![alloc::vec![1.0, 0.0], alloc::vec![1.0 - w, w]],
            )
            .expect("2x2 shape")
        })
        .collect();
    // Σw = n after normalization, so the lower row for m is count(m_i=1)/n
    let lower_cpt = hassall_lower_cpt(&alloc::vec![1.0; n])?;
    LocalSpec::new(
        spec.child.clone(),
        spec.parents.clone(),
        Variant::Pici { mechanism_cpts, lower_cpt },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fabs;
    use crate::gates::Gate;
    use crate::state::{VarKind, VariableDecl};
    use alloc::format;

    fn binary_parents(n: usize) -> Vec<VariableDecl> {
        (1..=n)
            .map(|i| VariableDecl::new(format!("X{i}"), StateSpace::binary(), VarKind::Parent))
            .collect()
    }

    fn child() -> VariableDecl {
        VariableDecl::new("Y", StateSpace::binary(), VarKind::Child)
    }

    fn spec(n: usize, variant: Variant) -> LocalSpec {
        LocalSpec::new(child(), binary_parents(n), variant).unwrap()
    }

    fn assert_rows_close(a: &Cpt, b: &Cpt, tol: f64) {
        assert_eq!(a.row_count(), b.row_count());
        for (ra, rb) in a.rows().iter().zip(b.rows()) {
            for (&pa, &pb) in ra.iter().zip(rb) {
                assert!(fabs(pa - pb) <= tol, "{pa} vs {pb}");
            }
        }
    }

    #[test]
    fn noisy_or_closed_form() {
        let p = [0.1, 0.2, 0.3];
        let cpt = compile(&spec(3, Variant::NoisyOr { inhibitor_probs: p.to_vec() })).unwrap();
        let row = cpt.indexer().index_of(&[1, 1, 0]).unwrap();
        assert_eq!(cpt.row(row)[0], 0.1 * 0.2);
        assert!(fabs(cpt.row(row)[1] - 0.98) < 1e-15);
        // no active cause, no leak
        assert_eq!(cpt.row(0), &[1.0, 0.0]);
        for x in cpt.indexer().iter() {
            let expected: f64 =
                x.iter().zip(&p).filter(|(&xi, _)| xi == 1).map(|(_, &pi)| pi).product();
            let r = cpt.indexer().index_of(&x).unwrap();
            assert_eq!(cpt.row(r)[0], expected);
        }
    }

    #[test]
    fn noisy_or_zero_inhibition_is_deterministic_or() {
        let cpt = compile(&spec(3, Variant::NoisyOr { inhibitor_probs: alloc::vec![0.0; 3] })).unwrap();
        assert_eq!(cpt.rows(), GateFn::or_n(3).to_cpt().rows());
    }

    #[test]
    fn explicit_inhibitors_match_folded_form() {
        let s = spec(3, Variant::NoisyOr { inhibitor_probs: alloc::vec![0.1, 0.2, 0.3] });
        let folded = compile(&s).unwrap();
        let explicit = noisy_or_explicit_inhibitors(&s).unwrap();
        assert_rows_close(&folded, &explicit, 1e-15);
    }

    #[test]
    fn explicit_inhibitors_degenerate_probs() {
        let all_on = spec(2, Variant::NoisyOr { inhibitor_probs: alloc::vec![1.0, 1.0] });
        let cpt = noisy_or_explicit_inhibitors(&all_on).unwrap();
        for row in cpt.rows() {
            assert_eq!(row[0], 1.0);
        }
        let all_off = spec(2, Variant::NoisyOr { inhibitor_probs: alloc::vec![0.0, 0.0] });
        let cpt = noisy_or_explicit_inhibitors(&all_off).unwrap();
        assert_eq!(cpt.rows(), GateFn::or_n(2).to_cpt().rows());
    }

    #[test]
    fn ici_folded_noisy_or_example() {
        // Fig-style folded CPTs with p = (0.1, 0.2, 0.3): for x = (1,1,0),
        // P(Y=0|x) = 0.1 * 0.2 (the only mechanism config mapping to 0 is all-zero)
        let mechanism_cpts =
            alloc::vec![noisy_or_mechanism_cpt(0.1), noisy_or_mechanism_cpt(0.2), noisy_or_mechanism_cpt(0.3)];
        let cpt = compile(&spec(3, Variant::Ici { mechanism_cpts, lower_gate: GateFn::or_n(3) })).unwrap();
        let row = cpt.indexer().index_of(&[1, 1, 0]).unwrap();
        assert!(fabs(cpt.row(row)[0] - 0.02) < 1e-15);
    }

    #[test]
    fn ici_deterministic_identity_mechanisms() {
        let b = StateSpace::binary();
        let identity = Cpt::new(
            alloc::vec![b.clone()],
            b.clone(),
            alloc::vec![alloc::vec![1.0, 0.0], alloc::vec![0.0, 1.0]],
        )
        .unwrap();
        let cpt = compile(&spec(
            3,
            Variant::Ici { mechanism_cpts: alloc::vec![identity; 3], lower_gate: GateFn::or_n(3) },
        ))
        .unwrap();
        assert_eq!(cpt.row(0), &[1.0, 0.0]);
        assert!(cpt.is_deterministic());
    }

    #[test]
    fn ici_single_parent_identity_gate() {
        let b = StateSpace::binary();
        let mech = Cpt::new(
            alloc::vec![b.clone()],
            b.clone(),
            alloc::vec![alloc::vec![0.7, 0.3], alloc::vec![0.2, 0.8]],
        )
        .unwrap();
        let cpt = compile(&spec(
            1,
            Variant::Ici {
                mechanism_cpts: alloc::vec![mech.clone()],
                lower_gate: GateFn::identity(b),
            },
        ))
        .unwrap();
        assert_eq!(cpt.rows(), mech.rows());
    }

    #[test]
    fn pici_average_lower_examples() {
        let b = StateSpace::binary();
        let lower = pici_average_lower(2, b).unwrap();
        let row = lower.indexer().index_of(&[1, 0]).unwrap();
        assert_eq!(lower.row(row), &[0.5, 0.5]);

        let lower = pici_average_lower(3, StateSpace::binary()).unwrap();
        let row = lower.indexer().index_of(&[1, 1, 1]).unwrap();
        assert_eq!(lower.row(row), &[0.0, 1.0]);

        let s3 = StateSpace::with_cardinality(3).unwrap();
        let lower = pici_average_lower(3, s3).unwrap();
        let row = lower.indexer().index_of(&[0, 1, 2]).unwrap();
        assert!(fabs(lower.row(row)[2] - 1.0 / 3.0) < 1e-15);
        assert!(lower.validate(1e-9).is_empty());
    }

    #[test]
    fn pici_average_identity_mechanisms() {
        // identity mechanisms copy x, so for x = (1,0) the child averages to 1/2
        let b = StateSpace::binary();
        let identity = Cpt::new(
            alloc::vec![b.clone()],
            b.clone(),
            alloc::vec![alloc::vec![1.0, 0.0], alloc::vec![0.0, 1.0]],
        )
        .unwrap();
        let cpt =
            compile(&spec(2, Variant::PiciAverage { mechanism_cpts: alloc::vec![identity; 2] })).unwrap();
        let row = cpt.indexer().index_of(&[1, 0]).unwrap();
        assert_eq!(cpt.row(row), &[0.5, 0.5]);
    }

    #[test]
    fn pici_deterministic_lower_reduces_to_ici() {
        let mechanism_cpts = alloc::vec![noisy_or_mechanism_cpt(0.3), noisy_or_mechanism_cpt(0.6)];
        let gate = GateFn::or_n(2);
        let ici = compile(&spec(
            2,
            Variant::Ici { mechanism_cpts: mechanism_cpts.clone(), lower_gate: gate.clone() },
        ))
        .unwrap();
        let pici =
            compile(&spec(2, Variant::Pici { mechanism_cpts, lower_cpt: gate.to_cpt() })).unwrap();
        assert_rows_close(&ici, &pici, 1e-15);
    }

    #[test]
    fn pici_single_mechanism_identity_lower_collapses() {
        let b = StateSpace::binary();
        let mech = Cpt::new(
            alloc::vec![b.clone()],
            b.clone(),
            alloc::vec![alloc::vec![0.6, 0.4], alloc::vec![0.1, 0.9]],
        )
        .unwrap();
        let identity_lower = GateFn::identity(b).to_cpt();
        let cpt = compile(&spec(
            1,
            Variant::Pici { mechanism_cpts: alloc::vec![mech.clone()], lower_cpt: identity_lower },
        ))
        .unwrap();
        assert_rows_close(&cpt, &mech, 1e-15);
    }

    #[test]
    fn scm_or_gate_selects_rows() {
        let b = StateSpace::binary();
        let lower = Cpt::new(
            alloc::vec![b.clone()],
            b.clone(),
            alloc::vec![alloc::vec![0.9, 0.1], alloc::vec![0.2, 0.8]],
        )
        .unwrap();
        let cpt = compile(&spec(
            2,
            Variant::Scm { gate: GateFn::or_n(2), lower_cpt: lower.clone() },
        ))
        .unwrap();
        assert_eq!(cpt.row(0), lower.row(0));
        for r in 1..4 {
            assert_eq!(cpt.row(r), lower.row(1));
        }
    }

    #[test]
    fn scm_and_gate_row_lookup() {
        let b = StateSpace::binary();
        let lower = Cpt::new(
            alloc::vec![b.clone()],
            b.clone(),
            alloc::vec![alloc::vec![0.9, 0.1], alloc::vec![0.2, 0.8]],
        )
        .unwrap();
        let and = GateFn::new(
            Gate::And(alloc::vec![Gate::Input(0), Gate::Input(1)]),
            alloc::vec![b.clone(), b.clone()],
            b,
        )
        .unwrap();
        let cpt = compile(&spec(2, Variant::Scm { gate: and, lower_cpt: lower.clone() })).unwrap();
        let row = cpt.indexer().index_of(&[1, 1]).unwrap();
        assert_eq!(cpt.row(row), lower.row(1));
    }

    #[test]
    fn scm_identity_lower_is_gate_table() {
        let b = StateSpace::binary();
        let gate = GateFn::or_n(3);
        let cpt = compile(&spec(
            3,
            Variant::Scm { gate: gate.clone(), lower_cpt: GateFn::identity(b).to_cpt() },
        ))
        .unwrap();
        assert_eq!(cpt.rows(), gate.to_cpt().rows());
    }

    fn ls_example_lower() -> Cpt {
        let b = StateSpace::binary();
        Cpt::new(
            alloc::vec![b.clone(), b.clone()],
            b,
            alloc::vec![
                alloc::vec![0.95, 0.05],
                alloc::vec![0.4, 0.6],
                alloc::vec![0.3, 0.7],
                alloc::vec![0.1, 0.9],
            ],
        )
        .unwrap()
    }

    #[test]
    fn ls_sici_gate_then_row_lookup() {
        let b = StateSpace::binary();
        let phi = Surjection::from_assignment(alloc::vec![0, 0, 1]).unwrap();
        let lower = ls_example_lower();
        let cpt = compile(&spec(
            3,
            Variant::LsSici {
                phi,
                block_gates: alloc::vec![GateFn::or_n(2), GateFn::identity(b)],
                lower_cpt: lower.clone(),
            },
        ))
        .unwrap();
        // x = (1,0,0): block gates give m = (1,0), so row = lower row at (1,0)
        let row = cpt.indexer().index_of(&[1, 0, 0]).unwrap();
        let expected = lower.indexer().index_of(&[1, 0]).unwrap();
        assert_eq!(cpt.row(row), lower.row(expected));
    }

    use crate::structure::Surjection;

    #[test]
    fn ls_sici_constant_gates_collapse() {
        let b = StateSpace::binary();
        let phi = Surjection::from_assignment(alloc::vec![0, 1]).unwrap();
        let constant =
            GateFn::new(Gate::Constant(0), alloc::vec![b.clone()], b.clone()).unwrap();
        let lower = ls_example_lower();
        let cpt = compile(&spec(
            2,
            Variant::LsSici {
                phi,
                block_gates: alloc::vec![constant.clone(), constant],
                lower_cpt: lower.clone(),
            },
        ))
        .unwrap();
        for row in cpt.rows() {
            assert_eq!(row.as_slice(), lower.row(0));
        }
    }

    #[test]
    fn ls_sici_identity_gates_reindex_lower() {
        let b = StateSpace::binary();
        let phi = Surjection::identity(2);
        let lower = ls_example_lower();
        let cpt = compile(&spec(
            2,
            Variant::LsSici {
                phi,
                block_gates: alloc::vec![GateFn::identity(b.clone()), GateFn::identity(b)],
                lower_cpt: lower.clone(),
            },
        ))
        .unwrap();
        assert_eq!(cpt.rows(), lower.rows());
    }

    fn stochastic_block(parents: usize, seed: f64) -> Cpt {
        let b = StateSpace::binary();
        let spaces = alloc::vec![b.clone(); parents];
        let rows = (0..(1usize << parents))
            .map(|r| {
                let p = (0.13 + seed * 0.17 + r as f64 * 0.09) % 1.0;
                alloc::vec![1.0 - p, p]
            })
            .collect();
        Cpt::new(spaces, b, rows).unwrap()
    }

    #[test]
    fn ds_sici_deterministic_blocks_reduce_to_ls() {
        let b = StateSpace::binary();
        let phi = Surjection::from_assignment(alloc::vec![0, 0, 1]).unwrap();
        let gates = alloc::vec![GateFn::or_n(2), GateFn::identity(b)];
        let lower = ls_example_lower();
        let ls = compile(&spec(
            3,
            Variant::LsSici { phi: phi.clone(), block_gates: gates.clone(), lower_cpt: lower.clone() },
        ))
        .unwrap();
        let ds = compile(&spec(
            3,
            Variant::DsSici {
                phi,
                block_cpts: gates.iter().map(GateFn::to_cpt).collect(),
                lower_cpt: lower,
            },
        ))
        .unwrap();
        assert_rows_close(&ls, &ds, 1e-15);
    }

    #[test]
    fn ds_sici_deterministic_lower_reduces_to_us() {
        let phi = Surjection::from_assignment(alloc::vec![0, 0, 1]).unwrap();
        let blocks = alloc::vec![stochastic_block(2, 0.0), stochastic_block(1, 1.0)];
        let gate = GateFn::or_n(2);
        let us = compile(&spec(
            3,
            Variant::UsSici { phi: phi.clone(), block_cpts: blocks.clone(), lower_gate: gate.clone() },
        ))
        .unwrap();
        let ds = compile(&spec(
            3,
            Variant::DsSici { phi, block_cpts: blocks, lower_cpt: gate.to_cpt() },
        ))
        .unwrap();
        assert_rows_close(&us, &ds, 1e-15);
    }

    #[test]
    fn ds_sici_singleton_blocks_reduce_to_pici() {
        let phi = Surjection::identity(2);
        let mechs = alloc::vec![noisy_or_mechanism_cpt(0.25), noisy_or_mechanism_cpt(0.65)];
        let lower = ls_example_lower();
        let pici = compile(&spec(
            2,
            Variant::Pici { mechanism_cpts: mechs.clone(), lower_cpt: lower.clone() },
        ))
        .unwrap();
        let ds =
            compile(&spec(2, Variant::DsSici { phi, block_cpts: mechs, lower_cpt: lower })).unwrap();
        assert_rows_close(&pici, &ds, 1e-15);
    }

    #[test]
    fn us_sici_singleton_blocks_reduce_to_ici() {
        let phi = Surjection::identity(3);
        let mechs = alloc::vec![
            noisy_or_mechanism_cpt(0.1),
            noisy_or_mechanism_cpt(0.2),
            noisy_or_mechanism_cpt(0.3)
        ];
        let gate = GateFn::or_n(3);
        let ici = compile(&spec(
            3,
            Variant::Ici { mechanism_cpts: mechs.clone(), lower_gate: gate.clone() },
        ))
        .unwrap();
        let us =
            compile(&spec(3, Variant::UsSici { phi, block_cpts: mechs, lower_gate: gate })).unwrap();
        assert_rows_close(&ici, &us, 1e-15);
    }

    #[test]
    fn us_sici_degenerate_blocks_pin_lowest_state() {
        let phi = Surjection::from_assignment(alloc::vec![0, 0, 1]).unwrap();
        let b = StateSpace::binary();
        let always_zero = |parents: usize| {
            Cpt::new(
                alloc::vec![b.clone(); parents],
                b.clone(),
                alloc::vec![alloc::vec![1.0, 0.0]; 1 << parents],
            )
            .unwrap()
        };
        let cpt = compile(&spec(
            3,
            Variant::UsSici {
                phi,
                block_cpts: alloc::vec![always_zero(2), always_zero(1)],
                lower_gate: GateFn::or_n(2),
            },
        ))
        .unwrap();
        for row in cpt.rows() {
            assert_eq!(row.as_slice(), &[1.0, 0.0]);
        }
    }

    #[test]
    fn surjective_noisy_or_fig_scenario() {
        // 6 parents, blocks {1,2,3}, {4,5}, {6}, OR within each block,
        // p = (0.1, 0.2, 0.3); x = (1,0,0,0,0,1) activates blocks 1 and 3:
        // P(Y=0) = 0.1 * 1 * 0.3
        let phi = Surjection::from_assignment(alloc::vec![0, 0, 0, 1, 1, 2]).unwrap();
        let s = spec(
            6,
            Variant::SurjectiveNoisyOr {
                phi,
                block_gates: alloc::vec![GateFn::or_n(3), GateFn::or_n(2), GateFn::or_n(1)],
                block_inhibitor_probs: alloc::vec![0.1, 0.2, 0.3],
            },
        );
        let cpt = compile(&s).unwrap();
        let row = cpt.indexer().index_of(&[1, 0, 0, 0, 0, 1]).unwrap();
        assert!(fabs(cpt.row(row)[0] - 0.03) < 1e-15);
        assert!(fabs(cpt.row(row)[1] - 0.97) < 1e-15);
        // nothing active, nothing to inhibit
        assert_eq!(cpt.row(0), &[1.0, 0.0]);
    }

    #[test]
    fn surjective_noisy_or_singleton_blocks_reduce_to_noisy_or() {
        let p = alloc::vec![0.15, 0.45, 0.75];
        let plain = compile(&spec(3, Variant::NoisyOr { inhibitor_probs: p.clone() })).unwrap();
        let b = StateSpace::binary();
        let surj = compile(&spec(
            3,
            Variant::SurjectiveNoisyOr {
                phi: Surjection::identity(3),
                block_gates: alloc::vec![GateFn::identity(b.clone()); 3],
                block_inhibitor_probs: p,
            },
        ))
        .unwrap();
        assert_rows_close(&plain, &surj, 1e-15);
    }

    #[test]
    fn hassall_direct_examples() {
        let cpt = compile(&spec(3, Variant::HassallBinary { weights: alloc::vec![1.0, 1.0, 1.0] })).unwrap();
        let row = cpt.indexer().index_of(&[1, 0, 1]).unwrap();
        assert!(fabs(cpt.row(row)[1] - 2.0 / 3.0) < 1e-15);
        assert_eq!(cpt.row(0)[1], 0.0);
        let all_ones = cpt.indexer().index_of(&[1, 1, 1]).unwrap();
        assert_eq!(cpt.row(all_ones)[1], 1.0);

        let cpt = compile(&spec(3, Variant::HassallBinary { weights: alloc::vec![2.0, 1.0, 1.0] })).unwrap();
        let row = cpt.indexer().index_of(&[1, 0, 1]).unwrap();
        assert!(fabs(cpt.row(row)[1] - 0.75) < 1e-15);
    }

    #[test]
    fn hassall_as_pici_matches_direct_rule() {
        // any uniform weight vector normalizes to all-ones, the only point
        // where the Bernoulli rewrite stays a valid probability model
        for weights in [alloc::vec![1.0, 1.0, 1.0], alloc::vec![2.5, 2.5, 2.5]] {
            let s = spec(3, Variant::HassallBinary { weights });
            let direct = compile(&s).unwrap();
            let pici = compile(&hassall_as_pici(&s).unwrap()).unwrap();
            assert_rows_close(&direct, &pici, 1e-12);
        }
    }

    #[test]
    fn hassall_as_pici_rejects_unequal_weights() {
        // sum is already 3, but 1.5 > 1 cannot be a Bernoulli parameter
        let s = spec(3, Variant::HassallBinary { weights: alloc::vec![1.5, 1.0, 0.5] });
        assert!(matches!(hassall_as_pici(&s), Err(Error::WeightRange(_))));
    }

    #[test]
    fn hassall_as_pici_rejects_dominant_weight() {
        // normalized, the first weight exceeds 1 by far
        let s = spec(3, Variant::HassallBinary { weights: alloc::vec![10.0, 1.0, 1.0] });
        assert!(matches!(hassall_as_pici(&s), Err(Error::WeightRange(_))));
    }

    #[test]
    fn hassall_lower_cpt_symbolic_rows() {
        let w = [2.0, 1.0, 0.5];
        let total: f64 = w.iter().sum();
        let lower = hassall_lower_cpt(&w).unwrap();
        let row = lower.indexer().index_of(&[1, 0, 1]).unwrap();
        assert!(fabs(lower.row(row)[1] - (w[0] + w[2]) / total) < 1e-15);
    }

    #[test]
    fn noisy_max_on_binary_equals_noisy_or() {
        let mechs = alloc::vec![noisy_or_mechanism_cpt(0.1), noisy_or_mechanism_cpt(0.2)];
        let or = compile(&spec(2, Variant::NoisyOr { inhibitor_probs: alloc::vec![0.1, 0.2] })).unwrap();
        let max = compile(&spec(2, Variant::NoisyMax { mechanism_cpts: mechs })).unwrap();
        assert_rows_close(&or, &max, 1e-15);
    }

    #[test]
    fn noisy_max_floor_state() {
        let s3 = StateSpace::with_cardinality(3).unwrap();
        let floor = Cpt::new(
            alloc::vec![s3.clone()],
            s3.clone(),
            alloc::vec![alloc::vec![1.0, 0.0, 0.0]; 3],
        )
        .unwrap();
        let parents = (1..=2)
            .map(|i| VariableDecl::new(format!("X{i}"), s3.clone(), VarKind::Parent))
            .collect();
        let s = LocalSpec::new(
            VariableDecl::new("Y", s3, VarKind::Child),
            parents,
            Variant::NoisyMax { mechanism_cpts: alloc::vec![floor; 2] },
        )
        .unwrap();
        let cpt = compile(&s).unwrap();
        for row in cpt.rows() {
            assert_eq!(row.as_slice(), &[1.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn every_compiled_table_is_row_stochastic() {
        let specs = [
            spec(3, Variant::NoisyOr { inhibitor_probs: alloc::vec![0.3, 0.5, 0.7] }),
            spec(3, Variant::HassallBinary { weights: alloc::vec![0.4, 1.2, 2.0] }),
            spec(
                3,
                Variant::DsSici {
                    phi: Surjection::from_assignment(alloc::vec![0, 0, 1]).unwrap(),
                    block_cpts: alloc::vec![stochastic_block(2, 0.3), stochastic_block(1, 0.8)],
                    lower_cpt: ls_example_lower(),
                },
            ),
        ];
        for s in &specs {
            assert!(compile(s).unwrap().validate(1e-9).is_empty());
        }
    }
}
