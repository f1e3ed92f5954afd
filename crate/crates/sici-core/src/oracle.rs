//! Independent brute-force verification.
//!
//! Everything here deliberately avoids the per-row summation formulas used
//! by [`crate::compile`]: specs are expanded into a literal network, the
//! full joint distribution is built by the chain rule, and `Y|X` is read
//! off by conditioning and marginalization. The d-separation oracle below
//! likewise enumerates undirected paths instead of running reachability.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::compile::{hassall_as_pici, pici_average_lower};
use crate::error::{Error, Result};
use crate::gates::{Gate, GateFn};
use crate::spec::{LocalSpec, Variant};
use crate::state::{ConfigIndexer, Cpt, StateSpace, VarKind, VariableDecl};
use crate::structure::Dag;
use crate::{fabs, ROW_SUM_TOLERANCE};

/// Full configuration spaces beyond 2^24 are refused; this is a desk-scale
/// verifier.
pub const SIZE_GUARD_LOG2: u32 = 24;

/// A small explicit Bayesian network in topological order: parents first,
/// then intermediates, then the child.
#[derive(Debug, Clone)]
pub struct MiniBn {
    nodes: Vec<VariableDecl>,
    /// Per node: indices of its parents (all preceding the node) and its CPT.
    parents: Vec<Vec<usize>>,
    cpts: Vec<Cpt>,
}

impl MiniBn {
    pub fn new(nodes: Vec<VariableDecl>, parents: Vec<Vec<usize>>, cpts: Vec<Cpt>) -> Result<Self> {
        if nodes.len() != parents.len() || nodes.len() != cpts.len() {
            return Err(Error::Spec("nodes, parents and CPTs must align".into()));
        }
        for (i, (ps, cpt)) in parents.iter().zip(&cpts).enumerate() {
            if ps.iter().any(|&p| p >= i) {
                return Err(Error::Spec(format!("node {i} has a parent not preceding it")));
            }
            if cpt.parent_spaces().len() != ps.len()
                || cpt.child_space().cardinality() != nodes[i].space.cardinality()
            {
                return Err(Error::Spec(format!("node {i} CPT shape does not match its parents")));
            }
            if !cpt.validate(ROW_SUM_TOLERANCE).is_empty() {
                return Err(Error::Spec(format!("node {i} CPT is not row-stochastic")));
            }
        }
        Ok(MiniBn { nodes, parents, cpts })
    }

    pub fn nodes(&self) -> &[VariableDecl] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn indexer(&self) -> ConfigIndexer {
        ConfigIndexer::new(self.nodes.iter().map(|n| n.space.cardinality()).collect())
    }

    fn check_size_guard(&self) -> Result<()> {
        let mut log2 = 0u32;
        for node in &self.nodes {
            let card = node.space.cardinality() as u64;
            log2 += 64 - (card - 1).leading_zeros(); // ceil(log2(card))
            if log2 > SIZE_GUARD_LOG2 {
                return Err(Error::SizeGuard { configs_log2: log2, limit_log2: SIZE_GUARD_LOG2 });
            }
        }
        Ok(())
    }
}

/// Expand a spec into the explicit network it abbreviates: parents as roots,
/// mechanism nodes (gate-derived 0/1 tables where deterministic), inhibitor
/// roots where the variant has them, and the child last.
///
/// `parent_marginals` default to uniform; they must be strictly positive so
/// conditioning on any parent configuration is well defined.
pub fn spec_to_mini_bn(spec: &LocalSpec, parent_marginals: Option<&[Vec<f64>]>) -> Result<MiniBn> {
    spec.validate()?;
    let n = spec.parents.len();

    // guard before materializing anything: gate truth tables alone can be
    // astronomically large for oversized specs
    {
        let mut cards: Vec<usize> =
            spec.parents.iter().map(|p| p.space.cardinality()).collect();
        cards.extend(spec.mechanism_spaces().iter().map(|s| s.cardinality()));
        if spec.has_inhibitors() {
            cards.extend(core::iter::repeat(2).take(spec.mechanism_count()));
        }
        cards.push(spec.child.space.cardinality());
        let mut log2 = 0u32;
        for card in cards {
            log2 += 64 - (card as u64 - 1).leading_zeros();
            if log2 > SIZE_GUARD_LOG2 {
                return Err(Error::SizeGuard { configs_log2: log2, limit_log2: SIZE_GUARD_LOG2 });
            }
        }
    }

    let marginal = |i: usize| -> Result<Cpt> {
        let card = spec.parents[i].space.cardinality();
        let row = match parent_marginals {
            Some(rows) => {
                let row = rows.get(i).ok_or_else(|| {
                    Error::Spec(format!("missing marginal for parent {i}"))
                })?;
                if row.len() != card {
                    return Err(Error::Shape { expected: (1, card), got: (1, row.len()) });
                }
                if row.iter().any(|&p| p <= 0.0) {
                    return Err(Error::Spec(format!(
                        "parent {i} marginal must be strictly positive"
                    )));
                }
                row.clone()
            }
            None => alloc::vec![1.0 / card as f64; card],
        };
        Cpt::new(Vec::new(), spec.parents[i].space.clone(), alloc::vec![row])
    };

    let mut nodes = Vec::new();
    let mut parents: Vec<Vec<usize>> = Vec::new();
    let mut cpts = Vec::new();
    for i in 0..n {
        nodes.push(spec.parents[i].clone());
        parents.push(Vec::new());
        cpts.push(marginal(i)?);
    }

    // Hassall's rule is materialized through its explicit PICI network when
    // the Bernoulli construction is valid, keeping the oracle on a separate
    // computational path from the closed form.
    if let Variant::HassallBinary { .. } = &spec.variant {
        match hassall_as_pici(spec) {
            Ok(pici) => return spec_to_mini_bn(&pici, parent_marginals),
            Err(Error::WeightRange(_)) => {
                // fall back to the direct table; nothing else expresses it
                let cpt = crate::compile(spec)?;
                nodes.push(spec.child.clone());
                parents.push((0..n).collect());
                cpts.push(cpt);
                return MiniBn::new(nodes, parents, cpts);
            }
            Err(e) => return Err(e),
        }
    }

    let phi = spec.surjection();
    let blocks = phi.blocks();
    let mech_spaces = spec.mechanism_spaces();
    let b = StateSpace::binary();

    // inhibitor roots, where the variant has them
    let mut inhibitor_index = Vec::new();
    let inhibitor_probs: Vec<f64> = match &spec.variant {
        Variant::NoisyOr { inhibitor_probs } => inhibitor_probs.clone(),
        Variant::SurjectiveNoisyOr { block_inhibitor_probs, .. } => block_inhibitor_probs.clone(),
        _ => Vec::new(),
    };
    for (i, &p) in inhibitor_probs.iter().enumerate() {
        inhibitor_index.push(nodes.len());
        nodes.push(VariableDecl::new(format!("I{}", i + 1), b.clone(), VarKind::Inhibitor));
        parents.push(Vec::new());
        cpts.push(Cpt::new(Vec::new(), b.clone(), alloc::vec![alloc::vec![1.0 - p, p]])?);
    }

    // mechanism layer
    let mut mech_index = Vec::new();
    for (i, block) in blocks.iter().enumerate() {
        let node_name = format!("M{}", i + 1);
        let block_parent_nodes: Vec<usize> = block.clone(); // parents occupy indices 0..n
        let block_spaces: Vec<StateSpace> =
            block.iter().map(|&p| spec.parents[p].space.clone()).collect();
        let (mech_parents, cpt): (Vec<usize>, Cpt) = match &spec.variant {
            Variant::Ici { mechanism_cpts, .. }
            | Variant::Pici { mechanism_cpts, .. }
            | Variant::PiciAverage { mechanism_cpts }
            | Variant::NoisyMax { mechanism_cpts } => {
                (block_parent_nodes, mechanism_cpts[i].clone())
            }
            Variant::Scm { gate, .. } => (block_parent_nodes, gate.to_cpt()),
            Variant::LsSici { block_gates, .. } => (block_parent_nodes, block_gates[i].to_cpt()),
            Variant::UsSici { block_cpts, .. } | Variant::DsSici { block_cpts, .. } => {
                (block_parent_nodes, block_cpts[i].clone())
            }
            Variant::NoisyOr { .. } => {
                // M_i = X_i ∧ ¬I_i
                let gate = GateFn::new(
                    Gate::And(alloc::vec![Gate::Input(0), Gate::not(Gate::Input(1))]),
                    alloc::vec![b.clone(), b.clone()],
                    b.clone(),
                )?;
                let mut ps = block_parent_nodes;
                ps.push(inhibitor_index[i]);
                (ps, gate.to_cpt())
            }
            Variant::SurjectiveNoisyOr { block_gates, .. } => {
                // M_i = f_(i)(x_(i)) ∧ ¬I_i
                let block_gate = &block_gates[i];
                let mut spaces = block_spaces.clone();
                spaces.push(b.clone());
                let inhibitor_slot = spaces.len() - 1;
                let cpt = Cpt::deterministic_from_fn(spaces, b.clone(), |config| {
                    let fired = block_gate.eval(&config[..inhibitor_slot]).expect("typed inputs");
                    (fired == 1 && config[inhibitor_slot] == 0) as usize
                })?;
                let mut ps = block_parent_nodes;
                ps.push(inhibitor_index[i]);
                (ps, cpt)
            }
            Variant::HassallBinary { .. } => unreachable!("handled above"),
        };
        mech_index.push(nodes.len());
        nodes.push(VariableDecl::new(node_name, mech_spaces[i].clone(), VarKind::Mechanism));
        parents.push(mech_parents);
        cpts.push(cpt);
    }

    // child
    let child_cpt = match &spec.variant {
        Variant::Ici { lower_gate, .. } | Variant::UsSici { lower_gate, .. } => lower_gate.to_cpt(),
        Variant::Pici { lower_cpt, .. }
        | Variant::Scm { lower_cpt, .. }
        | Variant::LsSici { lower_cpt, .. }
        | Variant::DsSici { lower_cpt, .. } => lower_cpt.clone(),
        Variant::PiciAverage { mechanism_cpts } => {
            pici_average_lower(mechanism_cpts.len(), spec.child.space.clone())?
        }
        Variant::NoisyOr { inhibitor_probs } => GateFn::or_n(inhibitor_probs.len()).to_cpt(),
        Variant::SurjectiveNoisyOr { .. } => GateFn::or_n(blocks.len()).to_cpt(),
        Variant::NoisyMax { mechanism_cpts } => {
            GateFn::max_n(mechanism_cpts.len(), spec.child.space.clone()).to_cpt()
        }
        Variant::HassallBinary { .. } => unreachable!("handled above"),
    };
    nodes.push(spec.child.clone());
    parents.push(mech_index);
    cpts.push(child_cpt);

    MiniBn::new(nodes, parents, cpts)
}

/// Chain-rule joint over all full configurations, in the canonical order of
/// the network's own indexer. Total mass is 1 within 1e-12 for any valid
/// network.
pub fn joint_distribution(bn: &MiniBn) -> Result<Vec<f64>> {
    bn.check_size_guard()?;
    let indexer = bn.indexer();
    let mut joint = Vec::with_capacity(indexer.len());
    for config in indexer.iter() {
        let mut p = 1.0f64;
        for (v, cpt) in bn.cpts.iter().enumerate() {
            let parent_config: Vec<usize> = bn.parents[v].iter().map(|&u| config[u]).collect();
            let row = cpt.indexer().index_of(&parent_config)?;
            p *= cpt.row(row)[config[v]];
            if p == 0.0 {
                break;
            }
        }
        joint.push(p);
    }
    Ok(joint)
}

/// Derive `P(Y=y | X=x)` for a spec by conditioning the full joint on each
/// parent configuration and marginalizing everything else out.
pub fn oracle_cpt(spec: &LocalSpec) -> Result<Cpt> {
    oracle_cpt_with_marginals(spec, None)
}

/// [`oracle_cpt`] with explicit strictly positive parent marginals. The
/// result must not depend on them; that invariance is what certifies the
/// output as a genuine conditional table.
pub fn oracle_cpt_with_marginals(
    spec: &LocalSpec,
    parent_marginals: Option<&[Vec<f64>]>,
) -> Result<Cpt> {
    let bn = spec_to_mini_bn(spec, parent_marginals)?;
    let joint = joint_distribution(&bn)?;
    let full_indexer = bn.indexer();

    let n = spec.parents.len();
    let child_node = bn.node_count() - 1;
    debug_assert_eq!(bn.nodes[child_node].kind, VarKind::Child);

    let parent_spaces = spec.parent_spaces();
    let x_indexer = ConfigIndexer::from_spaces(&parent_spaces);
    let cols = spec.child.space.cardinality();
    let mut rows = alloc::vec![alloc::vec![0.0f64; cols]; x_indexer.len()];
    let mut mass = alloc::vec![0.0f64; x_indexer.len()];

    for (flat, &p) in joint.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let config = full_indexer.config_of(flat)?;
        let x_row = x_indexer.index_of(&config[..n])?;
        rows[x_row][config[child_node]] += p;
        mass[x_row] += p;
    }
    for (row, &total) in rows.iter_mut().zip(&mass) {
        if total <= 0.0 {
            return Err(Error::Spec(
                "a parent configuration has zero mass; marginals must be strictly positive".into(),
            ));
        }
        for p in row.iter_mut() {
            *p /= total;
        }
    }
    Cpt::new(parent_spaces, spec.child.space.clone(), rows)
}

/// Max-norm comparison: largest absolute difference and where it occurs.
pub fn compare_cpts(a: &Cpt, b: &Cpt) -> Result<(f64, (usize, usize))> {
    if a.row_count() != b.row_count()
        || a.child_space().cardinality() != b.child_space().cardinality()
    {
        return Err(Error::Shape {
            expected: (a.row_count(), a.child_space().cardinality()),
            got: (b.row_count(), b.child_space().cardinality()),
        });
    }
    let mut worst = (0.0f64, (0usize, 0usize));
    for (i, (ra, rb)) in a.rows().iter().zip(b.rows()).enumerate() {
        for (j, (&pa, &pb)) in ra.iter().zip(rb).enumerate() {
            let d = fabs(pa - pb);
            if d > worst.0 {
                worst = (d, (i, j));
            }
        }
    }
    Ok(worst)
}

/// Brute-force d-separation: enumerate every simple undirected path between
/// the sets and test each for activeness by the textbook blocking rules.
/// Exponential; meant for graphs of a handful of nodes.
pub fn d_separated_by_path_enumeration(
    dag: &Dag,
    a: &[usize],
    b: &[usize],
    z: &[usize],
) -> Result<bool> {
    let a_set: BTreeSet<usize> = a.iter().copied().collect();
    let b_set: BTreeSet<usize> = b.iter().copied().collect();
    let z_set: BTreeSet<usize> = z.iter().copied().collect();
    if !a_set.is_disjoint(&b_set) || !a_set.is_disjoint(&z_set) || !b_set.is_disjoint(&z_set) {
        return Err(Error::Argument("A, B and Z must be pairwise disjoint".into()));
    }
    for v in a_set.iter().chain(&b_set).chain(&z_set) {
        if *v >= dag.node_count() {
            return Err(Error::Index { what: "node index", value: *v, bound: dag.node_count() });
        }
    }

    // v blocks as a collider unless v or a descendant of v is observed
    let opens_as_collider: Vec<bool> = (0..dag.node_count())
        .map(|v| z_set.contains(&v) || dag.descendants_of(v).iter().any(|d| z_set.contains(d)))
        .collect();

    fn active_path(
        dag: &Dag,
        path: &mut Vec<usize>,
        b_set: &BTreeSet<usize>,
        z_set: &BTreeSet<usize>,
        opens_as_collider: &[bool],
    ) -> bool {
        let last = *path.last().expect("path nonempty");
        if b_set.contains(&last) && path.len() > 1 && path_is_active(dag, path, z_set, opens_as_collider)
        {
            return true;
        }
        let mut neighbors: Vec<usize> = dag.parents(last);
        neighbors.extend(dag.children(last));
        for next in neighbors {
            if path.contains(&next) {
                continue;
            }
            path.push(next);
            if active_path(dag, path, b_set, z_set, opens_as_collider) {
                return true;
            }
            path.pop();
        }
        false
    }

    fn path_is_active(
        dag: &Dag,
        path: &[usize],
        z_set: &BTreeSet<usize>,
        opens_as_collider: &[bool],
    ) -> bool {
        if path.iter().any(|v| z_set.contains(v) && (v == path.first().unwrap() || v == path.last().unwrap()))
        {
            return false;
        }
        for w in path.windows(3) {
            let (prev, mid, next) = (w[0], w[1], w[2]);
            let in_from_prev = dag.edges().any(|e| e == (prev, mid));
            let in_from_next = dag.edges().any(|e| e == (next, mid));
            let collider = in_from_prev && in_from_next;
            if collider {
                if !opens_as_collider[mid] {
                    return false;
                }
            } else if z_set.contains(&mid) {
                return false;
            }
        }
        true
    }

    for &start in &a_set {
        let mut path = alloc::vec![start];
        if active_path(dag, &mut path, &b_set, &z_set, &opens_as_collider) {
            return Ok(false);
        }
    }
    Ok(true)
}
