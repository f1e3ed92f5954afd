//! Parent→mechanism surjections, the induced local DAG for each model
//! variant, and a reachability-based d-separation engine.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::spec::{LocalSpec, Variant};
use crate::state::{StateSpace, VarKind, VariableDecl};

/// A total onto map from parent indices to mechanism indices; equivalently
/// a partition of the parents into blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Surjection {
    assignment: Vec<usize>,
    mechanism_count: usize,
}

impl Surjection {
    pub fn new(assignment: Vec<usize>, mechanism_count: usize) -> Result<Self> {
        if mechanism_count == 0 || assignment.is_empty() {
            return Err(Error::Spec("surjection needs at least one parent and one mechanism".into()));
        }
        if mechanism_count > assignment.len() {
            return Err(Error::Spec(format!(
                "{} mechanisms cannot be covered by {} parents",
                mechanism_count,
                assignment.len()
            )));
        }
        let mut seen = alloc::vec![false; mechanism_count];
        for &m in &assignment {
            if m >= mechanism_count {
                return Err(Error::Index { what: "mechanism index", value: m, bound: mechanism_count });
            }
            seen[m] = true;
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::Spec(format!("mechanism {missing} has no parent assigned (map not onto)")));
        }
        Ok(Surjection { assignment, mechanism_count })
    }

    /// Infer the mechanism count from the assignment.
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        let m = assignment.iter().max().map_or(0, |&m| m + 1);
        Surjection::new(assignment, m)
    }

    /// The bijection of the ICI model.
    pub fn identity(n: usize) -> Self {
        Surjection { assignment: (0..n).collect(), mechanism_count: n }
    }

    /// The single-block grouping of the SCM.
    pub fn single_block(n: usize) -> Self {
        Surjection { assignment: alloc::vec![0; n], mechanism_count: 1 }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn parent_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn mechanism_count(&self) -> usize {
        self.mechanism_count
    }

    pub(crate) fn check_arity(&self, n: usize) -> Result<()> {
        if self.assignment.len() != n {
            return Err(Error::Spec(format!(
                "surjection covers {} parents but the spec declares {n}",
                self.assignment.len()
            )));
        }
        Ok(())
    }

    /// The partition blocks, each a sorted list of parent indices.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = alloc::vec![Vec::new(); self.mechanism_count];
        for (parent, &m) in self.assignment.iter().enumerate() {
            blocks[m].push(parent);
        }
        blocks
    }

    /// True iff equal-valued assignments occupy consecutive positions under
    /// the current parent order, so the local structure draws as a tree.
    pub fn is_contiguous(&self) -> bool {
        for i in 0..self.assignment.len() {
            for k in 1..self.assignment.len() - i {
                if self.assignment[i] == self.assignment[i + k]
                    && self.assignment[i..=i + k].iter().any(|&m| m != self.assignment[i])
                {
                    return false;
                }
            }
        }
        true
    }

    /// Reorder parents so blocks become contiguous: blocks ordered by first
    /// appearance, parents stable within each block, mechanisms relabelled
    /// to appear in increasing order.
    ///
    /// Returns `(perm, phi)` where `perm[j]` is the original index of the
    /// parent now at position `j`.
    pub fn contiguous_reorder(&self) -> (Vec<usize>, Surjection) {
        let mut block_order = Vec::new(); // old mechanism index, by first appearance
        for &m in &self.assignment {
            if !block_order.contains(&m) {
                block_order.push(m);
            }
        }
        let mut perm = Vec::with_capacity(self.assignment.len());
        let mut new_assignment = Vec::with_capacity(self.assignment.len());
        for (new_mech, &old_mech) in block_order.iter().enumerate() {
            for (parent, &m) in self.assignment.iter().enumerate() {
                if m == old_mech {
                    perm.push(parent);
                    new_assignment.push(new_mech);
                }
            }
        }
        let phi = Surjection { assignment: new_assignment, mechanism_count: self.mechanism_count };
        debug_assert!(phi.is_contiguous());
        (perm, phi)
    }
}

/// A directed acyclic graph over declared variables, checked acyclic at
/// construction.
#[derive(Debug, Clone)]
pub struct Dag {
    nodes: Vec<VariableDecl>,
    edges: BTreeSet<(usize, usize)>,
}

impl Dag {
    pub fn new(nodes: Vec<VariableDecl>, edges: Vec<(usize, usize)>) -> Result<Self> {
        for (i, node) in nodes.iter().enumerate() {
            if nodes[..i].iter().any(|other| other.name == node.name) {
                return Err(Error::Spec(format!("duplicate node name '{}'", node.name)));
            }
        }
        let mut edge_set = BTreeSet::new();
        for (from, to) in edges {
            if from >= nodes.len() || to >= nodes.len() {
                return Err(Error::Index {
                    what: "edge endpoint",
                    value: from.max(to),
                    bound: nodes.len(),
                });
            }
            if from == to {
                return Err(Error::Spec(format!("self-loop on '{}'", nodes[from].name)));
            }
            edge_set.insert((from, to));
        }
        let dag = Dag { nodes, edges: edge_set };
        dag.check_acyclic()?;
        Ok(dag)
    }

    fn check_acyclic(&self) -> Result<()> {
        // Kahn's algorithm
        let n = self.nodes.len();
        let mut indegree = alloc::vec![0usize; n];
        for &(_, to) in &self.edges {
            indegree[to] += 1;
        }
        let mut queue: VecDeque<usize> =
            (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut visited = 0;
        while let Some(v) = queue.pop_front() {
            visited += 1;
            for &(from, to) in &self.edges {
                if from == v {
                    indegree[to] -= 1;
                    if indegree[to] == 0 {
                        queue.push_back(to);
                    }
                }
            }
        }
        if visited != n {
            return Err(Error::Spec("graph contains a directed cycle".into()));
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[VariableDecl] {
        &self.nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn parents(&self, v: usize) -> Vec<usize> {
        self.edges.iter().filter(|&&(_, to)| to == v).map(|&(from, _)| from).collect()
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        self.edges.iter().filter(|&&(from, _)| from == v).map(|&(_, to)| to).collect()
    }

    /// Indices of all nodes of a given kind.
    pub fn nodes_of_kind(&self, kind: VarKind) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&v| self.nodes[v].kind == kind).collect()
    }

    fn ancestors_of(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut out = set.clone();
        let mut queue: VecDeque<usize> = set.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            for p in self.parents(v) {
                if out.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        out
    }

    pub fn descendants_of(&self, v: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            for c in self.children(u) {
                if out.insert(c) {
                    queue.push_back(c);
                }
            }
        }
        out
    }

    /// Standard d-separation by active-trail reachability.
    ///
    /// Chains and forks are blocked when the middle node is in `z`; a
    /// collider is blocked unless it or one of its descendants is in `z`.
    pub fn d_separated_idx(&self, a: &[usize], b: &[usize], z: &[usize]) -> Result<bool> {
        let a_set: BTreeSet<usize> = a.iter().copied().collect();
        let b_set: BTreeSet<usize> = b.iter().copied().collect();
        let z_set: BTreeSet<usize> = z.iter().copied().collect();
        for v in a_set.iter().chain(&b_set).chain(&z_set) {
            if *v >= self.nodes.len() {
                return Err(Error::Index { what: "node index", value: *v, bound: self.nodes.len() });
            }
        }
        if !a_set.is_disjoint(&b_set) || !a_set.is_disjoint(&z_set) || !b_set.is_disjoint(&z_set) {
            return Err(Error::Argument("A, B and Z must be pairwise disjoint".into()));
        }

        let z_ancestors = self.ancestors_of(&z_set);

        // Trail states: (node, arrived-from-child?). Arriving "up" means the
        // previous edge pointed out of this node; arriving "down" means it
        // pointed into it.
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
        enum Dir {
            Up,
            Down,
        }
        let mut visited: BTreeSet<(usize, Dir)> = BTreeSet::new();
        let mut queue: VecDeque<(usize, Dir)> = a_set.iter().map(|&v| (v, Dir::Up)).collect();
        while let Some((v, dir)) = queue.pop_front() {
            if !visited.insert((v, dir)) {
                continue;
            }
            if !z_set.contains(&v) && b_set.contains(&v) {
                return Ok(false);
            }
            match dir {
                Dir::Up => {
                    // trail leaves v against or along edges freely unless v is observed
                    if !z_set.contains(&v) {
                        for p in self.parents(v) {
                            queue.push_back((p, Dir::Up));
                        }
                        for c in self.children(v) {
                            queue.push_back((c, Dir::Down));
                        }
                    }
                }
                Dir::Down => {
                    if !z_set.contains(&v) {
                        for c in self.children(v) {
                            queue.push_back((c, Dir::Down));
                        }
                    }
                    // collider at v: continue upward only if v is an ancestor of Z
                    if z_ancestors.contains(&v) {
                        for p in self.parents(v) {
                            queue.push_back((p, Dir::Up));
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    /// Name-based wrapper over [`Dag::d_separated_idx`].
    pub fn d_separated(&self, a: &[&str], b: &[&str], z: &[&str]) -> Result<bool> {
        let resolve = |names: &[&str]| -> Result<Vec<usize>> {
            names
                .iter()
                .map(|name| {
                    self.index_of(name)
                        .ok_or_else(|| Error::Argument(format!("unknown node '{name}'")))
                })
                .collect()
        };
        self.d_separated_idx(&resolve(a)?, &resolve(b)?, &resolve(z)?)
    }
}

/// An ambient network fragment: extra nodes and edges surrounding the local
/// structure, given by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AmbientGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
}

/// Verdict for one conditional-independence statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiVerdict {
    Pass,
    Fail,
    /// The statement quantifies over an empty set for this spec.
    Vacuous,
}

/// One instantiated conditional-independence statement and its verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct CiCheck {
    /// Statement number: "2".."5" for the bijective family, "9".."12" for
    /// the surjective family.
    pub statement: &'static str,
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub z: Vec<String>,
    pub verdict: CiVerdict,
}

impl CiCheck {
    pub fn passed(&self) -> bool {
        self.verdict != CiVerdict::Fail
    }
}

fn fresh_name(base: String, taken: &BTreeSet<String>) -> String {
    let mut name = base;
    while taken.contains(&name) {
        name.push('_');
    }
    name
}

/// Build the local DAG a spec induces: `X_j → M_φ(j)` for each parent,
/// `M_i → Y` for each mechanism, plus inhibitor roots `I_i → M_i` for the
/// noisy-OR variants. Ambient edges may touch only parents, the child and
/// other ambient nodes.
pub fn induced_dag(spec: &LocalSpec, ambient: Option<&AmbientGraph>) -> Result<Dag> {
    let phi = spec.surjection();
    let mech_spaces = spec.mechanism_spaces();
    let m = phi.mechanism_count();

    let mut taken: BTreeSet<String> = spec.parents.iter().map(|p| p.name.clone()).collect();
    taken.insert(spec.child.name.clone());

    let mut nodes: Vec<VariableDecl> = spec.parents.clone();
    let mut mech_index = Vec::with_capacity(m);
    for (i, space) in mech_spaces.iter().enumerate() {
        let name = fresh_name(format!("M{}", i + 1), &taken);
        taken.insert(name.clone());
        mech_index.push(nodes.len());
        nodes.push(VariableDecl::new(name, space.clone(), VarKind::Mechanism));
    }
    let mut inhibitor_index = Vec::new();
    if spec.has_inhibitors() {
        for i in 0..m {
            let name = fresh_name(format!("I{}", i + 1), &taken);
            taken.insert(name.clone());
            inhibitor_index.push(nodes.len());
            nodes.push(VariableDecl::new(name, StateSpace::binary(), VarKind::Inhibitor));
        }
    }
    let child_index = nodes.len();
    nodes.push(spec.child.clone());

    let mut edges = Vec::new();
    for (parent, &mech) in phi.assignment().iter().enumerate() {
        edges.push((parent, mech_index[mech]));
    }
    for &mech in &mech_index {
        edges.push((mech, child_index));
    }
    for (i, &inh) in inhibitor_index.iter().enumerate() {
        edges.push((inh, mech_index[i]));
    }

    if let Some(ambient) = ambient {
        let mut names: Vec<String> = nodes.iter().map(|n| n.name.clone()).collect();
        let mut index_of = |name: &str, nodes: &mut Vec<VariableDecl>| -> usize {
            if let Some(i) = names.iter().position(|n| n == name) {
                i
            } else {
                names.push(name.to_string());
                nodes.push(VariableDecl::new(name, StateSpace::binary(), VarKind::Ambient));
                nodes.len() - 1
            }
        };
        for name in &ambient.nodes {
            index_of(name, &mut nodes);
        }
        for (from, to) in &ambient.edges {
            let from = index_of(from, &mut nodes);
            let to = index_of(to, &mut nodes);
            for &v in [from, to].iter() {
                if matches!(nodes[v].kind, VarKind::Mechanism | VarKind::Inhibitor) {
                    return Err(Error::AmbientViolation(format!(
                        "ambient edge touches local construct '{}'",
                        nodes[v].name
                    )));
                }
            }
            edges.push((from, to));
        }
    }

    Dag::new(nodes, edges)
}

/// Evaluate the family's conditional-independence statements on the induced
/// DAG. The surjective family uses statement numbers (9)–(12); the bijective
/// family and the SCM report the analogous numbers.
pub fn verify_ci_statements(spec: &LocalSpec, ambient: Option<&AmbientGraph>) -> Result<Vec<CiCheck>> {
    let dag = induced_dag(spec, ambient)?;
    let surjective_family = matches!(
        spec.variant,
        Variant::LsSici { .. }
            | Variant::UsSici { .. }
            | Variant::DsSici { .. }
            | Variant::SurjectiveNoisyOr { .. }
            | Variant::Scm { .. }
    );
    let labels: [&'static str; 4] =
        if surjective_family { ["9", "10", "11", "12"] } else { ["2", "3", "4", "5"] };

    let name = |v: usize| dag.nodes()[v].name.clone();
    let names = |vs: &[usize]| vs.iter().map(|&v| name(v)).collect::<Vec<_>>();

    let parents = dag.nodes_of_kind(VarKind::Parent);
    let mechanisms = dag.nodes_of_kind(VarKind::Mechanism);
    let ambient_nodes = dag.nodes_of_kind(VarKind::Ambient);
    let child = dag.nodes_of_kind(VarKind::Child)[0];
    let phi = spec.surjection();
    let blocks = phi.blocks();

    let mut checks = Vec::new();
    let verdict_of = |sep: bool| if sep { CiVerdict::Pass } else { CiVerdict::Fail };

    // (2)/(9): Y ⊥ X | M
    checks.push(CiCheck {
        statement: labels[0],
        a: names(&[child]),
        b: names(&parents),
        z: names(&mechanisms),
        verdict: verdict_of(dag.d_separated_idx(&[child], &parents, &mechanisms)?),
    });

    // (3)/(10): M_i ⊥ M_j | X, for each i < j
    if mechanisms.len() < 2 {
        checks.push(CiCheck {
            statement: labels[1],
            a: Vec::new(),
            b: Vec::new(),
            z: names(&parents),
            verdict: CiVerdict::Vacuous,
        });
    } else {
        for i in 0..mechanisms.len() {
            for j in i + 1..mechanisms.len() {
                checks.push(CiCheck {
                    statement: labels[1],
                    a: names(&[mechanisms[i]]),
                    b: names(&[mechanisms[j]]),
                    z: names(&parents),
                    verdict: verdict_of(dag.d_separated_idx(
                        &[mechanisms[i]],
                        &[mechanisms[j]],
                        &parents,
                    )?),
                });
            }
        }
    }

    // (4)/(11): M ⊥ (V ∖ {X ∪ Y}) | {X ∪ Y}; vacuous without ambient nodes
    let mut cond: Vec<usize> = parents.clone();
    cond.push(child);
    if ambient_nodes.is_empty() {
        checks.push(CiCheck {
            statement: labels[2],
            a: names(&mechanisms),
            b: Vec::new(),
            z: names(&cond),
            verdict: CiVerdict::Vacuous,
        });
    } else {
        checks.push(CiCheck {
            statement: labels[2],
            a: names(&mechanisms),
            b: names(&ambient_nodes),
            z: names(&cond),
            verdict: verdict_of(dag.d_separated_idx(&mechanisms, &ambient_nodes, &cond)?),
        });
    }

    // (5)/(12): M_i ⊥ (X ∖ X_(i)) | X_(i)
    for (i, block) in blocks.iter().enumerate() {
        let block_parents: Vec<usize> = block.iter().map(|&p| parents[p]).collect();
        let rest: Vec<usize> =
            parents.iter().copied().filter(|v| !block_parents.contains(v)).collect();
        if rest.is_empty() {
            checks.push(CiCheck {
                statement: labels[3],
                a: names(&[mechanisms[i]]),
                b: Vec::new(),
                z: names(&block_parents),
                verdict: CiVerdict::Vacuous,
            });
        } else {
            checks.push(CiCheck {
                statement: labels[3],
                a: names(&[mechanisms[i]]),
                b: names(&rest),
                z: names(&block_parents),
                verdict: verdict_of(dag.d_separated_idx(&[mechanisms[i]], &rest, &block_parents)?),
            });
        }
    }

    Ok(checks)
}
