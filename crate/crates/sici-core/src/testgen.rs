//! Deterministic random generators for tests (behind the `testgen`
//! feature). Everything is seeded; the same seed always yields the same
//! spec, table or graph, so failures reproduce exactly.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::gates::{Gate, GateFn};
use crate::spec::{LocalSpec, Variant};
use crate::state::{Cpt, StateSpace, VarKind, VariableDecl};
use crate::structure::{AmbientGraph, Dag, Surjection};

/// SplitMix64: tiny, fast, and good enough for test-case generation.
#[derive(Debug, Clone)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, bound)`; `bound` must be nonzero.
    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `[lo, hi)`.
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}

/// A random strictly positive probability row of the given length,
/// normalized to sum exactly to 1 up to rounding.
pub fn random_row(rng: &mut Rng, len: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len).map(|_| rng.range_f64(0.05, 1.0)).collect();
    let total: f64 = row.iter().sum();
    for p in row.iter_mut() {
        *p /= total;
    }
    row
}

/// A random row-stochastic table with strictly positive entries.
pub fn random_cpt(rng: &mut Rng, parent_spaces: Vec<StateSpace>, child_space: StateSpace) -> Cpt {
    let rows: usize = parent_spaces.iter().map(|s| s.cardinality()).product();
    let cols = child_space.cardinality();
    let rows = (0..rows).map(|_| random_row(rng, cols)).collect();
    Cpt::new(parent_spaces, child_space, rows).expect("generated rows match the declared shape")
}

/// Random state space with 2..=max_card states.
pub fn random_space(rng: &mut Rng, max_card: usize) -> StateSpace {
    StateSpace::with_cardinality(2 + rng.below(max_card.max(2) - 1)).expect("cardinality >= 2")
}

pub fn parent_decls(spaces: &[StateSpace]) -> Vec<VariableDecl> {
    spaces
        .iter()
        .enumerate()
        .map(|(i, s)| VariableDecl::new(format!("X{}", i + 1), s.clone(), VarKind::Parent))
        .collect()
}

/// A random surjection of `n` parents onto 1..=n mechanisms.
pub fn random_surjection(rng: &mut Rng, n: usize) -> Surjection {
    let m = 1 + rng.below(n);
    // guarantee surjectivity: first m parents hit each block once, the rest
    // land anywhere
    let mut assignment: Vec<usize> = (0..n).map(|i| if i < m { i } else { rng.below(m) }).collect();
    // shuffle so block structure isn't always a prefix
    for i in (1..n).rev() {
        let j = rng.below(i + 1);
        assignment.swap(i, j);
    }
    Surjection::new(assignment, m).expect("constructed onto by design")
}

/// A random gate over the given input spaces. Boolean connectives when all
/// inputs are binary, otherwise max/min trees; output space matches.
pub fn random_gate(rng: &mut Rng, input_spaces: Vec<StateSpace>) -> GateFn {
    let all_binary = input_spaces.iter().all(|s| s.is_binary());
    let inputs: Vec<Gate> = (0..input_spaces.len()).map(Gate::Input).collect();
    if all_binary {
        let wrapped: Vec<Gate> = inputs
            .into_iter()
            .map(|g| if rng.chance(0.3) { Gate::not(g) } else { g })
            .collect();
        let expr = match rng.below(4) {
            0 => Gate::Or(wrapped),
            1 => Gate::And(wrapped),
            2 => Gate::Xor(wrapped),
            _ => {
                let k = 1 + rng.below(wrapped.len());
                Gate::Threshold(k, wrapped)
            }
        };
        GateFn::new(expr, input_spaces, StateSpace::binary()).expect("binary gate over binary inputs")
    } else {
        let card = input_spaces.iter().map(|s| s.cardinality()).max().unwrap();
        let space = StateSpace::with_cardinality(card).expect("cardinality >= 2");
        let lifted: Vec<Gate> = inputs
            .into_iter()
            .zip(&input_spaces)
            .map(|(g, s)| {
                if s.cardinality() == card {
                    g
                } else {
                    // pad narrower inputs up with a constant so Max/Min
                    // operands share one space
                    Gate::Max(alloc::vec![g, Gate::Constant(0)])
                }
            })
            .collect();
        // padding trick only typechecks when every input already matches;
        // fall back to max over matching-width inputs only
        let usable: Vec<Gate> = lifted
            .into_iter()
            .zip(&input_spaces)
            .filter(|(_, s)| s.cardinality() == card)
            .map(|(g, _)| g)
            .collect();
        let mut operands = usable;
        if operands.is_empty() {
            operands.push(Gate::Constant(0));
        }
        let expr = if rng.chance(0.5) { Gate::Max(operands) } else { Gate::Min(operands) };
        GateFn::new(expr, input_spaces, space).expect("max/min over matching inputs")
    }
}

fn binary_spaces(n: usize) -> Vec<StateSpace> {
    alloc::vec![StateSpace::binary(); n]
}

fn child_decl(space: StateSpace) -> VariableDecl {
    VariableDecl::new("Y", space, VarKind::Child)
}

/// All variant tags [`random_spec`] can produce.
pub const VARIANT_TAGS: [&str; 11] = [
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

/// A random valid spec of the requested variant with `n` parents.
///
/// Binary-only variants get binary parents regardless of `max_card`;
/// the rest draw parent cardinalities in 2..=max_card. Mechanism and
/// child spaces are chosen to satisfy each variant's constraints.
pub fn random_spec(rng: &mut Rng, tag: &str, n: usize, max_card: usize) -> LocalSpec {
    assert!(n >= 1);
    let b = StateSpace::binary();
    let spec = match tag {
        "ici" => {
            let parent_spaces: Vec<StateSpace> =
                (0..n).map(|_| random_space(rng, max_card)).collect();
            let mech = random_space(rng, max_card);
            let mechanism_cpts: Vec<Cpt> = parent_spaces
                .iter()
                .map(|s| random_cpt(rng, alloc::vec![s.clone()], mech.clone()))
                .collect();
            let lower_gate = random_gate(rng, alloc::vec![mech.clone(); n]);
            let child = child_decl(lower_gate.output_space().clone());
            LocalSpec::new(child, parent_decls(&parent_spaces), Variant::Ici {
                mechanism_cpts,
                lower_gate,
            })
        }
        "pici" => {
            let parent_spaces: Vec<StateSpace> =
                (0..n).map(|_| random_space(rng, max_card)).collect();
            let mech = random_space(rng, max_card);
            let child_space = random_space(rng, max_card);
            let mechanism_cpts: Vec<Cpt> = parent_spaces
                .iter()
                .map(|s| random_cpt(rng, alloc::vec![s.clone()], mech.clone()))
                .collect();
            let lower_cpt = random_cpt(rng, alloc::vec![mech; n], child_space.clone());
            LocalSpec::new(child_decl(child_space), parent_decls(&parent_spaces), Variant::Pici {
                mechanism_cpts,
                lower_cpt,
            })
        }
        "pici_average" => {
            let parent_spaces: Vec<StateSpace> =
                (0..n).map(|_| random_space(rng, max_card)).collect();
            let child_space = random_space(rng, max_card);
            let mechanism_cpts: Vec<Cpt> = parent_spaces
                .iter()
                .map(|s| random_cpt(rng, alloc::vec![s.clone()], child_space.clone()))
                .collect();
            LocalSpec::new(
                child_decl(child_space),
                parent_decls(&parent_spaces),
                Variant::PiciAverage { mechanism_cpts },
            )
        }
        "scm" => {
            let parent_spaces: Vec<StateSpace> =
                (0..n).map(|_| random_space(rng, max_card)).collect();
            let gate = random_gate(rng, parent_spaces.clone());
            let child_space = random_space(rng, max_card);
            let lower_cpt =
                random_cpt(rng, alloc::vec![gate.output_space().clone()], child_space.clone());
            LocalSpec::new(child_decl(child_space), parent_decls(&parent_spaces), Variant::Scm {
                gate,
                lower_cpt,
            })
        }
        "ls_sici" => {
            let parent_spaces: Vec<StateSpace> =
                (0..n).map(|_| random_space(rng, max_card)).collect();
            let phi = random_surjection(rng, n);
            let blocks = phi.blocks();
            let block_gates: Vec<GateFn> = blocks
                .iter()
                .map(|block| {
                    random_gate(
                        rng,
                        block.iter().map(|&p| parent_spaces[p].clone()).collect(),
                    )
                })
                .collect();
            let child_space = random_space(rng, max_card);
            let lower_spaces: Vec<StateSpace> =
                block_gates.iter().map(|g| g.output_space().clone()).collect();
            let lower_cpt = random_cpt(rng, lower_spaces, child_space.clone());
            LocalSpec::new(child_decl(child_space), parent_decls(&parent_spaces), Variant::LsSici {
                phi,
                block_gates,
                lower_cpt,
            })
        }
        "us_sici" => {
            let parent_spaces: Vec<StateSpace> =
                (0..n).map(|_| random_space(rng, max_card)).collect();
            let phi = random_surjection(rng, n);
            let blocks = phi.blocks();
            let mech = random_space(rng, max_card);
            let block_cpts: Vec<Cpt> = blocks
                .iter()
                .map(|block| {
                    random_cpt(
                        rng,
                        block.iter().map(|&p| parent_spaces[p].clone()).collect(),
                        mech.clone(),
                    )
                })
                .collect();
            let lower_gate = random_gate(rng, alloc::vec![mech; blocks.len()]);
            let child = child_decl(lower_gate.output_space().clone());
            LocalSpec::new(child, parent_decls(&parent_spaces), Variant::UsSici {
                phi,
                block_cpts,
                lower_gate,
            })
        }
        "ds_sici" => {
            let parent_spaces: Vec<StateSpace> =
                (0..n).map(|_| random_space(rng, max_card)).collect();
            let phi = random_surjection(rng, n);
            let blocks = phi.blocks();
            let mech = random_space(rng, max_card);
            let child_space = random_space(rng, max_card);
            let block_cpts: Vec<Cpt> = blocks
                .iter()
                .map(|block| {
                    random_cpt(
                        rng,
                        block.iter().map(|&p| parent_spaces[p].clone()).collect(),
                        mech.clone(),
                    )
                })
                .collect();
            let lower_cpt =
                random_cpt(rng, alloc::vec![mech; blocks.len()], child_space.clone());
            LocalSpec::new(child_decl(child_space), parent_decls(&parent_spaces), Variant::DsSici {
                phi,
                block_cpts,
                lower_cpt,
            })
        }
        "noisy_or" => {
            let inhibitor_probs: Vec<f64> = (0..n).map(|_| rng.unit()).collect();
            LocalSpec::new(
                child_decl(b.clone()),
                parent_decls(&binary_spaces(n)),
                Variant::NoisyOr { inhibitor_probs },
            )
        }
        "noisy_max" => {
            let card = 2 + rng.below(max_card.max(2) - 1);
            let space = StateSpace::with_cardinality(card).expect("cardinality >= 2");
            let parent_spaces: Vec<StateSpace> =
                (0..n).map(|_| random_space(rng, max_card)).collect();
            let mechanism_cpts: Vec<Cpt> = parent_spaces
                .iter()
                .map(|s| random_cpt(rng, alloc::vec![s.clone()], space.clone()))
                .collect();
            LocalSpec::new(
                child_decl(space),
                parent_decls(&parent_spaces),
                Variant::NoisyMax { mechanism_cpts },
            )
        }
        "surjective_noisy_or" => {
            let phi = random_surjection(rng, n);
            let blocks = phi.blocks();
            let block_gates: Vec<GateFn> = blocks
                .iter()
                .map(|block| random_gate(rng, binary_spaces(block.len())))
                .collect();
            let block_inhibitor_probs: Vec<f64> = (0..blocks.len()).map(|_| rng.unit()).collect();
            LocalSpec::new(
                child_decl(b.clone()),
                parent_decls(&binary_spaces(n)),
                Variant::SurjectiveNoisyOr { phi, block_gates, block_inhibitor_probs },
            )
        }
        "hassall_binary" => {
            let weights: Vec<f64> = (0..n).map(|_| rng.range_f64(0.1, 5.0)).collect();
            LocalSpec::new(
                child_decl(b.clone()),
                parent_decls(&binary_spaces(n)),
                Variant::HassallBinary { weights },
            )
        }
        other => panic!("unknown variant tag {other}"),
    };
    spec.expect("generated spec is valid by construction")
}

/// Random positive weights whose sum-to-`n` normalization keeps every
/// weight at most 1 — i.e. weights accepted by the stochastic rewrite of
/// the weighted-sum rule. Since summing to `n` with all weights ≤ 1 pins
/// every normalized weight to exactly 1, the only freedom left is a common
/// positive scale.
pub fn random_normalized_weights(rng: &mut Rng, n: usize) -> Vec<f64> {
    let scale = rng.range_f64(0.1, 10.0);
    alloc::vec![scale; n]
}

/// A random DAG over `n` binary nodes named N1..Nn, with each forward edge
/// present with probability `edge_prob`. Acyclic by construction (edges only
/// go from lower to higher index).
pub fn random_dag(rng: &mut Rng, n: usize, edge_prob: f64) -> Dag {
    let nodes: Vec<VariableDecl> = (1..=n)
        .map(|i| VariableDecl::new(format!("N{i}"), StateSpace::binary(), VarKind::Ambient))
        .collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.chance(edge_prob) {
                edges.push((u, v));
            }
        }
    }
    Dag::new(nodes, edges).expect("forward edges cannot form a cycle")
}

/// A random ambient context that is guaranteed not to disturb the spec's
/// independence structure: extra roots feeding parents, extra sinks fed by
/// parents or the child, and forward edges between parents. No ambient node
/// ever gets an edge to or from the mechanism layer, and no ambient node is
/// a common cause of a parent and the child.
pub fn random_safe_ambient(rng: &mut Rng, spec: &LocalSpec, max_extra: usize) -> AmbientGraph {
    let mut g = AmbientGraph::default();
    let n = spec.parents.len();
    let extra = 1 + rng.below(max_extra.max(1));
    for k in 0..extra {
        let name = format!("A{}", k + 1);
        g.nodes.push(name.clone());
        if rng.chance(0.5) {
            // root feeding one or two parents
            let p = rng.below(n);
            g.edges.push((name.clone(), spec.parents[p].name.clone()));
            if n > 1 && rng.chance(0.4) {
                let q = (p + 1 + rng.below(n - 1)) % n;
                g.edges.push((name.clone(), spec.parents[q].name.clone()));
            }
        } else {
            // sink fed by a parent or the child
            let src = if rng.chance(0.3) {
                spec.child.name.clone()
            } else {
                spec.parents[rng.below(n)].name.clone()
            };
            g.edges.push((src, name.clone()));
        }
    }
    // occasional forward edge between parents
    if n > 1 && rng.chance(0.5) {
        let u = rng.below(n - 1);
        let v = u + 1 + rng.below(n - 1 - u);
        g.edges.push((spec.parents[u].name.clone(), spec.parents[v].name.clone()));
    }
    g
}

/// Reorder a table's parent slots. `perm[j]` is the old slot that moves to
/// position `j`; rows are re-indexed accordingly, entries untouched.
pub fn permute_cpt_parents(cpt: &Cpt, perm: &[usize]) -> Cpt {
    assert_eq!(perm.len(), cpt.parent_spaces().len());
    let new_spaces: Vec<StateSpace> =
        perm.iter().map(|&o| cpt.parent_spaces()[o].clone()).collect();
    let new_indexer =
        crate::state::ConfigIndexer::new(new_spaces.iter().map(|s| s.cardinality()).collect());
    let old_indexer = cpt.indexer();
    let mut rows = Vec::with_capacity(cpt.row_count());
    for new_config in new_indexer.iter() {
        let mut old_config = alloc::vec![0usize; perm.len()];
        for (j, &o) in perm.iter().enumerate() {
            old_config[o] = new_config[j];
        }
        let old_row = old_indexer.index_of(&old_config).expect("same radices, permuted");
        rows.push(cpt.row(old_row).to_vec());
    }
    Cpt::new(new_spaces, cpt.child_space().clone(), rows).expect("permuted rows keep shape")
}

/// Names for [`random_dag`] nodes, convenient for set arguments.
pub fn node_names(dag: &Dag) -> Vec<String> {
    dag.nodes().iter().map(|n| n.name.clone()).collect()
}
