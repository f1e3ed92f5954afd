//! Release gate: one test per acceptance criterion, each printing a
//! PASS line on success. Run with `--nocapture` to see the lines.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use sici_core::analysis::{parameter_count, shared_row_groups};
use sici_core::compile::{
    hassall_as_pici, hassall_lower_cpt, noisy_or_explicit_inhibitors, noisy_or_mechanism_cpt,
};
use sici_core::oracle::{compare_cpts, d_separated_by_path_enumeration, oracle_cpt};
use sici_core::state::cpt_entry_count;
use sici_core::structure::{verify_ci_statements, AmbientGraph, CiVerdict, Dag};
use sici_core::testgen::{
    parent_decls, random_cpt, random_dag, random_gate, random_normalized_weights,
    random_safe_ambient, random_spec, random_surjection, Rng, VARIANT_TAGS,
};
use sici_core::{
    compile, Cpt, GateFn, LocalSpec, StateSpace, Surjection, VarKind, VariableDecl, Variant,
};

fn specs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sici"))
}

fn binary_parents(n: usize) -> Vec<VariableDecl> {
    parent_decls(&vec![StateSpace::binary(); n])
}

fn binary_child() -> VariableDecl {
    VariableDecl::new("Y", StateSpace::binary(), VarKind::Child)
}

fn max_abs_diff(a: &Cpt, b: &Cpt) -> f64 {
    compare_cpts(a, b).expect("same shape").0
}

fn exactly_equal(a: &Cpt, b: &Cpt) -> bool {
    a.rows() == b.rows()
}

/// Exact per-cause product model and its explicit-inhibitor expansion agree.
#[test]
fn criterion_01_noisy_or_exactness() {
    let p = [0.1, 0.2, 0.3];
    let spec = LocalSpec::new(
        binary_child(),
        binary_parents(3),
        Variant::NoisyOr { inhibitor_probs: p.to_vec() },
    )
    .unwrap();
    let folded = compile(&spec).unwrap();
    assert_eq!(folded.row_count(), 8);
    for (row, x) in folded.indexer().iter().enumerate() {
        let expect: f64 =
            x.iter().zip(&p).filter(|(&xi, _)| xi == 1).map(|(_, &pi)| pi).product();
        assert_eq!(folded.row(row)[0], expect, "row {x:?} must be the exact product");
    }
    let explicit = noisy_or_explicit_inhibitors(&spec).unwrap();
    assert!(max_abs_diff(&folded, &explicit) <= 1e-15);
    println!("criterion 1: PASS");
}

/// The weighted-sum lower table reproduces the symbolic reference rows.
#[test]
fn criterion_02_weighted_lower_table() {
    for w in [[1.0, 1.0, 1.0], [2.5, 2.5, 2.5]] {
        let spec = LocalSpec::new(
            binary_child(),
            binary_parents(3),
            Variant::HassallBinary { weights: w.to_vec() },
        )
        .unwrap();
        let pici = hassall_as_pici(&spec).unwrap();
        let lower = match &pici.variant {
            Variant::Pici { lower_cpt, .. } => lower_cpt,
            other => panic!("expected a pici payload, got {}", other.tag()),
        };
        let total: f64 = w.iter().sum();
        for (row, m) in lower.indexer().iter().enumerate() {
            let expect: f64 =
                m.iter().zip(&w).filter(|(&mi, _)| mi == 1).map(|(_, &wi)| wi).sum::<f64>() / total;
            assert!((lower.row(row)[1] - expect).abs() <= 1e-12, "row {m:?}");
        }
        // the free-standing weighted table builder agrees row for row
        let table = hassall_lower_cpt(&w).unwrap();
        assert!(max_abs_diff(lower, &table) <= 1e-12);
    }
    println!("criterion 2: PASS");
}

/// The weighted-sum rule equals its latent-mechanism rewrite wherever the
/// rewrite is a valid probability model.
#[test]
fn criterion_03_weighted_sum_equals_rewrite() {
    let mut rng = Rng::new(0x03);
    for _ in 0..50 {
        let n = 1 + rng.below(5);
        let weights = random_normalized_weights(&mut rng, n);
        let spec = LocalSpec::new(
            binary_child(),
            binary_parents(n),
            Variant::HassallBinary { weights },
        )
        .unwrap();
        let direct = compile(&spec).unwrap();
        let rewrite = compile(&hassall_as_pici(&spec).unwrap()).unwrap();
        assert!(max_abs_diff(&direct, &rewrite) <= 1e-12);
    }
    println!("criterion 3: PASS");
}

/// Every variant's compiler agrees with the joint-distribution brute force.
#[test]
fn criterion_04_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = Rng::new(0x04);
    for tag in VARIANT_TAGS {
        for _ in 0..200 {
            let n = 1 + rng.below(5);
            let spec = random_spec(&mut rng, tag, n, 3);
            let compiled = compile(&spec).unwrap();
            let brute = oracle_cpt(&spec).unwrap();
            let (diff, at) = compare_cpts(&compiled, &brute).unwrap();
            assert!(diff <= 1e-12, "{tag}: diff {diff} at {at:?}");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}, budget is 60s");
    println!("criterion 4: PASS ({} specs in {elapsed:?})", 200 * VARIANT_TAGS.len());
}

/// Special cases collapse to their simpler variants as exact table
/// equalities.
#[test]
fn criterion_05_reduction_lattice() {
    let mut rng = Rng::new(0x05);
    let b = StateSpace::binary();
    for _ in 0..20 {
        let n = 1 + rng.below(5);
        let parents = binary_parents(n);
        let phi = random_surjection(&mut rng, n);
        let blocks = phi.blocks();
        let m = blocks.len();

        // DS with deterministic blocks = LS
        let gates: Vec<GateFn> = blocks
            .iter()
            .map(|blk| random_gate(&mut rng, vec![b.clone(); blk.len()]))
            .collect();
        let lower = random_cpt(&mut rng, vec![b.clone(); m], b.clone());
        let ls = LocalSpec::new(binary_child(), parents.clone(), Variant::LsSici {
            phi: phi.clone(),
            block_gates: gates.clone(),
            lower_cpt: lower.clone(),
        })
        .unwrap();
        let ds_det_upper = LocalSpec::new(binary_child(), parents.clone(), Variant::DsSici {
            phi: phi.clone(),
            block_cpts: gates.iter().map(GateFn::to_cpt).collect(),
            lower_cpt: lower.clone(),
        })
        .unwrap();
        assert!(exactly_equal(&compile(&ls).unwrap(), &compile(&ds_det_upper).unwrap()));

        // DS with deterministic lower = US
        let block_cpts: Vec<Cpt> = blocks
            .iter()
            .map(|blk| random_cpt(&mut rng, vec![b.clone(); blk.len()], b.clone()))
            .collect();
        let lower_gate = random_gate(&mut rng, vec![b.clone(); m]);
        let us = LocalSpec::new(binary_child(), parents.clone(), Variant::UsSici {
            phi: phi.clone(),
            block_cpts: block_cpts.clone(),
            lower_gate: lower_gate.clone(),
        })
        .unwrap();
        let ds_det_lower = LocalSpec::new(binary_child(), parents.clone(), Variant::DsSici {
            phi: phi.clone(),
            block_cpts: block_cpts.clone(),
            lower_cpt: lower_gate.to_cpt(),
        })
        .unwrap();
        assert!(exactly_equal(&compile(&us).unwrap(), &compile(&ds_det_lower).unwrap()));

        // singleton blocks: US = ICI and DS = PICI
        let mech_cpts: Vec<Cpt> =
            (0..n).map(|_| random_cpt(&mut rng, vec![b.clone()], b.clone())).collect();
        let gate_n = random_gate(&mut rng, vec![b.clone(); n]);
        let lower_n = random_cpt(&mut rng, vec![b.clone(); n], b.clone());
        let identity = Surjection::identity(n);
        let ici = LocalSpec::new(binary_child(), parents.clone(), Variant::Ici {
            mechanism_cpts: mech_cpts.clone(),
            lower_gate: gate_n.clone(),
        })
        .unwrap();
        let us_singleton = LocalSpec::new(binary_child(), parents.clone(), Variant::UsSici {
            phi: identity.clone(),
            block_cpts: mech_cpts.clone(),
            lower_gate: gate_n.clone(),
        })
        .unwrap();
        assert!(exactly_equal(&compile(&ici).unwrap(), &compile(&us_singleton).unwrap()));

        let pici = LocalSpec::new(binary_child(), parents.clone(), Variant::Pici {
            mechanism_cpts: mech_cpts.clone(),
            lower_cpt: lower_n.clone(),
        })
        .unwrap();
        let ds_singleton = LocalSpec::new(binary_child(), parents.clone(), Variant::DsSici {
            phi: identity,
            block_cpts: mech_cpts.clone(),
            lower_cpt: lower_n,
        })
        .unwrap();
        assert!(exactly_equal(&compile(&pici).unwrap(), &compile(&ds_singleton).unwrap()));

        // PICI with deterministic lower = ICI
        let pici_det = LocalSpec::new(binary_child(), parents.clone(), Variant::Pici {
            mechanism_cpts: mech_cpts.clone(),
            lower_cpt: gate_n.to_cpt(),
        })
        .unwrap();
        assert!(exactly_equal(&compile(&ici).unwrap(), &compile(&pici_det).unwrap()));

        // MAX on binary = OR
        let probs: Vec<f64> = (0..n).map(|_| rng.unit()).collect();
        let noisy_or = LocalSpec::new(binary_child(), parents.clone(), Variant::NoisyOr {
            inhibitor_probs: probs.clone(),
        })
        .unwrap();
        let noisy_max = LocalSpec::new(binary_child(), parents, Variant::NoisyMax {
            mechanism_cpts: probs.iter().map(|&p| noisy_or_mechanism_cpt(p)).collect(),
        })
        .unwrap();
        assert!(exactly_equal(&compile(&noisy_or).unwrap(), &compile(&noisy_max).unwrap()));
    }
    println!("criterion 5: PASS");
}

/// Graph checks: random structures satisfy every independence statement;
/// hand-built violations are caught.
#[test]
fn criterion_06_independence_statements() {
    let mut rng = Rng::new(0x06);
    for i in 0..50 {
        let tag = VARIANT_TAGS[i % VARIANT_TAGS.len()];
        let n = 1 + rng.below(5);
        let spec = random_spec(&mut rng, tag, n, 3);
        let ambient = random_safe_ambient(&mut rng, &spec, 3);
        for check in verify_ci_statements(&spec, Some(&ambient)).unwrap() {
            assert_ne!(check.verdict, CiVerdict::Fail, "{tag}: {check:?}");
        }
    }

    // adversarial case 1: a direct parent-to-child edge breaks the
    // "child independent of parents given mechanisms" statement
    let spec = random_spec(&mut rng, "ici", 3, 2);
    let direct_edge = AmbientGraph {
        nodes: vec![],
        edges: vec![(spec.parents[0].name.clone(), spec.child.name.clone())],
    };
    let checks = verify_ci_statements(&spec, Some(&direct_edge)).unwrap();
    assert!(
        checks.iter().any(|c| c.statement == "2" && c.verdict == CiVerdict::Fail),
        "direct edge must break statement (2): {checks:?}"
    );

    // adversarial case 2: an edge between mechanisms breaks their mutual
    // independence given the parents
    let b = StateSpace::binary();
    let nodes: Vec<VariableDecl> = vec![
        VariableDecl::new("X1", b.clone(), VarKind::Parent),
        VariableDecl::new("X2", b.clone(), VarKind::Parent),
        VariableDecl::new("M1", b.clone(), VarKind::Mechanism),
        VariableDecl::new("M2", b.clone(), VarKind::Mechanism),
        VariableDecl::new("Y", b.clone(), VarKind::Child),
    ];
    let tampered =
        Dag::new(nodes.clone(), vec![(0, 2), (1, 3), (2, 3), (2, 4), (3, 4)]).unwrap();
    assert!(!tampered.d_separated(&["M1"], &["M2"], &["X1", "X2"]).unwrap());
    assert!(!d_separated_by_path_enumeration(&tampered, &[2], &[3], &[0, 1]).unwrap());

    // adversarial case 3: an outside node feeding a mechanism breaks the
    // "mechanisms shielded by parents and child" statement, and the spec
    // front door refuses to build such a graph at all
    let mut with_ambient = nodes;
    with_ambient.push(VariableDecl::new("A", b, VarKind::Ambient));
    let infiltrated =
        Dag::new(with_ambient, vec![(0, 2), (1, 3), (2, 4), (3, 4), (5, 2)]).unwrap();
    assert!(!infiltrated.d_separated(&["M1", "M2"], &["A"], &["X1", "X2", "Y"]).unwrap());
    let into_mechanism = AmbientGraph {
        nodes: vec!["A".to_string()],
        edges: vec![("A".to_string(), "M1".to_string())],
    };
    assert!(matches!(
        verify_ci_statements(&spec, Some(&into_mechanism)),
        Err(sici_core::Error::AmbientViolation(_))
    ));
    println!("criterion 6: PASS");
}

/// Table sizes and per-variant parameter counts, including the six-parent
/// three-block showcase numbers.
#[test]
fn criterion_07_parameter_accounting() {
    let mut rng = Rng::new(0x07);
    for _ in 0..10 {
        let n = 1 + rng.below(6);
        let parent_spaces: Vec<StateSpace> = (0..n)
            .map(|_| StateSpace::with_cardinality(2 + rng.below(3)).unwrap())
            .collect();
        let child = StateSpace::with_cardinality(2 + rng.below(3)).unwrap();
        let mut expect = child.cardinality() - 1;
        for s in &parent_spaces {
            expect *= s.cardinality();
        }
        assert_eq!(cpt_entry_count(&parent_spaces, &child), expect);
    }

    let flat = LocalSpec::new(
        binary_child(),
        binary_parents(6),
        Variant::NoisyOr { inhibitor_probs: vec![0.1; 6] },
    )
    .unwrap();
    let grouped = LocalSpec::new(
        binary_child(),
        binary_parents(6),
        Variant::SurjectiveNoisyOr {
            phi: Surjection::new(vec![0, 0, 0, 1, 1, 2], 3).unwrap(),
            block_gates: vec![GateFn::or_n(3), GateFn::or_n(2), GateFn::or_n(1)],
            block_inhibitor_probs: vec![0.1, 0.2, 0.3],
        },
    )
    .unwrap();
    let flat_report = parameter_count(&flat).unwrap();
    let grouped_report = parameter_count(&grouped).unwrap();
    assert_eq!(flat_report.model_count, 6);
    assert_eq!(grouped_report.model_count, 3);
    assert_eq!(flat_report.model_count - grouped_report.model_count, 3); // n - m
    assert_eq!(grouped_report.direct_count, 64);
    println!("criterion 7: PASS");
}

/// Deterministic-upper models produce exactly one distinct row per
/// reachable mechanism configuration.
#[test]
fn criterion_08_shared_rows() {
    let mut rng = Rng::new(0x08);
    for _ in 0..20 {
        let n = 1 + rng.below(5);
        let spec = random_spec(&mut rng, "ls_sici", n, 3);
        let (phi, gates) = match &spec.variant {
            Variant::LsSici { phi, block_gates, .. } => (phi, block_gates),
            _ => unreachable!(),
        };
        let blocks = phi.blocks();
        let cpt = compile(&spec).unwrap();
        let mut images = std::collections::BTreeSet::new();
        let mut image_of_row = Vec::new();
        for x in cpt.indexer().iter() {
            let image: Vec<usize> = blocks
                .iter()
                .zip(gates)
                .map(|(blk, g)| g.eval(&blk.iter().map(|&p| x[p]).collect::<Vec<_>>()).unwrap())
                .collect();
            images.insert(image.clone());
            image_of_row.push(image);
        }
        let groups = shared_row_groups(&cpt, 0.0);
        assert_eq!(groups.len(), images.len(), "one group per reachable image");
        for group in groups {
            for &row in &group {
                assert_eq!(cpt.row(row), cpt.row(group[0]), "groups must be bit-identical");
                assert_eq!(image_of_row[row], image_of_row[group[0]]);
            }
        }
    }
    println!("criterion 8: PASS");
}

/// The reachability-based separation test agrees with path enumeration
/// everywhere, including the fixed six-node example.
#[test]
fn criterion_09_separation_oracle_agreement() {
    let mut rng = Rng::new(0x09);
    let mut graphs: Vec<Dag> = (0..50)
        .map(|_| {
            let n = 2 + rng.below(6);
            random_dag(&mut rng, n, 0.4)
        })
        .collect();
    let six: Vec<VariableDecl> = (1..=6)
        .map(|i| VariableDecl::new(format!("X{i}"), StateSpace::binary(), VarKind::Ambient))
        .collect();
    graphs.push(
        Dag::new(six, vec![(0, 3), (1, 3), (2, 3), (2, 4), (3, 4), (2, 5), (4, 5)]).unwrap(),
    );
    for dag in &graphs {
        let n = dag.node_count();
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                for z_mask in 0u32..(1 << n) {
                    if z_mask & (1 << a) != 0 || z_mask & (1 << b) != 0 {
                        continue;
                    }
                    let z: Vec<usize> = (0..n).filter(|&v| z_mask & (1 << v) != 0).collect();
                    assert_eq!(
                        dag.d_separated_idx(&[a], &[b], &z).unwrap(),
                        d_separated_by_path_enumeration(dag, &[a], &[b], &z).unwrap(),
                        "a={a} b={b} z={z:?} edges={:?}",
                        dag.edges().collect::<Vec<_>>()
                    );
                }
            }
        }
    }
    println!("criterion 9: PASS");
}

/// End-to-end command contract: lossless round trips, reproducible output
/// bytes, stable exit codes.
#[test]
fn criterion_10_cli_contract() {
    use sici_cli::document::{parse_document, serialize_document};

    // round-trip every bundled spec
    let dir = specs_dir();
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().map(|e| e != "json").unwrap_or(true) {
            continue;
        }
        count += 1;
        let text = std::fs::read_to_string(&path).unwrap();
        let doc = parse_document(&text).unwrap();
        let reparsed = parse_document(&serialize_document(&doc)).unwrap();
        assert_eq!(doc, reparsed, "{path:?} must round-trip");
    }
    assert!(count >= 5, "bundled corpus present");

    // byte-identical CSV across two runs
    let fig7 = dir.join("surjective_noisy_or.json");
    let run = || bin().arg("compile").arg(&fig7).output().unwrap();
    let first = run();
    let second = run();
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "CSV must be byte-identical across runs");
    assert_eq!(first.stdout.iter().filter(|&&b| b == b'\n').count(), 65); // header + 2^6 rows

    // exit code contract
    let ok = bin().arg("verify").arg(dir.join("noisy_or.json")).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));

    let garbled = bin().arg("compile").arg(dir.join("no_such_file.json")).output().unwrap();
    assert_eq!(garbled.status.code(), Some(1));

    let failing = bin()
        .arg("verify")
        .arg(dir.join("noisy_or.json"))
        .arg("--inject-error")
        .output()
        .unwrap();
    assert_eq!(failing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&failing.stderr).contains("FAIL"));

    // oversized spec trips the dedicated exit code
    let mut doc = String::from(
        r#"{"schema_version":1,"child":{"name":"Y","states":["false","true"]},"parents":["#,
    );
    for i in 1..=25 {
        if i > 1 {
            doc.push(',');
        }
        doc.push_str(&format!(r#"{{"name":"X{i}","states":["false","true"]}}"#));
    }
    doc.push_str(r#"],"model":{"type":"noisy_or","inhibitor_probabilities":["#);
    doc.push_str(&vec!["0.5"; 25].join(","));
    doc.push_str("]}}");
    let tmp = std::env::temp_dir().join("sici_acceptance_oversized.json");
    std::fs::write(&tmp, doc).unwrap();
    let oversized = bin().arg("verify").arg(&tmp).output().unwrap();
    assert_eq!(oversized.status.code(), Some(3));

    println!("criterion 10: PASS");
}
