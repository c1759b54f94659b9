//! Acceptance suite: one PASS/FAIL line per criterion. Run with `cargo test --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use shr_core::dsl::{self, SpecFile};
use shr_core::engine::{applicable_steps, check_node, unify, Registry, SyncPolicy, Transition};
use shr_core::gcm::{self, actions, am_emitter, am_label, f_label, sigma_label, CommSpec};
use shr_core::hypergraph::{is_isomorphic, EdgeId, Hypergraph, NodeId};
use shr_core::production::{instantiate, FreshAllocator, GroundCondition, Production};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).unwrap()
}

fn parse_fixture(name: &str) -> SpecFile {
    dsl::parse(&fixture_text(name)).unwrap_or_else(|e| panic!("{name}: {e:?}"))
}

fn emitter(action: shr_core::production::ActionSig, spec: &[CommSpec]) -> Production {
    am_emitter(&action, spec).unwrap()
}

fn count(graph: &Hypergraph, label: &str) -> usize {
    graph.edges_with_label(label).count()
}

fn gcm_registry() -> Registry {
    use CommSpec::{Existing, Fresh};
    let mut all = gcm::library();
    all.push(emitter(actions::go(), &[Existing(0), Fresh]));
    all.push(emitter(actions::start_sigma(), &[Existing(0), Existing(1), Fresh]));
    all.push(emitter(actions::rep(), &[Existing(0), Fresh]));
    all.push(emitter(actions::rep_sigma(), &[Existing(0), Fresh]));
    all.push(emitter(actions::copy(), &[Existing(0), Fresh, Existing(1)]));
    all.push(emitter(actions::kill(), &[]));
    Registry::new(all).unwrap()
}

fn random_gcm_graph(rng: &mut StdRng, max_nodes: usize, max_edges: usize) -> Hypergraph {
    let mut graph = Hypergraph::new();
    let nodes: Vec<NodeId> = (0..rng.random_range(1..=max_nodes))
        .map(|i| graph.insert_node(format!("v{i}")))
        .collect();
    let labels = [am_label(), f_label(), sigma_label()];
    for _ in 0..rng.random_range(1..=max_edges) {
        let label = &labels[rng.random_range(0..labels.len())];
        let tentacles: Vec<NodeId> = (0..label.arity())
            .map(|_| nodes[rng.random_range(0..nodes.len())])
            .collect();
        graph.insert_edge(label, &tentacles).unwrap();
    }
    graph
}

/// Source edges that are gone from `result`, and result edges that are new.
fn edge_delta(source: &Hypergraph, result: &Hypergraph) -> (Vec<EdgeId>, Vec<EdgeId>) {
    let before: BTreeSet<EdgeId> = source.edges().map(|e| e.id()).collect();
    let after: BTreeSet<EdgeId> = result.edges().map(|e| e.id()).collect();
    (
        before.difference(&after).copied().collect(),
        after.difference(&before).copied().collect(),
    )
}

fn migration_criterion() -> Outcome {
    let started = Instant::now();
    let mut graph = Hypergraph::new();
    let [g, l, l1, s] = ["g", "l", "l1", "s"].map(|n| graph.insert_node(n));
    graph.insert_edge(&am_label(), &[g, l1]).unwrap();
    graph.insert_edge(&f_label(), &[g, l, s]).unwrap();
    graph.insert_edge(&sigma_label(), &[s]).unwrap();
    let registry = Registry::new(vec![
        emitter(actions::start_sigma(), &[CommSpec::Existing(0), CommSpec::Existing(1), CommSpec::Fresh]),
        gcm::start_production(),
    ])
    .unwrap();

    let steps = applicable_steps(&graph, &registry, SyncPolicy::Milner);
    ensure(steps.len() == 1, || format!("{} transitions, expected 1", steps.len()))?;
    let result = &steps[0].result;

    let mut expected = Hypergraph::new();
    let [eg, _el, el1, es, es1] = ["g", "l", "l1", "s", "s1"].map(|n| expected.insert_node(n));
    expected.insert_edge(&am_label(), &[eg, el1]).unwrap();
    expected.insert_edge(&f_label(), &[eg, el1, es1]).unwrap();
    expected.insert_edge(&sigma_label(), &[es]).unwrap();
    expected.insert_edge(&sigma_label(), &[es1]).unwrap();
    ensure(is_isomorphic(result, &expected), || format!("result not isomorphic:\n{}", dsl::print_graph(result)))?;
    ensure(result.contains_node(l) && result.degree(l) == 0, || "l is not isolated".into())?;
    ensure(result.edges_with_label(gcm::SIGMA).any(|e| e.tentacles() == [s]), || "sigma(s) is gone".into())?;

    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("1 transition, isomorphic result, {elapsed:?}"))
}

fn kill_criterion() -> Outcome {
    let registry = Registry::new(vec![gcm::kill_production(), emitter(actions::kill(), &[])]).unwrap();
    let mut rng = StdRng::seed_from_u64(2);
    let mut transitions = 0;
    for context in 0..20 {
        let mut graph = Hypergraph::new();
        let g = graph.insert_node("g");
        let la = graph.insert_node("la");
        let extra: Vec<NodeId> = (0..rng.random_range(1..5))
            .map(|i| graph.insert_node(format!("x{i}")))
            .collect();
        let pick = |rng: &mut StdRng| {
            if rng.random_bool(0.3) {
                g
            } else {
                extra[rng.random_range(0..extra.len())]
            }
        };
        graph.insert_edge(&am_label(), &[g, la]).unwrap();
        let (l, s) = (pick(&mut rng), pick(&mut rng));
        graph.insert_edge(&f_label(), &[g, l, s]).unwrap();
        for _ in 0..rng.random_range(0..4) {
            if rng.random_bool(0.5) {
                let t = [pick(&mut rng), pick(&mut rng), pick(&mut rng)];
                graph.insert_edge(&f_label(), &t).unwrap();
            } else {
                let t = [pick(&mut rng)];
                graph.insert_edge(&sigma_label(), &t).unwrap();
            }
        }

        let steps = applicable_steps(&graph, &registry, SyncPolicy::Milner);
        ensure(!steps.is_empty(), || format!("context {context}: no transition"))?;
        for t in &steps {
            transitions += 1;
            ensure(count(&t.result, gcm::F) + 1 == count(&graph, gcm::F), || {
                format!("context {context}: f-count {} -> {}", count(&graph, gcm::F), count(&t.result, gcm::F))
            })?;
            let names = |h: &Hypergraph| h.nodes().map(|(id, n)| (id, n.to_string())).collect::<Vec<_>>();
            ensure(names(&t.result) == names(&graph), || format!("context {context}: node set changed"))?;
        }
    }
    Ok(format!("20 contexts, {transitions} transitions"))
}

fn copy_criterion() -> Outcome {
    let spec = parse_fixture("copy.shr");
    let graph = &spec.graph;
    let registry = Registry::new(spec.productions.clone()).unwrap();
    let steps = applicable_steps(graph, &registry, SyncPolicy::Milner);
    ensure(steps.len() == 1, || format!("{} transitions, expected 1", steps.len()))?;
    let t = &steps[0];
    ensure(t.assignment.len() == 3, || "not a three-party synchronization".into())?;
    ensure(count(&t.result, gcm::F) == count(graph, gcm::F) + 1, || "f-count did not grow by one".into())?;
    ensure(count(&t.result, gcm::SIGMA) == count(graph, gcm::SIGMA) + 1, || "sigma-count did not grow by one".into())?;

    let (_, added) = edge_delta(graph, &t.result);
    let s = graph.node_by_name("s").unwrap();
    let new_store = added
        .iter()
        .filter_map(|id| t.result.edge(*id))
        .find(|e| e.label().name() == gcm::SIGMA && e.tentacles() != [s])
        .map(|e| e.tentacles()[0])
        .ok_or("no duplicated store")?;
    let replica = added
        .iter()
        .filter_map(|id| t.result.edge(*id))
        .find(|e| e.label().name() == gcm::F && e.tentacles()[2] != s)
        .ok_or("no replica with its own store")?;
    ensure(replica.tentacles()[2] == new_store, || "replica is not on the duplicated store".into())?;
    ensure(!graph.contains_node(new_store), || "duplicated store node is not fresh".into())?;
    // The copy production's s2 and the store's s2 are distinct fresh nodes; the fusion must
    // send both to the node that now carries the store.
    let fused_in: Vec<NodeId> = t.fusion.iter().filter(|(_, to)| **to == new_store).map(|(from, _)| *from).collect();
    ensure(!fused_in.is_empty(), || "fusion does not reach the duplicated store".into())?;
    let l1 = graph.node_by_name("l1").unwrap();
    ensure(replica.tentacles()[1] == l1, || "replica not placed at the manager's location".into())?;
    Ok(format!("1 transition, fusion {} -> new store", fused_in.len()))
}

fn share_vs_copy_criterion() -> Outcome {
    use CommSpec::{Existing, Fresh};
    let share = Registry::new(vec![gcm::rep_share_production(), emitter(actions::rep(), &[Existing(0), Fresh])]).unwrap();
    let copy = Registry::new(vec![
        gcm::copy_production(),
        gcm::store_rep_production(),
        emitter(actions::copy(), &[Existing(0), Fresh, Existing(1)]),
    ])
    .unwrap();

    let mut rng = StdRng::seed_from_u64(4);
    let mut checked = 0;
    for run in 0..50 {
        let mut graph = Hypergraph::new();
        let g = graph.insert_node("g");
        let la = graph.insert_node("la");
        let s = graph.insert_node("s");
        graph.insert_edge(&am_label(), &[g, la]).unwrap();
        graph.insert_edge(&sigma_label(), &[s]).unwrap();
        for w in 0..rng.random_range(1..=3) {
            let l = graph.insert_node(format!("l{w}"));
            graph.insert_edge(&f_label(), &[g, l, s]).unwrap();
        }

        for (registry, shared) in [(&share, true), (&copy, false)] {
            let steps = applicable_steps(&graph, registry, SyncPolicy::Milner);
            ensure(!steps.is_empty(), || format!("run {run}: no transition"))?;
            for t in &steps {
                let (_, added) = edge_delta(&graph, &t.result);
                let stores: Vec<NodeId> = added
                    .iter()
                    .filter_map(|id| t.result.edge(*id))
                    .filter(|e| e.label().name() == gcm::F)
                    .map(|e| e.tentacles()[2])
                    .collect();
                ensure(stores.len() == 2, || format!("run {run}: {} new f-edges", stores.len()))?;
                let same = stores[0] == stores[1];
                ensure(same == shared, || {
                    format!("run {run}: {} but tentacle 2 {}", if shared { "share" } else { "copy" }, if same { "shared" } else { "differs" })
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} transitions checked"))
}

fn broadcast_criterion() -> Outcome {
    let spec = parse_fixture("broadcast.shr");
    let registry = Registry::new(spec.productions.clone()).unwrap();
    let l1 = spec.graph.node_by_name("l1").unwrap();

    let broadcast = applicable_steps(&spec.graph, &registry, SyncPolicy::Broadcast);
    ensure(broadcast.len() == 1, || format!("broadcast: {} transitions", broadcast.len()))?;
    let all_moved = broadcast[0].result.edges_with_label(gcm::F).all(|e| e.tentacles()[1] == l1);
    ensure(all_moved, || "broadcast: not every worker moved".into())?;

    let milner = applicable_steps(&spec.graph, &registry, SyncPolicy::Milner);
    ensure(milner.len() == 2, || format!("milner: {} transitions", milner.len()))?;
    for t in &milner {
        let moved = t.result.edges_with_label(gcm::F).filter(|e| e.tentacles()[1] == l1).count();
        ensure(moved == 1, || format!("milner: {moved} workers moved"))?;
    }
    Ok("broadcast 1, milner 2".into())
}

/// Every assignment, idle included, filtered by check_node on each node and unify on the
/// collected equations.
fn brute_force(graph: &Hypergraph, productions: &[Production], policy: SyncPolicy) -> BTreeSet<Vec<(EdgeId, String)>> {
    let edges: Vec<_> = graph.edges().collect();
    let options: Vec<Vec<Option<&Production>>> = edges
        .iter()
        .map(|e| {
            std::iter::once(None)
                .chain(productions.iter().filter(|p| &p.lhs_label == e.label()).map(Some))
                .collect()
        })
        .collect();
    let mut attached: BTreeMap<NodeId, usize> = BTreeMap::new();
    for e in &edges {
        for n in e.tentacles() {
            *attached.entry(*n).or_default() += 1;
        }
    }

    let total: usize = options.iter().map(Vec::len).product();
    let mut accepted = BTreeSet::new();
    'each: for mut code in 1..total {
        let mut fresh = FreshAllocator::for_graph(graph);
        let mut key = Vec::new();
        let mut at: BTreeMap<NodeId, Vec<GroundCondition>> = BTreeMap::new();
        for (edge, opts) in edges.iter().zip(&options) {
            let pick = opts[code % opts.len()];
            code /= opts.len();
            if let Some(p) = pick {
                key.push((edge.id(), p.name.clone()));
                for c in instantiate(p, edge, &BTreeMap::new(), &mut fresh).unwrap().conditions {
                    at.entry(c.node).or_default().push(c);
                }
            }
        }
        let mut equations = Vec::new();
        for (node, conditions) in &at {
            match check_node(conditions, policy, attached[node]) {
                Ok(eqs) => equations.extend(eqs),
                Err(_) => continue 'each,
            }
        }
        if unify(&equations, &graph.node_set()).is_ok() {
            accepted.insert(key);
        }
    }
    accepted
}

fn keys(steps: &[Transition]) -> BTreeSet<Vec<(EdgeId, String)>> {
    steps
        .iter()
        .map(|t| t.key().into_iter().map(|(e, n)| (e, n.to_string())).collect())
        .collect()
}

fn oracle_criterion() -> Outcome {
    let started = Instant::now();
    let registry = gcm_registry();
    let mut rng = StdRng::seed_from_u64(6);
    let mut discrepancies = 0;
    let mut transitions = 0;
    for _ in 0..200 {
        let graph = random_gcm_graph(&mut rng, 4, 4);
        for policy in [SyncPolicy::Milner, SyncPolicy::Broadcast] {
            let steps = applicable_steps(&graph, &registry, policy);
            transitions += steps.len();
            if keys(&steps) != brute_force(&graph, registry.productions(), policy) || keys(&steps).len() != steps.len() {
                discrepancies += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    ensure(discrepancies == 0, || format!("{discrepancies} discrepancies"))?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("200 graphs, {transitions} transitions, 0 discrepancies, {elapsed:?}"))
}

fn fusion_criterion() -> Outcome {
    let registry = gcm_registry();
    let strategy = (1usize..=4, prop::collection::vec((0usize..3, prop::array::uniform3(0usize..4)), 1..=4));
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let transitions = std::cell::Cell::new(0usize);
    let result = runner.run(&strategy, |(n, edges)| {
        let mut graph = Hypergraph::new();
        let nodes: Vec<NodeId> = (0..n).map(|i| graph.insert_node(format!("v{i}"))).collect();
        let labels = [am_label(), f_label(), sigma_label()];
        for (l, picks) in edges {
            let label = &labels[l];
            let t: Vec<NodeId> = picks[..label.arity()].iter().map(|p| nodes[p % n]).collect();
            graph.insert_edge(label, &t).unwrap();
        }
        for policy in [SyncPolicy::Milner, SyncPolicy::Broadcast] {
            for t in applicable_steps(&graph, &registry, policy) {
                transitions.set(transitions.get() + 1);
                for from in t.fusion.keys() {
                    prop_assert!(!graph.contains_node(*from), "existing node {from} fused away");
                }
                for node in graph.node_ids() {
                    prop_assert!(t.result.contains_node(node), "existing node {node} lost");
                }
            }
        }
        Ok(())
    });
    result.map_err(|e| e.to_string())?;
    Ok(format!("1000 cases, {} transitions", transitions.get()))
}

fn farm_criterion() -> Outcome {
    let path = fixtures().join("producer_farm.shr");
    let output = Command::new(env!("CARGO_BIN_EXE_shr"))
        .arg("run")
        .arg(&path)
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&output.stdout);
    ensure(output.status.code() == Some(0), || {
        format!("exit {:?}: {}", output.status.code(), String::from_utf8_lossy(&output.stderr))
    })?;

    let block = &stdout[stdout.find("graph {").ok_or("no final graph printed")?..];
    let labels = "labels { am/2; f/3; sigma/1; producer/1; }\n";
    let last = dsl::parse(&format!("{labels}{block}")).map_err(|e| format!("{e:?}"))?.graph;
    ensure(count(&last, gcm::F) == 3, || format!("{} workers", count(&last, gcm::F)))?;
    ensure(count(&last, gcm::SIGMA) == 1, || "store duplicated".into())?;
    let store = last.edges_with_label(gcm::SIGMA).next().unwrap().tentacles()[0];
    ensure(last.edges_with_label(gcm::F).all(|e| e.tentacles()[2] == store), || "a worker lost the shared store".into())?;
    let at = |loc: &str| {
        last.node_by_name(loc)
            .is_some_and(|n| last.edges_with_label(gcm::F).any(|e| e.tentacles()[1] == n))
    };
    ensure(at("L7") && at("L8") && !at("L2"), || "workers not at L7 and L8".into())?;
    Ok("exit 0, 3 workers on one store".into())
}

const FIXTURES: &[&str] = &[
    "broadcast.shr",
    "copy.shr",
    "kill.shr",
    "library.shr",
    "library.canonical.shr",
    "migration.shr",
    "migration_final.shr",
    "producer_farm.shr",
    "quiescent.shr",
];

fn round_trip_criterion() -> Outcome {
    for name in FIXTURES {
        let first = parse_fixture(name);
        let second = dsl::parse(&dsl::serialize(&first)).map_err(|e| format!("{name}: {e:?}"))?;
        ensure(first == second, || format!("{name}: round trip changed the spec"))?;
    }

    let corpus: Vec<String> = FIXTURES.iter().map(|n| fixture_text(n)).collect();
    let alphabet: Vec<char> = "{}()[];:,/#!=<>&|$ \nabcfgilnsσ0123_'%".chars().collect();
    let mut rng = StdRng::seed_from_u64(9);
    let previous_hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut crashes = 0;
    for _ in 0..10_000 {
        let text: String = if rng.random_bool(0.5) {
            let base: Vec<char> = corpus[rng.random_range(0..corpus.len())].chars().collect();
            let mut chars = base;
            for _ in 0..rng.random_range(1..8) {
                let i = rng.random_range(0..=chars.len());
                if rng.random_bool(0.5) && i < chars.len() {
                    chars.remove(i);
                } else {
                    chars.insert(i, alphabet[rng.random_range(0..alphabet.len())]);
                }
            }
            chars.into_iter().collect()
        } else {
            (0..rng.random_range(0..80))
                .map(|_| alphabet[rng.random_range(0..alphabet.len())])
                .collect()
        };
        if panic::catch_unwind(AssertUnwindSafe(|| dsl::parse(&text))).is_err() {
            crashes += 1;
        }
    }
    panic::set_hook(previous_hook);
    ensure(crashes == 0, || format!("{crashes} crashes"))?;
    Ok(format!("{} fixtures, 10000 fuzz inputs, 0 crashes", FIXTURES.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("migration golden rewrite", migration_criterion),
        ("kill removes one component", kill_criterion),
        ("copy three-party synchronization", copy_criterion),
        ("share vs copy store aliasing", share_vs_copy_criterion),
        ("broadcast vs milner", broadcast_criterion),
        ("brute-force oracle equivalence", oracle_criterion),
        ("limited fusion safety", fusion_criterion),
        ("producer/farm scenario via cli", farm_criterion),
        ("dsl round trip and fuzzing", round_trip_criterion),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name} ({why})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
