use std::collections::{BTreeSet, HashMap, VecDeque};

use mechrxn::chem::{canonical_smiles, parse_smiles};
use mechrxn::pathway::{search, SearchConfig, Selection, StopReason, TablePredictor, TargetSpec};
use proptest::prelude::*;

fn alkane(n: usize) -> String {
    "C".repeat(n)
}

/// Shortest distance from node 1 to `goal` over the edge list.
fn bfs(edges: &[(usize, usize)], goal: usize) -> Option<usize> {
    let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().push(b);
    }
    let mut dist = HashMap::from([(1, 0)]);
    let mut q = VecDeque::from([1]);
    while let Some(u) = q.pop_front() {
        if u == goal {
            return Some(dist[&u]);
        }
        for &v in adj.get(&u).into_iter().flatten() {
            if !dist.contains_key(&v) {
                dist.insert(v, dist[&u] + 1);
                q.push_back(v);
            }
        }
    }
    None
}

fn graph() -> impl Strategy<Value = (Vec<(usize, usize)>, usize)> {
    (prop::collection::btree_set((1usize..10, 1usize..10), 0..25), 2usize..10)
        .prop_map(|(e, g)| (e.into_iter().filter(|(a, b)| a != b).collect(), g))
}

fn table(edges: &[(usize, usize)]) -> TablePredictor {
    let mut t = TablePredictor::new();
    for (i, &(a, b)) in edges.iter().enumerate() {
        t.add(&alkane(a), &alkane(b), Some(1.0 + i as f64)).unwrap();
    }
    t
}

proptest! {
    #[test]
    fn first_found_is_a_shortest_valid_chain((edges, goal) in graph()) {
        let mut cfg = SearchConfig::new(TargetSpec::parse(&alkane(goal)).unwrap());
        cfg.branching = 25;
        cfg.max_depth = 9;
        let r = search(&parse_smiles("C").unwrap(), &cfg, &table(&edges));
        match bfs(&edges, goal) {
            Some(d) => {
                prop_assert_eq!(&r.stop, &StopReason::TargetFound);
                let p = &r.pathways[0];
                prop_assert_eq!(p.depth, d);
                let mut at = "C".to_string();
                for s in &p.steps {
                    prop_assert_eq!(canonical_smiles(&s.reactants), at.clone());
                    at = canonical_smiles(s.products.as_ref().unwrap());
                }
                prop_assert_eq!(at, alkane(goal));
            }
            None => prop_assert!(!r.found()),
        }
    }

    #[test]
    fn depth_cap_is_respected((edges, goal) in graph(), cap in 1usize..4) {
        let mut cfg = SearchConfig::new(TargetSpec::parse(&alkane(goal)).unwrap());
        cfg.branching = 25;
        cfg.max_depth = cap;
        cfg.selection = Selection::MaxMinStep;
        let r = search(&parse_smiles("C").unwrap(), &cfg, &table(&edges));
        prop_assert!(r.pathways.iter().all(|p| p.depth <= cap));
        prop_assert_eq!(r.found(), bfs(&edges, goal).is_some_and(|d| d <= cap));
        let distinct: BTreeSet<Vec<String>> = r
            .pathways
            .iter()
            .map(|p| p.steps.iter().map(|s| canonical_smiles(s.products.as_ref().unwrap())).collect())
            .collect();
        prop_assert_eq!(distinct.len(), r.pathways.len());
    }
}
