//! Breadth-first multi-step mechanism search toward a target.

mod benchmark;
mod predictor;
mod target;

use std::collections::{HashMap, VecDeque};
use std::fmt::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chem::{canonical_smiles, Molecule};
use crate::reaction::{write_step_record, ElementaryStep};

pub use benchmark::{
    eval_benchmark, parse_benchmark_line, read_benchmark, BenchmarkRecord, BenchmarkReport, DepthRow, JournalEntry,
};
pub use predictor::{EnsemblePredictor, StepPredictor, TablePredictor, TwoStepPredictor};
pub use target::{contains_species, match_target, TargetSpec};

pub const DEFAULT_BRANCHING: usize = 10;
pub const DEFAULT_MAX_DEPTH: usize = 7;
pub const DEFAULT_TIME_BUDGET: Duration = Duration::from_secs(2 * 3600);

#[derive(Debug, Error, PartialEq)]
pub enum PathwayError {
    #[error("no pathways to select from")]
    Empty,
    #[error("invalid search config: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    #[default]
    FirstFound,
    MaxMinStep,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    #[default]
    Hybrid,
    Twostep,
    AdapterOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub branching: usize,
    pub max_depth: usize,
    pub time_budget: Duration,
    pub target: TargetSpec,
    #[serde(default)]
    pub known_intermediates: Vec<Molecule>,
    #[serde(default)]
    pub predictor: PredictorKind,
    #[serde(default)]
    pub selection: Selection,
}

impl SearchConfig {
    pub fn new(target: TargetSpec) -> SearchConfig {
        SearchConfig {
            branching: DEFAULT_BRANCHING,
            max_depth: DEFAULT_MAX_DEPTH,
            time_budget: DEFAULT_TIME_BUDGET,
            target,
            known_intermediates: Vec::new(),
            predictor: PredictorKind::default(),
            selection: Selection::default(),
        }
    }

    pub fn validate(&self) -> Result<(), PathwayError> {
        if self.branching == 0 {
            return Err(PathwayError::Config("branching must be at least 1".into()));
        }
        if self.time_budget.is_zero() {
            return Err(PathwayError::Config("time budget must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pathway {
    pub steps: Vec<ElementaryStep>,
    pub depth: usize,
    /// Lowest step score; `None` when any step is unscored.
    pub min_step_score: Option<f64>,
    pub wall_time_found: Duration,
    /// Discovery order within the search.
    pub order: usize,
}

impl Pathway {
    fn new(steps: Vec<ElementaryStep>, wall_time_found: Duration, order: usize) -> Pathway {
        let min_step_score = steps
            .iter()
            .map(|s| s.score)
            .try_fold(f64::INFINITY, |m, s| s.map(|s| m.min(s)));
        Pathway {
            depth: steps.len(),
            min_step_score: min_step_score.filter(|m| m.is_finite()),
            steps,
            wall_time_found,
            order,
        }
    }

    /// Lowest step score with unscored steps counting as negative infinity.
    pub fn selection_score(&self) -> f64 {
        self.min_step_score.unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "detail", rename_all = "snake_case")]
pub enum StopReason {
    /// First pathway found with first-found selection.
    TargetFound,
    /// Every node within the depth cap was expanded.
    Exhausted,
    /// Frontier nodes remained beyond the depth cap.
    DepthLimit,
    Budget,
    PredictorFailed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub pathways: Vec<Pathway>,
    pub expanded: usize,
    pub generated: usize,
    pub stop: StopReason,
    pub elapsed: Duration,
}

impl SearchResult {
    pub fn found(&self) -> bool {
        !self.pathways.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    /// Human-readable listing with per-step arrows and scores.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} pathway(s), {} nodes expanded, stop: {:?}, {:.3} s",
            self.pathways.len(),
            self.expanded,
            self.stop,
            self.elapsed.as_secs_f64()
        );
        for (i, p) in self.pathways.iter().enumerate() {
            let min = p.min_step_score.map_or("unscored".to_string(), |m| format!("{m:.4}"));
            let _ = writeln!(s, "pathway {} depth {} min step {min}", i + 1, p.depth);
            for (j, step) in p.steps.iter().enumerate() {
                let _ = writeln!(s, "  {}. {}", j + 1, write_step_record(step));
            }
        }
        s
    }
}

/// Molecule set a step leads to, hydrogens folded and maps dropped.
pub fn child_node(step: &ElementaryStep) -> Option<Molecule> {
    step.products.as_ref().map(|p| p.fold_hydrogens(true).without_maps())
}

struct Node {
    parent: Option<(usize, ElementaryStep)>,
    mol: Molecule,
    depth: usize,
}

fn chain(nodes: &[Node], mut i: usize, last: Option<ElementaryStep>) -> Vec<ElementaryStep> {
    let mut steps: Vec<ElementaryStep> = last.into_iter().collect();
    while let Some((p, s)) = &nodes[i].parent {
        steps.push(s.clone());
        i = *p;
    }
    steps.reverse();
    steps
}

/// Breadth-first search over molecule-set nodes. Visited states are keyed by
/// the canonical text of the whole set. A child matching a known
/// intermediate goes to the front of the queue. With first-found selection
/// the search stops at the first match; otherwise it collects every pathway
/// reachable within the depth cap and budget. Nodes matching the target are
/// not expanded further, but a match reached along a second route is still
/// recorded.
pub fn search(reactants: &Molecule, config: &SearchConfig, predictor: &dyn StepPredictor) -> SearchResult {
    let start = Instant::now();
    let root = reactants.fold_hydrogens(true).without_maps();
    let mut result = SearchResult {
        pathways: Vec::new(),
        expanded: 0,
        generated: 0,
        stop: StopReason::Exhausted,
        elapsed: Duration::ZERO,
    };
    if let Err(e) = config.validate() {
        result.stop = StopReason::PredictorFailed(e.to_string());
        return result;
    }
    if match_target(&root, &config.target) {
        result.pathways.push(Pathway::new(Vec::new(), start.elapsed(), 0));
        result.stop = StopReason::TargetFound;
        result.elapsed = start.elapsed();
        return result;
    }
    let mut visited: HashMap<String, usize> = HashMap::new();
    visited.insert(canonical_smiles(&root), 0);
    let mut nodes = vec![Node {
        parent: None,
        mol: root,
        depth: 0,
    }];
    let mut queue = VecDeque::from([0usize]);
    let mut capped = false;
    'outer: while let Some(i) = queue.pop_front() {
        if nodes[i].depth >= config.max_depth {
            capped = true;
            continue;
        }
        if start.elapsed() >= config.time_budget {
            result.stop = StopReason::Budget;
            break;
        }
        let steps = match predictor.predict_steps(&nodes[i].mol, config.branching) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("predictor failed, search aborted: {e}");
                result.stop = StopReason::PredictorFailed(e);
                break;
            }
        };
        result.expanded += 1;
        let mut seen_here = std::collections::HashSet::new();
        let mut front = Vec::new();
        for step in steps.into_iter().take(config.branching) {
            let Some(child) = child_node(&step) else {
                continue;
            };
            let key = canonical_smiles(&child);
            if !seen_here.insert(key.clone()) {
                continue;
            }
            if match_target(&child, &config.target) {
                let steps = chain(&nodes, i, Some(step));
                let order = result.pathways.len();
                result.pathways.push(Pathway::new(steps, start.elapsed(), order));
                visited.entry(key).or_insert(usize::MAX);
                if config.selection == Selection::FirstFound {
                    result.stop = StopReason::TargetFound;
                    break 'outer;
                }
                continue;
            }
            if visited.contains_key(&key) {
                continue;
            }
            let id = nodes.len();
            visited.insert(key, id);
            let shortcut = config.known_intermediates.iter().any(|k| contains_species(&child, k));
            nodes.push(Node {
                parent: Some((i, step)),
                mol: child,
                depth: nodes[i].depth + 1,
            });
            result.generated += 1;
            if shortcut {
                front.push(id);
            } else {
                queue.push_back(id);
            }
        }
        for id in front.into_iter().rev() {
            queue.push_front(id);
        }
    }
    if result.stop == StopReason::Exhausted && capped {
        result.stop = StopReason::DepthLimit;
    }
    result.elapsed = start.elapsed();
    result
}

/// First found, or the pathway whose weakest step scores highest (ties:
/// shorter, then earlier).
pub fn select_pathway(pathways: &[Pathway], selection: Selection) -> Result<&Pathway, PathwayError> {
    let first = pathways.first().ok_or(PathwayError::Empty)?;
    Ok(match selection {
        Selection::FirstFound => pathways.iter().min_by_key(|p| (p.wall_time_found, p.order)).unwrap_or(first),
        Selection::MaxMinStep => pathways
            .iter()
            .reduce(|best, p| {
                let (a, b) = (best.selection_score(), p.selection_score());
                let better = b > a || (b == a && (p.depth, p.order) < (best.depth, best.order));
                if better {
                    p
                } else {
                    best
                }
            })
            .unwrap_or(first),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn m(s: &str) -> Molecule {
        parse_smiles(s).unwrap()
    }

    fn chain_table(chain: &[&str]) -> TablePredictor {
        let mut t = TablePredictor::new();
        for w in chain.windows(2) {
            t.add(w[0], "O", Some(0.1)).unwrap();
            t.add(w[0], w[1], Some(1.0)).unwrap();
        }
        t
    }

    #[test]
    fn target_equal_to_reactants() {
        let cfg = SearchConfig::new(TargetSpec::parse("CO").unwrap());
        let r = search(&m("OC"), &cfg, &TablePredictor::new());
        assert_eq!(r.pathways[0].depth, 0);
        assert_eq!(r.expanded, 0);
    }

    #[test]
    fn planted_chain_of_three() {
        let t = chain_table(&["C", "CC", "CCC", "CCCC"]);
        let cfg = SearchConfig::new(TargetSpec::parse("CCCC").unwrap());
        let r = search(&m("C"), &cfg, &t);
        assert_eq!(r.stop, StopReason::TargetFound);
        let p = &r.pathways[0];
        assert_eq!(p.depth, 3);
        let nodes: Vec<String> = p.steps.iter().map(|s| canonical_smiles(&child_node(s).unwrap())).collect();
        assert_eq!(nodes, vec!["CC", "CCC", "CCCC"]);
        assert_eq!(p.min_step_score, Some(1.0));
    }

    #[test]
    fn depth_cap_and_predictor_failure() {
        let t = chain_table(&["C", "CC", "CCC", "CCCC"]);
        let mut cfg = SearchConfig::new(TargetSpec::parse("CCCC").unwrap());
        cfg.max_depth = 2;
        let r = search(&m("C"), &cfg, &t);
        assert!(!r.found());
        assert_eq!(r.stop, StopReason::DepthLimit);

        struct Broken;
        impl StepPredictor for Broken {
            fn predict_steps(&self, _: &Molecule, _: usize) -> Result<Vec<ElementaryStep>, String> {
                Err("offline".into())
            }
        }
        let r = search(&m("C"), &cfg, &Broken);
        assert_eq!(r.stop, StopReason::PredictorFailed("offline".into()));
    }

    #[test]
    fn tiny_budget_stops() {
        let t = chain_table(&["C", "CC", "CCC", "CCCC"]);
        let mut cfg = SearchConfig::new(TargetSpec::parse("CCCC").unwrap());
        cfg.time_budget = Duration::from_nanos(1);
        std::thread::sleep(Duration::from_millis(1));
        assert_eq!(search(&m("C"), &cfg, &t).stop, StopReason::Budget);
    }

    fn scored(depth: usize, scores: &[Option<f64>], order: usize) -> Pathway {
        let step = |s: Option<f64>| {
            let mut st = ElementaryStep::new(m("C"), Some(m("C")), None).unwrap();
            st.score = s;
            st
        };
        let mut p = Pathway::new(scores.iter().map(|&s| step(s)).collect(), Duration::from_millis(order as u64), order);
        assert_eq!(p.depth, depth);
        p.depth = depth;
        p
    }

    #[test]
    fn selection_rules() {
        assert_eq!(select_pathway(&[], Selection::FirstFound), Err(PathwayError::Empty));
        let one = scored(1, &[Some(0.08)], 0);
        let two = scored(2, &[Some(1.198), Some(3.661)], 1);
        let ps = [one, two];
        assert_eq!(select_pathway(&ps, Selection::FirstFound).unwrap().order, 0);
        assert_eq!(select_pathway(&ps, Selection::MaxMinStep).unwrap().order, 1);
        let long = scored(3, &[Some(2.0), Some(2.0), Some(2.0)], 0);
        let short = scored(2, &[Some(2.0), Some(5.0)], 1);
        assert_eq!(select_pathway(&[long, short], Selection::MaxMinStep).unwrap().order, 1);
        let unscored = scored(1, &[None], 0);
        let low = scored(1, &[Some(-50.0)], 1);
        assert_eq!(select_pathway(&[unscored, low], Selection::MaxMinStep).unwrap().order, 1);
    }
}
