//! Deterministic separate-and-conquer learner used as a rule-count reference.
//!
//! Rules grow one condition at a time. Candidates are a single nominal value
//! or a numeric split at the midpoint between consecutive distinct values; the
//! one with the highest confidence wins, support breaking ties. Growth stops
//! once the rule reaches the confidence threshold or nothing improves it.

use crate::error::{Error, Result};
use crate::rules::{choose_default_class, Condition, Rule, RuleList};
use crate::schema::{AttributeKind, EncodedDataset};

#[derive(Clone, Copy, Debug, PartialEq)]
struct Score {
    class: usize,
    confidence: f64,
    support: usize,
}

impl Score {
    fn of(counts: &[usize]) -> Option<Self> {
        let size: usize = counts.iter().sum();
        if size == 0 {
            return None;
        }
        let class = (0..counts.len()).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))?;
        Some(Score {
            class,
            confidence: counts[class] as f64 / size as f64,
            support: counts[class],
        })
    }

    fn beats(&self, other: &Score) -> bool {
        self.confidence > other.confidence || (self.confidence == other.confidence && self.support > other.support)
    }
}

fn class_counts(data: &EncodedDataset, members: &[usize]) -> Vec<usize> {
    let mut counts = vec![0; data.num_classes()];
    for &i in members {
        counts[data.classes[i]] += 1;
    }
    counts
}

/// Current constraint on each attribute while a rule grows.
#[derive(Clone, Copy)]
enum Slot {
    Free,
    Value(usize),
    Range(f64, f64),
}

fn grow_rule(data: &EncodedDataset, pool: &[usize], min_confidence: f64) -> Rule {
    let encoding = data.encoding();
    let attributes = &data.schema().attributes;
    let mut slots = vec![Slot::Free; attributes.len()];
    let mut members = pool.to_vec();
    let mut current = Score::of(&class_counts(data, &members)).expect("pool is non-empty");

    while current.confidence < min_confidence {
        let mut best: Option<(Score, usize, Slot)> = None;
        let mut offer = |score: Score, a: usize, slot: Slot| {
            if best.as_ref().is_none_or(|(b, _, _)| score.beats(b)) {
                best = Some((score, a, slot));
            }
        };
        for (a, attr) in attributes.iter().enumerate() {
            let cols = encoding.columns_of(a);
            match (attr.kind, slots[a]) {
                (AttributeKind::Nominal, Slot::Free) => {
                    for v in 0..cols.len() {
                        let subset: Vec<usize> = members.iter().copied().filter(|&i| data.examples[i][cols.start + v] > 0.5).collect();
                        if let Some(s) = Score::of(&class_counts(data, &subset)) {
                            offer(s, a, Slot::Value(v));
                        }
                    }
                }
                (AttributeKind::Numeric, slot) => {
                    let (lo, hi) = match slot {
                        Slot::Range(lo, hi) => (lo, hi),
                        _ => (0.0, 1.0),
                    };
                    let col = cols.start;
                    let mut sorted: Vec<(f64, usize)> = members.iter().map(|&i| (data.examples[i][col], data.classes[i])).collect();
                    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
                    let total = class_counts(data, &members);
                    let mut left = vec![0; data.num_classes()];
                    for w in 0..sorted.len().saturating_sub(1) {
                        left[sorted[w].1] += 1;
                        if sorted[w].0 == sorted[w + 1].0 {
                            continue;
                        }
                        let mid = 0.5 * (sorted[w].0 + sorted[w + 1].0);
                        let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                        if let Some(s) = Score::of(&left) {
                            offer(s, a, Slot::Range(lo, mid));
                        }
                        if let Some(s) = Score::of(&right) {
                            offer(s, a, Slot::Range(mid, hi));
                        }
                    }
                }
                _ => {}
            }
        }
        let Some((score, a, slot)) = best else { break };
        if score.confidence <= current.confidence {
            break;
        }
        slots[a] = slot;
        let cols = encoding.columns_of(a);
        members.retain(|&i| match slot {
            Slot::Value(v) => data.examples[i][cols.start + v] > 0.5,
            Slot::Range(lo, hi) => (lo..=hi).contains(&data.examples[i][cols.start]),
            Slot::Free => true,
        });
        current = Score::of(&class_counts(data, &members)).expect("chosen candidate is non-empty");
    }

    let antecedent = slots
        .iter()
        .enumerate()
        .filter_map(|(a, slot)| match *slot {
            Slot::Free => None,
            Slot::Value(v) => Some(Condition::membership(a, [v])),
            Slot::Range(lo, hi) => Some(Condition::interval(a, lo, hi)),
        })
        .collect();
    Rule::new(antecedent, current.class)
}

/// Learns a first-match rule list by greedy sequential covering.
pub fn mine_greedy_baseline(train: &EncodedDataset, min_confidence: f64) -> Result<RuleList> {
    if train.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let global = train.class_counts();
    if global.iter().filter(|&&n| n > 0).count() < 2 {
        return Err(Error::Config("baseline needs at least two classes present".into()));
    }
    if !(min_confidence > 0.0 && min_confidence <= 1.0) {
        return Err(Error::Config("min_confidence must lie in (0,1]".into()));
    }
    let mut pool: Vec<usize> = (0..train.len()).collect();
    let mut rules = Vec::new();
    while !pool.is_empty() {
        let rule = grow_rule(train, &pool, min_confidence);
        let matcher = rule.compile(train.encoding())?;
        let before = pool.len();
        pool.retain(|&i| !(train.classes[i] == rule.consequent && matcher.matches(&train.examples[i])));
        if pool.len() == before {
            break;
        }
        rules.push(rule);
    }
    let uncovered = {
        let mut counts = vec![0; train.num_classes()];
        for &i in &pool {
            counts[train.classes[i]] += 1;
        }
        counts
    };
    Ok(RuleList::new(rules, choose_default_class(&uncovered, &global)))
}
