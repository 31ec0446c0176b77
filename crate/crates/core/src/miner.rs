//! Iterative rule learning: one swarm per attempt, one rule per success.
//!
//! The LVQ network is trained once on the whole training set. Each round then
//! targets the class with the most uncovered examples, evolves a swarm seeded
//! from that class's centroids against the uncovered examples, and keeps the
//! decoded best rule if it clears the class's current support floor and the
//! confidence threshold. Examples the rule classifies correctly become covered.
//! A class whose attempts keep failing is retired after `max_attempts`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lvq::{LvqConfig, LvqNetwork};
use crate::pso::{seed_swarm, PsoConfig};
use crate::rules::{choose_default_class, confidence_ratio, support_ratio, Provenance, RuleList};
use crate::schema::EncodedDataset;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinerConfig {
    /// Scales a class's uncovered share into its minimum support.
    pub support_factor: f64,
    pub min_confidence: f64,
    /// Consecutive failed swarms tolerated per class before it is retired.
    pub max_attempts: usize,
    /// Centroids representing fewer examples are not used as swarm seeds.
    pub min_represented: usize,
    /// Share of the training set an accepted rule must classify correctly
    /// (at least one example). Classes with fewer uncovered examples retire.
    pub min_rule_coverage: f64,
    pub lvq: LvqConfig,
    pub pso: PsoConfig,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            support_factor: 0.1,
            min_confidence: 0.6,
            max_attempts: 5,
            min_represented: 2,
            min_rule_coverage: 0.02,
            lvq: LvqConfig::default(),
            pso: PsoConfig::default(),
        }
    }
}

impl MinerConfig {
    /// Sets the LVQ and swarm seeds together.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.lvq.seed = seed;
        self.pso.seed = seed;
        self
    }

    /// Examples an accepted rule must classify correctly on a training set of `n`.
    pub fn coverage_floor(&self, n: usize) -> usize {
        ((self.min_rule_coverage * n as f64).ceil() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.support_factor > 0.0 && self.support_factor <= 1.0) {
            return Err(Error::Config("support_factor must lie in (0,1]".into()));
        }
        if !(self.min_confidence > 0.0 && self.min_confidence <= 1.0) {
            return Err(Error::Config("min_confidence must lie in (0,1]".into()));
        }
        if self.max_attempts == 0 {
            return Err(Error::Config("max_attempts must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.min_rule_coverage) {
            return Err(Error::Config("min_rule_coverage must lie in [0,1]".into()));
        }
        self.lvq.validate()?;
        self.pso.validate()
    }
}

/// Minimum support for a class: `support_factor * uncovered_c / total_train`.
pub fn min_support(uncovered_in_class: usize, total_train: usize, support_factor: f64) -> f64 {
    assert!(total_train > 0, "minimum support needs a non-empty training set");
    support_factor * uncovered_in_class as f64 / total_train as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleRecord {
    /// Position in the rule list.
    pub order: usize,
    pub class: usize,
    /// Measured on the uncovered examples at emission time.
    pub support: f64,
    pub confidence: f64,
    pub min_support: f64,
    /// Examples matched and correctly classified, removed by this rule.
    pub covered: usize,
    /// Mining round (swarm index) that produced the rule.
    pub round: usize,
    /// Training-set indices still uncovered when the rule was evaluated.
    pub uncovered_snapshot: Vec<usize>,
    pub rendered: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Emitted,
    BelowSupport,
    BelowConfidence,
    CoversTooFew,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwarmLog {
    pub round: usize,
    pub class: usize,
    pub outcome: Outcome,
    pub support: f64,
    pub confidence: f64,
    pub min_support: f64,
    pub iterations: usize,
    /// Global-best fitness after seeding and after each step.
    pub gbest_trace: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    AllCovered,
    /// Remaining classes have too few uncovered examples for an acceptable rule.
    BelowSupportFloor,
    /// Every class with uncovered examples used up its attempts.
    AttemptsExhausted,
    /// The last rule has an empty antecedent, so nothing after it could fire.
    CatchAll,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiningReport {
    pub train_size: usize,
    /// Support and minimum support are measured against the shrinking uncovered set.
    pub support_reference: String,
    pub rules: Vec<RuleRecord>,
    pub swarms: Vec<SwarmLog>,
    /// Swarms run per class.
    pub attempts_per_class: Vec<usize>,
    /// Failed attempts since the last success, per class.
    pub pending_failures: Vec<usize>,
    pub stop_reason: StopReason,
    pub uncovered_per_class: Vec<usize>,
    pub uncovered: Vec<usize>,
}

impl MiningReport {
    /// Upper bound on the number of rounds `mine` can run.
    pub fn round_bound(train_size: usize, num_classes: usize, max_attempts: usize) -> usize {
        train_size + (train_size + num_classes) * max_attempts
    }

    pub fn covered_total(&self) -> usize {
        self.rules.iter().map(|r| r.covered).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Mixes a round number into the swarm seed.
fn round_seed(seed: u64, round: usize) -> u64 {
    let mut z = seed.wrapping_add((round as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mines an ordered rule list from `train`.
pub fn mine(train: &EncodedDataset, config: &MinerConfig) -> Result<(RuleList, MiningReport, LvqNetwork)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let global = train.class_counts();
    if global.iter().filter(|&&n| n > 0).count() < 2 {
        return Err(Error::Config("mining needs at least two classes present".into()));
    }
    let network = LvqNetwork::fit(train, &config.lvq)?;

    let n = train.len();
    let k = train.num_classes();
    let encoding = train.encoding();
    let mut is_uncovered = vec![true; n];
    let mut uncovered_count = global.clone();
    let mut failures = vec![0usize; k];
    let mut attempts = vec![0usize; k];
    let mut rules = Vec::new();
    let mut records = Vec::new();
    let mut swarms = Vec::new();

    let min_covered = config.coverage_floor(n);
    let active = |c: usize, uncovered_count: &[usize], failures: &[usize]| {
        uncovered_count[c] > 0 && uncovered_count[c] >= min_covered && failures[c] < config.max_attempts
    };

    while let Some(class) = (0..k)
        .filter(|&c| active(c, &uncovered_count, &failures))
        .max_by(|&a, &b| uncovered_count[a].cmp(&uncovered_count[b]).then(b.cmp(&a)))
    {
        let round = swarms.len();
        let snapshot: Vec<usize> = (0..n).filter(|&i| is_uncovered[i]).collect();
        let pool = train.subset(&snapshot);
        let pso = PsoConfig {
            seed: round_seed(config.pso.seed, round),
            ..config.pso.clone()
        };
        let mut swarm = seed_swarm(&network, class, config.min_represented, &pool, &pso)?;
        swarm.evolve(&pool, &pso);
        attempts[class] += 1;

        let rule = swarm.best_rule();
        let matcher = rule.compile(encoding)?;
        let (matched, correct) = matcher.counts(&pool);
        let support = support_ratio(correct, pool.len());
        let confidence = confidence_ratio(correct, matched);
        let floor = min_support(uncovered_count[class], n, config.support_factor);
        let outcome = if correct < min_covered {
            Outcome::CoversTooFew
        } else if support < floor {
            Outcome::BelowSupport
        } else if confidence < config.min_confidence {
            Outcome::BelowConfidence
        } else {
            Outcome::Emitted
        };
        swarms.push(SwarmLog {
            round,
            class,
            outcome,
            support,
            confidence,
            min_support: floor,
            iterations: swarm.iteration,
            gbest_trace: swarm.trace.clone(),
        });

        if outcome != Outcome::Emitted {
            failures[class] += 1;
            continue;
        }
        let mut covered = 0;
        for &i in &snapshot {
            if train.classes[i] == class && matcher.matches(&train.examples[i]) {
                is_uncovered[i] = false;
                covered += 1;
            }
        }
        debug_assert_eq!(covered, correct);
        uncovered_count[class] -= covered;
        failures[class] = 0;
        let order = rules.len();
        let mut rule = rule;
        rule.provenance = Some(Provenance {
            order,
            support,
            confidence,
        });
        records.push(RuleRecord {
            order,
            class,
            support,
            confidence,
            min_support: floor,
            covered,
            round,
            uncovered_snapshot: snapshot,
            rendered: rule.render(encoding),
        });
        let catch_all = rule.antecedent.is_empty();
        rules.push(rule);
        if catch_all {
            break;
        }
        debug_assert!(swarms.len() <= MiningReport::round_bound(n, k, config.max_attempts));
    }

    let total_uncovered: usize = uncovered_count.iter().sum();
    let stop_reason = if rules.last().is_some_and(|r| r.antecedent.is_empty()) {
        StopReason::CatchAll
    } else if total_uncovered == 0 {
        StopReason::AllCovered
    } else if (0..k).any(|c| uncovered_count[c] > 0 && failures[c] >= config.max_attempts) {
        StopReason::AttemptsExhausted
    } else {
        StopReason::BelowSupportFloor
    };
    let default_class = choose_default_class(&uncovered_count, &global);
    let report = MiningReport {
        train_size: n,
        support_reference: "uncovered".into(),
        rules: records,
        swarms,
        attempts_per_class: attempts,
        pending_failures: failures,
        stop_reason,
        uncovered_per_class: uncovered_count,
        uncovered: (0..n).filter(|&i| is_uncovered[i]).collect(),
    };
    Ok((RuleList::new(rules, default_class), report, network))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{confidence, support};
    use crate::schema::{Attribute, AttributeSchema, Encoding, NumericRange};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn plane() -> Arc<Encoding> {
        let schema = AttributeSchema::new(vec![Attribute::numeric("x1"), Attribute::numeric("x2")], "class", &["low", "high"]).unwrap();
        let r = Some(NumericRange { min: 0.0, max: 1.0 });
        Arc::new(Encoding::new(schema, vec![r, r]).unwrap())
    }

    fn separable(n: usize, seed: u64) -> EncodedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let examples: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let classes = examples.iter().map(|x| usize::from(x[0] > 0.5)).collect();
        EncodedDataset::new(plane(), examples, classes).unwrap()
    }

    fn accuracy(list: &RuleList, data: &EncodedDataset) -> f64 {
        let compiled = list.compile(data.encoding()).unwrap();
        let hits = data
            .examples
            .iter()
            .zip(&data.classes)
            .filter(|(x, &c)| compiled.classify(x).unwrap().class == c)
            .count();
        hits as f64 / data.len() as f64
    }

    #[test]
    fn min_support_examples() {
        assert!((min_support(100, 1000, 0.1) - 0.01).abs() < 1e-15);
        assert_eq!(min_support(0, 1000, 0.1), 0.0);
        assert_eq!(min_support(1000, 1000, 1.0), 1.0);
    }

    #[test]
    fn separable_toy_is_solved() {
        let data = separable(200, 5);
        let (list, report, _) = mine(&data, &MinerConfig::default().with_seed(7)).unwrap();
        assert!(list.len() <= 2, "{:#?}", report.rules);
        assert_eq!(accuracy(&list, &data), 1.0);
        assert_eq!(report.covered_total() + report.uncovered.len(), data.len());
    }

    #[test]
    fn records_reverify_against_snapshots() {
        let data = separable(150, 8);
        let (list, report, _) = mine(&data, &MinerConfig::default().with_seed(3)).unwrap();
        for (rule, rec) in list.rules.iter().zip(&report.rules) {
            let pool = data.subset(&rec.uncovered_snapshot);
            assert_eq!(support(rule, &pool).unwrap(), rec.support);
            assert_eq!(confidence(rule, &pool).unwrap(), rec.confidence);
            assert!(rec.support >= rec.min_support);
            assert!(rec.confidence >= 0.6);
        }
        assert!(report.swarms.len() <= MiningReport::round_bound(data.len(), 2, 5));
        for log in &report.swarms {
            assert!(log.gbest_trace.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn small_class_never_gets_a_rule() {
        // Three "high" examples against a coverage floor of five (120 * 0.04 = 4.8).
        let mut data = separable(120, 4);
        let highs: Vec<usize> = (0..data.len()).filter(|&i| data.classes[i] == 1).collect();
        for &i in &highs[3..] {
            data.classes[i] = 0;
        }
        let config = MinerConfig {
            min_rule_coverage: 0.04,
            ..MinerConfig::default()
        };
        let (list, report, _) = mine(&data, &config).unwrap();
        assert!(list.rules.iter().all(|r| r.consequent == 0));
        assert!(report.swarms.iter().all(|s| s.class == 0));
        assert_eq!(report.uncovered_per_class[1], 3);
        // The stranded examples are the uncovered majority, so they set the default.
        assert_eq!(list.default_class, 1);
        assert!(report.uncovered.iter().all(|i| highs[..3].contains(i)));
    }

    #[test]
    fn deterministic_under_seed() {
        let data = separable(120, 9);
        let config = MinerConfig::default().with_seed(11);
        let (a, ra, _) = mine(&data, &config).unwrap();
        let (b, rb, _) = mine(&data, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let data = separable(50, 1);
        let empty = data.subset(&[]);
        assert!(matches!(mine(&empty, &MinerConfig::default()), Err(Error::Data(_))));
        let lows: Vec<usize> = (0..data.len()).filter(|&i| data.classes[i] == 0).collect();
        assert!(matches!(mine(&data.subset(&lows), &MinerConfig::default()), Err(Error::Config(_))));
        let bad = MinerConfig { support_factor: 0.0, ..MinerConfig::default() };
        assert!(matches!(mine(&data, &bad), Err(Error::Config(_))));
    }
}
