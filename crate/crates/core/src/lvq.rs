//! Supervised LVQ1 prototype network with second-nearest repulsion.
//!
//! Each example pulls its nearest centroid closer when the classes agree and
//! pushes it away otherwise. The runner-up centroid is also pushed away when it
//! belongs to another class and sits within `repulsion_ratio` times the winner's
//! distance. After training every centroid records how many examples it wins
//! and the per-dimension spread of those examples, which later seeds the swarm.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::EncodedDataset;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LvqConfig {
    /// Total number of centroids, shared between classes by example count.
    pub centroids: usize,
    /// Initial adaptation rate; decays linearly to zero over `max_epochs`.
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Training stops once mean centroid displacement in an epoch drops below this.
    pub stability_threshold: f64,
    pub repulsion_ratio: f64,
    pub seed: u64,
}

impl Default for LvqConfig {
    fn default() -> Self {
        LvqConfig {
            centroids: 30,
            learning_rate: 0.05,
            max_epochs: 100,
            stability_threshold: 1e-4,
            repulsion_ratio: 1.2,
            seed: 0,
        }
    }
}

impl LvqConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate < 1.0) {
            return Err(Error::Config(format!("learning rate {} must lie in (0,1)", self.learning_rate)));
        }
        if self.repulsion_ratio <= 1.0 {
            return Err(Error::Config("repulsion ratio must exceed 1".into()));
        }
        if self.stability_threshold < 0.0 || self.stability_threshold.is_nan() {
            return Err(Error::Config("stability threshold must be non-negative".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub position: Vec<f64>,
    pub class: usize,
    pub represented_count: usize,
    /// Population standard deviation, per dimension, of the examples this centroid wins.
    pub deviation: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingStop {
    NotTrained,
    /// Mean displacement fell below the stability threshold.
    Converged,
    /// Every example kept its winning centroid for two consecutive epochs.
    AssignmentsStable,
    MaxEpochs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LvqNetwork {
    pub centroids: Vec<Centroid>,
    /// Centroids per class, indexed by class.
    pub allocation: Vec<usize>,
    /// Mean centroid displacement per epoch.
    pub trace: Vec<f64>,
    pub stop: TrainingStop,
}

/// Shares `k` centroids between classes in proportion to `class_counts`.
///
/// Every class gets at least one; the total is exactly `k` (largest remainder).
pub fn allocate_per_class(class_counts: &[usize], k: usize) -> Result<Vec<usize>> {
    let classes = class_counts.len();
    if classes == 0 || k < classes {
        return Err(Error::Config(format!("{k} centroids cannot cover {classes} classes")));
    }
    if class_counts.contains(&0) {
        return Err(Error::Config("every class needs at least one example".into()));
    }
    let total: usize = class_counts.iter().sum();
    let quotas: Vec<f64> = class_counts.iter().map(|&c| k as f64 * c as f64 / total as f64).collect();
    let mut alloc: Vec<usize> = quotas.iter().map(|q| (q.floor() as usize).max(1)).collect();
    let remainder = |i: usize, alloc: &[usize]| quotas[i] - alloc[i] as f64;
    loop {
        let assigned: usize = alloc.iter().sum();
        if assigned == k {
            break;
        }
        if assigned < k {
            // Largest shortfall first; ties to the lower class index.
            let i = (0..classes)
                .max_by(|&a, &b| remainder(a, &alloc).total_cmp(&remainder(b, &alloc)).then(b.cmp(&a)))
                .expect("non-empty");
            alloc[i] += 1;
        } else {
            // Minimum-one bumps overshot: take back from the most over-served class that can spare one.
            let i = (0..classes)
                .filter(|&i| alloc[i] > 1)
                .min_by(|&a, &b| remainder(a, &alloc).total_cmp(&remainder(b, &alloc)).then(a.cmp(&b)))
                .expect("k >= classes leaves a donor");
            alloc[i] -= 1;
        }
    }
    Ok(alloc)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// LVQ1 attraction, `c <- c + alpha (x - c)`. No clamping.
pub fn attract(c: &mut [f64], x: &[f64], alpha: f64) {
    for (ci, xi) in c.iter_mut().zip(x) {
        *ci += alpha * (xi - *ci);
    }
}

/// LVQ1 repulsion, `c <- c - alpha (x - c)`. No clamping.
pub fn repel(c: &mut [f64], x: &[f64], alpha: f64) {
    for (ci, xi) in c.iter_mut().zip(x) {
        *ci -= alpha * (xi - *ci);
    }
}

fn clamp_unit(c: &mut [f64]) {
    for v in c {
        *v = v.clamp(0.0, 1.0);
    }
}

impl LvqNetwork {
    /// Places each class's centroids on randomly drawn examples of that class.
    pub fn init(train: &EncodedDataset, config: &LvqConfig) -> Result<Self> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::Data("training set is empty".into()));
        }
        let counts = train.class_counts();
        let present: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
        let present_counts: Vec<usize> = present.iter().map(|&c| counts[c]).collect();
        let shares = allocate_per_class(&present_counts, config.centroids)?;
        let mut allocation = vec![0; counts.len()];
        for (&c, &n) in present.iter().zip(&shares) {
            allocation[c] = n;
        }

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let dim = train.dim();
        let mut centroids = Vec::with_capacity(config.centroids);
        for (class, &want) in allocation.iter().enumerate() {
            if want == 0 {
                continue;
            }
            let members: Vec<usize> = (0..train.len()).filter(|&i| train.classes[i] == class).collect();
            let picks: Vec<usize> = if members.len() >= want {
                index::sample(&mut rng, members.len(), want).into_iter().map(|j| members[j]).collect()
            } else {
                let mut picks = members.clone();
                picks.extend((members.len()..want).map(|_| members[rng.gen_range(0..members.len())]));
                picks
            };
            centroids.extend(picks.into_iter().map(|i| Centroid {
                position: train.examples[i].clone(),
                class,
                represented_count: 0,
                deviation: vec![0.0; dim],
            }));
        }
        Ok(LvqNetwork {
            centroids,
            allocation,
            trace: Vec::new(),
            stop: TrainingStop::NotTrained,
        })
    }

    /// Initializes and trains in one go.
    pub fn fit(train: &EncodedDataset, config: &LvqConfig) -> Result<Self> {
        let mut net = LvqNetwork::init(train, config)?;
        net.train(train, config)?;
        Ok(net)
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    /// Nearest centroid and, if there is one, the runner-up. Ties go to the lower index.
    fn nearest_pair(&self, x: &[f64]) -> (Neighbor, Option<Neighbor>) {
        let mut first = Neighbor {
            index: usize::MAX,
            distance: f64::INFINITY,
        };
        let mut second: Option<Neighbor> = None;
        for (index, c) in self.centroids.iter().enumerate() {
            let candidate = Neighbor {
                index,
                distance: distance(&c.position, x),
            };
            if candidate.distance < first.distance {
                if first.index != usize::MAX {
                    second = Some(first);
                }
                first = candidate;
            } else if second.is_none_or(|s| candidate.distance < s.distance) {
                second = Some(candidate);
            }
        }
        (first, second)
    }

    pub fn nearest_two(&self, x: &[f64]) -> Result<(Neighbor, Neighbor)> {
        if self.centroids.len() < 2 {
            return Err(Error::Config("nearest_two needs at least 2 centroids".into()));
        }
        let (first, second) = self.nearest_pair(x);
        Ok((first, second.expect("two or more centroids")))
    }

    pub fn nearest(&self, x: &[f64]) -> Option<Neighbor> {
        (!self.centroids.is_empty()).then(|| self.nearest_pair(x).0)
    }

    /// Runs LVQ epochs over `train`, then recomputes per-centroid statistics.
    pub fn train(&mut self, train: &EncodedDataset, config: &LvqConfig) -> Result<()> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::Data("training set is empty".into()));
        }
        if self.centroids.is_empty() {
            return Err(Error::Config("network has no centroids".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut previous: Option<Vec<usize>> = None;
        self.trace.clear();
        self.stop = TrainingStop::MaxEpochs;

        for epoch in 0..config.max_epochs {
            let alpha = config.learning_rate * (1.0 - epoch as f64 / config.max_epochs as f64);
            let start: Vec<Vec<f64>> = self.centroids.iter().map(|c| c.position.clone()).collect();
            let mut assignment = vec![0; train.len()];
            order.shuffle(&mut rng);
            for &i in &order {
                let x = &train.examples[i];
                let class = train.classes[i];
                let (first, second) = self.nearest_pair(x);
                assignment[i] = first.index;
                let winner = &mut self.centroids[first.index];
                if winner.class == class {
                    attract(&mut winner.position, x, alpha);
                } else {
                    repel(&mut winner.position, x, alpha);
                }
                clamp_unit(&mut winner.position);
                if let Some(runner_up) = second {
                    let c = &mut self.centroids[runner_up.index];
                    if c.class != class && runner_up.distance < config.repulsion_ratio * first.distance {
                        repel(&mut c.position, x, alpha);
                        clamp_unit(&mut c.position);
                    }
                }
            }
            let movement = self
                .centroids
                .iter()
                .zip(&start)
                .map(|(c, s)| distance(&c.position, s))
                .sum::<f64>()
                / self.centroids.len() as f64;
            self.trace.push(movement);
            if movement < config.stability_threshold {
                self.stop = TrainingStop::Converged;
                break;
            }
            if previous.as_ref() == Some(&assignment) {
                self.stop = TrainingStop::AssignmentsStable;
                break;
            }
            previous = Some(assignment);
        }
        self.refresh_statistics(train);
        Ok(())
    }

    /// Recomputes `represented_count` and `deviation` from nearest-centroid assignments.
    pub fn refresh_statistics(&mut self, data: &EncodedDataset) {
        let dim = data.dim();
        let k = self.centroids.len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        let assignment: Vec<usize> = data
            .examples
            .iter()
            .map(|x| self.nearest_pair(x).0.index)
            .collect();
        for (x, &j) in data.examples.iter().zip(&assignment) {
            counts[j] += 1;
            for (s, v) in sums[j].iter_mut().zip(x) {
                *s += v;
            }
        }
        let means: Vec<Vec<f64>> = sums
            .iter()
            .zip(&counts)
            .map(|(s, &n)| s.iter().map(|v| if n > 0 { v / n as f64 } else { 0.0 }).collect())
            .collect();
        let mut sq = vec![vec![0.0; dim]; k];
        for (x, &j) in data.examples.iter().zip(&assignment) {
            for ((acc, v), m) in sq[j].iter_mut().zip(x).zip(&means[j]) {
                *acc += (v - m) * (v - m);
            }
        }
        for (j, c) in self.centroids.iter_mut().enumerate() {
            c.represented_count = counts[j];
            c.deviation = if counts[j] > 0 {
                sq[j].iter().map(|s| (s / counts[j] as f64).sqrt()).collect()
            } else {
                vec![0.0; dim]
            };
        }
    }

    /// Mean distance from each example to its nearest centroid.
    pub fn quantization_error(&self, data: &EncodedDataset) -> f64 {
        if data.is_empty() || self.centroids.is_empty() {
            return 0.0;
        }
        data.examples.iter().map(|x| self.nearest_pair(x).0.distance).sum::<f64>() / data.len() as f64
    }

    /// Class of the nearest centroid.
    pub fn predict(&self, x: &[f64]) -> Option<usize> {
        self.nearest(x).map(|n| self.centroids[n.index].class)
    }
}
