//! Binary particle swarm over rule antecedents for a fixed consequent class.
//!
//! Every encoded column owns one participation bit. Two velocities drive a
//! bit: `veloc1` is the usual inertia/cognitive/social velocity measured
//! against the binary position, and `veloc2` accumulates it and feeds the
//! sigmoid that gives the bit's probability of being set. Numeric attributes
//! additionally carry a continuous `(lo, hi)` gene evolved by plain PSO.
//!
//! Swarms are seeded from LVQ centroids: a nominal column starts from the
//! centroid component, a numeric column from `1 - 1.5 * deviation`, both mapped
//! linearly onto the `veloc2` bounds.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lvq::{Centroid, LvqNetwork};
use crate::rules::{confidence_ratio, support_ratio, Condition, Rule};
use crate::schema::{AttributeKind, EncodedDataset, Encoding};

/// Spread multiplier applied to a centroid's deviation, both for the numeric
/// participation value and for the initial interval half-width.
pub const DEVIATION_SPREAD: f64 = 1.5;

/// Particles beyond the centroid seeds copy a seed and add uniform noise of
/// this share of the `veloc2` range to every bit velocity.
const PERTURB_VELOCITY: f64 = 0.5;
/// Uniform noise added to each interval bound of a perturbed copy.
const PERTURB_INTERVAL: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const fn new(lower: f64, upper: f64) -> Self {
        Bounds { lower, upper }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }

    /// Maps `t` in `[0,1]` linearly onto the bounds.
    pub fn rescale(&self, t: f64) -> f64 {
        self.lower + t * (self.upper - self.lower)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessWeights {
    pub confidence: f64,
    pub support: f64,
    /// Rewards short antecedents: multiplies `1 - used / total` attributes.
    pub length: f64,
}

impl Default for FitnessWeights {
    fn default() -> Self {
        FitnessWeights {
            confidence: 0.6,
            support: 0.3,
            length: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub max_iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub veloc1: Bounds,
    pub veloc2: Bounds,
    /// Largest per-step move of an interval endpoint.
    pub interval_velocity: f64,
    pub weights: FitnessWeights,
    /// Stop after this many iterations without a global-best improvement.
    pub stagnation_limit: usize,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            swarm_size: 40,
            max_iterations: 200,
            inertia: 0.7,
            cognitive: 1.4,
            social: 1.4,
            veloc1: Bounds::new(-1.0, 1.0),
            veloc2: Bounds::new(-4.0, 4.0),
            interval_velocity: 0.1,
            weights: FitnessWeights::default(),
            stagnation_limit: 30,
            seed: 0,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size < 2 {
            return Err(Error::Config("swarm_size must be at least 2".into()));
        }
        for (name, b) in [("veloc1", self.veloc1), ("veloc2", self.veloc2)] {
            if !(b.lower < b.upper) {
                return Err(Error::Config(format!("{name} bounds must satisfy lower < upper")));
            }
        }
        let w = self.weights;
        if [w.confidence, w.support, w.length].iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::Config("fitness weights must be non-negative".into()));
        }
        if ((w.confidence + w.support + w.length) - 1.0).abs() > 1e-9 {
            return Err(Error::Config("fitness weights must sum to 1".into()));
        }
        if !(self.interval_velocity > 0.0) {
            return Err(Error::Config("interval_velocity must be positive".into()));
        }
        Ok(())
    }
}

pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Draws a bit that is set with probability `sigmoid(veloc2)`.
pub fn binarize<R: Rng + ?Sized>(veloc2: f64, rng: &mut R) -> bool {
    rng.gen::<f64>() < sigmoid(veloc2)
}

/// Continuous interval for one numeric attribute, in scaled units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gene {
    pub attribute: usize,
    pub lo: f64,
    pub hi: f64,
    pub v_lo: f64,
    pub v_hi: f64,
}

impl Gene {
    fn around(attribute: usize, center: f64, spread: f64) -> Self {
        Gene {
            attribute,
            lo: (center - spread).clamp(0.0, 1.0),
            hi: (center + spread).clamp(0.0, 1.0),
            v_lo: 0.0,
            v_hi: 0.0,
        }
    }

    fn repair(&mut self) {
        self.lo = self.lo.clamp(0.0, 1.0);
        self.hi = self.hi.clamp(0.0, 1.0);
        if self.lo > self.hi {
            std::mem::swap(&mut self.lo, &mut self.hi);
            std::mem::swap(&mut self.v_lo, &mut self.v_hi);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub position: Vec<bool>,
    pub genes: Vec<Gene>,
    pub fitness: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Particle {
    pub position: Vec<bool>,
    pub veloc1: Vec<f64>,
    pub veloc2: Vec<f64>,
    /// One gene per numeric attribute, in attribute order.
    pub genes: Vec<Gene>,
    pub fitness: f64,
    pub best: Snapshot,
}

impl Particle {
    fn snapshot(&self) -> Snapshot {
        Snapshot {
            position: self.position.clone(),
            genes: self.genes.clone(),
            fitness: self.fitness,
        }
    }
}

/// Turns a bit vector plus interval genes into a rule.
///
/// A nominal attribute contributes `IN {set bits}` unless no bit or every bit
/// is set; a numeric attribute contributes its gene interval when its bit is set.
pub fn decode_parts(position: &[bool], genes: &[Gene], encoding: &Encoding, class: usize) -> Rule {
    let mut antecedent = Vec::new();
    let mut gene = genes.iter();
    for (a, attr) in encoding.schema().attributes.iter().enumerate() {
        let cols = encoding.columns_of(a);
        match attr.kind {
            AttributeKind::Nominal => {
                let set: Vec<usize> = (0..cols.len()).filter(|&v| position[cols.start + v]).collect();
                if !set.is_empty() && set.len() < cols.len() {
                    antecedent.push(Condition::membership(a, set));
                }
            }
            AttributeKind::Numeric => {
                let g = gene.next().expect("one gene per numeric attribute");
                debug_assert_eq!(g.attribute, a);
                if position[cols.start] {
                    antecedent.push(Condition::interval(a, g.lo, g.hi));
                }
            }
        }
    }
    Rule::new(antecedent, class)
}

pub fn decode(particle: &Particle, encoding: &Encoding, class: usize) -> Rule {
    decode_parts(&particle.position, &particle.genes, encoding, class)
}

/// Weighted sum of confidence, support, and antecedent brevity of `rule` on `data`.
pub fn rule_fitness(rule: &Rule, data: &EncodedDataset, weights: &FitnessWeights) -> f64 {
    let matcher = rule.compile(data.encoding()).expect("decoded rules are valid");
    let (matched, correct) = matcher.counts(data);
    combine(
        confidence_ratio(correct, matched),
        support_ratio(correct, data.len()),
        rule.len(),
        data.schema().attributes.len(),
        weights,
    )
}

pub(crate) fn combine(confidence: f64, support: f64, used: usize, total: usize, w: &FitnessWeights) -> f64 {
    w.confidence * confidence + w.support * support + w.length * (1.0 - used as f64 / total as f64)
}

pub fn fitness(particle: &Particle, class: usize, data: &EncodedDataset, config: &PsoConfig) -> f64 {
    rule_fitness(&decode(particle, data.encoding(), class), data, &config.weights)
}

#[derive(Clone, Debug)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub global_best: Snapshot,
    pub class: usize,
    pub iteration: usize,
    /// Global-best fitness after seeding and after every step.
    pub trace: Vec<f64>,
    /// Number of particles seeded directly from a centroid.
    pub seeded_from_centroids: usize,
    stagnant: usize,
    encoding: Arc<Encoding>,
    rng: ChaCha8Rng,
}

fn seed_from_centroid(c: &Centroid, encoding: &Encoding, config: &PsoConfig, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, Vec<Gene>) {
    let dim = encoding.dim();
    let mut veloc2 = vec![0.0; dim];
    let mut genes = Vec::new();
    for (a, attr) in encoding.schema().attributes.iter().enumerate() {
        let cols = encoding.columns_of(a);
        match attr.kind {
            AttributeKind::Nominal => {
                for j in cols {
                    veloc2[j] = config.veloc2.rescale(c.position[j].clamp(0.0, 1.0));
                }
            }
            AttributeKind::Numeric => {
                let j = cols.start;
                let spread = DEVIATION_SPREAD * c.deviation[j];
                veloc2[j] = config.veloc2.rescale(participation(c.deviation[j]));
                genes.push(Gene::around(a, c.position[j], spread));
            }
        }
    }
    let veloc1 = (0..dim).map(|_| rng.gen_range(config.veloc1.lower..=config.veloc1.upper)).collect();
    (veloc1, veloc2, genes)
}

/// Degree of participation of a numeric column, `1 - 1.5 * deviation` clamped to `[0,1]`.
pub fn participation(deviation: f64) -> f64 {
    (1.0 - DEVIATION_SPREAD * deviation).clamp(0.0, 1.0)
}

fn random_start(encoding: &Encoding, config: &PsoConfig, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, Vec<Gene>) {
    let dim = encoding.dim();
    let veloc1 = (0..dim).map(|_| rng.gen_range(config.veloc1.lower..=config.veloc1.upper)).collect();
    let veloc2 = (0..dim).map(|_| rng.gen_range(config.veloc2.lower..=config.veloc2.upper)).collect();
    let genes = numeric_attributes(encoding)
        .map(|a| {
            let mut g = Gene {
                attribute: a,
                lo: rng.gen(),
                hi: rng.gen(),
                v_lo: 0.0,
                v_hi: 0.0,
            };
            g.repair();
            g
        })
        .collect();
    (veloc1, veloc2, genes)
}

fn numeric_attributes(encoding: &Encoding) -> impl Iterator<Item = usize> + '_ {
    encoding
        .schema()
        .attributes
        .iter()
        .enumerate()
        .filter(|(_, a)| a.kind == AttributeKind::Numeric)
        .map(|(i, _)| i)
}

fn perturb(start: &(Vec<f64>, Vec<f64>, Vec<Gene>), config: &PsoConfig, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, Vec<Gene>) {
    let (_, veloc2, genes) = start;
    let noise = PERTURB_VELOCITY * config.veloc2.width();
    let veloc1 = veloc2.iter().map(|_| rng.gen_range(config.veloc1.lower..=config.veloc1.upper)).collect();
    let veloc2 = veloc2.iter().map(|v| config.veloc2.clamp(v + rng.gen_range(-noise..=noise))).collect();
    let genes = genes
        .iter()
        .map(|g| {
            let mut g = Gene {
                lo: g.lo + rng.gen_range(-PERTURB_INTERVAL..=PERTURB_INTERVAL),
                hi: g.hi + rng.gen_range(-PERTURB_INTERVAL..=PERTURB_INTERVAL),
                ..*g
            };
            g.repair();
            g
        })
        .collect();
    (veloc1, veloc2, genes)
}

/// Builds a swarm for `class`, seeding particles from that class's centroids.
///
/// Eligible centroids represent at least `min_represented` examples; if none
/// qualify, every centroid of the class is used, and with no centroid at all
/// the swarm starts at random. Particles beyond the seeds are perturbed copies.
pub fn seed_swarm(
    network: &LvqNetwork,
    class: usize,
    min_represented: usize,
    uncovered: &EncodedDataset,
    config: &PsoConfig,
) -> Result<Swarm> {
    config.validate()?;
    if uncovered.is_empty() {
        return Err(Error::Data("no uncovered examples to evolve against".into()));
    }
    let encoding = Arc::clone(uncovered.encoding());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let of_class: Vec<&Centroid> = network.centroids.iter().filter(|c| c.class == class).collect();
    let mut eligible: Vec<&Centroid> = of_class
        .iter()
        .copied()
        .filter(|c| c.represented_count >= min_represented)
        .collect();
    if eligible.is_empty() {
        eligible = of_class;
    }
    eligible.sort_by_key(|c| std::cmp::Reverse(c.represented_count));
    eligible.truncate(config.swarm_size);

    let mut starts: Vec<_> = eligible
        .iter()
        .map(|c| seed_from_centroid(c, &encoding, config, &mut rng))
        .collect();
    let seeded = starts.len();
    for i in seeded..config.swarm_size {
        let start = if seeded == 0 {
            random_start(&encoding, config, &mut rng)
        } else {
            perturb(&starts[i % seeded], config, &mut rng)
        };
        starts.push(start);
    }

    let mut particles: Vec<Particle> = starts
        .into_iter()
        .map(|(veloc1, veloc2, genes)| {
            let position = veloc2.iter().map(|&v| binarize(v, &mut rng)).collect::<Vec<_>>();
            Particle {
                best: Snapshot {
                    position: position.clone(),
                    genes: genes.clone(),
                    fitness: f64::NEG_INFINITY,
                },
                position,
                veloc1,
                veloc2,
                genes,
                fitness: f64::NEG_INFINITY,
            }
        })
        .collect();
    evaluate_all(&mut particles, class, uncovered, config);
    for p in &mut particles {
        p.best = p.snapshot();
    }
    let global_best = best_of(&particles).clone();
    Ok(Swarm {
        trace: vec![global_best.fitness],
        particles,
        global_best,
        class,
        iteration: 0,
        seeded_from_centroids: seeded,
        stagnant: 0,
        encoding,
        rng,
    })
}

fn evaluate_all(particles: &mut [Particle], class: usize, data: &EncodedDataset, config: &PsoConfig) {
    let scores: Vec<f64> = particles.par_iter().map(|p| fitness(p, class, data, config)).collect();
    for (p, f) in particles.iter_mut().zip(scores) {
        p.fitness = f;
    }
}

/// First personal best with the highest fitness.
fn best_of(particles: &[Particle]) -> &Snapshot {
    let mut best = &particles[0].best;
    for p in &particles[1..] {
        if p.best.fitness > best.fitness {
            best = &p.best;
        }
    }
    best
}

impl Swarm {
    pub fn encoding(&self) -> &Arc<Encoding> {
        &self.encoding
    }

    /// Reassembles a swarm from parts, e.g. to probe the update rule.
    pub fn from_particles(particles: Vec<Particle>, class: usize, encoding: Arc<Encoding>, seed: u64) -> Self {
        let global_best = best_of(&particles).clone();
        Swarm {
            trace: vec![global_best.fitness],
            particles,
            global_best,
            class,
            iteration: 0,
            seeded_from_centroids: 0,
            stagnant: 0,
            encoding,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// One velocity/position update of every particle, then re-evaluation.
    pub fn step(&mut self, data: &EncodedDataset, config: &PsoConfig) {
        let gbest = &self.global_best;
        let rng = &mut self.rng;
        for p in &mut self.particles {
            for j in 0..p.position.len() {
                let x = f64::from(u8::from(p.position[j]));
                let pb = f64::from(u8::from(p.best.position[j]));
                let gb = f64::from(u8::from(gbest.position[j]));
                let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
                let v1 = config.inertia * p.veloc1[j] + config.cognitive * r1 * (pb - x) + config.social * r2 * (gb - x);
                p.veloc1[j] = config.veloc1.clamp(v1);
                p.veloc2[j] = config.veloc2.clamp(p.veloc2[j] + p.veloc1[j]);
                p.position[j] = binarize(p.veloc2[j], rng);
            }
            let vmax = config.interval_velocity;
            for (k, g) in p.genes.iter_mut().enumerate() {
                let (pb, gb) = (&p.best.genes[k], &gbest.genes[k]);
                let (r1, r2, r3, r4): (f64, f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen(), rng.gen());
                g.v_lo = (config.inertia * g.v_lo + config.cognitive * r1 * (pb.lo - g.lo) + config.social * r2 * (gb.lo - g.lo))
                    .clamp(-vmax, vmax);
                g.v_hi = (config.inertia * g.v_hi + config.cognitive * r3 * (pb.hi - g.hi) + config.social * r4 * (gb.hi - g.hi))
                    .clamp(-vmax, vmax);
                g.lo += g.v_lo;
                g.hi += g.v_hi;
                g.repair();
            }
        }
        evaluate_all(&mut self.particles, self.class, data, config);
        for p in &mut self.particles {
            if p.fitness > p.best.fitness {
                p.best = p.snapshot();
            }
        }
        let candidate = best_of(&self.particles);
        if candidate.fitness > self.global_best.fitness {
            self.global_best = candidate.clone();
            self.stagnant = 0;
        } else {
            self.stagnant += 1;
        }
        self.iteration += 1;
        self.trace.push(self.global_best.fitness);
    }

    /// Steps until `max_iterations` or `stagnation_limit` steps without improvement.
    pub fn evolve(&mut self, data: &EncodedDataset, config: &PsoConfig) {
        while self.iteration < config.max_iterations && self.stagnant < config.stagnation_limit {
            self.step(data, config);
        }
    }

    pub fn best_rule(&self) -> Rule {
        decode_parts(&self.global_best.position, &self.global_best.genes, &self.encoding, self.class)
    }
}
