//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rulemine::eval::ConfusionMatrix;
use rulemine::lvq::{attract, repel, LvqConfig, LvqNetwork};
use rulemine::miner::MiningReport;
use rulemine::pso::binarize;
use rulemine::schema::{Attribute, AttributeKind, AttributeSchema, Encoding, NumericRange};
use rulemine::synth::{generate, Profile};
use rulemine::{encode, evaluate, mine, mine_greedy_baseline, parse_csv, stratified_split, Condition, EncodedDataset, MinerConfig, Rule};

const SEEDS: std::ops::Range<u64> = 0..5;
const TEST_FRACTION: f64 = 0.3;
const BASELINE_CONFIDENCE: f64 = 0.95;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn load(profile: Profile, rows: usize, seed: u64) -> EncodedDataset {
    let data = generate(profile, rows, seed).expect("generator");
    let raw = parse_csv(data.csv.as_bytes(), &data.schema).expect("generated CSV parses");
    encode(&raw, None)
}

fn traces_monotone(report: &MiningReport) -> bool {
    report.swarms.iter().all(|s| s.gbest_trace.windows(2).all(|w| w[1] >= w[0]))
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

// 1. Reference confusion matrices reproduce their reference precision and Type I error.
fn metric_oracle() -> Outcome {
    // (name, [[pred Deny: actual Deny, actual Accept], [pred Accept: ...]], precision, type I)
    let table = [
        ("tree", [[1422.60, 244.18], [181.61, 398.61]], 81.05, 0.11),
        ("partial tree", [[1407.15, 238.58], [197.04, 404.23]], 80.61, 0.11),
        ("lvq-pso", [[1450.26, 314.73], [152.75, 329.26]], 79.20, 0.14),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m, precision, type_i) in table {
        let cm = ConfusionMatrix::from_rows(&["Deny", "Accept"], m.iter().map(|r| r.to_vec()).collect()).unwrap();
        let got_p = 100.0 * cm.accuracy();
        let got_t = cm.type_i_error(1);
        // Independent arithmetic on the raw cells.
        let total = m[0][0] + m[0][1] + m[1][0] + m[1][1];
        let hand_p = 100.0 * (m[0][0] + m[1][1]) / total;
        let hand_t = m[0][1] / total;
        let ok = (got_p - precision).abs() <= 0.01
            && (got_t - type_i).abs() <= 0.005
            && (got_p - hand_p).abs() < 1e-9
            && (got_t - hand_t).abs() < 1e-12;
        pass &= ok;
        parts.push(format!("{name} {got_p:.2}/{got_t:.3}"));
    }
    outcome(pass, format!("{} (tol 0.01 / 0.005)", parts.join(", ")))
}

// 2. Fewer rules than the greedy baseline on fragmented data, accuracy within 5 pp.
fn parsimony(monotone: &mut bool) -> Outcome {
    let start = Instant::now();
    let (mut miner_rules, mut base_rules, mut miner_acc, mut base_acc) = (vec![], vec![], vec![], vec![]);
    for seed in SEEDS {
        let data = load(Profile::Fragmented, 2000, seed);
        let (train, test) = stratified_split(&data, TEST_FRACTION, seed).unwrap();
        let (list, report, _) = mine(&train, &MinerConfig::default().with_seed(seed)).unwrap();
        *monotone &= traces_monotone(&report);
        let base = mine_greedy_baseline(&train, BASELINE_CONFIDENCE).unwrap();
        miner_rules.push(list.len() as f64);
        base_rules.push(base.len() as f64);
        miner_acc.push(evaluate(&list, &test).unwrap().accuracy_percent());
        base_acc.push(evaluate(&base, &test).unwrap().accuracy_percent());
    }
    let elapsed = start.elapsed();
    let (mr, br, ma, ba) = (mean(&miner_rules), mean(&base_rules), mean(&miner_acc), mean(&base_acc));
    let pass = mr < br && (ma - ba).abs() <= 5.0 && elapsed < Duration::from_secs(120);
    outcome(
        pass,
        format!("rules {mr:.2} vs {br:.2}, accuracy {ma:.2}% vs {ba:.2}% (<= 5 pp), {:.1}s (< 120 s)", elapsed.as_secs_f64()),
    )
}

// 3. Recovery of the hidden credit rules.
fn recovery(monotone: &mut bool) -> Outcome {
    let (mut acc, mut rules, mut len, mut slowest) = (vec![], vec![], vec![], Duration::ZERO);
    for seed in SEEDS {
        let start = Instant::now();
        let data = load(Profile::Credit3, 5000, seed);
        let (train, test) = stratified_split(&data, TEST_FRACTION, seed).unwrap();
        let (list, report, _) = mine(&train, &MinerConfig::default().with_seed(seed)).unwrap();
        *monotone &= traces_monotone(&report);
        acc.push(evaluate(&list, &test).unwrap().accuracy_percent());
        rules.push(list.len() as f64);
        len.push(list.mean_antecedent_length());
        slowest = slowest.max(start.elapsed());
    }
    let (a, r, l) = (mean(&acc), mean(&rules), mean(&len));
    let pass = a >= 90.0 && r <= 6.0 && l <= 4.0 && slowest < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "accuracy {a:.2}% (>= 90), rules {r:.2} (<= 6), antecedent {l:.2} (<= 4), slowest seed {:.1}s (< 60 s)",
            slowest.as_secs_f64()
        ),
    )
}

// 4. Separable toy.
fn separable(monotone: &mut bool) -> Outcome {
    let start = Instant::now();
    let data = load(Profile::Separable, 200, 42);
    let (list, report, _) = mine(&data, &MinerConfig::default().with_seed(42)).unwrap();
    *monotone &= traces_monotone(&report);
    let acc = evaluate(&list, &data).unwrap().accuracy;
    let elapsed = start.elapsed();
    let pass = list.len() <= 2 && acc == 1.0 && elapsed < Duration::from_secs(5);
    outcome(
        pass,
        format!("{} rules (<= 2), training accuracy {:.2}%, {:.2}s (< 5 s)", list.len(), 100.0 * acc, elapsed.as_secs_f64()),
    )
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

// 5. Attraction contracts and repulsion expands the distance by exactly (1 -+ alpha);
// training never leaves the unit cube.
fn lvq_geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let d = rng.gen_range(1..=12);
        let c: Vec<f64> = (0..d).map(|_| rng.gen()).collect();
        let x: Vec<f64> = (0..d).map(|_| rng.gen()).collect();
        let alpha: f64 = rng.gen_range(0.0..1.0);
        let before = distance(&c, &x);
        let mut pulled = c.clone();
        attract(&mut pulled, &x, alpha);
        let mut pushed = c.clone();
        repel(&mut pushed, &x, alpha);
        worst = worst
            .max((distance(&pulled, &x) - (1.0 - alpha) * before).abs())
            .max((distance(&pushed, &x) - (1.0 + alpha) * before).abs());
    }

    let mut bounded = true;
    let mut networks = 0;
    for trial in 0..20u64 {
        let n = rng.gen_range(40..200);
        let d = rng.gen_range(1..8);
        let k = rng.gen_range(2..4);
        let data = random_numeric(&mut rng, n, d, k);
        for max_epochs in [1, 3, 10, 40] {
            let config = LvqConfig {
                centroids: rng.gen_range(k..=12),
                learning_rate: rng.gen_range(0.01..0.5),
                max_epochs,
                seed: trial,
                ..LvqConfig::default()
            };
            let net = LvqNetwork::fit(&data, &config).unwrap();
            bounded &= net.centroids.iter().all(|c| c.position.iter().all(|v| (0.0..=1.0).contains(v)));
            networks += 1;
        }
    }
    outcome(
        worst <= 1e-12 && bounded,
        format!("max law error {worst:.1e} over 10^4 triples (<= 1e-12), {networks} trained networks inside [0,1]^d"),
    )
}

fn random_numeric(rng: &mut ChaCha8Rng, n: usize, d: usize, k: usize) -> EncodedDataset {
    let attributes = (0..d).map(|i| Attribute::numeric(&format!("x{i}"))).collect();
    let labels: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let schema = AttributeSchema::new(attributes, "y", &label_refs).unwrap();
    let enc = Arc::new(Encoding::new(schema, vec![Some(NumericRange { min: 0.0, max: 1.0 }); d]).unwrap());
    let examples: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen()).collect()).collect();
    let mut classes: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    for (c, slot) in classes.iter_mut().take(k).enumerate() {
        *slot = c;
    }
    EncodedDataset::new(enc, examples, classes).unwrap()
}

// 6. Bit frequencies match the sigmoid within three binomial standard deviations.
fn binarization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let draws = 100_000;
    let mut pass = true;
    let mut parts = Vec::new();
    for v in [-4.0f64, -1.0, 0.0, 1.0, 4.0] {
        let p = 1.0 / (1.0 + (-v).exp());
        let ones = (0..draws).filter(|_| binarize(v, &mut rng)).count();
        let freq = ones as f64 / draws as f64;
        let sd = (p * (1.0 - p) / draws as f64).sqrt();
        let z = (freq - p) / sd;
        pass &= z.abs() <= 3.0;
        parts.push(format!("v={v}: z={z:+.2}"));
    }
    outcome(pass, format!("{} (|z| <= 3, 10^5 draws each)", parts.join(", ")))
}

/// Random mixed-attribute dataset with a planted rule and label noise.
fn random_mixed(rng: &mut ChaCha8Rng) -> EncodedDataset {
    let n = rng.gen_range(20..=200);
    let k = rng.gen_range(2..=3);
    let attrs = rng.gen_range(1..=4);
    let mut attributes = Vec::new();
    for i in 0..attrs {
        if rng.gen_bool(0.5) {
            let values: Vec<String> = (0..rng.gen_range(2..=4)).map(|v| format!("v{v}")).collect();
            let refs: Vec<&str> = values.iter().map(String::as_str).collect();
            attributes.push(Attribute::nominal(&format!("a{i}"), &refs));
        } else {
            attributes.push(Attribute::numeric(&format!("a{i}")));
        }
    }
    let ranges = attributes
        .iter()
        .map(|a| (a.kind == AttributeKind::Numeric).then_some(NumericRange { min: 0.0, max: 1.0 }))
        .collect();
    let labels: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let schema = AttributeSchema::new(attributes, "y", &label_refs).unwrap();
    let enc = Arc::new(Encoding::new(schema, ranges).unwrap());
    let mut examples = Vec::new();
    let mut classes = Vec::new();
    for i in 0..n {
        let mut x = vec![0.0; enc.dim()];
        let mut signal = 0.0;
        for a in 0..attrs {
            let cols = enc.columns_of(a);
            if cols.len() == 1 {
                x[cols.start] = rng.gen();
                signal += x[cols.start];
            } else {
                let v = rng.gen_range(0..cols.len());
                x[cols.start + v] = 1.0;
                signal += v as f64 / cols.len() as f64;
            }
        }
        let planted = ((signal / attrs as f64) * k as f64) as usize;
        let class = if i < k {
            i
        } else if rng.gen_bool(0.2) {
            rng.gen_range(0..k)
        } else {
            planted.min(k - 1)
        };
        examples.push(x);
        classes.push(class);
    }
    EncodedDataset::new(enc, examples, classes).unwrap()
}

/// Brute-force match written against the raw encoded columns.
fn oracle_matches(rule: &Rule, x: &[f64], enc: &Encoding) -> bool {
    rule.antecedent.iter().all(|cond| match cond {
        Condition::Membership { attribute, values } => {
            let cols = enc.columns_of(*attribute);
            let active = (0..cols.len()).find(|&v| x[cols.start + v] == 1.0);
            active.is_some_and(|v| values.contains(&v))
        }
        Condition::Interval { attribute, lo, hi } => {
            let v = x[enc.columns_of(*attribute).start];
            *lo <= v && v <= *hi
        }
    })
}

// 7. Coverage accounting and re-verification of recorded support and confidence.
fn coverage_accounting(monotone: &mut bool) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = Vec::new();
    let mut rules_checked = 0;
    for trial in 0..100u64 {
        let data = random_mixed(&mut rng);
        let config = MinerConfig::default().with_seed(trial);
        let (list, report, _) = mine(&data, &config).unwrap();
        *monotone &= traces_monotone(&report);
        let enc = data.encoding();
        if report.covered_total() + report.uncovered.len() != data.len() {
            failures.push(format!("trial {trial}: covered + uncovered != {}", data.len()));
        }
        for (rule, record) in list.rules.iter().zip(&report.rules) {
            let snap = &record.uncovered_snapshot;
            let matched: Vec<usize> = snap.iter().copied().filter(|&i| oracle_matches(rule, &data.examples[i], enc)).collect();
            let correct = matched.iter().filter(|&&i| data.classes[i] == rule.consequent).count();
            let support = correct as f64 / snap.len() as f64;
            let confidence = if matched.is_empty() { 0.0 } else { correct as f64 / matched.len() as f64 };
            let ok = (support - record.support).abs() < 1e-12
                && (confidence - record.confidence).abs() < 1e-12
                && correct == record.covered
                && record.support >= record.min_support
                && record.confidence >= config.min_confidence;
            if !ok {
                failures.push(format!("trial {trial} rule {}", record.order));
            }
            rules_checked += 1;
        }
    }
    let detail = if failures.is_empty() {
        format!("100 datasets, {rules_checked} rules re-verified against their snapshots")
    } else {
        format!("{} problems, first: {}", failures.len(), failures[0])
    };
    outcome(failures.is_empty(), detail)
}

// 8. Byte-identical model files under a fixed seed; monotone gbest traces everywhere.
fn determinism(monotone: bool) -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let bin = env!("CARGO_BIN_EXE_rulemine");
    let prefix = dir.path().join("credit");
    let status = Command::new(bin)
        .args(["synth", "--rows", "1000", "--profile", "credit3", "--seed", "8", "--out"])
        .arg(&prefix)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let train = |name: &str| -> (Vec<u8>, MiningReport) {
        let model = dir.path().join(name);
        let out = Command::new(bin)
            .args(["train", "--seed", "8", "--test-fraction", "0.3", "--data"])
            .arg(prefix.with_extension("csv"))
            .arg("--schema")
            .arg(prefix.with_extension("schema.json"))
            .arg("--out")
            .arg(&model)
            .env_remove("RULEMINE_SEED")
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (fs::read(&model).unwrap(), read_mining(&model.with_extension("report.json")))
    };
    let (a, report_a) = train("a.json");
    let (b, _) = train("b.json");
    let identical = a == b;
    let cli_monotone = traces_monotone(&report_a);
    outcome(
        identical && monotone && cli_monotone,
        format!(
            "model files {} ({} bytes), gbest traces {}",
            if identical { "identical" } else { "differ" },
            a.len(),
            if monotone && cli_monotone { "monotone in every swarm" } else { "NOT monotone" }
        ),
    )
}

fn read_mining(path: &Path) -> MiningReport {
    let json: serde_json::Value = serde_json::from_slice(&fs::read(path).unwrap()).unwrap();
    serde_json::from_value(json["mining"].clone()).unwrap()
}

fn main() -> ExitCode {
    let mut monotone = true;
    let results = [
        ("1 metric oracle", metric_oracle()),
        ("2 rule parsimony", parsimony(&mut monotone)),
        ("3 credit recovery", recovery(&mut monotone)),
        ("4 separable toy", separable(&mut monotone)),
        ("5 lvq geometry", lvq_geometry()),
        ("6 binarization", binarization()),
        ("7 coverage accounting", coverage_accounting(&mut monotone)),
        ("8 determinism", determinism(monotone)),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
