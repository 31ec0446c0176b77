use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rulemine::eval::{evaluate_with_positive, format_table};
use rulemine::schema::{parse_csv_rows, stratified_indices};
use rulemine::synth::{generate, Profile};
use rulemine::{mine, mine_greedy_baseline, parse_csv, AttributeSchema, EncodedDataset, Encoding, EvalReport, MinerConfig, MiningReport, RawDataset, RuleList};
use serde::Serialize;

use crate::artifact::{ModelArtifact, FORMAT_VERSION};
use crate::{CliError, EvaluateArgs, PredictArgs, SynthArgs, TrainArgs, DEFAULT_SEED};

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Input(format!("stdout: {e}")))
}

fn load_schema(path: &Path) -> Result<AttributeSchema, CliError> {
    let text = String::from_utf8(read(path)?).map_err(|_| CliError::Input(format!("{}: not UTF-8", path.display())))?;
    AttributeSchema::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<MinerConfig, CliError> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_labelled(path: &Path, schema: &AttributeSchema) -> Result<(Vec<u8>, RawDataset), CliError> {
    let bytes = read(path)?;
    let raw = parse_csv(&bytes[..], schema).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if raw.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok((bytes, raw))
}

/// Copies the header and the selected data records of a CSV file verbatim.
fn write_records(source: &[u8], indices: &[usize], path: &Path) -> Result<(), CliError> {
    let csv_err = |e: csv::Error| CliError::Input(format!("{}: {e}", path.display()));
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(source);
    let header = reader.headers().map_err(csv_err)?.clone();
    let records: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().map_err(csv_err)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(&header).map_err(csv_err)?;
    for &i in indices {
        writer.write_record(&records[i]).map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    write(path, &bytes)
}

fn render_rules(list: &RuleList, encoding: &Encoding) -> String {
    let labels = &encoding.schema().class_labels;
    let mut text = format!("Rules ({}):\n", list.len());
    for (i, rule) in list.rules.iter().enumerate() {
        text.push_str(&format!("{:>3}. {}\n", i + 1, rule.render(encoding)));
    }
    text.push_str(&format!("     default: {}\n", labels[list.default_class]));
    text
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

#[derive(Serialize)]
struct TrainReport<'a> {
    mining: &'a MiningReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    evaluation: Option<&'a EvalReport>,
}

pub fn train(args: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let schema = load_schema(&args.schema)?;
    let config = match &args.config {
        Some(path) => load_config(path)?,
        None => MinerConfig::default(),
    }
    .with_seed(seed);
    config.validate()?;
    if let Some(f) = args.test_fraction {
        if !(f > 0.0 && f < 1.0) {
            return Err(CliError::Config(format!("--test-fraction {f} must lie in (0,1)")));
        }
    }
    let (bytes, raw) = load_labelled(&args.data, &schema)?;

    let (train_raw, test_raw) = match args.test_fraction {
        Some(fraction) => {
            let (train_idx, test_idx) = stratified_indices(&raw.classes, schema.num_classes(), fraction, seed)?;
            write_records(&bytes, &train_idx, &sibling(&args.out, "train.csv"))?;
            write_records(&bytes, &test_idx, &sibling(&args.out, "test.csv"))?;
            (raw.subset(&train_idx), Some(raw.subset(&test_idx)))
        }
        None => (raw, None),
    };
    let encoding = Arc::new(Encoding::fit(&train_raw));
    let train = encoding.encode(&train_raw)?;
    let (list, report, network) = mine(&train, &config)?;

    let artifact = ModelArtifact {
        format_version: FORMAT_VERSION,
        encoding: (*encoding).clone(),
        network,
        rules_text: list.rules.iter().map(|r| r.render(&encoding)).collect(),
        rules: list.clone(),
        config,
        seed,
        test_fraction: args.test_fraction,
    };
    write(&args.out, artifact.to_json().as_bytes())?;

    let train_eval = rulemine::evaluate(&list, &train)?;
    let test_eval = match &test_raw {
        Some(raw) => Some(rulemine::evaluate(&list, &encoding.encode(raw)?)?),
        None => None,
    };
    let report_json = serde_json::to_string_pretty(&TrainReport {
        mining: &report,
        evaluation: test_eval.as_ref(),
    })
    .expect("report serializes");
    write(&sibling(&args.out, "report.json"), format!("{report_json}\n").as_bytes())?;

    let mut text = render_rules(&list, &encoding);
    text.push_str(&format!("training accuracy: {:.2}\n", train_eval.accuracy_percent()));
    if let Some(eval) = &test_eval {
        text.push_str(&format!("test accuracy: {:.2}\n\n", eval.accuracy_percent()));
        text.push_str(&format_table(&[("lvq-pso", eval)]));
    }
    emit(out, &text)?;

    if list.is_empty() {
        return Err(CliError::NoRules(schema.class_labels[list.default_class].clone()));
    }
    Ok(())
}

pub fn predict(args: &PredictArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let artifact = ModelArtifact::load(&args.model)?;
    let encoding = &artifact.encoding;
    let bytes = read(&args.input)?;
    let rows = parse_csv_rows(&bytes[..], encoding.schema()).map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", args.input.display())));
    }
    let compiled = artifact.rules.compile(encoding)?;
    let labels = &encoding.schema().class_labels;

    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Input(e.to_string());
    writer.write_record(["prediction", "fired_rule", "rule"]).map_err(csv_err)?;
    let mut scored = 0;
    for row in rows {
        let decision = row.and_then(|values| encoding.encode_row(&values)).and_then(|x| compiled.classify(&x));
        let record = match decision {
            Ok(c) => {
                scored += 1;
                match c.fired {
                    Some(i) => [labels[c.class].clone(), (i + 1).to_string(), artifact.rules.rules[i].render(encoding)],
                    None => [labels[c.class].clone(), "default".into(), "-".into()],
                }
            }
            Err(e) => ["error".into(), "-".into(), e.to_string()],
        };
        writer.write_record(&record).map_err(csv_err)?;
    }
    let bytes = writer.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    match &args.out {
        Some(path) => write(path, &bytes)?,
        None => out.write_all(&bytes).map_err(|e| CliError::Input(format!("stdout: {e}")))?,
    }
    if scored == 0 {
        return Err(CliError::Input("no row could be scored".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct EvaluationOutput<'a> {
    miner: &'a EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<&'a EvalReport>,
}

pub fn evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let artifact = ModelArtifact::load(&args.model)?;
    let encoding = Arc::new(artifact.encoding.clone());
    let schema = encoding.schema();
    let positive = match &args.positive_class {
        Some(label) => schema
            .class_index(label)
            .ok_or_else(|| CliError::Config(format!("--positive-class {label:?} is not a class label")))?,
        None => 1,
    };
    let encode = |path: &Path| -> Result<EncodedDataset, CliError> {
        let (_, raw) = load_labelled(path, schema)?;
        Ok(encoding.encode(&raw)?)
    };
    let test = encode(&args.data)?;
    let report = evaluate_with_positive(&artifact.rules, &test, positive)?;

    let baseline = match (args.baseline, &args.train) {
        (false, _) => None,
        (true, None) => return Err(CliError::Config("--baseline needs --train".into())),
        (true, Some(path)) => {
            let train = encode(path)?;
            let list = mine_greedy_baseline(&train, args.baseline_confidence)?;
            Some(evaluate_with_positive(&list, &test, positive)?)
        }
    };

    let mut methods = vec![("lvq-pso", &report)];
    if let Some(b) = &baseline {
        methods.push(("greedy", b));
    }
    let json = serde_json::to_string_pretty(&EvaluationOutput {
        miner: &report,
        baseline: baseline.as_ref(),
    })
    .expect("report serializes");
    let path = args.out.clone().unwrap_or_else(|| sibling(&args.data, "eval.json"));
    write(&path, format!("{json}\n").as_bytes())?;
    emit(out, &format_table(&methods))
}

pub fn synth(args: &SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let seed = args.seed.unwrap_or(DEFAULT_SEED);
    let profile: Profile = args.profile.parse()?;
    let data = generate(profile, args.rows, seed)?;
    let prefix = args.out.display();
    let csv_path = PathBuf::from(format!("{prefix}.csv"));
    let schema_path = PathBuf::from(format!("{prefix}.schema.json"));
    write(&csv_path, data.csv.as_bytes())?;
    write(&schema_path, format!("{}\n", data.schema.to_json()).as_bytes())?;
    emit(
        out,
        &format!("wrote {} {profile} rows to {} and {}\n", args.rows, csv_path.display(), schema_path.display()),
    )
}
