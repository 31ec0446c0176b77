//! Classification rules and first-match rule lists.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{AttributeKind, AttributeSchema, EncodedDataset, Encoding};

/// One conjunct of a rule antecedent. Numeric bounds live in the scaled `[0,1]` domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Condition {
    /// `attribute IN {values}`; values are indices into the declared value list.
    Membership { attribute: usize, values: Vec<usize> },
    /// `lo <= attribute <= hi`.
    Interval { attribute: usize, lo: f64, hi: f64 },
}

impl Condition {
    pub fn membership(attribute: usize, values: impl IntoIterator<Item = usize>) -> Self {
        let values: BTreeSet<usize> = values.into_iter().collect();
        Condition::Membership {
            attribute,
            values: values.into_iter().collect(),
        }
    }

    pub fn interval(attribute: usize, lo: f64, hi: f64) -> Self {
        Condition::Interval { attribute, lo, hi }
    }

    pub fn attribute(&self) -> usize {
        match *self {
            Condition::Membership { attribute, .. } | Condition::Interval { attribute, .. } => attribute,
        }
    }

    fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        let attr = schema
            .attributes
            .get(self.attribute())
            .ok_or_else(|| Error::Schema(format!("condition references attribute #{}", self.attribute())))?;
        match self {
            Condition::Membership { values, .. } => {
                if attr.kind != AttributeKind::Nominal {
                    return Err(Error::Schema(format!("`{}` is not nominal", attr.name)));
                }
                let distinct: BTreeSet<_> = values.iter().collect();
                if values.is_empty() || distinct.len() != values.len() {
                    return Err(Error::Schema(format!("membership on `{}` needs distinct values", attr.name)));
                }
                if values.len() >= attr.values.len() || values.iter().any(|&v| v >= attr.values.len()) {
                    return Err(Error::Schema(format!(
                        "membership on `{}` must be a proper subset of its values",
                        attr.name
                    )));
                }
            }
            Condition::Interval { lo, hi, .. } => {
                if attr.kind != AttributeKind::Numeric {
                    return Err(Error::Schema(format!("`{}` is not numeric", attr.name)));
                }
                if !(0.0 <= *lo && lo <= hi && *hi <= 1.0) {
                    return Err(Error::Schema(format!("interval [{lo}, {hi}] on `{}` is invalid", attr.name)));
                }
            }
        }
        Ok(())
    }
}

/// Where a mined rule came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub order: usize,
    pub support: f64,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub antecedent: Vec<Condition>,
    pub consequent: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl Rule {
    pub fn new(antecedent: Vec<Condition>, consequent: usize) -> Self {
        Rule {
            antecedent,
            consequent,
            provenance: None,
        }
    }

    pub fn len(&self) -> usize {
        self.antecedent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.antecedent.is_empty()
    }

    /// Checks structural invariants: valid conditions, one condition per attribute,
    /// consequent among the class labels.
    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        let mut seen = BTreeSet::new();
        for cond in &self.antecedent {
            cond.validate(schema)?;
            if !seen.insert(cond.attribute()) {
                return Err(Error::Schema(format!(
                    "attribute `{}` appears twice in one antecedent",
                    schema.attributes[cond.attribute()].name
                )));
            }
        }
        if self.consequent >= schema.num_classes() {
            return Err(Error::Schema(format!("consequent #{} is not a class", self.consequent)));
        }
        Ok(())
    }

    pub fn compile(&self, encoding: &Encoding) -> Result<RuleMatcher> {
        self.validate(encoding.schema())?;
        let checks = self
            .antecedent
            .iter()
            .map(|cond| {
                let cols = encoding.columns_of(cond.attribute());
                match cond {
                    Condition::Membership { values, .. } => Check::AnyOf(values.iter().map(|&v| cols.start + v).collect()),
                    Condition::Interval { lo, hi, .. } => Check::Within(cols.start, *lo, *hi),
                }
            })
            .collect();
        Ok(RuleMatcher {
            checks,
            consequent: self.consequent,
            dim: encoding.dim(),
        })
    }

    /// Renders the rule with attribute names and unscaled numeric bounds.
    pub fn render(&self, encoding: &Encoding) -> String {
        let schema = encoding.schema();
        let mut out = String::from("IF ");
        if self.antecedent.is_empty() {
            out.push_str("TRUE");
        }
        for (i, cond) in self.antecedent.iter().enumerate() {
            if i > 0 {
                out.push_str(" AND ");
            }
            let attr = &schema.attributes[cond.attribute()];
            match cond {
                Condition::Membership { values, .. } => {
                    let names: Vec<&str> = values.iter().map(|&v| attr.values[v].as_str()).collect();
                    let _ = write!(out, "{} IN {{{}}}", attr.name, names.join(", "));
                }
                Condition::Interval { attribute, lo, hi } => {
                    let range = encoding.numeric_range(*attribute).expect("numeric range");
                    let _ = write!(out, "{} IN [{:.2}, {:.2}]", attr.name, range.unscale(*lo), range.unscale(*hi));
                }
            }
        }
        let _ = write!(
            out,
            " THEN {} = {}",
            schema.class_attribute, schema.class_labels[self.consequent]
        );
        out
    }
}

#[derive(Clone, Debug)]
enum Check {
    AnyOf(Vec<usize>),
    Within(usize, f64, f64),
}

/// A rule validated against an encoding, ready for repeated matching.
#[derive(Clone, Debug)]
pub struct RuleMatcher {
    checks: Vec<Check>,
    consequent: usize,
    dim: usize,
}

impl RuleMatcher {
    /// Matches an example already known to have the encoding's dimension.
    #[inline]
    pub fn matches(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dim);
        self.checks.iter().all(|check| match check {
            Check::AnyOf(cols) => cols.iter().any(|&c| x[c] > 0.5),
            Check::Within(col, lo, hi) => *lo <= x[*col] && x[*col] <= *hi,
        })
    }

    pub fn consequent(&self) -> usize {
        self.consequent
    }

    /// `(matched, matched and of the consequent class)` over `data`.
    pub fn counts(&self, data: &EncodedDataset) -> (usize, usize) {
        let mut matched = 0;
        let mut correct = 0;
        for (x, &c) in data.examples.iter().zip(&data.classes) {
            if self.matches(x) {
                matched += 1;
                correct += usize::from(c == self.consequent);
            }
        }
        (matched, correct)
    }
}

fn check_dim(x: &[f64], encoding: &Encoding) -> Result<()> {
    if x.len() != encoding.dim() {
        return Err(Error::Schema(format!(
            "example has {} columns, encoding has {}",
            x.len(),
            encoding.dim()
        )));
    }
    Ok(())
}

fn check_data(data: &EncodedDataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Data("dataset is empty".into()));
    }
    Ok(())
}

pub fn matches(rule: &Rule, x: &[f64], encoding: &Encoding) -> Result<bool> {
    check_dim(x, encoding)?;
    Ok(rule.compile(encoding)?.matches(x))
}

/// Fraction of `data` matched by the antecedent and carrying the consequent class.
pub fn support(rule: &Rule, data: &EncodedDataset) -> Result<f64> {
    check_data(data)?;
    let (_, correct) = rule.compile(data.encoding())?.counts(data);
    Ok(support_ratio(correct, data.len()))
}

/// Among antecedent matches, the fraction carrying the consequent class; 0 with no matches.
pub fn confidence(rule: &Rule, data: &EncodedDataset) -> Result<f64> {
    check_data(data)?;
    let (matched, correct) = rule.compile(data.encoding())?.counts(data);
    Ok(confidence_ratio(correct, matched))
}

pub(crate) fn support_ratio(correct: usize, total: usize) -> f64 {
    correct as f64 / total as f64
}

pub(crate) fn confidence_ratio(correct: usize, matched: usize) -> f64 {
    if matched == 0 {
        0.0
    } else {
        correct as f64 / matched as f64
    }
}

/// Result of running an example through a rule list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Classification {
    pub class: usize,
    /// Zero-based index of the rule that fired, `None` for the default class.
    pub fired: Option<usize>,
}

/// Ordered rules applied by first match, falling back to `default_class`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleList {
    pub rules: Vec<Rule>,
    pub default_class: usize,
}

impl RuleList {
    pub fn new(rules: Vec<Rule>, default_class: usize) -> Self {
        RuleList { rules, default_class }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn mean_antecedent_length(&self) -> f64 {
        if self.rules.is_empty() {
            return 0.0;
        }
        self.rules.iter().map(Rule::len).sum::<usize>() as f64 / self.rules.len() as f64
    }

    pub fn compile(&self, encoding: &Encoding) -> Result<CompiledRuleList> {
        if self.default_class >= encoding.schema().num_classes() {
            return Err(Error::Schema(format!("default class #{} is not a class", self.default_class)));
        }
        Ok(CompiledRuleList {
            matchers: self.rules.iter().map(|r| r.compile(encoding)).collect::<Result<_>>()?,
            default_class: self.default_class,
            dim: encoding.dim(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct CompiledRuleList {
    matchers: Vec<RuleMatcher>,
    default_class: usize,
    dim: usize,
}

impl CompiledRuleList {
    pub fn classify(&self, x: &[f64]) -> Result<Classification> {
        if x.len() != self.dim {
            return Err(Error::Schema(format!("example has {} columns, expected {}", x.len(), self.dim)));
        }
        Ok(self
            .matchers
            .iter()
            .position(|m| m.matches(x))
            .map(|i| Classification {
                class: self.matchers[i].consequent,
                fired: Some(i),
            })
            .unwrap_or(Classification {
                class: self.default_class,
                fired: None,
            }))
    }
}

pub fn classify(list: &RuleList, x: &[f64], encoding: &Encoding) -> Result<Classification> {
    list.compile(encoding)?.classify(x)
}

/// Majority class among `uncovered` counts; ties go to the globally most
/// frequent class, then to the lowest index.
pub fn choose_default_class(uncovered: &[usize], global: &[usize]) -> usize {
    (0..uncovered.len())
        .max_by(|&a, &b| {
            uncovered[a]
                .cmp(&uncovered[b])
                .then(global[a].cmp(&global[b]))
                .then(b.cmp(&a))
        })
        .unwrap_or(0)
}
