//! Schema declaration, CSV ingestion, and the `[0,1]^d` encoding used by the
//! prototype network and the swarm.
//!
//! Nominal attributes are dummy coded with one column per declared value.
//! Numeric attributes are min-max scaled using ranges observed on a reference
//! (training) dataset; values outside that range are clamped.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::ops::Range;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Nominal,
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<String>,
}

impl Attribute {
    pub fn nominal(name: &str, values: &[&str]) -> Self {
        Attribute {
            name: name.to_owned(),
            kind: AttributeKind::Nominal,
            values: values.iter().map(|v| (*v).to_owned()).collect(),
        }
    }

    pub fn numeric(name: &str) -> Self {
        Attribute {
            name: name.to_owned(),
            kind: AttributeKind::Numeric,
            values: Vec::new(),
        }
    }

    pub fn is_nominal(&self) -> bool {
        self.kind == AttributeKind::Nominal
    }

    /// Number of encoded columns this attribute occupies.
    pub fn width(&self) -> usize {
        match self.kind {
            AttributeKind::Nominal => self.values.len(),
            AttributeKind::Numeric => 1,
        }
    }

    pub fn value_index(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

/// Predictor attributes plus the class attribute and its labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSchema {
    pub attributes: Vec<Attribute>,
    pub class_attribute: String,
    pub class_labels: Vec<String>,
}

impl AttributeSchema {
    pub fn new(attributes: Vec<Attribute>, class_attribute: &str, class_labels: &[&str]) -> Result<Self> {
        let schema = AttributeSchema {
            attributes,
            class_attribute: class_attribute.to_owned(),
            class_labels: class_labels.iter().map(|l| (*l).to_owned()).collect(),
        };
        schema.validate()?;
        Ok(schema)
    }

    /// Parses and validates a schema JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let schema: AttributeSchema =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for attr in &self.attributes {
            if attr.name.is_empty() {
                return Err(Error::Schema("attribute with empty name".into()));
            }
            if !seen.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute `{}`", attr.name)));
            }
            match attr.kind {
                AttributeKind::Nominal => {
                    if attr.values.len() < 2 {
                        return Err(Error::Schema(format!(
                            "nominal attribute `{}` needs at least 2 values",
                            attr.name
                        )));
                    }
                    let distinct: BTreeSet<_> = attr.values.iter().collect();
                    if distinct.len() != attr.values.len() {
                        return Err(Error::Schema(format!(
                            "nominal attribute `{}` declares a value twice",
                            attr.name
                        )));
                    }
                }
                AttributeKind::Numeric => {
                    if !attr.values.is_empty() {
                        return Err(Error::Schema(format!(
                            "numeric attribute `{}` must not declare values",
                            attr.name
                        )));
                    }
                }
            }
        }
        if self.attributes.is_empty() {
            return Err(Error::Schema("schema declares no predictor attributes".into()));
        }
        if seen.contains(self.class_attribute.as_str()) {
            return Err(Error::Schema(format!(
                "class attribute `{}` is also a predictor",
                self.class_attribute
            )));
        }
        if self.class_labels.len() < 2 {
            return Err(Error::Schema("class_labels needs at least 2 entries".into()));
        }
        let labels: BTreeSet<_> = self.class_labels.iter().collect();
        if labels.len() != self.class_labels.len() {
            return Err(Error::Schema("class_labels contains duplicates".into()));
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_labels.iter().position(|l| l == label)
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Encoded dimension: total nominal cardinality plus one column per numeric attribute.
    pub fn encoded_width(&self) -> usize {
        self.attributes.iter().map(Attribute::width).sum()
    }
}

/// A parsed cell. Nominal values are stored as indices into the declared value list.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Nominal(usize),
    Numeric(f64),
}

#[derive(Clone, Debug)]
pub struct RawDataset {
    pub schema: AttributeSchema,
    /// One value per schema attribute, in schema order.
    pub rows: Vec<Vec<Value>>,
    pub classes: Vec<usize>,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> RawDataset {
        RawDataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            classes: indices.iter().map(|&i| self.classes[i]).collect(),
        }
    }
}

struct HeaderLayout {
    /// CSV column for each schema attribute.
    attribute_columns: Vec<usize>,
    class_column: Option<usize>,
    headers: Vec<String>,
}

fn layout_from_headers(headers: &csv::StringRecord, schema: &AttributeSchema, require_class: bool) -> Result<HeaderLayout> {
    let mut by_name = BTreeMap::new();
    for (i, h) in headers.iter().enumerate() {
        let name = h.trim();
        if by_name.insert(name.to_owned(), i).is_some() {
            return Err(Error::Schema(format!("duplicate column `{name}`")));
        }
    }
    let mut attribute_columns = Vec::with_capacity(schema.attributes.len());
    for attr in &schema.attributes {
        match by_name.remove(&attr.name) {
            Some(i) => attribute_columns.push(i),
            None => return Err(Error::Schema(format!("missing column `{}`", attr.name))),
        }
    }
    let class_column = by_name.remove(&schema.class_attribute);
    if require_class && class_column.is_none() {
        return Err(Error::Schema(format!(
            "missing class column `{}`",
            schema.class_attribute
        )));
    }
    if let Some(extra) = by_name.keys().next() {
        return Err(Error::Schema(format!("unexpected column `{extra}`")));
    }
    Ok(HeaderLayout {
        attribute_columns,
        class_column,
        headers: headers.iter().map(|h| h.trim().to_owned()).collect(),
    })
}

fn parse_cell(attr: &Attribute, cell: &str, row: usize) -> Result<Value> {
    let cell = cell.trim();
    let err = |message: String| Error::Value {
        row,
        column: attr.name.clone(),
        message,
    };
    if cell.is_empty() {
        return Err(err("missing value".into()));
    }
    match attr.kind {
        AttributeKind::Nominal => attr
            .value_index(cell)
            .map(Value::Nominal)
            .ok_or_else(|| err(format!("`{cell}` is not a declared value"))),
        AttributeKind::Numeric => match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Value::Numeric(v)),
            _ => Err(err(format!("`{cell}` is not a finite number"))),
        },
    }
}

fn parse_record(
    record: &csv::StringRecord,
    layout: &HeaderLayout,
    schema: &AttributeSchema,
    row: usize,
) -> Result<(Vec<Value>, Option<usize>)> {
    if record.len() != layout.headers.len() {
        return Err(Error::Value {
            row,
            column: String::new(),
            message: format!("expected {} fields, found {}", layout.headers.len(), record.len()),
        });
    }
    let values = schema
        .attributes
        .iter()
        .zip(&layout.attribute_columns)
        .map(|(attr, &col)| parse_cell(attr, &record[col], row))
        .collect::<Result<Vec<_>>>()?;
    let class = match layout.class_column {
        Some(col) => {
            let label = record[col].trim();
            Some(schema.class_index(label).ok_or_else(|| Error::Value {
                row,
                column: schema.class_attribute.clone(),
                message: format!("`{label}` is not a declared class label"),
            })?)
        }
        None => None,
    };
    Ok((values, class))
}

fn csv_reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source)
}

/// Reads a labeled, header-first CSV. Column order may differ from the schema.
pub fn parse_csv<R: Read>(source: R, schema: &AttributeSchema) -> Result<RawDataset> {
    schema.validate()?;
    let mut reader = csv_reader(source);
    let layout = layout_from_headers(reader.headers()?, schema, true)?;
    let mut rows = Vec::new();
    let mut classes = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let (values, class) = parse_record(&record?, &layout, schema, i + 1)?;
        rows.push(values);
        classes.push(class.expect("class column required"));
    }
    Ok(RawDataset {
        schema: schema.clone(),
        rows,
        classes,
    })
}

/// Reads a CSV whose class column is optional, keeping going past bad rows.
///
/// Header problems abort; each data row yields its own result.
pub fn parse_csv_rows<R: Read>(source: R, schema: &AttributeSchema) -> Result<Vec<Result<Vec<Value>>>> {
    let mut reader = csv_reader(source);
    let layout = layout_from_headers(reader.headers()?, schema, false)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let parsed = record
            .map_err(Error::from)
            .and_then(|r| parse_record(&r, &layout, schema, row))
            .map(|(values, _)| values);
        out.push(parsed);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericRange {
    pub min: f64,
    pub max: f64,
}

impl NumericRange {
    /// Maps into `[0,1]`, clamping out-of-range values. A constant range maps to 0.
    pub fn scale(&self, x: f64) -> f64 {
        let span = self.max - self.min;
        if span <= 0.0 {
            return 0.0;
        }
        ((x - self.min) / span).clamp(0.0, 1.0)
    }

    pub fn unscale(&self, s: f64) -> f64 {
        self.min + s * (self.max - self.min)
    }
}

/// Where an encoded column comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnSource {
    Nominal { attribute: usize, value: usize },
    Numeric { attribute: usize },
}

impl ColumnSource {
    pub fn attribute(&self) -> usize {
        match *self {
            ColumnSource::Nominal { attribute, .. } | ColumnSource::Numeric { attribute } => attribute,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct EncodingRepr {
    schema: AttributeSchema,
    numeric_ranges: Vec<Option<NumericRange>>,
}

/// Schema plus fitted numeric ranges: everything needed to encode a row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EncodingRepr", into = "EncodingRepr")]
pub struct Encoding {
    schema: AttributeSchema,
    /// Indexed by attribute; `None` for nominal attributes.
    numeric_ranges: Vec<Option<NumericRange>>,
    column_map: Vec<ColumnSource>,
    attribute_columns: Vec<Range<usize>>,
}

impl TryFrom<EncodingRepr> for Encoding {
    type Error = Error;

    fn try_from(repr: EncodingRepr) -> Result<Self> {
        Encoding::new(repr.schema, repr.numeric_ranges)
    }
}

impl From<Encoding> for EncodingRepr {
    fn from(e: Encoding) -> Self {
        EncodingRepr {
            schema: e.schema,
            numeric_ranges: e.numeric_ranges,
        }
    }
}

impl Encoding {
    pub fn new(schema: AttributeSchema, numeric_ranges: Vec<Option<NumericRange>>) -> Result<Self> {
        schema.validate()?;
        if numeric_ranges.len() != schema.attributes.len() {
            return Err(Error::Schema("numeric range list does not match attributes".into()));
        }
        let mut column_map = Vec::with_capacity(schema.encoded_width());
        let mut attribute_columns = Vec::with_capacity(schema.attributes.len());
        for (a, (attr, range)) in schema.attributes.iter().zip(&numeric_ranges).enumerate() {
            let start = column_map.len();
            match attr.kind {
                AttributeKind::Nominal => {
                    if range.is_some() {
                        return Err(Error::Schema(format!("nominal attribute `{}` has a range", attr.name)));
                    }
                    column_map.extend((0..attr.values.len()).map(|value| ColumnSource::Nominal { attribute: a, value }));
                }
                AttributeKind::Numeric => {
                    if range.is_none() {
                        return Err(Error::Schema(format!("numeric attribute `{}` has no range", attr.name)));
                    }
                    column_map.push(ColumnSource::Numeric { attribute: a });
                }
            }
            attribute_columns.push(start..column_map.len());
        }
        Ok(Encoding {
            schema,
            numeric_ranges,
            column_map,
            attribute_columns,
        })
    }

    /// Fits numeric ranges on `raw`. An empty dataset yields zero-width ranges.
    pub fn fit(raw: &RawDataset) -> Self {
        let ranges = raw
            .schema
            .attributes
            .iter()
            .enumerate()
            .map(|(a, attr)| match attr.kind {
                AttributeKind::Nominal => None,
                AttributeKind::Numeric => {
                    let mut it = raw.rows.iter().map(|r| match r[a] {
                        Value::Numeric(v) => v,
                        Value::Nominal(_) => unreachable!("numeric attribute holds nominal value"),
                    });
                    let first = it.next().unwrap_or(0.0);
                    let (min, max) = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
                    Some(NumericRange { min, max })
                }
            })
            .collect();
        Encoding::new(raw.schema.clone(), ranges).expect("schema already validated")
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn dim(&self) -> usize {
        self.column_map.len()
    }

    pub fn column_map(&self) -> &[ColumnSource] {
        &self.column_map
    }

    /// Encoded columns of attribute `a`.
    pub fn columns_of(&self, a: usize) -> Range<usize> {
        self.attribute_columns[a].clone()
    }

    pub fn numeric_range(&self, a: usize) -> Option<NumericRange> {
        self.numeric_ranges[a]
    }

    pub fn numeric_ranges(&self) -> &[Option<NumericRange>] {
        &self.numeric_ranges
    }

    pub fn encode_row(&self, row: &[Value]) -> Result<Vec<f64>> {
        if row.len() != self.schema.attributes.len() {
            return Err(Error::Schema(format!(
                "row has {} values, schema has {} attributes",
                row.len(),
                self.schema.attributes.len()
            )));
        }
        let mut out = vec![0.0; self.dim()];
        for (a, value) in row.iter().enumerate() {
            let cols = self.columns_of(a);
            match (self.schema.attributes[a].kind, *value) {
                (AttributeKind::Nominal, Value::Nominal(v)) if v < cols.len() => out[cols.start + v] = 1.0,
                (AttributeKind::Numeric, Value::Numeric(x)) => {
                    out[cols.start] = self.numeric_ranges[a].expect("numeric range").scale(x)
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "value does not fit attribute `{}`",
                        self.schema.attributes[a].name
                    )))
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`encode_row`](Self::encode_row). Nominal blocks decode to
    /// their largest column; numeric values are unscaled.
    pub fn decode_row(&self, x: &[f64]) -> Vec<Value> {
        self.schema
            .attributes
            .iter()
            .enumerate()
            .map(|(a, attr)| {
                let cols = self.columns_of(a);
                match attr.kind {
                    AttributeKind::Nominal => {
                        let block = &x[cols];
                        let best = (0..block.len())
                            .fold(0, |best, i| if block[i] > block[best] { i } else { best });
                        Value::Nominal(best)
                    }
                    AttributeKind::Numeric => {
                        Value::Numeric(self.numeric_ranges[a].expect("numeric range").unscale(x[cols.start]))
                    }
                }
            })
            .collect()
    }

    pub fn encode(self: &Arc<Self>, raw: &RawDataset) -> Result<EncodedDataset> {
        if raw.schema != self.schema {
            return Err(Error::Schema("dataset schema differs from encoding schema".into()));
        }
        let examples = raw
            .rows
            .iter()
            .map(|r| self.encode_row(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(EncodedDataset {
            encoding: Arc::clone(self),
            examples,
            classes: raw.classes.clone(),
        })
    }
}

/// Encodes `raw`, taking numeric ranges from `ranges_from` when given (test-set
/// encoding) and from `raw` itself otherwise.
pub fn encode(raw: &RawDataset, ranges_from: Option<&RawDataset>) -> EncodedDataset {
    let encoding = Arc::new(Encoding::fit(ranges_from.unwrap_or(raw)));
    encoding.encode(raw).expect("rows were validated at parse time")
}

/// Examples in `[0,1]^d` with class indices, sharing one [`Encoding`].
#[derive(Clone, Debug)]
pub struct EncodedDataset {
    encoding: Arc<Encoding>,
    pub examples: Vec<Vec<f64>>,
    pub classes: Vec<usize>,
}

impl EncodedDataset {
    pub fn new(encoding: Arc<Encoding>, examples: Vec<Vec<f64>>, classes: Vec<usize>) -> Result<Self> {
        if examples.len() != classes.len() {
            return Err(Error::Data("example and class counts differ".into()));
        }
        let dim = encoding.dim();
        let k = encoding.schema().num_classes();
        if examples.iter().any(|x| x.len() != dim) {
            return Err(Error::Schema(format!("every example must have {dim} columns")));
        }
        if classes.iter().any(|&c| c >= k) {
            return Err(Error::Data("class index out of range".into()));
        }
        Ok(EncodedDataset {
            encoding,
            examples,
            classes,
        })
    }

    pub fn encoding(&self) -> &Arc<Encoding> {
        &self.encoding
    }

    pub fn schema(&self) -> &AttributeSchema {
        self.encoding.schema()
    }

    pub fn dim(&self) -> usize {
        self.encoding.dim()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.schema().num_classes()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &c in &self.classes {
            counts[c] += 1;
        }
        counts
    }

    pub fn subset(&self, indices: &[usize]) -> EncodedDataset {
        EncodedDataset {
            encoding: Arc::clone(&self.encoding),
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
            classes: indices.iter().map(|&i| self.classes[i]).collect(),
        }
    }
}

/// Per-class shuffled split of example indices. Both returned lists are sorted.
///
/// Each class contributes `round(test_fraction * n_c)` examples to the test
/// side, kept within `1..n_c` so both sides see every class.
pub fn stratified_indices(
    classes: &[usize],
    num_classes: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Split(format!("test fraction {test_fraction} must lie in (0,1)")));
    }
    let mut by_class = vec![Vec::new(); num_classes];
    for (i, &c) in classes.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(classes.len());
    let mut test = Vec::new();
    for (c, mut members) in by_class.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::Split(format!("class {c} has fewer than 2 examples")));
        }
        members.shuffle(&mut rng);
        let n = members.len();
        let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn stratified_split(data: &EncodedDataset, test_fraction: f64, seed: u64) -> Result<(EncodedDataset, EncodedDataset)> {
    let (train, test) = stratified_indices(&data.classes, data.num_classes(), test_fraction, seed)?;
    Ok((data.subset(&train), data.subset(&test)))
}
