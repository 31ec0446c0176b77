//! Seeded generators for labelled test data.
//!
//! Each profile yields a schema plus CSV text. Numeric cells are written with
//! fixed decimals and labels are computed from the written values, so parsing
//! the CSV back reproduces the ground truth exactly.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::schema::{Attribute, AttributeSchema};

pub const MIN_ROWS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// Two uniform numerics; class is `x1 > 0.5`.
    Separable,
    /// Credit-like applicants denied by any of three hidden rules, with 5% label noise.
    Credit3,
    /// The positive class occupies 8 of the 16 cells of two nominal attributes.
    Fragmented,
}

impl Profile {
    pub const ALL: [Profile; 3] = [Profile::Separable, Profile::Credit3, Profile::Fragmented];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Separable => "separable",
            Profile::Credit3 => "credit3",
            Profile::Fragmented => "fragmented",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Profile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown profile {s:?} (expected separable, credit3 or fragmented)")))
    }
}

#[derive(Clone, Debug)]
pub struct Synthetic {
    pub schema: AttributeSchema,
    pub csv: String,
}

/// Numeric attribute drawn uniformly from `[lo, hi]`.
struct Span {
    name: &'static str,
    lo: f64,
    hi: f64,
}

impl Span {
    fn draw(&self, rng: &mut ChaCha8Rng, decimals: usize) -> (String, f64) {
        let text = format!("{:.*}", decimals, rng.gen_range(self.lo..=self.hi));
        let value: f64 = text.parse().expect("formatted float parses");
        (text, value)
    }

    /// Position of `value` inside the span, in `[0, 1]`.
    fn fraction(&self, value: f64) -> f64 {
        (value - self.lo) / (self.hi - self.lo)
    }
}

pub fn generate(profile: Profile, rows: usize, seed: u64) -> Result<Synthetic> {
    if rows < MIN_ROWS {
        return Err(Error::Config(format!("--rows must be at least {MIN_ROWS}, got {rows}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (schema, records) = match profile {
        Profile::Separable => separable(rows, &mut rng),
        Profile::Credit3 => credit3(rows, &mut rng),
        Profile::Fragmented => fragmented(rows, &mut rng),
    };
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = schema.attributes.iter().map(|a| a.name.as_str()).collect();
    header.push(&schema.class_attribute);
    writer.write_record(&header)?;
    for record in &records {
        writer.write_record(record)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let csv = String::from_utf8(bytes).expect("generated CSV is UTF-8");
    Ok(Synthetic { schema, csv })
}

fn separable(rows: usize, rng: &mut ChaCha8Rng) -> (AttributeSchema, Vec<Vec<String>>) {
    let schema = AttributeSchema::new(vec![Attribute::numeric("x1"), Attribute::numeric("x2")], "class", &["low", "high"])
        .expect("static schema");
    let unit = |name| Span { name, lo: 0.0, hi: 1.0 };
    let (x1, x2) = (unit("x1"), unit("x2"));
    let records = (0..rows)
        .map(|_| {
            let (a, v) = x1.draw(rng, 4);
            let (b, _) = x2.draw(rng, 4);
            let label = if v > 0.5 { "high" } else { "low" };
            vec![a, b, label.to_owned()]
        })
        .collect();
    (schema, records)
}

const MARITAL: [&str; 4] = ["single", "married", "divorced", "widowed"];
const HOUSING: [&str; 3] = ["own", "rent", "family"];
const PURPOSE: [&str; 4] = ["car", "home", "education", "business"];
const BRANCH: [&str; 4] = ["north", "south", "east", "west"];
const LABEL_NOISE: f64 = 0.05;

fn credit3(rows: usize, rng: &mut ChaCha8Rng) -> (AttributeSchema, Vec<Vec<String>>) {
    let spans = [
        Span { name: "income", lo: 10.0, hi: 200.0 },
        Span { name: "loan_amount", lo: 1.0, hi: 100.0 },
        Span { name: "savings", lo: 0.0, hi: 100.0 },
        Span { name: "liabilities", lo: 0.0, hi: 100.0 },
        Span { name: "age", lo: 18.0, hi: 75.0 },
        Span { name: "employment_years", lo: 0.0, hi: 40.0 },
    ];
    let mut attributes: Vec<Attribute> = spans.iter().map(|s| Attribute::numeric(s.name)).collect();
    attributes.push(Attribute::nominal("marital_status", &MARITAL));
    attributes.push(Attribute::nominal("housing", &HOUSING));
    attributes.push(Attribute::nominal("purpose", &PURPOSE));
    attributes.push(Attribute::nominal("branch", &BRANCH));
    let schema = AttributeSchema::new(attributes, "decision", &["Deny", "Accept"]).expect("static schema");

    let records = (0..rows)
        .map(|_| {
            let mut record = Vec::with_capacity(11);
            let mut frac = [0.0; 6];
            for (i, span) in spans.iter().enumerate() {
                let (text, value) = span.draw(rng, 2);
                frac[i] = span.fraction(value);
                record.push(text);
            }
            let [income, _, savings, liabilities, _, employment] = frac;
            let housing = rng.gen_range(0..HOUSING.len());
            let purpose = rng.gen_range(0..PURPOSE.len());
            record.push(MARITAL[rng.gen_range(0..MARITAL.len())].to_owned());
            record.push(HOUSING[housing].to_owned());
            record.push(PURPOSE[purpose].to_owned());
            record.push(BRANCH[rng.gen_range(0..BRANCH.len())].to_owned());

            let mut deny = (income < 0.4 && liabilities > 0.4)
                || (HOUSING[housing] == "rent" && savings < 0.4)
                || (PURPOSE[purpose] == "business" && employment < 0.4);
            if rng.gen_bool(LABEL_NOISE) {
                deny = !deny;
            }
            record.push(if deny { "Deny" } else { "Accept" }.to_owned());
            record
        })
        .collect();
    (schema, records)
}

fn fragmented(rows: usize, rng: &mut ChaCha8Rng) -> (AttributeSchema, Vec<Vec<String>>) {
    let region = ["r0", "r1", "r2", "r3"];
    let channel = ["k0", "k1", "k2", "k3"];
    let tier = ["t0", "t1", "t2"];
    let flag = ["no", "yes"];
    let schema = AttributeSchema::new(
        vec![
            Attribute::nominal("region", &region),
            Attribute::nominal("channel", &channel),
            Attribute::nominal("tier", &tier),
            Attribute::nominal("flag", &flag),
        ],
        "class",
        &["rest", "pocket"],
    )
    .expect("static schema");
    let records = (0..rows)
        .map(|_| {
            let a = rng.gen_range(0..region.len());
            let b = rng.gen_range(0..channel.len());
            let label = if (a + b) % 2 == 0 { "pocket" } else { "rest" };
            vec![
                region[a].to_owned(),
                channel[b].to_owned(),
                tier[rng.gen_range(0..tier.len())].to_owned(),
                flag[rng.gen_range(0..flag.len())].to_owned(),
                label.to_owned(),
            ]
        })
        .collect();
    (schema, records)
}
