//! Synthetic stand-in for the public genetic-disorder CSV.
//!
//! Rows follow [`genetic_disorder_schema`]. The subclass is drawn uniformly
//! and its code is planted in the four gene-inheritance columns (one bit
//! each, occasionally flipped) and in a per-class band of the blood cell
//! count. Every other feature is independent noise.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tabular::{format_number, read_csv, ColumnKind, ColumnSchema, Dataset, Role, Schema};

pub const DISORDER_COLUMN: &str = "Genetic Disorder";
pub const SUBCLASS_COLUMN: &str = "Disorder Subclass";
pub const BLOOD_CELL_COLUMN: &str = "Blood cell count (mcL)";

/// Gene columns carrying bits 0..4 of the subclass code.
pub const GENE_COLUMNS: [&str; 4] =
    ["Genes in mother's side", "Inherited from father", "Maternal gene", "Paternal gene"];

pub const DISORDERS: [&str; 3] = [
    "Mitochondrial genetic inheritance disorders",
    "Multifactorial genetic inheritance disorders",
    "Single-gene inheritance diseases",
];

/// Subclasses grouped by disorder: three each, in [`DISORDERS`] order.
pub const SUBCLASSES: [&str; 9] = [
    "Leigh syndrome",
    "Mitochondrial myopathy",
    "Leber's hereditary optic neuropathy",
    "Diabetes",
    "Alzheimer's",
    "Cancer",
    "Cystic fibrosis",
    "Tay-Sachs",
    "Hemochromatosis",
];

const RADIATION: [&str; 4] = ["No", "Yes", "Not applicable", "-"];

/// Column layout of the public dataset's training file.
pub fn genetic_disorder_schema() -> Schema {
    let ignore = |n: &str| ColumnSchema::categorical(n, Vec::<String>::new()).with_role(Role::Ignore);
    let yes_no = |n: &str| ColumnSchema::binary(n, "No", "Yes");
    let num = ColumnSchema::numeric;
    let cat = |n: &str, c: &[&str]| ColumnSchema::categorical(n, c.iter().copied());
    let columns = vec![
        ignore("Patient Id"),
        num("Patient Age"),
        yes_no(GENE_COLUMNS[0]),
        yes_no(GENE_COLUMNS[1]),
        yes_no(GENE_COLUMNS[2]),
        yes_no(GENE_COLUMNS[3]),
        num(BLOOD_CELL_COLUMN),
        ignore("Patient First Name"),
        ignore("Family Name"),
        ignore("Father's name"),
        num("Mother's age"),
        num("Father's age"),
        ignore("Institute Name"),
        ignore("Location of Institute"),
        ColumnSchema::binary("Status", "Deceased", "Alive"),
        ColumnSchema::binary("Respiratory Rate (breaths/min)", "Tachypnea", "Normal (30-60)"),
        ColumnSchema::binary("Heart Rate (rates/min", "Tachycardia", "Normal"),
        num("Test 1"),
        num("Test 2"),
        num("Test 3"),
        num("Test 4"),
        num("Test 5"),
        yes_no("Parental consent"),
        ColumnSchema::binary("Follow-up", "Low", "High"),
        cat("Gender", &["Female", "Male", "Ambiguous"]),
        cat("Birth asphyxia", &["No", "Yes", "No record", "Not available"]),
        cat("Autopsy shows birth defect (if applicable)", &["No", "Yes", "None", "Not applicable"]),
        ColumnSchema::binary("Place of birth", "Home", "Institute"),
        yes_no("Folic acid details (peri-conceptional)"),
        yes_no("H/O serious maternal illness"),
        cat("H/O radiation exposure (x-ray)", &RADIATION),
        cat("H/O substance abuse", &RADIATION),
        yes_no("Assisted conception IVF/ART"),
        yes_no("History of anomalies in previous pregnancies"),
        num("No. of previous abortion"),
        ColumnSchema::binary("Birth defects", "Singular", "Multiple"),
        num("White Blood cell count (thousand per microliter)"),
        cat("Blood test result", &["normal", "slightly abnormal", "abnormal", "inconclusive"]),
        num("Symptom 1"),
        num("Symptom 2"),
        num("Symptom 3"),
        num("Symptom 4"),
        num("Symptom 5"),
        cat(DISORDER_COLUMN, &DISORDERS).with_role(Role::TargetDisorder),
        cat(SUBCLASS_COLUMN, &SUBCLASSES).with_role(Role::TargetSubclass),
    ];
    Schema::new(columns).expect("built-in schema is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub rows: usize,
    pub seed: u64,
    /// Probability that a noise feature cell is left blank.
    pub missing_rate: f64,
    /// Probability that a target cell is left blank.
    pub target_missing_rate: f64,
    /// Probability that a planted gene bit is flipped.
    pub bit_flip_rate: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self { rows: 2000, seed: 7, missing_rate: 0.02, target_missing_rate: 0.01, bit_flip_rate: 0.03 }
    }
}

/// Raw CSV records plus the ground truth about which columns carry signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub schema: Schema,
    pub header: Vec<String>,
    pub records: Vec<Vec<String>>,
    pub informative: Vec<String>,
    pub noise: Vec<String>,
}

fn disorder_of(subclass: usize) -> usize {
    subclass / 3
}

fn noise_token(col: &ColumnSchema, rng: &mut ChaCha8Rng) -> String {
    let name = col.name.as_str();
    match col.kind {
        ColumnKind::Numeric => {
            let v = match name {
                "Patient Age" => f64::from(rng.gen_range(0..=14)),
                "Mother's age" => f64::from(rng.gen_range(18..=51)),
                "Father's age" => f64::from(rng.gen_range(20..=64)),
                "No. of previous abortion" => f64::from(rng.gen_range(0..=4)),
                "White Blood cell count (thousand per microliter)" => {
                    (rng.gen_range(3.0..12.0_f64) * 1e6).round() / 1e6
                }
                _ => f64::from(rng.gen_range(0..=1)),
            };
            format_number(v)
        }
        _ if name == "Parental consent" => "Yes".into(),
        _ => col.categories.choose(rng).expect("categories are non-empty").clone(),
    }
}

/// Deterministic in `cfg`.
pub fn generate(cfg: &SyntheticConfig) -> SyntheticData {
    let schema = genetic_disorder_schema();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let header: Vec<String> = schema.columns.iter().map(|c| c.name.clone()).collect();
    let band = (5.609 - 4.09) / 9.0;
    let mut records = Vec::with_capacity(cfg.rows);
    for i in 0..cfg.rows {
        let s = rng.gen_range(0..SUBCLASSES.len());
        let mut record = Vec::with_capacity(header.len());
        for col in &schema.columns {
            let name = col.name.as_str();
            let token = if name == "Patient Id" {
                format!("PID{i:07}")
            } else if col.role == Role::Ignore {
                format!("{}-{}", name.split_whitespace().next().unwrap_or("x"), i % 97)
            } else if name == SUBCLASS_COLUMN {
                if rng.gen_bool(cfg.target_missing_rate) {
                    String::new()
                } else {
                    SUBCLASSES[s].into()
                }
            } else if name == DISORDER_COLUMN {
                if rng.gen_bool(cfg.target_missing_rate) {
                    String::new()
                } else {
                    DISORDERS[disorder_of(s)].into()
                }
            } else if let Some(bit) = GENE_COLUMNS.iter().position(|g| *g == name) {
                let set = (s >> bit) & 1 == 1;
                let set = set ^ rng.gen_bool(cfg.bit_flip_rate);
                if set { "Yes" } else { "No" }.into()
            } else if name == BLOOD_CELL_COLUMN {
                let v = 4.09 + (s as f64 + rng.gen_range(0.1..0.9)) * band;
                format_number((v * 1e6).round() / 1e6)
            } else if rng.gen_bool(cfg.missing_rate) {
                String::new()
            } else {
                noise_token(col, &mut rng)
            };
            record.push(token);
        }
        records.push(record);
    }
    let informative: Vec<String> = GENE_COLUMNS.iter().copied().chain([BLOOD_CELL_COLUMN]).map(String::from).collect();
    let noise = schema
        .columns
        .iter()
        .filter(|c| c.role == Role::Feature && !informative.contains(&c.name))
        .map(|c| c.name.clone())
        .collect();
    SyntheticData { schema, header, records, informative, noise }
}

impl SyntheticData {
    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.records {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::io("<synthetic>", std::io::Error::other(e.to_string())))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_bytes()?).map_err(|e| Error::io(path, e))
    }

    /// Parses the records through the regular ingestion path.
    pub fn dataset(&self) -> Result<Dataset> {
        Ok(read_csv(self.to_csv_bytes()?.as_slice(), &self.schema.columns)?.dataset)
    }
}
