use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{Command, ExperimentConfig};
use crate::{Error, Result, C64};

pub const CODE_VERSION: &str = concat!("coherent-lab ", env!("CARGO_PKG_VERSION"));

/// A tolerance check carried by a record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }

    /// Passes when `value >= bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance: bound,
            passed: value >= bound,
        }
    }
}

/// A series with named columns, written as CSV.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Sorts rows by the first column.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|v| v.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    /// What the record holds, e.g. `wiener` or `wiener-extrapolation`.
    pub kind: String,
    pub config: ExperimentConfig,
    pub values: BTreeMap<String, f64>,
    pub errors: BTreeMap<String, f64>,
    /// Oracle values and deviations from them.
    pub oracle: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub table: Option<Table>,
    pub notes: Vec<String>,
    pub wall_time_s: f64,
    pub code_version: String,
}

impl ResultRecord {
    pub fn new(kind: impl Into<String>, config: &ExperimentConfig) -> Self {
        ResultRecord {
            schema_version: config.schema_version,
            kind: kind.into(),
            config: config.clone(),
            values: BTreeMap::new(),
            errors: BTreeMap::new(),
            oracle: BTreeMap::new(),
            checks: Vec::new(),
            table: None,
            notes: Vec::new(),
            wall_time_s: 0.0,
            code_version: CODE_VERSION.to_owned(),
        }
    }

    pub fn command(&self) -> Command {
        self.config.command
    }

    pub fn value(&mut self, key: &str, v: f64) -> &mut Self {
        self.values.insert(key.to_owned(), v);
        self
    }

    /// Stores `key.re` and `key.im`.
    pub fn complex(&mut self, key: &str, z: C64) -> &mut Self {
        self.values.insert(format!("{key}.re"), z.re);
        self.values.insert(format!("{key}.im"), z.im);
        self
    }

    pub fn error(&mut self, key: &str, v: f64) -> &mut Self {
        self.errors.insert(key.to_owned(), v);
        self
    }

    pub fn oracle_complex(&mut self, key: &str, z: C64) -> &mut Self {
        self.oracle.insert(format!("{key}.re"), z.re);
        self.oracle.insert(format!("{key}.im"), z.im);
        self
    }

    pub fn oracle_value(&mut self, key: &str, v: f64) -> &mut Self {
        self.oracle.insert(key.to_owned(), v);
        self
    }

    pub fn check(&mut self, c: Check) -> &mut Self {
        self.checks.push(c);
        self
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Equality of everything except the wall time.
    pub fn same_values(&self, other: &ResultRecord) -> bool {
        let bits = |m: &BTreeMap<String, f64>| {
            m.iter()
                .map(|(k, v)| (k.clone(), v.to_bits()))
                .collect::<Vec<_>>()
        };
        let table_bits = |t: &Option<Table>| {
            t.as_ref().map(|t| {
                t.rows
                    .iter()
                    .flatten()
                    .map(|v| v.to_bits())
                    .collect::<Vec<_>>()
            })
        };
        self.kind == other.kind
            && self.config == other.config
            && bits(&self.values) == bits(&other.values)
            && bits(&self.errors) == bits(&other.errors)
            && bits(&self.oracle) == bits(&other.oracle)
            && table_bits(&self.table) == table_bits(&other.table)
    }

    /// Re-checks the stored configuration.
    pub fn revalidate(&self) -> Result<()> {
        self.config.validate()?;
        if self.schema_version != self.config.schema_version {
            return Err(Error::Config(format!(
                "record schema {} does not match its config schema {}",
                self.schema_version, self.config.schema_version
            )));
        }
        if let Some((k, _)) = self
            .values
            .iter()
            .chain(&self.errors)
            .chain(&self.oracle)
            .find(|(_, v)| !v.is_finite())
        {
            return Err(Error::Config(format!("non-finite value under `{k}`")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(line: &str) -> Result<Self> {
        Ok(serde_json::from_str(line)?)
    }
}

pub const RESULTS_FILE: &str = "results.jsonl";

/// Writes `results.jsonl` (one record per line) and one CSV per record
/// that carries a table. Returns the written paths.
pub fn emit_report(records: &[ResultRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::Config("no records to write".into()));
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let json_path = dir.join(RESULTS_FILE);
    let mut json = BufWriter::new(File::create(&json_path)?);
    for r in records {
        writeln!(json, "{}", r.to_json()?)?;
    }
    json.flush()?;
    written.push(json_path);
    for (i, r) in records.iter().enumerate() {
        if let Some(t) = &r.table {
            let path = dir.join(format!("{i:02}-{}.csv", r.kind));
            t.write_csv(BufWriter::new(File::create(&path)?))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Reads the records of a `results.jsonl` file and revalidates each.
pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>> {
    let file = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in file.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r = ResultRecord::from_json(&line)?;
        r.revalidate()?;
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultRecord {
        let mut r = ResultRecord::new("wiener", &ExperimentConfig::for_command(Command::Wiener));
        r.value("nu", 4.0)
            .complex("value", C64::new(0.1 + 0.2, -1.0 / 3.0))
            .error("stderr", 5.2e-4)
            .oracle_value("deviation", 1e-17);
        r.check(Check::at_most("ratio", 0.5, 3.0));
        let mut t = Table::new(&["N", "error"]);
        t.push(vec![8.0, 1e-3]);
        t.push(vec![4.0, 4e-3]);
        t.sort();
        r.table = Some(t);
        r.wall_time_s = 0.25;
        r
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let r = sample();
        let back = ResultRecord::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(back.same_values(&r));
        back.revalidate().unwrap();
    }

    #[test]
    fn table_sorted_ascending() {
        let t = sample().table.unwrap();
        assert_eq!(t.rows[0][0], 4.0);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "N,error\n4,0.004\n8,0.001\n"
        );
    }

    #[test]
    fn wall_time_ignored_by_value_comparison() {
        let a = sample();
        let mut b = a.clone();
        b.wall_time_s = 9.0;
        assert!(a.same_values(&b));
        b.values.insert("nu".into(), 4.000000000000001);
        assert!(!a.same_values(&b));
    }

    #[test]
    fn report_files() {
        let dir = std::env::temp_dir().join(format!("cslab-report-{}", std::process::id()));
        let paths = emit_report(&[sample(), sample()], &dir).unwrap();
        assert_eq!(paths.len(), 3);
        let back = read_records(&paths[0]).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], sample());
        fs::remove_dir_all(&dir).unwrap();
        assert!(emit_report(&[], &dir).is_err());
    }
}
