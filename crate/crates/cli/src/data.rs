//! Headered CSV input for the regression commands.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rayreg::{dummy_design, DesignMatrix, LinkFunction, ModelSpec};

pub struct Table {
    headers: Vec<String>,
    /// Records with their 1-based line number and byte offset.
    records: Vec<(csv::StringRecord, u64, u64)>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).with_context(|| format!("cannot open data file {}", path.display()))?;
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let headers = rdr
            .headers()
            .with_context(|| format!("{}: cannot read header", path.display()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut records = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| match e.position() {
                Some(p) => anyhow!("{}: line {}, byte {}: {e}", path.display(), p.line(), p.byte()),
                None => anyhow!("{}: {e}", path.display()),
            })?;
            let (line, byte) = rec.position().map_or((0, 0), |p| (p.line(), p.byte()));
            records.push((rec, line, byte));
        }
        Ok(Self { headers, records })
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("column `{name}` not found; available: {}", self.headers.join(", ")))
    }

    pub fn strings(&self, name: &str) -> Result<Vec<String>> {
        let j = self.index(name)?;
        Ok(self.records.iter().map(|(r, _, _)| r.get(j).unwrap_or("").to_string()).collect())
    }

    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.index(name)?;
        self.records
            .iter()
            .map(|(r, line, byte)| {
                let field = r.get(j).unwrap_or("");
                field
                    .parse::<f64>()
                    .map_err(|_| anyhow!("line {line}, byte {byte}: column `{name}` value `{field}` is not a number"))
            })
            .collect()
    }

    fn line_of(&self, row: usize) -> u64 {
        self.records[row].1
    }
}

/// How the design is assembled from the table.
#[derive(Debug, Clone, Default)]
pub struct DesignSpec {
    pub response: String,
    pub covariates: Vec<String>,
    pub dummy: Option<String>,
    pub reference: Option<String>,
}

pub fn build_spec(table: &Table, design: &DesignSpec, link: LinkFunction) -> Result<ModelSpec> {
    let y = table.numbers(&design.response)?;
    let bad: Vec<usize> = (0..y.len()).filter(|&i| !(y[i] > 0.0)).collect();
    if !bad.is_empty() {
        let lines: Vec<String> = bad.iter().take(20).map(|&i| table.line_of(i).to_string()).collect();
        let more = if bad.len() > 20 { format!(" and {} more", bad.len() - 20) } else { String::new() };
        bail!("{} nonpositive responses in `{}` at lines {}{more}", bad.len(), design.response, lines.join(", "));
    }
    let dm = match (&design.dummy, &design.reference) {
        (Some(col), Some(reference)) => {
            if !design.covariates.is_empty() {
                bail!("--dummy cannot be combined with --covariates");
            }
            dummy_design(&table.strings(col)?, reference)?
        }
        (Some(_), None) => bail!("--dummy needs --reference"),
        (None, Some(_)) => bail!("--reference needs --dummy"),
        (None, None) => {
            let cols = design.covariates.iter().map(|c| table.numbers(c)).collect::<Result<Vec<_>>>()?;
            let mut names = vec!["(Intercept)".to_string()];
            names.extend(design.covariates.iter().cloned());
            if cols.is_empty() {
                DesignMatrix::from_columns(&[vec![1.0; y.len()]])?.with_column_names(names)?
            } else {
                DesignMatrix::with_intercept(&cols)?.with_column_names(names)?
            }
        }
    };
    Ok(ModelSpec::new(dm, link, y)?)
}
