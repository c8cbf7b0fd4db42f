//! Output files. Every file carries the config hash and the seed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
}

/// Full-precision decimal (17 significant digits).
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct OutputDir {
    root: PathBuf,
    provenance: Provenance,
}

impl OutputDir {
    pub fn create(root: PathBuf, provenance: Provenance) -> Result<Self> {
        std::fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root, provenance })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// CSV with a leading `# config_sha256=… seed=…` comment line.
    pub fn csv<I>(&self, name: &str, header: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.path(name);
        let mut file = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        writeln!(
            file,
            "# config_sha256={} seed={}",
            self.provenance.config_sha256, self.provenance.seed
        )?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(path)
    }

    /// Pretty JSON object with `config_sha256` and `seed` added at the top level.
    pub fn json(&self, name: &str, body: &impl Serialize) -> Result<PathBuf> {
        let path = self.path(name);
        let mut value = serde_json::to_value(body)?;
        let map = value.as_object_mut().context("JSON report body must be an object")?;
        map.insert("config_sha256".into(), self.provenance.config_sha256.clone().into());
        map.insert("seed".into(), self.provenance.seed.into());
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &value)?;
        Ok(path)
    }
}

/// Reads a measure CSV: `#` lines are comments, the first record is a header,
/// a column named `weight` (if any) holds masses, all other columns are
/// coordinates. Without a weight column the measure is uniform.
pub fn read_measure(path: &Path) -> Result<mflab::transport::DiscreteMeasure> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let header = reader.headers()?.clone();
    let weight_col = header.iter().position(|h| h == "weight");
    let dim = header.len() - usize::from(weight_col.is_some());
    anyhow::ensure!(dim > 0, "{}: no coordinate columns", path.display());
    let (mut points, mut weights) = (Vec::new(), Vec::new());
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .with_context(|| format!("{}: record {}: `{field}` is not a number", path.display(), line + 1))?;
            if Some(c) == weight_col {
                weights.push(v);
            } else {
                points.push(v);
            }
        }
    }
    let n = points.len() / dim;
    if weight_col.is_none() {
        weights = vec![1.0 / n.max(1) as f64; n];
    }
    Ok(mflab::transport::DiscreteMeasure::with_masses(dim, points, weights)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
    }

    #[test]
    fn measure_csv_with_and_without_weights() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        std::fs::write(&a, "# cloud\nx,y\n0,1\n2,3\n").unwrap();
        let m = read_measure(&a).unwrap();
        assert_eq!((m.len(), m.dim()), (2, 2));
        assert_eq!(m.weights(), &[0.5, 0.5]);
        let b = dir.path().join("b.csv");
        std::fs::write(&b, "weight,x\n0.25,1\n0.75,-1\n").unwrap();
        let m = read_measure(&b).unwrap();
        assert_eq!(m.points(), &[1.0, -1.0]);
        assert_eq!(m.weights(), &[0.25, 0.75]);
        std::fs::write(&b, "x\nabc\n").unwrap();
        assert!(read_measure(&b).is_err());
    }
}
