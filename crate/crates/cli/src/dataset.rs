//! Covariate-tagged complete rankings.
//!
//! CSV layout: a header row, the covariate columns in schema order, then
//! `r1..rp` where `r_i` is the rank given to item `i`. The word
//! `(r1, …, rp)` is read as a permutation in one-line notation and stored
//! under its lexicographic index (`1 2 … p` is index 1).

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use aprank::permutation::{rank, unrank};
use aprank::{PermIndex, Permutation, RankCounts};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub levels: Vec<String>,
}

/// Sidecar schema: number of items and the ordered covariate factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub items: usize,
    #[serde(default)]
    pub factors: Vec<Factor>,
}

impl Schema {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading schema {}", path.display()))?;
        let schema: Schema = toml::from_str(&text).with_context(|| format!("parsing schema {}", path.display()))?;
        schema.validate()?;
        Ok(schema)
    }

    /// One factor `category` with levels `c1..cg`.
    pub fn plain(items: usize, categories: usize) -> Self {
        Schema {
            items,
            factors: vec![Factor {
                name: "category".into(),
                levels: (1..=categories).map(|j| format!("c{j}")).collect(),
            }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.items == 0 || self.items > aprank::permutation::MAX_ITEMS {
            bail!("schema: items = {} outside 1..={}", self.items, aprank::permutation::MAX_ITEMS);
        }
        for f in &self.factors {
            if f.levels.is_empty() {
                bail!("schema: factor {:?} has no levels", f.name);
            }
            let mut seen = HashMap::new();
            for l in &f.levels {
                if seen.insert(l.as_str(), ()).is_some() {
                    bail!("schema: factor {:?} lists level {l:?} twice", f.name);
                }
            }
        }
        Ok(())
    }

    pub fn categories(&self) -> usize {
        self.factors.iter().map(|f| f.levels.len()).product()
    }

    /// Mixed-radix position of a level tuple; the first factor varies slowest.
    pub fn category_of(&self, levels: &[usize]) -> usize {
        self.factors
            .iter()
            .zip(levels)
            .fold(0, |acc, (f, &l)| acc * f.levels.len() + l)
    }

    pub fn levels_of(&self, mut category: usize) -> Vec<&str> {
        let mut out = vec![""; self.factors.len()];
        for (i, f) in self.factors.iter().enumerate().rev() {
            out[i] = &f.levels[category % f.levels.len()];
            category /= f.levels.len();
        }
        out
    }

    fn header(&self) -> Vec<String> {
        self.factors
            .iter()
            .map(|f| f.name.clone())
            .chain((1..=self.items).map(|i| format!("r{i}")))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub counts: RankCounts,
}

pub fn load_dataset(path: &Path, schema: &Schema) -> Result<Dataset> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("opening data file {}", path.display()))?;
    let expected = schema.header();
    let header: Vec<String> = reader
        .headers()
        .with_context(|| format!("reading header of {}", path.display()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != expected {
        bail!("header {header:?} does not match schema columns {expected:?}");
    }
    let lookups: Vec<HashMap<&str, usize>> = schema
        .factors
        .iter()
        .map(|f| f.levels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect())
        .collect();
    let p = schema.items;
    let nf = schema.factors.len();
    let size = aprank::permutation::factorial(p);
    let mut counts = vec![vec![0u64; size]; schema.categories()];
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.with_context(|| format!("row {row}: malformed record"))?;
        if rec.len() != nf + p {
            bail!("row {row}: expected {} columns, found {}", nf + p, rec.len());
        }
        let mut levels = Vec::with_capacity(nf);
        for (f, lookup) in lookups.iter().enumerate() {
            let v = &rec[f];
            match lookup.get(v) {
                Some(&l) => levels.push(l),
                None => bail!("row {row}: unknown level {v:?} for factor {:?}", schema.factors[f].name),
            }
        }
        let word = (nf..nf + p)
            .map(|c| {
                rec[c]
                    .parse::<u8>()
                    .with_context(|| format!("row {row}: rank {:?} is not a positive integer", &rec[c]))
            })
            .collect::<Result<Vec<u8>>>()?;
        let perm = Permutation::new(word.clone())
            .map_err(|_| anyhow::anyhow!("row {row}: ranking {word:?} is not a permutation of 1..={p}"))?;
        counts[schema.category_of(&levels)][rank(&perm).get() - 1] += 1;
    }
    Ok(Dataset {
        counts: RankCounts::new(p, counts)?,
    })
}

/// Writes one row per observation, grouped by category and ranking index.
pub fn export_dataset(path: &Path, schema: &Schema, counts: &RankCounts) -> Result<()> {
    if counts.categories() != schema.categories() || counts.items() != schema.items {
        bail!(
            "counts have g = {}, p = {}; schema has g = {}, p = {}",
            counts.categories(),
            counts.items(),
            schema.categories(),
            schema.items
        );
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(schema.header())?;
    for j in 0..counts.categories() {
        let levels = schema.levels_of(j);
        for (k, &n) in counts.category(j).iter().enumerate() {
            if n == 0 {
                continue;
            }
            let perm = unrank(PermIndex::new(k + 1)?, schema.items)?;
            let mut rec: Vec<String> = levels.iter().map(|s| s.to_string()).collect();
            rec.extend(perm.images().iter().map(|v| v.to_string()));
            for _ in 0..n {
                w.write_record(&rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_schema(path: &Path, schema: &Schema) -> Result<()> {
    let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(toml::to_string(schema)?.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sushi() -> Schema {
        Schema {
            items: 4,
            factors: vec![
                Factor {
                    name: "gender".into(),
                    levels: vec!["M".into(), "F".into()],
                },
                Factor {
                    name: "region".into(),
                    levels: vec!["east".into(), "west".into()],
                },
                Factor {
                    name: "age".into(),
                    levels: (1..=6).map(|a| format!("a{a}")).collect(),
                },
            ],
        }
    }

    #[test]
    fn category_positions_are_lexicographic() {
        let s = sushi();
        assert_eq!(s.categories(), 24);
        assert_eq!(s.category_of(&[0, 0, 0]), 0);
        assert_eq!(s.category_of(&[0, 0, 5]), 5);
        assert_eq!(s.category_of(&[0, 1, 0]), 6);
        assert_eq!(s.category_of(&[1, 1, 5]), 23);
        for j in 0..24 {
            let names = s.levels_of(j);
            let idx: Vec<usize> = s
                .factors
                .iter()
                .zip(&names)
                .map(|(f, n)| f.levels.iter().position(|l| l == n).unwrap())
                .collect();
            assert_eq!(s.category_of(&idx), j);
        }
    }

    #[test]
    fn small_file_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        fs::write(&path, "group,r1,r2\nA,1,2\nB,2,1\n").unwrap();
        let schema = Schema {
            items: 2,
            factors: vec![Factor {
                name: "group".into(),
                levels: vec!["A".into(), "B".into()],
            }],
        };
        let d = load_dataset(&path, &schema).unwrap();
        assert_eq!(d.counts.rows(), &[vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn bad_rows_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let schema = Schema {
            items: 3,
            factors: vec![Factor {
                name: "g".into(),
                levels: vec!["x".into()],
            }],
        };
        let cases = [
            ("g,r1,r2,r3\nx,1,2,3\nx,1,1,3\n", "row 2"),
            ("g,r1,r2,r3\ny,1,2,3\n", "row 1: unknown level"),
            ("g,r1,r2,r3\nx,1,2,3\nx,1,2,3\nx,1,2\n", "row 3: expected 4 columns"),
            ("g,r1,r2,r3\nx,1,two,3\n", "row 1"),
        ];
        for (i, (text, needle)) in cases.iter().enumerate() {
            let path = dir.path().join(format!("bad{i}.csv"));
            fs::write(&path, text).unwrap();
            let err = format!("{:#}", load_dataset(&path, &schema).unwrap_err());
            assert!(err.contains(needle), "{err}");
        }
    }

    #[test]
    fn export_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = sushi();
        let counts = RankCounts::new(4, (0..24).map(|j| (0..24).map(|k| ((j * 7 + k * 3) % 5) as u64).collect()).collect())
            .unwrap();
        let path = dir.path().join("out.csv");
        export_dataset(&path, &s, &counts).unwrap();
        let back = load_dataset(&path, &s).unwrap();
        assert_eq!(back.counts, counts);
    }
}
