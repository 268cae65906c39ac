//! Artifact writers and the trace reader. Floats are written with `{:?}`,
//! which round-trips exactly, so stored traces reproduce in-memory results.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use aprank::oracle::TransitionMatrix;
use aprank::permutation::unrank;
use aprank::samplers::{ChainTrace, TraceRecord, Variant};
use aprank::{CentralRanks, PermIndex};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Output directory plus the list of files written so far.
pub struct OutDir {
    pub root: PathBuf,
    pub files: Vec<String>,
}

impl OutDir {
    pub fn create(root: PathBuf) -> Result<Self> {
        fs::create_dir_all(&root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(OutDir { root, files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn record(&mut self, name: &str) {
        self.files.push(name.to_string());
    }
}

/// Ordered `key = value` lines.
#[derive(Default)]
pub struct Summary(String);

impl Summary {
    pub fn put(&mut self, key: &str, value: impl std::fmt::Debug) -> &mut Self {
        let _ = writeln!(self.0, "{key} = {value:?}");
        self
    }

    pub fn text(&self) -> &str {
        &self.0
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct Manifest<'a> {
    manifest: ManifestHead<'a>,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct ManifestHead<'a> {
    command: &'a str,
    seed: u64,
    config_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    data_sha256: Option<String>,
    version: &'a str,
    outputs: &'a [String],
}

/// `manifest.toml`: the resolved config (loadable with `--config`), its hash,
/// the seed, and a hash of the input data file.
pub fn write_manifest(out: &mut OutDir, command: &str, config: &RunConfig) -> Result<()> {
    let resolved = toml::to_string(config)?;
    let data_sha256 = match &config.data.path {
        Some(p) => Some(sha256_hex(&fs::read(p).with_context(|| format!("hashing {}", p.display()))?)),
        None => None,
    };
    let files = out.files.clone();
    let m = Manifest {
        manifest: ManifestHead {
            command,
            seed: config.seed,
            config_sha256: sha256_hex(resolved.as_bytes()),
            data_sha256,
            version: env!("CARGO_PKG_VERSION"),
            outputs: &files,
        },
        config,
    };
    out.write("manifest.toml", &toml::to_string(&m)?)
}

/// Words of the joint states, in the order rows and columns are stored.
fn state_words(size: usize, categories: usize, p: usize) -> Result<Vec<String>> {
    let count = size.pow(categories as u32);
    (0..count)
        .map(|s| {
            let ranks = aprank::oracle::state_ranks(s, categories, size);
            let words = ranks
                .ranks()
                .iter()
                .map(|&k| Ok(word(k, p)?))
                .collect::<Result<Vec<_>>>()?;
            Ok(format!("({})", words.join(",")))
        })
        .collect()
}

pub fn word(k: PermIndex, p: usize) -> Result<String> {
    Ok(unrank(k, p)?.images().iter().map(|v| v.to_string()).collect())
}

/// Header comment naming the state order, one line per state.
pub fn state_order_comment(size: usize, categories: usize, p: usize) -> Result<String> {
    let mut s = String::from(
        "# joint states of (pi_1, ..., pi_g), pi_1 slowest; each pi_j is the one-line word of its lexicographic index\n",
    );
    for (i, w) in state_words(size, categories, p)?.iter().enumerate() {
        let _ = writeln!(s, "# state {} = {w}", i + 1);
    }
    Ok(s)
}

pub fn matrix_csv(k: &TransitionMatrix, p: usize) -> Result<String> {
    let mut s = state_order_comment(k.size(), k.categories(), p)?;
    for i in 0..k.dim() {
        let row: Vec<String> = (0..k.dim()).map(|j| format!("{:?}", k.get(i, j))).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    Ok(s)
}

pub fn vector_csv(header: &str, values: &[f64], comment: &str) -> String {
    let mut s = comment.to_string();
    let _ = writeln!(s, "index,{header}");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(s, "{},{v:?}", i + 1);
    }
    s
}

/// Trace CSV: a metadata comment, then `iteration,accepted,theta_1..,pi_1..`.
pub fn write_trace(path: &Path, trace: &ChainTrace) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(
        f,
        "# variant={} size={} categories={} steps={} accepted_moves={}",
        trace.variant, trace.size, trace.categories, trace.steps, trace.accepted_moves
    )?;
    let mut w = csv::Writer::from_writer(f);
    let mut header = vec!["iteration".to_string(), "accepted".to_string()];
    header.extend((1..=trace.size).map(|k| format!("theta_{k}")));
    header.extend((1..=trace.categories).map(|j| format!("pi_{j}")));
    w.write_record(&header)?;
    for r in &trace.records {
        let mut rec = vec![r.iteration.to_string(), (r.accepted as u8).to_string()];
        rec.extend(r.theta.iter().map(|t| format!("{t:?}")));
        rec.extend(r.pi.ranks().iter().map(|k| k.get().to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<ChainTrace> {
    let file = fs::File::open(path).with_context(|| format!("opening trace {}", path.display()))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let meta = first
        .strip_prefix("# ")
        .with_context(|| format!("{}: missing metadata line", path.display()))?;
    let mut variant = None;
    let (mut size, mut categories, mut steps, mut accepted_moves) = (None, None, None, None);
    for kv in meta.split_whitespace() {
        let (k, v) = kv.split_once('=').with_context(|| format!("bad metadata field {kv:?}"))?;
        match k {
            "variant" => variant = Some(v.parse::<Variant>()?),
            "size" => size = Some(v.parse::<usize>()?),
            "categories" => categories = Some(v.parse::<usize>()?),
            "steps" => steps = Some(v.parse::<u64>()?),
            "accepted_moves" => accepted_moves = Some(v.parse::<u64>()?),
            _ => {}
        }
    }
    let (Some(variant), Some(size), Some(categories), Some(steps), Some(accepted_moves)) =
        (variant, size, categories, steps, accepted_moves)
    else {
        bail!("{}: incomplete metadata line", path.display());
    };
    let mut rdr = csv::Reader::from_reader(reader);
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.with_context(|| format!("{} row {row}", path.display()))?;
        if rec.len() != 2 + size + categories {
            bail!("{} row {row}: expected {} columns", path.display(), 2 + size + categories);
        }
        let parse_err = || format!("{} row {row}: unparsable value", path.display());
        let theta = (2..2 + size)
            .map(|c| rec[c].parse::<f64>().with_context(parse_err))
            .collect::<Result<Vec<_>>>()?;
        let pi = (2 + size..2 + size + categories)
            .map(|c| Ok(PermIndex::new(rec[c].parse::<usize>().with_context(parse_err)?)?))
            .collect::<Result<Vec<_>>>()?;
        records.push(TraceRecord {
            iteration: rec[0].parse().with_context(parse_err)?,
            accepted: &rec[1] == "1",
            theta,
            pi: CentralRanks::new(pi),
        });
    }
    Ok(ChainTrace {
        variant,
        size,
        categories,
        records,
        accepted_moves,
        steps,
    })
}

/// `trace_0.csv`, `trace_1.csv`, … in chain order.
pub fn find_traces(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for c in 0.. {
        let p = dir.join(format!("trace_{c}.csv"));
        if !p.exists() {
            break;
        }
        found.push(p);
    }
    if found.is_empty() {
        bail!("no trace_0.csv in {}", dir.display());
    }
    Ok(found)
}
