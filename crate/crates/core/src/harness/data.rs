//! Banknote CSV ingestion, content digests and a synthetic stand-in with
//! the same shape for machines without the dataset.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::objective::LogRegData;

pub const BANKNOTE_FEATURES: usize = 4;

/// Environment variable naming a Banknote CSV for the experiment suite.
pub const BANKNOTE_ENV: &str = "MINDIFF_BANKNOTE";

/// Seed of the default synthetic stand-in.
pub const SURROGATE_SEED: u64 = 1372;

/// Where the logistic-regression data comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    File(PathBuf),
    /// Synthetic Banknote-shaped data from [`banknote_surrogate_csv`].
    Surrogate { seed: u64 },
}

impl DataSource {
    /// `surrogate`, `surrogate:<seed>` or a path.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "surrogate" {
            return Ok(DataSource::Surrogate {
                seed: SURROGATE_SEED,
            });
        }
        if let Some(seed) = s.strip_prefix("surrogate:") {
            let seed = seed
                .parse()
                .map_err(|_| Error::Config(format!("bad surrogate seed {seed:?}")))?;
            return Ok(DataSource::Surrogate { seed });
        }
        if s.is_empty() {
            return Err(Error::Config("empty dataset path".into()));
        }
        Ok(DataSource::File(PathBuf::from(s)))
    }

    /// The file named by [`BANKNOTE_ENV`] if set, else the default surrogate.
    pub fn from_env() -> Self {
        match std::env::var_os(BANKNOTE_ENV) {
            Some(p) if !p.is_empty() => DataSource::File(PathBuf::from(p)),
            _ => DataSource::Surrogate {
                seed: SURROGATE_SEED,
            },
        }
    }

    pub fn is_surrogate(&self) -> bool {
        matches!(self, DataSource::Surrogate { .. })
    }

    /// Loads the data together with the SHA-256 of the CSV bytes.
    pub fn load(&self) -> Result<(LogRegData, String)> {
        match self {
            DataSource::File(path) => {
                let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
                let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Parse {
                    path: path.clone(),
                    line: 0,
                    message: "not valid UTF-8".into(),
                })?;
                Ok((parse_banknote(&text, path)?, sha256_hex(&bytes)))
            }
            DataSource::Surrogate { seed } => {
                let text = banknote_surrogate_csv(*seed);
                let path = PathBuf::from(format!("<surrogate:{seed}>"));
                Ok((parse_banknote(&text, &path)?, sha256_hex(text.as_bytes())))
            }
        }
    }
}

impl std::fmt::Display for DataSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataSource::File(p) => write!(f, "{}", p.display()),
            DataSource::Surrogate { seed } => write!(f, "surrogate:{seed}"),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads a Banknote CSV: four untransformed feature columns and a class in
/// {0, 1}, with an optional header line.
pub fn load_banknote_csv(path: impl AsRef<Path>) -> Result<LogRegData> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_banknote(&text, path)
}

/// Parses Banknote CSV text. `path` only labels errors.
pub fn parse_banknote(text: &str, path: &Path) -> Result<LogRegData> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut features = Vec::new();
    let mut classes = Vec::new();
    let mut first = true;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        // a header is only recognised on the first non-blank line
        if std::mem::take(&mut first) && fields[0].parse::<f64>().is_err() {
            continue;
        }
        if fields.len() != BANKNOTE_FEATURES + 1 {
            return Err(parse_err(
                line_no,
                format!("expected {} fields, found {}", BANKNOTE_FEATURES + 1, fields.len()),
            ));
        }
        for field in &fields[..BANKNOTE_FEATURES] {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line_no, format!("non-numeric feature {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("non-finite feature {field:?}")));
            }
            features.push(v);
        }
        let class = match fields[BANKNOTE_FEATURES] {
            "0" => 0u8,
            "1" => 1u8,
            other => {
                return Err(parse_err(line_no, format!("class must be 0 or 1, found {other:?}")))
            }
        };
        classes.push(class);
    }
    if classes.is_empty() {
        return Err(Error::NoRecords {
            path: path.to_path_buf(),
        });
    }
    let a = DMatrix::from_row_slice(classes.len(), BANKNOTE_FEATURES, &features);
    LogRegData::from_binary_labels(a, &classes)
}

struct ClassModel {
    count: usize,
    mean: [f64; 4],
    std: [f64; 4],
}

// Per-class moments of the public Banknote table (variance, skewness,
// curtosis, entropy of wavelet-transformed images).
const GENUINE: ClassModel = ClassModel {
    count: 762,
    mean: [2.2767, 4.2566, 0.7967, -1.1477],
    std: [2.0190, 5.1388, 3.2390, 2.1250],
};
const FORGED: ClassModel = ClassModel {
    count: 610,
    mean: [-1.8684, -0.9936, 2.1483, -1.2466],
    std: [1.8812, 5.4043, 5.2612, 2.0709],
};
/// Within-class correlation of skewness and curtosis.
const SKEW_CURT_CORR: f64 = -0.79;

/// Banknote-shaped CSV text: 1372 rows, class-0 block then class-1 block,
/// features drawn from per-class Gaussians matched to the real table's
/// first two moments, printed with five decimals like the original file.
pub fn banknote_surrogate_csv(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::with_capacity(40 * (GENUINE.count + FORGED.count));
    for (class, model) in [(0, &GENUINE), (1, &FORGED)] {
        for _ in 0..model.count {
            let z: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            let curt_z = SKEW_CURT_CORR * z[1] + (1.0 - SKEW_CURT_CORR * SKEW_CURT_CORR).sqrt() * z[2];
            let row = [
                model.mean[0] + model.std[0] * z[0],
                model.mean[1] + model.std[1] * z[1],
                model.mean[2] + model.std[2] * curt_z,
                model.mean[3] + model.std[3] * z[3],
            ];
            for v in row {
                let _ = write!(out, "{v:.5},");
            }
            let _ = writeln!(out, "{class}");
        }
    }
    out
}
