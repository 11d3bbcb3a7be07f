use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::envs::EnvConfig;
use crate::error::{Error, Result};
use crate::symmetry::{GroupKind, SymmetrySpec};

pub const DATASET_FORMAT: &str = "symmarl-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    /// Last transition of its episode.
    pub done: bool,
    /// Ended in a terminal state (no bootstrapping from `next_obs`).
    pub terminal: bool,
    pub episode: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub env: EnvConfig,
    /// Generator policy tag, e.g. `expert` or `expert+augmented`.
    pub generator: String,
    pub seed: u64,
    pub episodes: u64,
    /// Fraction of generated episodes that succeeded.
    pub mean_success: f64,
    pub mean_return: f64,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub meta: DatasetMeta,
    spec: Arc<SymmetrySpec>,
    pub transitions: Vec<Transition>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    group: String,
    obs_width: usize,
    act_width: usize,
    transitions: usize,
    meta: DatasetMeta,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    o: String,
    a: String,
    r: String,
    o2: String,
    done: bool,
    terminal: bool,
    episode: u64,
}

fn encode(v: &[f64]) -> String {
    let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode(s: &str, width: usize, path: &Path, line: usize) -> Result<Vec<f64>> {
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason: format!("line {line}: {reason}"),
    };
    let bytes = STANDARD.decode(s).map_err(|e| bad(e.to_string()))?;
    if bytes.len() != 8 * width {
        return Err(bad(format!("expected {width} floats, got {} bytes", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

fn group_name(g: GroupKind) -> String {
    match g {
        GroupKind::Cyclic(n) => format!("cyclic{n}"),
        GroupKind::Reflection => "reflection".into(),
    }
}

impl Dataset {
    pub fn new(meta: DatasetMeta, transitions: Vec<Transition>) -> Result<Self> {
        let spec = Arc::new(meta.env.spec()?);
        let ds = Self { meta, spec, transitions };
        ds.validate()?;
        Ok(ds)
    }

    pub fn spec(&self) -> &Arc<SymmetrySpec> {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Checks widths, finiteness and that every episode ends with `done`.
    pub fn validate(&self) -> Result<()> {
        let (ow, aw) = (self.spec.obs_width(), self.spec.act_width());
        for (k, t) in self.transitions.iter().enumerate() {
            for (v, w, what) in [(&t.obs, ow, "dataset observation"), (&t.next_obs, ow, "dataset next observation"), (&t.action, aw, "dataset action")] {
                if v.len() != w {
                    return Err(Error::Dimension {
                        context: what,
                        expected: w,
                        got: v.len(),
                    });
                }
            }
            if !(t.reward.is_finite() && t.obs.iter().chain(&t.action).chain(&t.next_obs).all(|x| x.is_finite())) {
                return Err(Error::NonFinite {
                    context: "dataset transition",
                    detail: format!("index {k}"),
                });
            }
            if t.terminal && !t.done {
                return Err(Error::Spec(format!("transition {k} is terminal but not done")));
            }
            if let Some(next) = self.transitions.get(k + 1) {
                if (next.episode != t.episode) != t.done {
                    return Err(Error::Spec(format!("episode boundary after transition {k} disagrees with its done flag")));
                }
            } else if !t.done {
                return Err(Error::Spec("the last transition must end its episode".into()));
            }
        }
        Ok(())
    }

    /// Observations stacked into rows.
    pub fn observations(&self) -> Array2<f64> {
        let w = self.spec.obs_width();
        Array2::from_shape_vec((self.len(), w), self.transitions.iter().flat_map(|t| t.obs.iter().copied()).collect()).expect("validated widths")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = BufWriter::new(File::create(path)?);
        let header = Header {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            group: group_name(self.spec.group()),
            obs_width: self.spec.obs_width(),
            act_width: self.spec.act_width(),
            transitions: self.len(),
            meta: self.meta.clone(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for t in &self.transitions {
            let rec = Record {
                o: encode(&t.obs),
                a: encode(&t.action),
                r: encode(&[t.reward]),
                o2: encode(&t.next_obs),
                done: t.done,
                terminal: t.terminal,
                episode: t.episode,
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bad = |reason: String| Error::Format {
            path: path.to_path_buf(),
            reason,
        };
        let mut lines = BufReader::new(File::open(path)?).lines();
        let first = lines.next().ok_or_else(|| bad("empty file".into()))??;
        let header: Header = serde_json::from_str(&first).map_err(|e| bad(format!("header: {e}")))?;
        if header.format != DATASET_FORMAT || header.version != DATASET_VERSION {
            return Err(bad(format!("unsupported format {} v{}", header.format, header.version)));
        }
        let spec = header.meta.env.spec()?;
        if header.obs_width != spec.obs_width() || header.act_width != spec.act_width() || header.group != group_name(spec.group()) {
            return Err(bad("header does not match the environment's symmetry spec".into()));
        }
        let mut transitions = Vec::with_capacity(header.transitions);
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let n = k + 2;
            let rec: Record = serde_json::from_str(&line).map_err(|e| bad(format!("line {n}: {e}")))?;
            transitions.push(Transition {
                obs: decode(&rec.o, header.obs_width, path, n)?,
                action: decode(&rec.a, header.act_width, path, n)?,
                reward: decode(&rec.r, 1, path, n)?[0],
                next_obs: decode(&rec.o2, header.obs_width, path, n)?,
                done: rec.done,
                terminal: rec.terminal,
                episode: rec.episode,
            });
        }
        if transitions.len() != header.transitions {
            return Err(bad(format!("header announces {} transitions, found {}", header.transitions, transitions.len())));
        }
        Dataset::new(header.meta, transitions)
    }
}
