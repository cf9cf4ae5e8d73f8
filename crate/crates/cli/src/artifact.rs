//! Output directory handling. Every artifact carries the resolved run config;
//! wall-clock timestamps go only to `run.log`.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{Map, Value};

use phid_core::headscore::PairStrategy;
use phid_core::infodyn::{Estimator, Unit};
use phid_core::traces::container;
use phid_core::{Error, Result};

pub const LOG_FILE: &str = "run.log";
/// Prefix of the first line of every CSV artifact.
pub const CSV_CONFIG_PREFIX: &str = "# run_config=";

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub tool_version: String,
    pub subcommand: String,
    pub inputs: Vec<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub estimator: Estimator,
    pub lag: usize,
    /// `None` for commands that never pair heads.
    pub pairs: Option<PairStrategy>,
    pub units: Unit,
    pub threads: usize,
    /// Subcommand-specific options after defaults are applied.
    pub options: Value,
}

pub struct OutDir {
    dir: PathBuf,
    config: Value,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Numerical(format!("cannot serialise output: {e}"))
}

impl OutDir {
    pub fn create(config: &RunConfig) -> Result<Self> {
        let dir = config.out.clone();
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let probe = dir.join(LOG_FILE);
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&probe)
            .map_err(io_err(&probe))?;
        Ok(Self {
            dir,
            config: serde_json::to_value(config).map_err(json_err)?,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn config(&self) -> &Value {
        &self.config
    }

    /// Append a timestamped line to the sidecar log.
    pub fn log(&self, msg: &str) -> Result<()> {
        let path = self.path(LOG_FILE);
        let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        writeln!(f, "[{}.{:03}] {msg}", now.as_secs(), now.subsec_millis()).map_err(io_err(&path))
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, bytes).map_err(io_err(&path))?;
        self.log(&format!("wrote {}", path.display()))?;
        Ok(path)
    }

    /// CSV body produced by `body`, preceded by the config comment line.
    pub fn write_csv(&self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
        let mut buf = format!("{CSV_CONFIG_PREFIX}{}\n", self.config).into_bytes();
        body(&mut buf)?;
        self.write(name, &buf)
    }

    /// Rows of serialisable records through the `csv` crate.
    pub fn write_records<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<PathBuf> {
        self.write_csv(name, |buf| {
            let mut w = csv::Writer::from_writer(buf);
            for r in rows {
                w.serialize(r)
                    .map_err(|e| Error::Numerical(format!("cannot write {name}: {e}")))?;
            }
            w.flush().map_err(|e| Error::io(name, e))
        })
    }

    /// A JSON object with `run_config` added as a top-level key.
    pub fn write_json(&self, name: &str, value: impl Serialize) -> Result<PathBuf> {
        let mut obj = match serde_json::to_value(value).map_err(json_err)? {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("result".into(), other);
                m
            }
        };
        obj.insert("run_config".into(), self.config.clone());
        let mut text = serde_json::to_string_pretty(&Value::Object(obj)).map_err(json_err)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// An SVG document with the config in a `<metadata>` element.
    pub fn write_svg(&self, name: &str, svg: &str) -> Result<PathBuf> {
        let meta = format!("<metadata>{}</metadata>\n", xml_escape(&self.config.to_string()));
        let out = match svg.find('>') {
            Some(end) if svg.starts_with("<svg") => format!("{}\n{meta}{}", &svg[..=end], svg[end + 1..].trim_start_matches('\n')),
            _ => return Err(Error::Validation("renderer produced a non-SVG document".into())),
        };
        self.write(name, out.as_bytes())
    }

    /// A `PHID` container with `run_config` added to its header.
    pub fn write_container(&self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let (header, payload) = container::split(bytes)?;
        let Value::Object(mut header) = header else {
            return Err(Error::Validation("container header is not an object".into()));
        };
        header.insert("run_config".into(), self.config.clone());
        let values = container::payload_f32(payload, payload.len() / 4)?;
        self.write(name, &container::encode(&Value::Object(header), values))
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// The config recorded in the first line of a CSV artifact, if any.
pub fn csv_run_config(text: &str) -> Option<Value> {
    let line = text.lines().next()?.strip_prefix(CSV_CONFIG_PREFIX)?;
    serde_json::from_str(line).ok()
}
