//! Deterministic writers. Floats are printed with 12 significant digits in scientific
//! form; CSV files start with a `# config_sha256=` comment line.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};

pub const SIG_DIGITS: usize = 12;

pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{:.*e}", SIG_DIGITS - 1, x)
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap();
            let r: f64 = num(x).parse().unwrap();
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => {
            Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect())
        }
        v => v,
    }
}

pub struct Writer {
    dir: PathBuf,
    hash: String,
}

impl Writer {
    pub fn new(dir: &str, hash: String) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {dir}"))?;
        Ok(Writer {
            dir: PathBuf::from(dir),
            hash,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// `body` serialized as an object, with `config_hash` added and floats rounded.
    pub fn json<T: Serialize>(&self, name: &str, body: &T) -> Result<PathBuf> {
        let mut obj = match serde_json::to_value(body)? {
            Value::Object(o) => o,
            other => {
                let mut m = Map::new();
                m.insert("result".into(), other);
                m
            }
        };
        obj.insert("config_hash".into(), Value::String(self.hash.clone()));
        let text = serde_json::to_string_pretty(&round_value(Value::Object(obj)))?;
        let p = self.path(name);
        write(&p, format!("{text}\n").as_bytes())?;
        Ok(p)
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let mut buf = format!("# config_sha256={}\n", self.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        let p = self.path(name);
        write(&p, &buf)?;
        Ok(p)
    }
}

fn write(p: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))
}
