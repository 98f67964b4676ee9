//! Versioned JSON reports with fixed key order and 17-significant-digit
//! numbers, so identical inputs give byte-identical files.

use sha2::{Digest, Sha256};

pub const SCHEMA: &str = "ewgeo-report/1";

/// Where a reported number comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// A published reference value, reproduced for comparison.
    Published,
    /// An exact or deterministic value derived independently of the sampler.
    DerivedOracle,
    /// A Monte Carlo estimate.
    Estimate,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::Published => "published",
            Provenance::DerivedOracle => "derived-oracle",
            Provenance::Estimate => "estimate",
        }
    }
}

/// Ordered JSON value.
#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn obj<K: Into<String>>(pairs: impl IntoIterator<Item = (K, Json)>) -> Json {
        Json::Obj(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn str(s: impl Into<String>) -> Json {
        Json::Str(s.into())
    }

    pub fn nums(xs: &[f64]) -> Json {
        Json::Arr(xs.iter().map(|&x| Json::Num(x)).collect())
    }

    pub fn uint(x: u64) -> Json {
        Json::Int(x as i64)
    }

    pub fn opt(x: Option<f64>) -> Json {
        x.map_or(Json::Null, Json::Num)
    }

    /// `{"value": x, "provenance": …}`.
    pub fn claim(x: f64, p: Provenance) -> Json {
        Json::obj([("value", Json::Num(x)), ("provenance", Json::str(p.label()))])
    }

    pub fn get(&self, key: &str) -> Option<&Json> {
        match self {
            Json::Obj(kv) => kv.iter().find(|(k, _)| k == key).map(|(_, v)| v),
            _ => None,
        }
    }

    pub fn push(&mut self, key: &str, v: Json) {
        if let Json::Obj(kv) = self {
            kv.push((key.to_string(), v));
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => out.push_str(&i.to_string()),
            Json::Num(x) => out.push_str(&format_number(*x)),
            Json::Str(s) => out.push_str(&serde_json::to_string(s).expect("string serialization")),
            Json::Arr(xs) => {
                if xs.iter().all(|x| !matches!(x, Json::Arr(_) | Json::Obj(_))) {
                    out.push('[');
                    for (i, x) in xs.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        x.write(out, indent);
                    }
                    out.push(']');
                    return;
                }
                out.push_str("[\n");
                for (i, x) in xs.iter().enumerate() {
                    pad(out, indent + 1);
                    x.write(out, indent + 1);
                    out.push_str(if i + 1 < xs.len() { ",\n" } else { "\n" });
                }
                pad(out, indent);
                out.push(']');
            }
            Json::Obj(kv) => {
                if kv.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push_str("{\n");
                for (i, (k, v)) in kv.iter().enumerate() {
                    pad(out, indent + 1);
                    out.push_str(&serde_json::to_string(k).expect("key serialization"));
                    out.push_str(": ");
                    v.write(out, indent + 1);
                    out.push_str(if i + 1 < kv.len() { ",\n" } else { "\n" });
                }
                pad(out, indent);
                out.push('}');
            }
        }
    }
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

/// 17 significant digits in exponent form; non-finite values become `null`.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Assembles `{schema, kind, config, config_digest, results, digest}`.
///
/// `config_digest` hashes the rendered config; `digest` hashes everything
/// before it.
pub fn build_report(kind: &str, config: Json, results: Json) -> Json {
    let config_digest = sha256_hex(config.render().as_bytes());
    let mut body = Json::obj([
        ("schema", Json::str(SCHEMA)),
        ("kind", Json::str(kind)),
        ("config", config),
        ("config_digest", Json::str(format!("sha256:{config_digest}"))),
        ("results", results),
    ]);
    let digest = sha256_hex(body.render().as_bytes());
    body.push("digest", Json::str(format!("sha256:{digest}")));
    body
}
