//! JSON artifacts: a payload plus a manifest carrying its content hash and
//! how it was produced. Integers that must survive a round trip exactly
//! (fixed-point table entries, seeds) are written as decimal strings.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lut::{Lut, Precision, QuantParams};
use crate::net::{FinalizedNet, ReluNet1H};
use crate::targets::{TargetKind, TargetSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    Net,
    Lut,
    Composite,
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: Vec<String>,
    /// Decimal string.
    pub seed: Option<String>,
    pub toolkit_version: String,
    /// Content hashes of the artifacts this one was derived from.
    pub parents: Vec<String>,
}

impl Provenance {
    pub fn new(command: Vec<String>, seed: Option<u64>, parents: Vec<String>) -> Self {
        Self {
            command,
            seed: seed.map(|s| s.to_string()),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            parents,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub kind: ArtifactKind,
    /// Hex SHA-256 of the payload's JSON encoding.
    pub content_hash: String,
    pub provenance: Provenance,
    #[serde(default)]
    pub notes: Vec<String>,
}

pub trait Payload: Serialize + DeserializeOwned {
    const KIND: ArtifactKind;

    /// Semantic validation after loading.
    fn check(&self) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: DeserializeOwned"))]
pub struct Artifact<T> {
    pub manifest: Manifest,
    pub payload: T,
}

pub fn content_hash<T: Serialize>(payload: &T) -> Result<String> {
    let bytes = serde_json::to_vec(payload)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl<T: Payload> Artifact<T> {
    pub fn new(payload: T, provenance: Provenance, notes: Vec<String>) -> Result<Self> {
        payload.check()?;
        Ok(Self {
            manifest: Manifest {
                schema_version: SCHEMA_VERSION,
                kind: T::KIND,
                content_hash: content_hash(&payload)?,
                provenance,
                notes,
            },
            payload,
        })
    }

    pub fn hash(&self) -> &str {
        &self.manifest.content_hash
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and verifies schema version, kind, hash and payload.
    pub fn from_json(text: &str) -> Result<Self> {
        let art: Self = serde_json::from_str(text)?;
        let m = &art.manifest;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                m.schema_version
            )));
        }
        if m.kind != T::KIND {
            return Err(Error::Parse(format!(
                "expected a {:?} artifact, found {:?}",
                T::KIND,
                m.kind
            )));
        }
        let actual = content_hash(&art.payload)?;
        if actual != m.content_hash {
            return Err(Error::Parse(format!(
                "content hash mismatch: manifest {} but payload hashes to {actual}",
                m.content_hash
            )));
        }
        art.payload.check()?;
        Ok(art)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            Error::Json(err) => Error::Parse(format!("{}: {err}", path.display())),
            other => other,
        })
    }
}

/// A trained network in finalized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetDoc {
    pub spec: TargetSpec,
    pub n: Vec<f64>,
    pub b: Vec<f64>,
    pub m: Vec<f64>,
    pub folded_constant: f64,
    /// Mean training loss of the stored parameters.
    pub final_loss: f64,
}

impl NetDoc {
    pub fn new(spec: TargetSpec, fin: &FinalizedNet, final_loss: f64) -> Self {
        Self {
            spec,
            n: fin.net.n.clone(),
            b: fin.net.b.clone(),
            m: fin.net.m.clone(),
            folded_constant: fin.folded_constant,
            final_loss,
        }
    }

    pub fn finalized(&self) -> FinalizedNet {
        FinalizedNet {
            net: ReluNet1H {
                n: self.n.clone(),
                b: self.b.clone(),
                m: self.m.clone(),
            },
            folded_constant: self.folded_constant,
        }
    }
}

impl Payload for NetDoc {
    const KIND: ArtifactKind = ArtifactKind::Net;

    fn check(&self) -> Result<()> {
        let h = self.n.len();
        if self.b.len() != h || self.m.len() != h {
            return Err(Error::Parse("net vectors differ in length".into()));
        }
        if self
            .n
            .iter()
            .chain(&self.b)
            .chain(&self.m)
            .chain([&self.folded_constant])
            .any(|v| !v.is_finite())
        {
            return Err(Error::Parse("net has a non-finite parameter".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantDoc {
    pub s_in: f64,
    pub s_slope: f64,
    pub s_out: f64,
    pub int_breakpoints: Vec<String>,
    pub int_slopes: Vec<String>,
    pub int_intercepts: Vec<String>,
}

fn to_decimal(v: &[i32]) -> Vec<String> {
    v.iter().map(i32::to_string).collect()
}

fn from_decimal(v: &[String], field: &str) -> Result<Vec<i32>> {
    v.iter()
        .map(|s| {
            s.parse::<i32>()
                .map_err(|e| Error::Parse(format!("{field}: '{s}' is not a 32-bit integer ({e})")))
        })
        .collect()
}

/// A lookup table as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LutDoc {
    /// Function the table approximates, when known.
    pub function: Option<TargetKind>,
    pub precision: Precision,
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
    pub intercepts: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quant: Option<QuantDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl LutDoc {
    pub fn new(function: Option<TargetKind>, lut: &Lut) -> Self {
        Self {
            function,
            precision: lut.precision(),
            breakpoints: lut.breakpoints().to_vec(),
            slopes: lut.slopes().to_vec(),
            intercepts: lut.intercepts().to_vec(),
            quant: lut.quant().map(|q| QuantDoc {
                s_in: q.s_in,
                s_slope: q.s_slope,
                s_out: q.s_out,
                int_breakpoints: to_decimal(&q.int_breakpoints),
                int_slopes: to_decimal(&q.int_slopes),
                int_intercepts: to_decimal(&q.int_intercepts),
            }),
            warnings: lut.warnings().to_vec(),
        }
    }

    pub fn to_lut(&self) -> Result<Lut> {
        let quant = match &self.quant {
            None => None,
            Some(q) => Some(QuantParams {
                s_in: q.s_in,
                s_slope: q.s_slope,
                s_out: q.s_out,
                int_breakpoints: from_decimal(&q.int_breakpoints, "int_breakpoints")?,
                int_slopes: from_decimal(&q.int_slopes, "int_slopes")?,
                int_intercepts: from_decimal(&q.int_intercepts, "int_intercepts")?,
            }),
        };
        Lut::from_parts(
            self.breakpoints.clone(),
            self.slopes.clone(),
            self.intercepts.clone(),
            self.precision,
            quant,
            self.warnings.clone(),
        )
    }
}

impl Payload for LutDoc {
    const KIND: ArtifactKind = ArtifactKind::Lut;

    fn check(&self) -> Result<()> {
        self.to_lut().map(drop)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompositeOp {
    Softmax,
    Layernorm,
    Gelu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LutRef {
    /// `exp`, `div`, `rsqrt` or `gelu`.
    pub role: String,
    pub hash: String,
    pub path: String,
}

/// An operator bundle that references its tables by content hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeDoc {
    pub op: CompositeOp,
    pub luts: Vec<LutRef>,
    /// Upper bound of the rsqrt table's trained range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rsqrt_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_log2: Option<u32>,
}

impl Payload for CompositeDoc {
    const KIND: ArtifactKind = ArtifactKind::Composite;
}

/// Generic report payload: a label and a JSON body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub what: String,
    pub body: serde_json::Value,
}

impl Payload for ReportDoc {
    const KIND: ArtifactKind = ArtifactKind::Report;
}

/// Loads a table artifact and checks it against an expected hash.
pub fn load_lut_checked(path: &Path, expected_hash: &str) -> Result<Artifact<LutDoc>> {
    let art = Artifact::<LutDoc>::read(path)?;
    if art.hash() != expected_hash {
        return Err(Error::Parse(format!(
            "{} has hash {} but the bundle expects {expected_hash}",
            path.display(),
            art.hash()
        )));
    }
    Ok(art)
}
