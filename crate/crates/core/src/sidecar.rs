//! Metadata stored next to every pseudo-text, shared by the baseline
//! generators and externally trained models.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::RawText;
use crate::error::{Error, Result};
use crate::output::write_atomic;

/// Suffix appended to the text path.
pub const SIDECAR_SUFFIX: &str = ".meta.json";

/// `{generator, params, seed, length}` for baseline generators,
/// `{model, epoch, seed, length, cross_entropy}` for trained models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoTextMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_entropy: Option<f64>,
    pub seed: u64,
    /// Characters in the text.
    pub length: u64,
    /// Fields this version does not interpret, kept on rewrite.
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl PseudoTextMeta {
    pub fn generator(name: impl Into<String>, params: serde_json::Value, seed: u64, length: u64) -> Self {
        Self {
            generator: Some(name.into()),
            params: Some(params),
            model: None,
            epoch: None,
            cross_entropy: None,
            seed,
            length,
            extra: BTreeMap::new(),
        }
    }

    pub fn model(name: impl Into<String>, epoch: u64, seed: u64, length: u64, cross_entropy: f64) -> Self {
        Self {
            generator: None,
            params: None,
            model: Some(name.into()),
            epoch: Some(epoch),
            cross_entropy: Some(cross_entropy),
            seed,
            length,
            extra: BTreeMap::new(),
        }
    }

    /// Name of whatever produced the text.
    pub fn source(&self) -> Option<&str> {
        self.generator.as_deref().or(self.model.as_deref())
    }

    pub fn validate(&self) -> Result<()> {
        if self.source().is_none() {
            return Err(Error::InvalidArgument("sidecar names neither a generator nor a model".into()));
        }
        if let Some(ce) = self.cross_entropy.filter(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("cross entropy {ce} is not finite")));
        }
        Ok(())
    }

    /// The recorded length must match the text.
    pub fn check_text(&self, text: &RawText) -> Result<()> {
        if self.length != text.len() as u64 {
            return Err(Error::InvalidArgument(format!(
                "sidecar length {} does not match text length {}",
                self.length,
                text.len()
            )));
        }
        Ok(())
    }
}

pub fn sidecar_path(text_path: &Path) -> PathBuf {
    let mut s = text_path.as_os_str().to_owned();
    s.push(SIDECAR_SUFFIX);
    PathBuf::from(s)
}

pub fn read_sidecar(text_path: &Path) -> Result<PseudoTextMeta> {
    let path = sidecar_path(text_path);
    let bytes = std::fs::read(&path).map_err(|e| Error::file(&path, e))?;
    let meta: PseudoTextMeta = serde_json::from_slice(&bytes)?;
    meta.validate()?;
    Ok(meta)
}

/// Reads the sidecar if one exists.
pub fn find_sidecar(text_path: &Path) -> Result<Option<PseudoTextMeta>> {
    if sidecar_path(text_path).is_file() {
        read_sidecar(text_path).map(Some)
    } else {
        Ok(None)
    }
}

pub fn write_sidecar(text_path: &Path, meta: &PseudoTextMeta) -> Result<()> {
    meta.validate()?;
    let mut json = serde_json::to_vec_pretty(meta)?;
    json.push(b'\n');
    write_atomic(&sidecar_path(text_path), &json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_shape() {
        let m = PseudoTextMeta::generator("monkey", serde_json::json!({"n": 26, "q": 0.2}), 7, 100);
        let v = serde_json::to_value(&m).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, vec!["generator", "length", "params", "seed"]);
    }

    #[test]
    fn model_shape_parses() {
        let raw = r#"{"model":"lstm-3x256","epoch":51,"seed":1,"length":2000000,"cross_entropy":1.42,"batch":128}"#;
        let m: PseudoTextMeta = serde_json::from_str(raw).unwrap();
        m.validate().unwrap();
        assert_eq!(m.source(), Some("lstm-3x256"));
        assert_eq!(m.epoch, Some(51));
        assert_eq!(m.extra["batch"], 128);
        let back = serde_json::to_value(&m).unwrap();
        assert_eq!(back["batch"], 128);
    }

    #[test]
    fn rejects_anonymous() {
        let m: PseudoTextMeta = serde_json::from_str(r#"{"seed":1,"length":3}"#).unwrap();
        assert!(m.validate().is_err());
        assert!(serde_json::from_str::<PseudoTextMeta>(r#"{"model":"x","length":3}"#).is_err());
    }

    #[test]
    fn path_suffix() {
        assert_eq!(sidecar_path(Path::new("out/p.txt")), PathBuf::from("out/p.txt.meta.json"));
    }
}
