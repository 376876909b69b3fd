//! Model files: the `nn` parameter container plus the template and the
//! initialisation settings in the header metadata.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{DeepMfParams, InitSpec, ParamGroup};
use super::EcgTemplate;
use crate::nn::{read_container, write_container, ContainerHeader, TensorEntry, CONTAINER_VERSION};
use crate::{Error, Result};

/// Trained (or freshly initialised) network with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepMfModel {
    pub params: DeepMfParams,
    pub template: EcgTemplate,
    pub init: InitSpec,
}

#[derive(Serialize, Deserialize)]
struct Metadata {
    kind: String,
    template: Vec<f64>,
    init: InitSpec,
}

const KIND: &str = "deepmf";

impl DeepMfModel {
    pub fn init(template: EcgTemplate, init: InitSpec) -> Result<Self> {
        Ok(Self {
            params: DeepMfParams::init(&template, &init)?,
            template,
            init,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let tensors = self
            .params
            .tensor_layout()
            .into_iter()
            .map(|(name, shape, stride)| TensorEntry { name, shape, stride })
            .collect();
        let meta = Metadata {
            kind: KIND.into(),
            template: self.template.samples().to_vec(),
            init: self.init.clone(),
        };
        let header = ContainerHeader {
            format_version: CONTAINER_VERSION,
            seed: self.init.seed,
            tensors,
            metadata: serde_json::to_value(meta)?,
        };
        let mut buf = Vec::new();
        write_container(&mut buf, &header, &self.params.flatten(ParamGroup::All))?;
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, values) = read_container(&mut &bytes[..])?;
        let meta: Metadata = serde_json::from_value(header.metadata)?;
        if meta.kind != KIND {
            return Err(Error::Format(format!("container holds `{}`, not a Deep-MF model", meta.kind)));
        }
        let mut params = DeepMfParams::zeros();
        let expected: Vec<TensorEntry> = params
            .tensor_layout()
            .into_iter()
            .map(|(name, shape, stride)| TensorEntry { name, shape, stride })
            .collect();
        if header.tensors != expected {
            return Err(Error::Format("tensor layout does not match the Deep-MF architecture".into()));
        }
        params.assign(ParamGroup::All, &values)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("model holds non-finite parameters".into()));
        }
        params.validate()?;
        Ok(Self {
            params,
            template: EcgTemplate::new(meta.template)?,
            init: meta.init,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut w = BufWriter::new(File::create(path)?);
        std::io::Write::write_all(&mut w, &bytes)?;
        std::io::Write::flush(&mut w)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let m = DeepMfModel::init(EcgTemplate::builtin(), InitSpec { seed: 11, ..InitSpec::default() }).unwrap();
        let bytes = m.to_bytes().unwrap();
        let back = DeepMfModel::from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn corrupt_files_rejected() {
        let m = DeepMfModel::init(EcgTemplate::builtin(), InitSpec::default()).unwrap();
        let bytes = m.to_bytes().unwrap();
        assert!(matches!(DeepMfModel::from_bytes(&bytes[..bytes.len() - 8]), Err(Error::Format(_))));
        assert!(DeepMfModel::from_bytes(b"nope").is_err());
    }
}
