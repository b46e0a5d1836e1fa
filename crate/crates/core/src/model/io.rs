use super::{ModelConfig, ModelError, VulcanModel};
use crate::dependence::Vocab;
use crate::nn::checkpoint::{checkpoint_bytes, load_into, parse_checkpoint};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Sidecar describing how to rebuild the network a checkpoint belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub config: ModelConfig,
    pub vocab: Vocab,
}

pub fn meta_path(checkpoint: &Path) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ModelError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| ModelError::Io(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))
}

/// Write the checkpoint and its `.meta.json` sidecar, each through a
/// temporary file.
pub fn save_model(model: &VulcanModel, path: &Path) -> Result<(), ModelError> {
    let meta = ModelMeta {
        config: model.cfg.clone(),
        vocab: model.vocab.clone(),
    };
    let json = serde_json::to_vec_pretty(&meta).map_err(|e| ModelError::Io(e.to_string()))?;
    write_atomic(&meta_path(path), &json)?;
    write_atomic(path, &checkpoint_bytes(&model.store))
}

pub fn load_model(path: &Path) -> Result<VulcanModel, ModelError> {
    let meta_file = meta_path(path);
    let json = std::fs::read(&meta_file).map_err(|e| ModelError::Io(format!("{}: {e}", meta_file.display())))?;
    let meta: ModelMeta = serde_json::from_slice(&json).map_err(|e| ModelError::Io(format!("{}: {e}", meta_file.display())))?;
    let bytes = std::fs::read(path).map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
    let mut model = VulcanModel::new(meta.config, meta.vocab, 0)?;
    load_into(&mut model.store, parse_checkpoint(&bytes)?)?;
    Ok(model)
}
