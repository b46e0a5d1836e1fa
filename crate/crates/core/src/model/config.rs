use super::ModelError;
use crate::dependence::EndpointMode;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Dimensions, caps, and ablation flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Width of the fused context vector.
    pub q: usize,
    /// Width of define and line vectors.
    pub t: usize,
    pub max_lines: usize,
    pub max_tokens_per_line: usize,
    pub max_path_len: usize,
    /// Hidden units per LSTM direction.
    pub lstm_hidden: usize,
    pub path_embed: usize,
    /// Width of each per-path read-out vector.
    pub path_repr: usize,
    /// Hidden width of the context and line networks.
    pub ffn_hidden: usize,
    pub classifier_hidden: usize,
    pub no_endpoints: bool,
    pub prev_line: bool,
    pub no_attn: bool,
    pub max_recursion_depth: usize,
    /// Smallest row count for which batch normalization uses batch
    /// statistics during training; smaller groups use running statistics.
    pub bn_min_batch: usize,
    /// Reuse a line's representation within one forward pass.
    pub memoize: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            q: 256,
            t: 128,
            max_lines: 128,
            max_tokens_per_line: 16,
            max_path_len: 32,
            lstm_hidden: 64,
            path_embed: 32,
            path_repr: 128,
            ffn_hidden: 512,
            classifier_hidden: 64,
            no_endpoints: false,
            prev_line: false,
            no_attn: false,
            max_recursion_depth: 128,
            bn_min_batch: 8,
            memoize: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.no_endpoints && self.prev_line {
            return Err(ModelError::ConfigConflict(
                "no_endpoints and prev_line cannot both be set".into(),
            ));
        }
        let dims = [
            ("q", self.q),
            ("t", self.t),
            ("max_lines", self.max_lines),
            ("max_tokens_per_line", self.max_tokens_per_line),
            ("max_path_len", self.max_path_len),
            ("lstm_hidden", self.lstm_hidden),
            ("path_embed", self.path_embed),
            ("path_repr", self.path_repr),
            ("ffn_hidden", self.ffn_hidden),
            ("classifier_hidden", self.classifier_hidden),
            ("bn_min_batch", self.bn_min_batch),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::ConfigConflict(format!("{name} must be positive")));
        }
        if self.bn_min_batch < 2 {
            return Err(ModelError::ConfigConflict("bn_min_batch must be at least 2".into()));
        }
        if self.max_tokens_per_line > crate::dependence::MAX_TOKENS_PER_LINE
            || self.max_path_len > crate::dependence::MAX_PATH_LEN
        {
            return Err(ModelError::ConfigConflict(format!(
                "token and path caps cannot exceed {} and {}",
                crate::dependence::MAX_TOKENS_PER_LINE,
                crate::dependence::MAX_PATH_LEN
            )));
        }
        Ok(())
    }

    pub fn endpoint_mode(&self) -> EndpointMode {
        if self.prev_line {
            EndpointMode::PreviousLine
        } else {
            EndpointMode::MostRecentDefinition
        }
    }

    pub fn variant(&self) -> Variant {
        match (self.no_endpoints, self.prev_line, self.no_attn) {
            (false, false, false) => Variant::Full,
            (true, false, false) => Variant::NoEndpoints,
            (false, true, false) => Variant::PrevLine,
            (false, false, true) => Variant::NoAttn,
            _ => Variant::Custom,
        }
    }

    /// Reduced dimensions for fast tests and gradient checks.
    pub fn tiny() -> Self {
        ModelConfig {
            q: 6,
            t: 5,
            lstm_hidden: 3,
            path_embed: 4,
            path_repr: 4,
            ffn_hidden: 7,
            classifier_hidden: 4,
            ..ModelConfig::default()
        }
    }
}

/// Named flag combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    NoEndpoints,
    PrevLine,
    NoAttn,
    /// More than one flag set.
    Custom,
}

impl Variant {
    pub const ABLATIONS: [Variant; 4] = [Variant::Full, Variant::NoEndpoints, Variant::PrevLine, Variant::NoAttn];

    /// Set this variant's flags on `cfg`, clearing the others.
    pub fn apply(self, cfg: &ModelConfig) -> Result<ModelConfig, ModelError> {
        let mut out = cfg.clone();
        out.no_endpoints = self == Variant::NoEndpoints;
        out.prev_line = self == Variant::PrevLine;
        out.no_attn = self == Variant::NoAttn;
        if self == Variant::Custom {
            return Err(ModelError::ConfigConflict("`custom` is not a selectable variant".into()));
        }
        out.validate()?;
        Ok(out)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoEndpoints => "no_endpoints",
            Variant::PrevLine => "prev_line",
            Variant::NoAttn => "no_attn",
            Variant::Custom => "custom",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ABLATIONS
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| ModelError::ConfigConflict(format!("unknown variant `{s}`")))
    }
}
