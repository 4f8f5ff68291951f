use serde::{Deserialize, Serialize};

use super::{ar_psd, burg_fit, music_psd, welch_psd, FrequencyGrid, MusicConfig, WelchConfig};
use crate::error::Result;
use crate::signal::SegmentedSample;

/// PSD estimator used to build feature vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum ExtractionMethod {
    Welch(WelchConfig),
    Burg { order: usize },
    Music(MusicConfig),
}

impl ExtractionMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ExtractionMethod::Welch(_) => "Welch",
            ExtractionMethod::Burg { .. } => "Burg",
            ExtractionMethod::Music(_) => "MUSIC",
        }
    }
}

/// Channel-major concatenation of the per-channel PSD values on `grid`.
pub fn extract_features(sample: &SegmentedSample, method: &ExtractionMethod, grid: &FrequencyGrid) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(sample.per_channel.len() * grid.len());
    for (c, segment) in sample.per_channel.iter().enumerate() {
        let psd = match method {
            ExtractionMethod::Welch(cfg) => welch_psd(segment, cfg, grid),
            ExtractionMethod::Burg { order } => burg_fit(segment, *order).and_then(|m| ar_psd(&m, grid)),
            ExtractionMethod::Music(cfg) => music_psd(segment, cfg, grid),
        }
        .map_err(|e| e.context(format!("channel {c}")))?;
        out.extend_from_slice(&psd.power);
    }
    Ok(out)
}
