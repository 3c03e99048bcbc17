//! Feature-map panels written as PGM images with a JSON sidecar.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sre_core::eval::{circular_mask, feature_panels, panel_consistency, FeaturePanel};
use sre_core::{Network, Scalar, Tensor};

use crate::pgm::{normalize, write_pgm};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PanelRecord {
    pub angle: f64,
    pub file: String,
    pub min: f64,
    pub max: f64,
    pub masked_mean: f64,
    pub masked_mean_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureExport {
    pub panels: Vec<PanelRecord>,
    /// Mean pairwise masked mean-abs difference between panels.
    pub consistency: f64,
}

fn panel_record(panel: &FeaturePanel, file: String) -> PanelRecord {
    let v = panel.values.data();
    let mask = circular_mask(panel.values.dims());
    let inside: Vec<f64> = v.iter().zip(&mask).filter(|(_, &m)| m).map(|(&x, _)| x).collect();
    let n = inside.len().max(1) as f64;
    PanelRecord {
        angle: panel.angle,
        file,
        min: inside.iter().cloned().fold(f64::INFINITY, f64::min),
        max: inside.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        masked_mean: inside.iter().sum::<f64>() / n,
        masked_mean_abs: inside.iter().map(|x| x.abs()).sum::<f64>() / n,
    }
}

/// Writes `panel_NN.pgm` per angle and `features.json` into `out`.
pub fn export_feature_maps<T: Scalar>(
    net: &Network<T>,
    x: &Tensor<T>,
    angles: &[f64],
    out: &Path,
) -> Result<FeatureExport> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let panels = feature_panels(net, x, angles)?;
    let mut records = Vec::with_capacity(panels.len());
    for (i, panel) in panels.iter().enumerate() {
        let [h, w] = [panel.values.dims()[0], panel.values.dims()[1]];
        let file = format!("panel_{i:02}.pgm");
        write_pgm(&out.join(&file), w, h, &normalize(panel.values.data()))?;
        records.push(panel_record(panel, file));
    }
    let export = FeatureExport {
        panels: records,
        consistency: panel_consistency(&panels)?,
    };
    let sidecar: PathBuf = out.join("features.json");
    let json = serde_json::to_vec_pretty(&export)?;
    std::fs::write(&sidecar, json).map_err(|e| Error::io(&sidecar, e))?;
    Ok(export)
}
