//! Run manifests: everything needed to repeat a run.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{DimensionlessMaterial, RunConfig};
use crate::error::{Error, Result};
use crate::llg::LLGParams;
use crate::mesh::MeshStats;
use crate::nondim::Scales;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub afm_fem: String,
    pub os: String,
    pub arch: String,
}

impl Versions {
    pub fn current() -> Self {
        Self {
            afm_fem: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub material: DimensionlessMaterial,
    pub eta: [f64; 2],
    pub alpha: [f64; 2],
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_scale_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_scale_j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_scale_m: Option<f64>,
    pub n_vertices: usize,
    pub n_elements: usize,
    pub h_max: f64,
    pub volume: f64,
}

impl DerivedParams {
    pub fn new(
        material: &crate::energy::MaterialParams,
        llg: &LLGParams,
        tau: f64,
        t_final: Option<f64>,
        scales: Option<&Scales>,
        stats: &MeshStats,
    ) -> Self {
        Self {
            material: DimensionlessMaterial::from_params(material),
            eta: llg.eta,
            alpha: llg.alpha,
            tau,
            t_final,
            time_scale_s: scales.map(Scales::time_scale),
            energy_scale_j: scales.map(Scales::energy_scale),
            length_scale_m: scales.map(|s| s.length),
            n_vertices: stats.n_vertices,
            n_elements: stats.n_elements,
            h_max: stats.h_max,
            volume: stats.total_volume,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub versions: Versions,
    pub config: RunConfig,
    pub derived: DerivedParams,
    #[serde(default)]
    pub summary: BTreeMap<String, toml::Value>,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        toml::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::Experiment;

    #[test]
    fn manifest_round_trip_recovers_config() {
        let cfg = Experiment::SkyrmionPulse.config();
        let p = cfg.build().unwrap();
        let s = p.scales.unwrap();
        let derived = DerivedParams::new(&p.material, &p.llg, cfg.tau(Some(&s)).unwrap(), None, Some(&s), &p.space.mesh().stats());
        let mut summary = BTreeMap::new();
        summary.insert("final_energy".to_string(), toml::Value::Float(-1.25));
        let m = Manifest { command: "evolve".into(), seed: cfg.seed(), versions: Versions::current(), config: cfg.clone(), derived, summary };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.toml");
        m.write(&path).unwrap();
        let back = Manifest::read(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.derived.material.to_params().unwrap(), p.material);
    }
}
