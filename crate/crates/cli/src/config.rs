//! Run configuration: one JSON file, command-line flags on top.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use systole::complex::Kind;
use systole::laws::DivergenceConfig;
use systole::surface::SurfaceOptions;
use systole::{AlphaSpec, SurfaceMode, TableOptions};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Start {
    pub x: f64,
    pub sheet: u8,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Probe {
    pub starts: Vec<Start>,
    pub n: u64,
    pub n_min: u64,
    pub nonergodic_gap: f64,
    pub ergodic_gap: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Certificate {
    #[serde(rename = "N")]
    pub n: f64,
    pub samples: usize,
    pub step_cap: u64,
    /// Flow time at which the complex is built.
    pub t: f64,
    pub cut: Vec<Kind>,
    pub strips: Vec<u8>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: AlphaSpec,
    pub mode: SurfaceMode,
    pub k_max: usize,
    pub precision_bits: u32,
    pub unit_area: bool,
    /// Replaces the slit length `S_1` for `ergodicity` and `certify` when set.
    pub slit_length: Option<f64>,
    pub k2: f64,
    pub grid: Grid,
    pub lambdas: Vec<f64>,
    pub burn_in: f64,
    /// Samples before this time are left out of the distance-bound limsup.
    pub distance_t0: f64,
    pub divergence: DivergenceConfig,
    pub probe: Probe,
    pub certificate: Certificate,
    pub seed: u64,
    /// Output directory; not part of the hash.
    #[serde(skip_serializing)]
    pub out: String,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            start: 1.0,
            end: 300.0,
            step: 0.01,
        }
    }
}

impl Default for Probe {
    fn default() -> Self {
        let starts = [(0.3, 0), (0.3, 1), (0.7, 0), (0.7, 1)]
            .into_iter()
            .map(|(x, sheet)| Start { x, sheet })
            .collect();
        Probe {
            starts,
            n: 1 << 20,
            n_min: 10_000,
            nonergodic_gap: 0.5,
            ergodic_gap: 0.05,
        }
    }
}

impl Default for Certificate {
    fn default() -> Self {
        Certificate {
            n: 2.0,
            samples: 2000,
            step_cap: 100_000_000,
            t: 0.0,
            cut: vec![Kind::Slit(0), Kind::Slit(1)],
            strips: vec![0],
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: AlphaSpec::paper(),
            mode: SurfaceMode::Slit,
            k_max: 60,
            precision_bits: 128,
            unit_area: false,
            slit_length: None,
            k2: 0.0,
            grid: Grid::default(),
            lambdas: vec![0.1, 0.25],
            burn_in: 10.0,
            distance_t0: 145.0,
            divergence: DivergenceConfig::default(),
            probe: Probe::default(),
            certificate: Certificate::default(),
            seed: 0,
            out: ".".into(),
        }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        bail!("{name} must be positive, got {x}");
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: Option<&str>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {p}"))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {p}"))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        positive("grid.step", g.step)?;
        if !(g.start.is_finite() && g.end >= g.start) {
            bail!("grid end must not precede grid start");
        }
        if self.precision_bits < 64 {
            bail!("precision_bits must be at least 64");
        }
        if self.k_max < 1 {
            bail!("k_max must be at least 1");
        }
        for &l in &self.lambdas {
            positive("lambda", l)?;
        }
        let d = &self.divergence;
        for (name, x) in [
            ("divergence.fit_from", d.fit_from),
            ("divergence.cauchy_tol", d.cauchy_tol),
            ("divergence.quad_tol", d.quad_tol),
        ] {
            positive(name, x)?;
        }
        let p = &self.probe;
        positive("probe.nonergodic_gap", p.nonergodic_gap)?;
        positive("probe.ergodic_gap", p.ergodic_gap)?;
        if p.n == 0 || p.n_min == 0 {
            bail!("probe lengths must be positive");
        }
        if p.starts
            .iter()
            .any(|s| s.sheet > 1 || !(0.0..1.0).contains(&s.x))
        {
            bail!("probe starts need x in [0, 1) and sheet 0 or 1");
        }
        let c = &self.certificate;
        if !(c.n > 1.0) {
            bail!("certificate N must exceed 1");
        }
        if c.samples == 0 || c.step_cap == 0 {
            bail!("certificate sampling must be positive");
        }
        if let Some(s) = self.slit_length {
            if !(s > 0.0 && s < 1.0) {
                bail!("slit_length must lie in (0, 1)");
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn surface_options(&self) -> SurfaceOptions {
        SurfaceOptions {
            mode: self.mode,
            k_max: self.k_max,
            unit_area: self.unit_area,
            table: TableOptions {
                precision: self.precision_bits,
                ..TableOptions::default()
            },
        }
    }
}
