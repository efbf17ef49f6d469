//! JSON experiment configuration. Every field is optional in the file; command
//! line flags are merged on top and [`ExperimentConfig::resolve`] fills the
//! per-experiment defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sawtooth_ed::basis::{block_state, domain_wall_state, FockState, Parity};
use sawtooth_ed::evolve::{TimeGrid, TimeUnit};
use sawtooth_ed::hamiltonian::{InteractionConvention, ModelParams};

use crate::error::{config_error, io_error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Quench,
    Sweep,
    Spectrum,
    Locstate,
    Lifetime,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Dense below the capacity limit, Krylov above it.
    #[default]
    Auto,
    Dense,
    Krylov,
}

/// `count` evenly spaced values from `start` to `stop` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

impl std::str::FromStr for Range {
    type Err = String;

    /// `start:stop:count`
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:count, got {s:?}"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"));
        Ok(Range {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            count: parts[2].trim().parse().map_err(|e| format!("{:?}: {e}", parts[2]))?,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "L")]
    pub sites: Option<usize>,
    #[serde(rename = "J")]
    pub hopping: Option<f64>,
    #[serde(rename = "Jp")]
    pub odd_hopping: Option<f64>,
    #[serde(rename = "V")]
    pub interaction: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub t_max: Option<f64>,
    pub samples: Option<usize>,
    /// `inv_V` or `inv_J`
    pub time_unit: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// `J-Jp` (fixed V) or `V-Jp` (fixed J).
    pub axes: Option<String>,
    pub first: Option<Range>,
    pub second: Option<Range>,
    pub with_r: Option<bool>,
    pub with_delta: Option<bool>,
    /// Microcanonical half-width in units of `|V|`.
    pub delta_e: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    /// `[J, Jp]` pairs; empty means the model point.
    pub points: Option<Vec<[f64; 2]>>,
    pub levels_file: Option<PathBuf>,
    pub parity: Option<i32>,
    pub poly_degree: Option<usize>,
    pub trim_fraction: Option<f64>,
    pub bin_width: Option<f64>,
    pub s_max: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocstateSection {
    /// Values of `J/V = J'/V`.
    pub ratios: Option<Range>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LifetimeSection {
    pub sizes: Option<Vec<usize>>,
    pub threshold: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub model: ModelSection,
    /// `domain_wall`, `block:<len>` or a 0/1 pattern with site 1 first.
    pub initial_state: Option<String>,
    pub time: TimeSection,
    pub convention: Option<String>,
    pub cut: Option<usize>,
    pub method: Option<Method>,
    pub dense_limit: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub sweep: Option<SweepSection>,
    pub spectrum: Option<SpectrumSection>,
    pub locstate: Option<LocstateSection>,
    pub lifetime: Option<LifetimeSection>,
}

fn take<T>(slot: &mut Option<T>, over: Option<T>) {
    if over.is_some() {
        *slot = over;
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        Self::from_json(&text)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(&mut self, over: ExperimentConfig) {
        take(&mut self.experiment, over.experiment);
        take(&mut self.model.sites, over.model.sites);
        take(&mut self.model.hopping, over.model.hopping);
        take(&mut self.model.odd_hopping, over.model.odd_hopping);
        take(&mut self.model.interaction, over.model.interaction);
        take(&mut self.initial_state, over.initial_state);
        take(&mut self.time.t_max, over.time.t_max);
        take(&mut self.time.samples, over.time.samples);
        take(&mut self.time.time_unit, over.time.time_unit);
        take(&mut self.convention, over.convention);
        take(&mut self.cut, over.cut);
        take(&mut self.method, over.method);
        take(&mut self.dense_limit, over.dense_limit);
        take(&mut self.output_dir, over.output_dir);
        take(&mut self.threads, over.threads);
        if let Some(o) = over.sweep {
            let s = self.sweep.get_or_insert_with(Default::default);
            take(&mut s.axes, o.axes);
            take(&mut s.first, o.first);
            take(&mut s.second, o.second);
            take(&mut s.with_r, o.with_r);
            take(&mut s.with_delta, o.with_delta);
            take(&mut s.delta_e, o.delta_e);
        }
        if let Some(o) = over.spectrum {
            let s = self.spectrum.get_or_insert_with(Default::default);
            take(&mut s.points, o.points);
            take(&mut s.levels_file, o.levels_file);
            take(&mut s.parity, o.parity);
            take(&mut s.poly_degree, o.poly_degree);
            take(&mut s.trim_fraction, o.trim_fraction);
            take(&mut s.bin_width, o.bin_width);
            take(&mut s.s_max, o.s_max);
        }
        if let Some(o) = over.locstate {
            take(&mut self.locstate.get_or_insert_with(Default::default).ratios, o.ratios);
        }
        if let Some(o) = over.lifetime {
            let s = self.lifetime.get_or_insert_with(Default::default);
            take(&mut s.sizes, o.sizes);
            take(&mut s.threshold, o.threshold);
        }
    }

    /// Applies defaults for `experiment` and checks consistency. Sections of
    /// other experiments are dropped.
    pub fn resolve(mut self, experiment: Experiment) -> Result<ResolvedConfig> {
        if let Some(e) = self.experiment {
            if e != experiment {
                return Err(config_error(format!(
                    "config describes a {e:?} experiment but {experiment:?} was requested"
                )));
            }
        }
        self.experiment = Some(experiment);
        let lifetime = experiment == Experiment::Lifetime;
        let m = &mut self.model;
        m.sites.get_or_insert(if experiment == Experiment::Locstate { 10 } else { 12 });
        m.hopping.get_or_insert(if lifetime { -0.68 } else { -0.3 });
        m.odd_hopping.get_or_insert(if lifetime { -0.4 } else { -0.3 });
        m.interaction.get_or_insert(1.0);
        let (t_max, samples) = match experiment {
            Experiment::Sweep => (1000.0, 10001),
            Experiment::Lifetime => (200.0, 20001),
            _ => (200.0, 2001),
        };
        self.time.t_max.get_or_insert(t_max);
        self.time.samples.get_or_insert(samples);
        self.time.time_unit.get_or_insert_with(|| "inv_V".into());
        self.initial_state.get_or_insert_with(|| "domain_wall".into());
        self.convention.get_or_insert_with(|| "plain".into());
        let sites = self.model.sites.unwrap();
        self.cut.get_or_insert(sites / 2);
        self.method.get_or_insert(Method::Auto);
        self.dense_limit.get_or_insert(sawtooth_ed::evolve::DEFAULT_DENSE_LIMIT);
        self.output_dir.get_or_insert_with(|| PathBuf::from("."));
        self.threads.get_or_insert(1);

        let keep = |e: Experiment| experiment == e;
        self.sweep = if keep(Experiment::Sweep) {
            let mut s = self.sweep.take().unwrap_or_default();
            s.axes.get_or_insert_with(|| "J-Jp".into());
            let default_range = Range {
                start: -2.0,
                stop: -0.1,
                count: 20,
            };
            s.first.get_or_insert(default_range);
            s.second.get_or_insert(default_range);
            s.with_r.get_or_insert(false);
            s.with_delta.get_or_insert(false);
            s.delta_e.get_or_insert(1.5);
            Some(s)
        } else {
            None
        };
        self.spectrum = if keep(Experiment::Spectrum) {
            let mut s = self.spectrum.take().unwrap_or_default();
            s.points.get_or_insert_with(Vec::new);
            s.parity.get_or_insert(1);
            s.poly_degree.get_or_insert(sawtooth_ed::spectral_stats::DEFAULT_POLY_DEGREE);
            s.trim_fraction.get_or_insert(sawtooth_ed::spectral_stats::DEFAULT_TRIM_FRACTION);
            s.bin_width.get_or_insert(sawtooth_ed::spectral_stats::DEFAULT_BIN_WIDTH);
            s.s_max.get_or_insert(sawtooth_ed::spectral_stats::DEFAULT_S_MAX);
            Some(s)
        } else {
            None
        };
        self.locstate = if keep(Experiment::Locstate) {
            let mut s = self.locstate.take().unwrap_or_default();
            s.ratios.get_or_insert(Range {
                start: -1.0,
                stop: -0.05,
                count: 20,
            });
            Some(s)
        } else {
            None
        };
        self.lifetime = if keep(Experiment::Lifetime) {
            let mut s = self.lifetime.take().unwrap_or_default();
            s.sizes.get_or_insert_with(|| vec![8, 10, 12]);
            s.threshold.get_or_insert(0.05);
            Some(s)
        } else {
            None
        };
        ResolvedConfig::new(self)
    }
}

/// A fully populated configuration with parsed enums.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub raw: ExperimentConfig,
    pub experiment: Experiment,
    pub params: ModelParams,
    pub convention: InteractionConvention,
    pub time_unit: TimeUnit,
    pub grid: TimeGrid,
    pub method: Method,
}

impl ResolvedConfig {
    fn new(raw: ExperimentConfig) -> Result<Self> {
        let m = &raw.model;
        let params = ModelParams::new(
            m.sites.unwrap(),
            m.hopping.unwrap(),
            m.odd_hopping.unwrap(),
            m.interaction.unwrap(),
        )?;
        let convention = raw.convention.as_deref().unwrap().parse()?;
        let time_unit = raw.time.time_unit.as_deref().unwrap().parse()?;
        let grid = TimeGrid::new(raw.time.t_max.unwrap(), raw.time.samples.unwrap())?;
        if raw.threads == Some(0) {
            return Err(config_error("threads must be at least 1"));
        }
        let cut = raw.cut.unwrap();
        if cut == 0 || cut >= params.sites {
            return Err(config_error(format!("cut {cut} must lie in 1..{}", params.sites)));
        }
        let resolved = ResolvedConfig {
            experiment: raw.experiment.unwrap(),
            method: raw.method.unwrap(),
            raw,
            params,
            convention,
            time_unit,
            grid,
        };
        resolved.validate_sections()?;
        Ok(resolved)
    }

    fn validate_sections(&self) -> Result<()> {
        if let Some(s) = &self.raw.sweep {
            if !matches!(s.axes.as_deref(), Some("J-Jp") | Some("V-Jp")) {
                return Err(config_error(format!("sweep axes must be J-Jp or V-Jp, got {:?}", s.axes)));
            }
            if s.first.unwrap().count == 0 || s.second.unwrap().count == 0 {
                return Err(config_error("sweep grid is empty"));
            }
            if !(s.delta_e.unwrap() > 0.0) {
                return Err(config_error("delta_e must be positive"));
            }
        }
        if let Some(s) = &self.raw.spectrum {
            Parity::from_sign(s.parity.unwrap())?;
        }
        if let Some(s) = &self.raw.locstate {
            if s.ratios.unwrap().count == 0 {
                return Err(config_error("locstate grid is empty"));
            }
        }
        if let Some(s) = &self.raw.lifetime {
            if s.sizes.as_ref().unwrap().is_empty() {
                return Err(config_error("lifetime needs at least one system size"));
            }
        }
        if self.experiment == Experiment::Quench {
            self.initial_state(self.params.sites)?;
        }
        Ok(())
    }

    pub fn cut(&self) -> usize {
        self.raw.cut.unwrap()
    }

    pub fn threads(&self) -> usize {
        self.raw.threads.unwrap()
    }

    pub fn output_dir(&self) -> &Path {
        self.raw.output_dir.as_deref().unwrap()
    }

    pub fn dense_limit(&self) -> usize {
        self.raw.dense_limit.unwrap()
    }

    /// Configured initial state on a chain of `sites` sites.
    pub fn initial_state(&self, sites: usize) -> Result<FockState> {
        parse_initial_state(self.raw.initial_state.as_deref().unwrap(), sites)
    }

    /// Configuration as hashed and recorded in sidecars: output location
    /// and worker count are left out because they do not affect results.
    pub fn canonical(&self) -> ExperimentConfig {
        let mut c = self.raw.clone();
        c.output_dir = None;
        c.threads = None;
        c
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.canonical()).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// `domain_wall`, `block:<len>`, or an explicit pattern.
pub fn parse_initial_state(spec: &str, sites: usize) -> Result<FockState> {
    let state = if spec == "domain_wall" {
        domain_wall_state(sites)?
    } else if let Some(len) = spec.strip_prefix("block:") {
        let len = len
            .parse()
            .map_err(|_| config_error(format!("bad block length in {spec:?}")))?;
        block_state(sites, len)?
    } else {
        if spec.len() != sites {
            return Err(config_error(format!(
                "initial pattern {spec:?} has {} sites, chain has {sites}",
                spec.len()
            )));
        }
        FockState::from_pattern(spec)?
    };
    if state.particle_count() as usize != sites / 2 {
        return Err(config_error(format!("initial state {spec:?} is not half filled")));
    }
    Ok(state)
}
