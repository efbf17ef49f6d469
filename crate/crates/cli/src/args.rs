//! Command-line flags and their translation into configuration overrides.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{
    Experiment, ExperimentConfig, LifetimeSection, LocstateSection, Method, ModelSection, Range,
    SpectrumSection, SweepSection, TimeSection,
};

#[derive(Parser, Debug)]
#[command(name = "sawtooth", version, about = "Hardcore bosons on the sawtooth ladder by exact diagonalization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Return probability, entanglement and hopping energy after a quench
    Quench(Common),
    /// Time-averaged return probability over a parameter grid
    Sweep {
        #[command(flatten)]
        common: Common,
        /// J-Jp (fixed V) or V-Jp (fixed J)
        #[arg(long)]
        axes: Option<String>,
        /// First axis as start:stop:count
        #[arg(long, allow_hyphen_values = true)]
        first: Option<Range>,
        /// Second axis (J') as start:stop:count
        #[arg(long, allow_hyphen_values = true)]
        second: Option<Range>,
        /// Add the gap-ratio column
        #[arg(long)]
        with_r: bool,
        /// Add the diagonal vs microcanonical deviation
        #[arg(long)]
        with_delta: bool,
        /// Microcanonical half-width in units of |V|
        #[arg(long)]
        delta_e: Option<f64>,
    },
    /// Level-spacing statistics of one particle-hole sector
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Plain-text eigenvalues, one per line, instead of a model
        #[arg(long)]
        levels: Option<PathBuf>,
        /// +1 or -1
        #[arg(long, allow_hyphen_values = true)]
        parity: Option<i32>,
        /// Unfolding polynomial degree
        #[arg(long)]
        poly_degree: Option<usize>,
    },
    /// Overlap of the perturbative localized state with the exact eigenstate
    Locstate {
        #[command(flatten)]
        common: Common,
        /// J/V = J'/V values as start:stop:count
        #[arg(long, allow_hyphen_values = true)]
        ratios: Option<Range>,
    },
    /// Time at which the return probability first drops below a threshold
    Lifetime {
        #[command(flatten)]
        common: Common,
        /// Comma-separated chain lengths
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Print the half-filled block initial states for a chain length
    States {
        #[arg(short = 'L', default_value_t = 12)]
        sites: usize,
    },
}

#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    /// JSON configuration; flags override its keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(short = 'L')]
    pub sites: Option<usize>,
    #[arg(long = "J", allow_hyphen_values = true)]
    pub hopping: Option<f64>,
    #[arg(long = "Jp", allow_hyphen_values = true)]
    pub odd_hopping: Option<f64>,
    #[arg(long = "V", allow_hyphen_values = true)]
    pub interaction: Option<f64>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// inv_V or inv_J
    #[arg(long)]
    pub time_unit: Option<String>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// plain or symmetrized
    #[arg(long)]
    pub convention: Option<String>,
    /// Entanglement cut after this many sites
    #[arg(long)]
    pub cut: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// domain_wall, block:<len> or a 0/1 pattern
    #[arg(long)]
    pub initial: Option<String>,
}

impl Common {
    fn overrides(&self) -> ExperimentConfig {
        ExperimentConfig {
            model: ModelSection {
                sites: self.sites,
                hopping: self.hopping,
                odd_hopping: self.odd_hopping,
                interaction: self.interaction,
            },
            initial_state: self.initial.clone(),
            time: TimeSection {
                t_max: self.tmax,
                samples: self.samples,
                time_unit: self.time_unit.clone(),
            },
            convention: self.convention.clone(),
            cut: self.cut,
            method: self.method,
            output_dir: self.out.clone(),
            threads: self.threads,
            ..Default::default()
        }
    }
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

impl Command {
    /// Experiment kind, common flags and the flag overrides; `None` for `states`.
    pub fn plan(&self) -> Option<(Experiment, &Common, ExperimentConfig)> {
        Some(match self {
            Command::Quench(c) => (Experiment::Quench, c, c.overrides()),
            Command::Sweep {
                common,
                axes,
                first,
                second,
                with_r,
                with_delta,
                delta_e,
            } => {
                let mut o = common.overrides();
                o.sweep = Some(SweepSection {
                    axes: axes.clone(),
                    first: *first,
                    second: *second,
                    with_r: flag(*with_r),
                    with_delta: flag(*with_delta),
                    delta_e: *delta_e,
                });
                (Experiment::Sweep, common, o)
            }
            Command::Spectrum {
                common,
                levels,
                parity,
                poly_degree,
            } => {
                let mut o = common.overrides();
                o.spectrum = Some(SpectrumSection {
                    levels_file: levels.clone(),
                    parity: *parity,
                    poly_degree: *poly_degree,
                    ..Default::default()
                });
                (Experiment::Spectrum, common, o)
            }
            Command::Locstate { common, ratios } => {
                let mut o = common.overrides();
                o.locstate = Some(LocstateSection { ratios: *ratios });
                (Experiment::Locstate, common, o)
            }
            Command::Lifetime {
                common,
                sizes,
                threshold,
            } => {
                let mut o = common.overrides();
                o.lifetime = Some(LifetimeSection {
                    sizes: sizes.clone(),
                    threshold: *threshold,
                });
                (Experiment::Lifetime, common, o)
            }
            Command::States { .. } => return None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_negative_couplings_and_ranges() {
        let cli = Cli::try_parse_from([
            "sawtooth", "sweep", "-L", "8", "--J", "-0.3", "--Jp", "-0.2", "--first", "-1:-0.5:3", "--with-r",
        ])
        .unwrap();
        let (exp, _, o) = cli.command.plan().unwrap();
        assert_eq!(exp, Experiment::Sweep);
        assert_eq!(o.model.sites, Some(8));
        assert_eq!(o.model.hopping, Some(-0.3));
        let s = o.sweep.unwrap();
        assert_eq!(s.first.unwrap().count, 3);
        assert_eq!(s.with_r, Some(true));
        assert_eq!(s.with_delta, None);
    }

    #[test]
    fn sizes_list() {
        let cli = Cli::try_parse_from(["sawtooth", "lifetime", "--sizes", "6,8"]).unwrap();
        let (_, _, o) = cli.command.plan().unwrap();
        assert_eq!(o.lifetime.unwrap().sizes, Some(vec![6, 8]));
    }
}
