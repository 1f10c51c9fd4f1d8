use std::fmt::Display;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dpselect::audit::{dominance_check, privacy_ratio_audit};
use dpselect::generate::random_instance;
use dpselect::instance::{validate_instance, NeighborPairs, PrivacyParams, QualityVector, ValidatedInstance};
use dpselect::mechanisms::Mechanism;
use dpselect::noise::RngState;
use dpselect::oracle::{self, chi_square_gof, tv_distance, GofResult};
use dpselect::table::ProbabilityTable;

use crate::output::{print_record, read_json, write_file};

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
}

fn invalid(e: impl Display) -> CliError {
    CliError::Invalid(e.to_string())
}

pub enum Outcome {
    Pass,
    Fail,
}

#[derive(Debug, Parser)]
#[command(name = "dpselect", version, about = "Differentially private selection toolkit")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Privacy {
    /// Privacy budget ε (> 0)
    #[arg(long)]
    epsilon: f64,
    /// Sensitivity Δ of the quality scores (> 0)
    #[arg(long, default_value_t = 1.0)]
    sensitivity: f64,
}

impl Privacy {
    fn params(&self) -> Result<PrivacyParams, CliError> {
        PrivacyParams::new(self.epsilon, self.sensitivity).map_err(invalid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Quadrature,
    Empirical,
}

fn parse_mechanism(s: &str) -> Result<Mechanism, String> {
    s.parse().map_err(|e: dpselect::MechanismError| e.to_string())
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a mechanism once and print the selected outcome
    Select {
        /// One of pf, rnm-expo, rnm-laplace, rnm-gumbel, em, alg-a, alg-b
        #[arg(long, value_parser = parse_mechanism)]
        mechanism: Mechanism,
        #[command(flatten)]
        privacy: Privacy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Quality-vector JSON file: {"labels": [...], "scores": [...]}
        #[arg(long)]
        scores: PathBuf,
    },
    /// Compute a mechanism's output distribution table
    Dist {
        #[arg(long, value_parser = parse_mechanism)]
        mechanism: Mechanism,
        #[command(flatten)]
        privacy: Privacy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        scores: PathBuf,
        /// exact: pf, rnm-expo, em; quadrature: rnm-expo, rnm-laplace, rnm-gumbel; empirical: any
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        /// Number of runs in empirical mode
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        /// Write the table here (full precision)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the output distributions of two mechanisms
    Compare {
        /// Two comma-separated mechanism names, e.g. pf,rnm-expo
        #[arg(long, value_parser = parse_mechanism, value_delimiter = ',', required = true)]
        mechanisms: Vec<Mechanism>,
        #[command(flatten)]
        privacy: Privacy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        scores: PathBuf,
        /// Empirical mode samples the first mechanism and tests it against the
        /// second one's exact (or quadrature) table
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        /// Chi-square significance level (empirical mode)
        #[arg(long, default_value_t = 0.001)]
        significance: f64,
        /// Largest accepted total variation distance (exact and quadrature modes)
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
    /// Check the e^ε probability-ratio bound on neighbor pairs
    Audit {
        /// pf, rnm-expo or em
        #[arg(long, value_parser = parse_mechanism)]
        mechanism: Mechanism,
        #[command(flatten)]
        privacy: Privacy,
        /// Neighbor-pairs JSON file: {"pairs": [{"q1": {...}, "q2": {...}}, ...]}
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expected error of permute-and-flip vs the exponential mechanism
    Utility {
        #[command(flatten)]
        privacy: Privacy,
        #[arg(long, conflicts_with = "random", required_unless_present = "random")]
        scores: Option<PathBuf>,
        /// Number of random instances (scores uniform on [-5, 5])
        #[arg(long)]
        random: Option<usize>,
        /// Largest outcome count of random instances (at most 20)
        #[arg(long, default_value_t = 10)]
        k_max: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_instance(path: &Path, params: PrivacyParams) -> Result<ValidatedInstance, CliError> {
    let quality: QualityVector = read_json(path)?;
    validate_instance(quality, params).map_err(invalid)
}

fn table_for(
    mechanism: Mechanism,
    inst: &ValidatedInstance,
    mode: Mode,
    n: u64,
    seed: u64,
) -> Result<ProbabilityTable, CliError> {
    match mode {
        Mode::Exact => oracle::exact_distribution(mechanism, inst),
        Mode::Quadrature => oracle::quadrature_distribution(mechanism, inst),
        Mode::Empirical => oracle::empirical_distribution(mechanism, inst, n, seed),
    }
    .map_err(invalid)
}

/// Exact table when one exists, otherwise quadrature.
fn reference_table(mechanism: Mechanism, inst: &ValidatedInstance) -> Option<ProbabilityTable> {
    oracle::exact_distribution(mechanism, inst)
        .or_else(|_| oracle::quadrature_distribution(mechanism, inst))
        .ok()
}

#[derive(Serialize)]
struct Comparison {
    mechanisms: [String; 2],
    mode: String,
    tv: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gof: Option<GofResult>,
    pass: bool,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Select {
            mechanism,
            privacy,
            seed,
            scores,
        } => {
            let inst = load_instance(&scores, privacy.params()?)?;
            let result = mechanism.run(&inst, &mut RngState::new(seed));
            print_record(&result)?;
            Ok(Outcome::Pass)
        }
        Command::Dist {
            mechanism,
            privacy,
            seed,
            scores,
            mode,
            n,
            out,
        } => {
            let inst = load_instance(&scores, privacy.params()?)?;
            let table = table_for(mechanism, &inst, mode, n, seed)?;
            if let Some(path) = out {
                write_file(&path, &table)?;
            }
            print_record(&table)?;
            Ok(Outcome::Pass)
        }
        Command::Compare {
            mechanisms,
            privacy,
            seed,
            scores,
            mode,
            n,
            significance,
            tolerance,
        } => {
            if !(0.0..=1.0).contains(&significance) {
                return Err(invalid(format!("significance must lie in [0, 1] (got {significance})")));
            }
            if tolerance.is_nan() || tolerance < 0.0 {
                return Err(invalid(format!("tolerance must be nonnegative (got {tolerance})")));
            }
            let [first, second] = mechanisms[..] else {
                return Err(invalid(format!(
                    "--mechanisms takes exactly two names (got {})",
                    mechanisms.len()
                )));
            };
            let inst = load_instance(&scores, privacy.params()?)?;
            let record = match mode {
                Mode::Exact | Mode::Quadrature => {
                    let a = table_for(first, &inst, mode, n, seed)?;
                    let b = table_for(second, &inst, mode, n, seed)?;
                    let tv = tv_distance(&a, &b).map_err(invalid)?;
                    Comparison {
                        mechanisms: [first.to_string(), second.to_string()],
                        mode: format!("{mode:?}").to_lowercase(),
                        tv,
                        gof: None,
                        pass: tv <= tolerance,
                    }
                }
                Mode::Empirical => {
                    let (sampled, reference) = match reference_table(second, &inst) {
                        Some(t) => (first, t),
                        None => match reference_table(first, &inst) {
                            Some(t) => (second, t),
                            None => {
                                return Err(invalid(format!(
                                    "neither {first} nor {second} has an exact or quadrature distribution"
                                )))
                            }
                        },
                    };
                    let counts = oracle::empirical_counts(sampled, &inst, n, seed).map_err(invalid)?;
                    let empirical = oracle::empirical_distribution(sampled, &inst, n, seed).map_err(invalid)?;
                    let gof = chi_square_gof(&counts, &reference, significance).map_err(invalid)?;
                    let tv = tv_distance(&empirical, &reference).map_err(invalid)?;
                    Comparison {
                        mechanisms: [first.to_string(), second.to_string()],
                        mode: "empirical".into(),
                        tv,
                        pass: gof.pass,
                        gof: Some(gof),
                    }
                }
            };
            let pass = record.pass;
            print_record(&record)?;
            Ok(if pass { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Audit {
            mechanism,
            privacy,
            pairs,
            out,
        } => {
            let params = privacy.params()?;
            let pairs: NeighborPairs = read_json(&pairs)?;
            let report = privacy_ratio_audit(mechanism, &pairs.pairs, params).map_err(invalid)?;
            if let Some(path) = out {
                write_file(&path, &report)?;
            }
            print_record(&report)?;
            Ok(if report.pass { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Utility {
            privacy,
            scores,
            random,
            k_max,
            seed,
            out,
        } => {
            let params = privacy.params()?;
            let instances = match (scores, random) {
                (Some(path), _) => vec![load_instance(&path, params)?],
                (None, Some(count)) => {
                    if !(2..=oracle::MAX_ENUMERATION_OUTCOMES).contains(&k_max) {
                        return Err(invalid(format!(
                            "k-max must lie in 2..={} (got {k_max})",
                            oracle::MAX_ENUMERATION_OUTCOMES
                        )));
                    }
                    let mut rng = RngState::new(seed);
                    (0..count)
                        .map(|_| random_instance(&mut rng, 2..=k_max, -5.0, 5.0, params))
                        .collect()
                }
                (None, None) => return Err(invalid("either --scores or --random is required")),
            };
            let report = dominance_check(&instances).map_err(invalid)?;
            if let Some(path) = out {
                write_file(&path, &report)?;
            }
            print_record(&report)?;
            Ok(if report.dominance_violations == 0 {
                Outcome::Pass
            } else {
                Outcome::Fail
            })
        }
    }
}
