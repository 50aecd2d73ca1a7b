use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qdetect::corpus::{
    load_model, parse_sparse_with_dim, save_model, split, LabeledDataset, SplitSpec,
};
use qdetect::error::{Error, Result};
use qdetect::harness::bench::{run_suite, Suite};
use qdetect::harness::metrics::{
    evaluate, parse_cost_matrix, predict_dataset, write_predictions, write_report,
};
use qdetect::harness::synth::{synth_corpus, SynthKind, SynthSpec};
use qdetect::model::{train, StrategyName, TrainOptions};
use qdetect::multiclass::{CostMatrix, HypothesisSet};
use qdetect::oracle::{grid_oracle_dim2, helstrom_oracle};
use qdetect::state::{density_from_state, StateVector};

/// Document classification by minimum-error state discrimination.
#[derive(Debug, Parser)]
#[command(name = "qdetect", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model from a sparse dataset file.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        /// Negative-class prior of each binary detector.
        #[arg(long)]
        prior: Option<f64>,
        /// Acceptance threshold (binary strategy only).
        #[arg(long)]
        threshold: Option<f64>,
        /// Feature-space size; defaults to one past the largest index.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write `doc_index<TAB>label<TAB>score` for every document.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a JSON metrics report.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// `zero-one` or a file with one row of costs per chosen class.
        #[arg(long, default_value = "zero-one")]
        cost: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a self-checking benchmark suite; exits nonzero if any check fails.
    Bench {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Print reference optima for small two-dimensional instances.
    Oracle {
        #[arg(long, value_enum)]
        mode: OracleMode,
        /// State angles in degrees, comma separated.
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_hyphen_values = true
        )]
        angles: Vec<f64>,
        /// Priors in the order of the angles; uniform by default.
        #[arg(long, value_delimiter = ',')]
        priors: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100_000)]
        resolution: usize,
    },
    /// Generate a synthetic dataset.
    Synth {
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Angle between class vectors in degrees (overlap only).
        #[arg(long)]
        angle: Option<f64>,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 25)]
        docs: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a dataset into training and test files.
    Split {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        fraction: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        stratified: bool,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Binary,
    Pgm,
    Ovr,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    Helstrom,
    Trine,
    Synthetic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OracleMode {
    Helstrom,
    Grid,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Orthogonal,
    Overlap,
    Trine,
}

fn read_dataset(path: &Path, dim: Option<usize>) -> Result<LabeledDataset> {
    parse_sparse_with_dim(BufReader::new(File::open(path)?), dim)
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    body(&mut out)?;
    out.flush()?;
    Ok(())
}

fn run(command: Command) -> Result<bool> {
    match command {
        Command::Train {
            data,
            strategy,
            prior,
            threshold,
            dim,
            out,
        } => {
            let ds = read_dataset(&data, dim)?;
            let strategy = match strategy {
                StrategyArg::Binary => StrategyName::Binary,
                StrategyArg::Pgm => StrategyName::Pgm,
                StrategyArg::Ovr => StrategyName::OneVsRest,
            };
            let opts = TrainOptions {
                prior_negative: prior,
                threshold,
            };
            save_model(&train(&ds, strategy, &opts)?, &out)?;
        }
        Command::Predict { model, data, out } => {
            let model = load_model(&model)?;
            let ds = read_dataset(&data, None)?;
            let predictions = predict_dataset(&model, &ds)?;
            write_file(&out, |w| write_predictions(&model, &predictions, w))?;
        }
        Command::Evaluate {
            model,
            data,
            cost,
            out,
        } => {
            let model = load_model(&model)?;
            let ds = read_dataset(&data, None)?;
            let costs = if cost == "zero-one" {
                CostMatrix::zero_one(model.labels().len())
            } else {
                parse_cost_matrix(&std::fs::read_to_string(&cost)?)?
            };
            let report = evaluate(&model, &ds, &costs)?;
            write_file(&out, |w| write_report(&report, w))?;
        }
        Command::Bench { suite, seed } => {
            let suite = match suite {
                SuiteArg::Helstrom => Suite::Helstrom,
                SuiteArg::Trine => Suite::Trine,
                SuiteArg::Synthetic => Suite::Synthetic,
            };
            let checks = run_suite(suite, seed)?;
            for check in &checks {
                println!("{check}");
            }
            let failed = checks.iter().filter(|c| !c.passed()).count();
            println!("{} passed, {failed} failed", checks.len() - failed);
            return Ok(failed == 0);
        }
        Command::Oracle {
            mode,
            angles,
            priors,
            resolution,
        } => {
            let priors = priors.unwrap_or_else(|| vec![1.0 / angles.len() as f64; angles.len()]);
            if priors.len() != angles.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} angles but {} priors",
                    angles.len(),
                    priors.len()
                )));
            }
            let states: Vec<StateVector> = angles
                .iter()
                .map(|a| StateVector::at_angle(a.to_radians()))
                .collect();
            match mode {
                OracleMode::Helstrom => {
                    if states.len() != 2 {
                        return Err(Error::InvalidArgument(
                            "helstrom mode takes exactly 2 angles".into(),
                        ));
                    }
                    let value = helstrom_oracle(
                        &density_from_state(&states[0]),
                        &density_from_state(&states[1]),
                        priors[0],
                        priors[1],
                    )?;
                    println!("helstrom_error\t{value:.12}");
                }
                OracleMode::Grid => {
                    let n = states.len();
                    let h = HypothesisSet::from_pure_unlabeled(priors, states)?;
                    let best = grid_oracle_dim2(&h, &CostMatrix::zero_one(n), resolution)?;
                    println!("grid_cost\t{:.12}", best.cost);
                    println!("kind\t{:?}", best.kind);
                    for k in 0..n {
                        let weight = best.elements[k].trace();
                        match best.angle(k) {
                            Some(a) => println!(
                                "element {k}\tweight {weight:.6}\tangle_deg {:.4}",
                                a.to_degrees()
                            ),
                            None => println!("element {k}\ttrace {weight:.6}"),
                        }
                    }
                }
            }
        }
        Command::Synth {
            kind,
            angle,
            classes,
            docs,
            noise,
            seed,
            out,
        } => {
            let kind = match (kind, angle) {
                (KindArg::Overlap, Some(a)) => SynthKind::Overlap { angle_deg: a },
                (KindArg::Overlap, None) => {
                    return Err(Error::InvalidArgument(
                        "overlap corpora need --angle".into(),
                    ));
                }
                (_, Some(_)) => {
                    return Err(Error::InvalidArgument(
                        "--angle applies only to overlap corpora".into(),
                    ));
                }
                (KindArg::Orthogonal, None) => SynthKind::Orthogonal,
                (KindArg::Trine, None) => SynthKind::TrineLike,
            };
            let ds = synth_corpus(&SynthSpec::new(kind, classes, docs, noise, seed))?;
            write_file(&out, |w| Ok(ds.write_sparse(w)?))?;
        }
        Command::Split {
            data,
            fraction,
            seed,
            stratified,
            train_out,
            test_out,
        } => {
            let ds = read_dataset(&data, None)?;
            let (train_ds, test_ds) = split(&ds, &SplitSpec::new(fraction, seed, stratified)?)?;
            write_file(&train_out, |w| Ok(train_ds.write_sparse(w)?))?;
            write_file(&test_out, |w| Ok(test_ds.write_sparse(w)?))?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("ERROR invalid-argument: {first}");
            return ExitCode::FAILURE;
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("ERROR bench-failed: at least one check failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("ERROR {}: {}", e.code(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
