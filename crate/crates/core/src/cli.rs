//! Command-line front end.
//!
//! Exit status is 0 on success, 1 for usage and validation errors and 2 for
//! runtime failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::chipmodel::{
    alice_settings_for, bob_permutation, bob_unitary, chip_unitary, prepare, solve_measurement,
    solve_settings_with, transmitter_input, ChipTopology, SolverOptions,
};
use crate::config::{parse_config, RunConfig};
use crate::error::{Error, Result};
use crate::output::{self, fmt_g9, Format};
use crate::protocol::{run_session, run_session_with_workers, tomography, tomography_with_workers};
use crate::qstate::{mub_set_dim4, overlap_sq, Basis, StateVector, DIM};
use crate::security::{key_rate_vs_distance, mutual_info_curves, threshold_table, KeyRateMode};

/// Fidelity and contrast floor for `circuit verify`.
const VERIFY_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(
    name = "mcfqkd",
    version,
    about = "Four-dimensional QKD over multicore fiber"
)]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice; overrides the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads for Monte Carlo runs.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the three mutually unbiased bases.
    Mubs,
    /// Check or solve chip settings.
    Circuit {
        #[command(subcommand)]
        action: CircuitAction,
    },
    /// Estimate the 12×12 detection-probability matrix.
    Tomography {
        /// Conclusive detections per cell.
        #[arg(long)]
        detections: Option<u64>,
    },
    /// Simulate a key-exchange session and bin QBER and sifted counts.
    Simulate,
    /// Disturbance thresholds for individual and coherent attacks.
    Thresholds,
    /// Secret-key rate against fiber length.
    Keyrate {
        #[arg(long)]
        mode: Option<KeyRateMode>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        max_km: Option<f64>,
        #[arg(long)]
        step_km: Option<f64>,
    },
    /// Alice-Bob and Alice-Eve mutual information against disturbance.
    MiCurves {
        #[arg(long)]
        steps: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CircuitAction {
    /// Check every built-in transmitter and receiver setting.
    Verify,
    /// Search for transmitter settings producing `--target`, or receiver
    /// settings separating `--basis`.
    Solve {
        /// Four `[re, im]` amplitudes as JSON, or a path to such a file.
        #[arg(long, conflicts_with = "basis", required_unless_present = "basis")]
        target: Option<String>,
        #[arg(long)]
        basis: Option<Basis>,
    },
}

impl clap::ValueEnum for KeyRateMode {
    fn value_variants<'a>() -> &'a [Self] {
        &[KeyRateMode::Decoy, KeyRateMode::NoDecoy]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.as_str()))
    }
}

impl clap::ValueEnum for Basis {
    fn value_variants<'a>() -> &'a [Self] {
        &Basis::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            Basis::M0 => "M0",
            Basis::M1 => "M1",
            Basis::M2 => "M2",
        }))
    }
}

/// Runs the command line `args` (including the program name), writing results
/// to `stdout` or the chosen output file and diagnostics to `stderr`.
pub fn dispatch<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::invalid("--config", format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(w) = cli.workers {
        config.workers = Some(w);
    }
    if let Some(out) = &cli.out {
        config.output = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let mut config = load_config(cli)?;
    let format = cli.format;
    let text = match &cli.command {
        Command::Mubs => output::mubs(&mub_set_dim4(), format)?,
        Command::Circuit {
            action: CircuitAction::Verify,
        } => verify_circuits(format)?,
        Command::Circuit {
            action: CircuitAction::Solve { target, basis },
        } => {
            let opts = SolverOptions {
                seed: config.seed,
                ..SolverOptions::default()
            };
            match (target, basis) {
                (Some(t), _) => solve_transmitter(t, &opts, format)?,
                (None, Some(b)) => solve_receiver(*b, &opts, format)?,
                (None, None) => return Err(Error::invalid("--target", "missing")),
            }
        }
        Command::Tomography { detections } => {
            if let Some(d) = detections {
                config.tomography.detections_per_cell = *d;
                config.validate()?;
            }
            let proto = config.tomography_protocol();
            let n = config.tomography.detections_per_cell;
            let m = match config.workers {
                Some(w) => tomography_with_workers(&proto, n, w)?,
                None => tomography(&proto, n)?,
            };
            output::tomography(&m, format)?
        }
        Command::Simulate => {
            let proto = config.protocol();
            let report = match config.workers {
                Some(w) => run_session_with_workers(&proto, w)?,
                None => run_session(&proto)?,
            };
            output::session(&report, format)?
        }
        Command::Thresholds => output::thresholds(&threshold_table()?, format)?,
        Command::Keyrate {
            mode,
            dim,
            max_km,
            step_km,
        } => {
            if let Some(m) = mode {
                config.rate.mode = *m;
            }
            if let Some(d) = dim {
                config.rate.dim = *d;
            }
            if let Some(v) = max_km {
                config.rate.max_km = *v;
            }
            if let Some(v) = step_km {
                config.rate.step_km = *v;
            }
            config.validate()?;
            let curve = key_rate_vs_distance(
                &config.rate_params(),
                config.rate.mode,
                config.rate.max_km,
                config.rate.step_km,
            )?;
            output::key_rate(&curve, format)?
        }
        Command::MiCurves { steps } => {
            if let Some(s) = steps {
                config.mi_curves.steps = *s;
                config.validate()?;
            }
            let rows = mutual_info_curves(&config.mi_curves.dims, config.mi_curves.steps)?;
            output::mutual_info(&rows, format)?
        }
    };
    emit(config.output.as_deref(), &text, stdout)
}

fn emit(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn parse_target(arg: &str) -> Result<StateVector> {
    let text = if arg.trim_start().starts_with('[') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)
            .map_err(|e| Error::invalid("--target", format!("{arg}: {e}")))?
    };
    let pairs: Vec<[f64; 2]> = serde_json::from_str(&text)
        .map_err(|e| Error::invalid("--target", format!("expected [[re, im], ...]: {e}")))?;
    StateVector::from_pairs(&pairs)
}

fn solve_transmitter(target: &str, opts: &SolverOptions, format: Format) -> Result<String> {
    let target = parse_target(target)?;
    let topo = ChipTopology::transmitter();
    let settings = solve_settings_with(&topo, &target, opts)?;
    let out = chip_unitary(&topo, &settings)?.apply(&transmitter_input());
    output::settings(&settings, "fidelity", overlap_sq(&out, &target)?, format)
}

fn solve_receiver(basis: Basis, opts: &SolverOptions, format: Format) -> Result<String> {
    let topo = ChipTopology::receiver();
    let (settings, perm) = solve_measurement(&topo, basis, opts)?;
    let u = chip_unitary(&topo, &settings)?;
    let contrast = (0..DIM)
        .map(|i| Ok(u.apply(&basis.state(i)?).powers()[perm[i]]))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(1.0, f64::min);
    output::settings(&settings, "min_contrast", contrast, format)
}

#[derive(serde::Serialize)]
struct Check {
    chip: &'static str,
    basis: Basis,
    index: usize,
    metric: &'static str,
    value: f64,
    pass: bool,
}

fn verify_circuits(format: Format) -> Result<String> {
    let mut checks = Vec::new();
    for b in Basis::ALL {
        for i in 0..DIM {
            let f = overlap_sq(&prepare(&alice_settings_for(b, i)?)?, &b.state(i)?)?;
            checks.push(Check {
                chip: "transmitter",
                basis: b,
                index: i,
                metric: "fidelity",
                value: f,
                pass: f >= 1.0 - VERIFY_TOL,
            });
        }
    }
    for b in Basis::ALL {
        let u = bob_unitary(b);
        for i in 0..DIM {
            let p = u.apply(&b.state(i)?).powers()[bob_permutation(b)[i]];
            checks.push(Check {
                chip: "receiver",
                basis: b,
                index: i,
                metric: "contrast",
                value: p,
                pass: p >= 1.0 - VERIFY_TOL,
            });
            let mut flat: f64 = 0.0;
            for other in Basis::ALL.into_iter().filter(|&o| o != b) {
                let q = u.apply(&other.state(i)?).powers();
                flat = q.iter().map(|x| (x - 0.25).abs()).fold(flat, f64::max);
            }
            checks.push(Check {
                chip: "receiver",
                basis: b,
                index: i,
                metric: "wrong_basis_flatness",
                value: flat,
                pass: flat <= VERIFY_TOL,
            });
        }
    }
    let text = match format {
        Format::Json => output::json_document(&checks)?,
        Format::Csv => output::csv_document(
            &["chip", "basis", "index", "metric", "value", "pass"],
            checks.iter().map(|c| {
                vec![
                    c.chip.to_string(),
                    c.basis.to_string(),
                    c.index.to_string(),
                    c.metric.to_string(),
                    fmt_g9(c.value),
                    c.pass.to_string(),
                ]
            }),
        )?,
    };
    if let Some(bad) = checks.iter().find(|c| !c.pass) {
        return Err(Error::Configuration(format!(
            "{} {} state {} fails {} ({})",
            bad.chip, bad.basis, bad.index, bad.metric, bad.value
        )));
    }
    Ok(text)
}
