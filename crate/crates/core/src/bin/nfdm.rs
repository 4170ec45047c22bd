use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nfdm::calibration::{calibrate_evolution_constant, CalibrationSetup};
use nfdm::config::ExperimentConfig;
use nfdm::design::{build_codebook, Codebook};
use nfdm::pipeline::{detect_frames, load_frames, run_experiment, save_frames, transmit_all, ExperimentOutput};
use nfdm::{Error, Result};

/// Multi-soliton OOK design and link simulation.
#[derive(Parser)]
#[command(name = "nfdm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure the spectral evolution constant with the split-step channel.
    Calibrate {
        #[arg(long, default_value_t = 2000.0)]
        length_km: f64,
    },
    /// Design a codebook from the grid and rules sections.
    Design {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate the link and store the received frames.
    Transmit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        codebook: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Detect stored frames and write the report.
    Detect {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        codebook: Option<PathBuf>,
        #[arg(long)]
        input_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Design (or load), transmit and detect in one go.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        codebook: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Repeat `run` over values of one link parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        codebook: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    Loops,
    NfDb,
    LaunchGain,
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{body}");
            ExitCode::from(2)
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
}

fn codebook_for(cfg: &ExperimentConfig, explicit: Option<&Path>) -> Result<(Codebook, bool)> {
    if let Some(p) = explicit.map(Path::to_path_buf).or_else(|| cfg.codebook_path()) {
        return Ok((Codebook::load(p)?, false));
    }
    let book = build_codebook(
        &cfg.eigenvalue_grid()?,
        &cfg.patterns()?,
        &cfg.design_rules()?,
        cfg.rules.strategy,
        cfg.seeds.patterns,
    )?;
    Ok((book, true))
}

fn write_outputs(out_dir: &Path, out: &ExperimentOutput) -> Result<()> {
    out.report.save(out_dir.join("report.json"))?;
    out.report.write_scatter_csv(out_dir.join("scatter.csv"))?;
    if let Some(bw) = &out.bandwidth {
        bw.write_csv(out_dir.join("bandwidth.csv"))?;
    }
    Ok(())
}

fn print_summary(out: &ExperimentOutput) {
    let r = &out.report;
    println!(
        "{}",
        serde_json::json!({
            "ber": r.ber,
            "bit_errors": r.bit_errors,
            "total_bits": r.total_bits,
            "osnr_analytic_db": r.osnr_analytic_db,
            "osnr_empirical_db": r.osnr_empirical_db,
        })
    );
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Calibrate { length_km } => {
            let setup = CalibrationSetup { length_km, ..CalibrationSetup::default() };
            let report = calibrate_evolution_constant(&setup)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Design { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let book = build_codebook(
                &cfg.eigenvalue_grid()?,
                &cfg.patterns()?,
                &cfg.design_rules()?,
                cfg.rules.strategy,
                cfg.seeds.patterns,
            )?;
            book.save(&out)?;
            println!("{}", serde_json::json!({ "entries": book.entries.len(), "max_duration": book.max_duration() }));
        }
        Command::Transmit { config, codebook, out_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (book, designed) = codebook_for(&cfg, codebook.as_deref())?;
            create_dir(&out_dir)?;
            if designed {
                book.save(out_dir.join("codebook.json"))?;
            }
            let frames = transmit_all(&book, &cfg.experiment_setup()?)?;
            save_frames(&out_dir, &frames)?;
            println!("{}", serde_json::json!({ "frames": frames.len() }));
        }
        Command::Detect { config, codebook, input_dir, out_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let explicit = codebook.or_else(|| {
                let stored = input_dir.join("codebook.json");
                stored.exists().then_some(stored)
            });
            let (book, _) = codebook_for(&cfg, explicit.as_deref())?;
            let frames = load_frames(&input_dir)?;
            let out = detect_frames(&book, &cfg.experiment_setup()?, &frames)?;
            create_dir(&out_dir)?;
            write_outputs(&out_dir, &out)?;
            print_summary(&out);
        }
        Command::Run { config, codebook, out_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (book, designed) = codebook_for(&cfg, codebook.as_deref())?;
            create_dir(&out_dir)?;
            if designed {
                book.save(out_dir.join("codebook.json"))?;
            }
            let out = run_experiment(&book, &cfg.experiment_setup()?)?;
            write_outputs(&out_dir, &out)?;
            print_summary(&out);
        }
        Command::Sweep { config, codebook, out_dir, param, values } => {
            let base = ExperimentConfig::load(&config)?;
            let (book, designed) = codebook_for(&base, codebook.as_deref())?;
            create_dir(&out_dir)?;
            if designed {
                book.save(out_dir.join("codebook.json"))?;
            }
            let mut csv = String::from("param,value,ber,bit_errors,total_bits,osnr_analytic_db\n");
            let name = match param {
                SweepParam::Loops => "loops",
                SweepParam::NfDb => "nf_db",
                SweepParam::LaunchGain => "launch_gain",
            };
            for (i, v) in values.iter().enumerate() {
                let mut cfg = base.clone();
                match param {
                    SweepParam::Loops => {
                        if *v < 0.0 || v.fract() != 0.0 {
                            return Err(Error::Config { path: "sweep.values".into(), message: format!("loops must be a whole number, got {v}") });
                        }
                        cfg.link.loops = *v as usize;
                    }
                    SweepParam::NfDb => cfg.link.nf_db = Some(*v),
                    SweepParam::LaunchGain => cfg.link.launch_gain = *v,
                }
                cfg.validate()?;
                let out = run_experiment(&book, &cfg.experiment_setup()?)?;
                out.report.save(out_dir.join(format!("report_{i:02}.json")))?;
                let r = &out.report;
                let osnr = r.osnr_analytic_db.map(|o| o.to_string()).unwrap_or_default();
                csv.push_str(&format!("{name},{v},{},{},{},{osnr}\n", r.ber, r.bit_errors, r.total_bits));
            }
            let path = out_dir.join("sweep.csv");
            std::fs::write(&path, &csv).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            print!("{csv}");
        }
    }
    Ok(())
}
