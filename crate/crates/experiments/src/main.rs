use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use temsnn_experiments::plot::{render_plots, Metric, PlotKind};
use temsnn_experiments::results::write_summary_csv;
use temsnn_experiments::{
    run_single_layer_grid, run_single_layer_noise_grid, run_two_layer_sweep, ExperimentConfig,
    ResultTable, RunOptions,
};

#[derive(Parser, Debug)]
#[command(
    name = "temsnn",
    version,
    about = "Teacher-student experiments for spiking networks of time encoding machines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One-layer error over examples × exposure.
    SingleGrid(RunArgs),
    /// One-layer error over examples × spike-time SNR.
    SingleNoise(RunArgs),
    /// Two-layer error quartiles over exposure.
    TwoSweep(RunArgs),
    /// Render a figure from a saved result table.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML configuration; the bundled defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `trials`.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
    /// Also write SVG figures next to the table.
    #[arg(long)]
    plot: bool,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Result table written by one of the experiment commands.
    #[arg(long)]
    table: PathBuf,
    #[arg(long, value_enum)]
    kind: PlotKind,
    #[arg(long, value_enum, default_value = "w1")]
    metric: Metric,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => ExperimentConfig::default_config(),
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn save(table: &ResultTable, dir: &Path, stem: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(format!("{stem}.csv"));
    table.save(&path)?;
    let summary = dir.join(format!("{stem}_summary.csv"));
    write_summary_csv(&table.summarize(), fs::File::create(&summary)?)?;
    println!("wrote {} and {}", path.display(), summary.display());
    Ok(())
}

fn plot(
    table: &ResultTable,
    dir: &Path,
    stem: &str,
    kind: PlotKind,
    metrics: &[Metric],
) -> Result<()> {
    for &metric in metrics {
        let suffix = if metrics.len() > 1 {
            format!("_{metric:?}").to_lowercase()
        } else {
            String::new()
        };
        let path = dir.join(format!("{stem}{suffix}.svg"));
        render_plots(table, kind, metric, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::SingleGrid(args) => {
            let cfg = load_config(&args)?;
            let table = run_single_layer_grid(
                &cfg,
                &RunOptions {
                    parallelism: args.parallelism,
                },
            )?;
            save(&table, &cfg.output_dir, "single_grid")?;
            if args.plot {
                plot(
                    &table,
                    &cfg.output_dir,
                    "single_grid",
                    PlotKind::Heatmap,
                    &[Metric::W1],
                )?;
            }
        }
        Command::SingleNoise(args) => {
            let cfg = load_config(&args)?;
            let table = run_single_layer_noise_grid(
                &cfg,
                &RunOptions {
                    parallelism: args.parallelism,
                },
            )?;
            save(&table, &cfg.output_dir, "single_noise")?;
            if args.plot {
                plot(
                    &table,
                    &cfg.output_dir,
                    "single_noise",
                    PlotKind::Heatmap,
                    &[Metric::W1],
                )?;
            }
        }
        Command::TwoSweep(args) => {
            let cfg = load_config(&args)?;
            let table = run_two_layer_sweep(
                &cfg,
                &RunOptions {
                    parallelism: args.parallelism,
                },
            )?;
            save(&table, &cfg.output_dir, "two_sweep")?;
            if args.plot {
                plot(
                    &table,
                    &cfg.output_dir,
                    "two_sweep",
                    PlotKind::QuartileLines,
                    &[Metric::W1, Metric::W2],
                )?;
            }
        }
        Command::Plot(args) => {
            let table = ResultTable::load(&args.table)
                .with_context(|| format!("reading {}", args.table.display()))?;
            render_plots(&table, args.kind, args.metric, &args.out)?;
            println!("wrote {}", args.out.display());
        }
    }
    Ok(())
}
