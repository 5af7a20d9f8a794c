use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cerebellar_servo::controller::{write_cycle_csv, Reach};
use cerebellar_servo::harness::{self, ExperimentConfig};
use cerebellar_servo::metrics;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

mod plot;

#[derive(Parser, Debug)]
#[command(
    name = "cbservo",
    version,
    about = "Spiking cerebellar Smith predictor on a simulated planar arm"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run seed; overrides `task.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// TOML file with `[arm] [dm] [cb] [control] [task]` sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Use the cerebellum in task runs.
    #[arg(long, global = true, value_enum)]
    cb: Option<Switch>,

    /// Main iteration count of the command: babbling steps, cerebellar
    /// training cycles, radial repetitions or contour training laps.
    #[arg(long, global = true)]
    iterations: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Motor babbling: trains the differential map.
    Babble,
    /// Babbling, then random reaching with cerebellar learning.
    TrainCb,
    /// Random reaches with and without the trained cerebellum.
    ReachRandom,
    /// Eight-direction reaching with per-target training.
    ReachRadial,
    /// Figure-eight contour following.
    Contour,
    /// Recomputes metrics from a cycle CSV.
    Metrics {
        /// Cycle CSV written by a task command.
        cycles: PathBuf,
        /// Contour points CSV; contour metrics instead of reach metrics.
        #[arg(long)]
        contour: Option<PathBuf>,
    },
    /// Renders an SVG from a CSV written by a task command.
    Plot {
        #[arg(value_enum)]
        kind: plot::Kind,
        /// Input CSVs; trajectories are overlaid.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// SVG file to write; defaults to `<out>/<kind>.svg`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.task.seed = s;
    }
    if let Some(sw) = cli.cb {
        cfg.task.cb = sw == Switch::On;
    }
    if let Some(n) = cli.iterations {
        match cli.command {
            Command::Babble => cfg.task.babble_iterations = n,
            Command::TrainCb | Command::ReachRandom => cfg.task.cb_iterations = n,
            Command::ReachRadial => cfg.task.radial_repetitions = n,
            Command::Contour => cfg.task.contour_training_laps = n,
            _ => {}
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_reach(dir: &Path, name: &str, reach: &Reach) -> Result<()> {
    write_cycle_csv(
        &reach.records,
        create(&dir.join(format!("{name}_cycles.csv")))?,
    )?;
    harness::write_trajectory_csv(
        &reach.trajectory,
        create(&dir.join(format!("{name}_trajectory.csv")))?,
    )?;
    Ok(())
}

fn write_summary(
    out: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    results: serde_json::Value,
) -> Result<()> {
    let summary = json!({ "command": command, "config": cfg, "results": results });
    serde_json::to_writer_pretty(create(&out.join("summary.json"))?, &summary)?;
    Ok(())
}

fn write_points(path: &Path, points: &[[f64; 2]]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["x", "y"])?;
    for p in points {
        w.write_record([format!("{:?}", p[0]), format!("{:?}", p[1])])?;
    }
    w.flush()?;
    Ok(())
}

fn read_points(path: &Path) -> Result<Vec<[f64; 2]>> {
    let mut r = csv::Reader::from_path(path)?;
    r.records()
        .map(|row| {
            let row = row?;
            Ok([row[0].trim().parse()?, row[1].trim().parse()?])
        })
        .collect()
}

fn babble(cfg: &ExperimentConfig, out: &Path) -> Result<cerebellar_servo::diffmap::DiffMap> {
    let (mut dm, rows) = harness::babble(cfg)?;
    harness::write_babble_csv(&rows, create(&out.join("babble.csv"))?)?;
    dm.write_weights_csv(create(&out.join("dm_weights.csv"))?)?;
    let quality = harness::dm_quality(&mut dm, &cfg.arm.model, 100, cfg.task.seed)?;
    eprintln!(
        "babbling: {} iterations, directional fidelity {:.0}%",
        rows.len(),
        100.0 * quality.fidelity
    );
    fs::write(
        out.join("dm_quality.json"),
        serde_json::to_string_pretty(&quality)?,
    )?;
    Ok(dm)
}

fn run(cli: &Cli) -> Result<()> {
    let out = cli.out.as_path();
    match &cli.command {
        Command::Metrics { cycles, contour } => {
            let records = harness::read_cycle_csv(File::open(cycles)?)?;
            let cfg = load_config(cli)?;
            let value = match contour {
                Some(p) => {
                    let points = read_points(p)?;
                    let m = metrics::contour_metrics(
                        &records,
                        &points,
                        cfg.task.filter_beta,
                        cfg.control.cycle_ms,
                        0,
                    )?;
                    json!({
                        "max_error": m.max_error,
                        "max_filtered": m.max_filtered,
                        "mean_error": m.mean_error,
                        "completion_time": m.completion_time,
                    })
                }
                None => {
                    let start = records.first().map(|r| r.x_s).context("empty cycle file")?;
                    serde_json::to_value(metrics::reach_metrics(
                        &records,
                        start,
                        cfg.control.cycle_ms,
                    )?)?
                }
            };
            println!("{}", serde_json::to_string_pretty(&value)?);
            return Ok(());
        }
        Command::Plot {
            kind,
            inputs,
            output,
        } => {
            let path = output
                .clone()
                .unwrap_or_else(|| out.join(format!("{}.svg", kind.name())));
            let svg = plot::render(*kind, inputs)?;
            fs::create_dir_all(path.parent().unwrap_or(Path::new(".")))?;
            fs::write(&path, svg)?;
            eprintln!("wrote {}", path.display());
            return Ok(());
        }
        _ => {}
    }

    let cfg = load_config(cli)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.toml"), cfg.to_toml()?)?;
    match &cli.command {
        Command::Babble => {
            babble(&cfg, out)?;
            let quality: serde_json::Value =
                serde_json::from_str(&fs::read_to_string(out.join("dm_quality.json"))?)?;
            write_summary(out, "babble", &cfg, json!({ "dm_quality": quality }))?;
        }
        Command::TrainCb => {
            let dm = babble(&cfg, out)?;
            let (cb, training) = harness::train_cb_random(&cfg, &dm)?;
            cb.write_weights_csv(create(&out.join("cb_weights.csv"))?)?;
            let records: Vec<_> = training
                .iter()
                .flat_map(|r| r.records.iter().copied())
                .collect();
            write_cycle_csv(&records, create(&out.join("training_cycles.csv"))?)?;
            let errors: Vec<_> = training.iter().map(harness::reach_error).collect();
            eprintln!(
                "trained on {} reaches, {} cycles",
                training.len(),
                records.len()
            );
            write_summary(
                out,
                "train-cb",
                &cfg,
                json!({ "training_reaches": training.len(), "training_cycles": records.len(), "reach_errors": errors }),
            )?;
        }
        Command::ReachRandom => {
            let dm = babble(&cfg, out)?;
            if cfg.task.cb {
                let run = harness::run_random_reach(&cfg, &dm)?;
                run.cerebellum
                    .write_weights_csv(create(&out.join("cb_weights.csv"))?)?;
                for (k, (off, on)) in run.eval_off.iter().zip(&run.eval_on).enumerate() {
                    write_reach(&out.join("eval"), &format!("{k:02}_off"), off)?;
                    write_reach(&out.join("eval"), &format!("{k:02}_on"), on)?;
                }
                let s = &run.summary;
                eprintln!(
                    "max deviation {:.1} -> {:.1} mm ({:.0}% mean reduction); reach time {:.2} -> {:.2} s (x{:.2})",
                    1e3 * s.deviation.mean_off,
                    1e3 * s.deviation.mean_on,
                    100.0 * s.deviation.mean_reduction,
                    s.time.mean_off,
                    s.time.mean_on,
                    s.time.ratio
                );
                if let Some(&(start, target, noise)) = harness::eval_trials(&cfg).first() {
                    let mut frozen = run.cerebellum.clone();
                    frozen.set_learning(false);
                    let mut lp = harness::make_loop(&cfg, dm.clone(), Some(frozen))?;
                    let (_, raster) = harness::reach_with_raster(&mut lp, start, target, noise)?;
                    fs::write(out.join("eval").join("00_dcn_raster.csv"), raster)?;
                }
                write_summary(out, "reach-random", &cfg, serde_json::to_value(s)?)?;
            } else {
                let mut lp = harness::make_loop(&cfg, dm, None)?;
                let mut results = Vec::new();
                for (k, (start, target, noise)) in
                    harness::eval_trials(&cfg).into_iter().enumerate()
                {
                    let r = harness::reach_from(&mut lp, start, target, noise)?;
                    write_reach(&out.join("eval"), &format!("{k:02}_off"), &r)?;
                    results.push(metrics::reach_metrics(
                        &r.records,
                        start,
                        cfg.control.cycle_ms,
                    )?);
                }
                write_summary(out, "reach-random", &cfg, json!({ "off": results }))?;
            }
        }
        Command::ReachRadial => {
            let dm = babble(&cfg, out)?;
            let run = harness::run_radial(&cfg, &dm)?;
            for (t, reaches) in run.summary.targets.iter().zip(&run.reaches) {
                for ((reps, _), r) in t.checkpoints.iter().zip(reaches) {
                    write_reach(
                        &out.join("radial"),
                        &format!("{:03.0}deg_rep{reps}", t.angle_deg),
                        r,
                    )?;
                }
            }
            let s = &run.summary;
            eprintln!(
                "max deviation {:.1} -> {:.1} mm ({:.0}% mean reduction), {} of {} targets improve monotonically",
                1e3 * s.deviation.mean_off,
                1e3 * s.deviation.mean_on,
                100.0 * s.deviation.mean_reduction,
                s.monotone_targets,
                s.targets.len()
            );
            write_summary(out, "reach-radial", &cfg, serde_json::to_value(s)?)?;
        }
        Command::Contour => {
            let dm = babble(&cfg, out)?;
            let run = harness::run_contour(&cfg, &dm)?;
            write_points(&out.join("contour_points.csv"), &run.points)?;
            write_cycle_csv(
                &run.off.records,
                create(&out.join("contour_off_cycles.csv"))?,
            )?;
            harness::write_trajectory_csv(
                &run.off.trajectory,
                create(&out.join("contour_off_trajectory.csv"))?,
            )?;
            if let Some(on) = &run.on {
                write_cycle_csv(&on.records, create(&out.join("contour_on_cycles.csv"))?)?;
                harness::write_trajectory_csv(
                    &on.trajectory,
                    create(&out.join("contour_on_trajectory.csv"))?,
                )?;
            }
            let s = &run.summary;
            eprintln!(
                "contour off: max error {:.1} mm, {:.1} s, {} skipped",
                1e3 * s.off.max_error,
                s.off.completion_time,
                s.off.skipped
            );
            if let Some(on) = &s.on {
                eprintln!(
                    "contour on:  max error {:.1} mm, {:.1} s, {} skipped",
                    1e3 * on.max_error,
                    on.completion_time,
                    on.skipped
                );
            }
            write_summary(out, "contour", &cfg, serde_json::to_value(s)?)?;
        }
        Command::Metrics { .. } | Command::Plot { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
