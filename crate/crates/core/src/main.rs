use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use barnacle::ingest::{read_text, write_text, Bundle, CLONE_TABLE};
use barnacle::report::{compare, report, AssemblyView};
use barnacle::sim::{simulate, GroundTruth, SimParams, SIM_PARAMS, TRUTH};
use barnacle::{pipeline, Error, PipelineParams};

#[derive(Parser)]
#[command(name = "barnacle", version, about = "Clone-based whole-genome assembly")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat key=value parameter file
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    /// Override one parameter, e.g. --set min_identity=0.98
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble an input bundle directory
    Assemble {
        bundle: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Write a simulated bundle and its ground truth
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Warp histogram and summary tables for one assembly
    Report {
        assembly: PathBuf,
        /// Bundle directory holding the clone table
        #[arg(long)]
        bundle: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Compare two assemblies of the same bundle
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        /// Ground truth written by `simulate`
        #[arg(long)]
        truth: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn split_kv(s: &str) -> Result<(&str, &str), Error> {
    s.split_once('=').ok_or_else(|| Error::InvalidParam {
        key: s.to_string(),
        msg: "expected key=value".into(),
    })
}

fn pipeline_params(c: &Common) -> Result<PipelineParams, Error> {
    let mut p = match &c.params {
        Some(path) => PipelineParams::from_text(&read_text(path)?)?,
        None => PipelineParams::default(),
    };
    for kv in &c.set {
        let (k, v) = split_kv(kv)?;
        p.set(k, v)?;
    }
    if let Some(s) = c.seed {
        p.random_seed = s;
    }
    p.validate()?;
    Ok(p)
}

fn sim_params(c: &Common) -> Result<SimParams, Error> {
    let mut p = match &c.params {
        Some(path) => SimParams::from_text(&read_text(path)?)?,
        None => SimParams::default(),
    };
    for kv in &c.set {
        let (k, v) = split_kv(kv)?;
        p.set(k, v)?;
    }
    if let Some(s) = c.seed {
        p.seed = s;
    }
    p.validate()?;
    Ok(p)
}

fn load_bundle(dir: &Path) -> Result<barnacle::ingest::Inputs, Error> {
    let table = dir.join(CLONE_TABLE);
    if !table.exists() {
        return Err(Error::MissingArtifact(table));
    }
    let inputs = Bundle::read(dir)?.parse()?;
    for w in &inputs.warnings {
        log::warn!("{w}");
    }
    Ok(inputs)
}

fn run(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Assemble { bundle, common } => {
            let params = pipeline_params(&common)?;
            let inputs = load_bundle(&bundle)?;
            let asm = pipeline::assemble(&inputs, &params)?;
            asm.write_artifacts(&inputs.dataset, &common.out)?;
            info!("summary\n{}", asm.write_summary());
            println!(
                "{} contigs, {} of {} fragments used; artifacts in {}",
                asm.contigs.len(),
                asm.counts.fragments_used,
                inputs.dataset.fragments.len(),
                common.out.display()
            );
        }
        Command::Simulate { common } => {
            let params = sim_params(&common)?;
            info!("simulation parameters\n{}", params.to_text());
            let sim = simulate(&params)?;
            sim.bundle().write(&common.out)?;
            write_text(&common.out.join(TRUTH), &sim.truth.to_text())?;
            write_text(&common.out.join(SIM_PARAMS), &params.to_text())?;
            println!(
                "{} clones, {} fragments, {} alignments written to {}",
                sim.dataset.clones.len(),
                sim.dataset.fragments.len(),
                sim.alignments.len(),
                common.out.display()
            );
        }
        Command::Report { assembly, bundle, common } => {
            let params = pipeline_params(&common)?;
            let inputs = load_bundle(&bundle)?;
            let view = AssemblyView::load(&assembly)?;
            let r = report(&view, &inputs.dataset, params.long_bac_length_flag)?;
            std::fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
            write_text(&common.out.join("report.txt"), &r.text)?;
            write_text(&common.out.join("warp_histogram.tsv"), &r.warp_tsv)?;
            write_text(&common.out.join("length_histogram.tsv"), &r.length_tsv)?;
            write_text(&common.out.join("summary.tsv"), &r.summary_tsv)?;
            print!("{}", r.text);
        }
        Command::Compare { a, b, bundle, truth, common } => {
            let params = pipeline_params(&common)?;
            let inputs = load_bundle(&bundle)?;
            let va = AssemblyView::load(&a)?;
            let vb = AssemblyView::load(&b)?;
            let truth = truth.map(|p| read_text(&p).and_then(|t| GroundTruth::parse(&t))).transpose()?;
            let c = compare(&va, &vb, &inputs.dataset, truth.as_ref(), params.long_bac_length_flag)?;
            for w in &c.warnings {
                log::warn!("{w}");
            }
            std::fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
            let mut text = c.text.clone();
            if let Some((ma, mb)) = &c.metrics {
                text.push_str("\nA\n");
                text.push_str(&ma.to_text());
                text.push_str("\nB\n");
                text.push_str(&mb.to_text());
            }
            write_text(&common.out.join("comparison.txt"), &text)?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let verbose = match &cli.command {
        Command::Assemble { common, .. }
        | Command::Simulate { common }
        | Command::Report { common, .. }
        | Command::Compare { common, .. } => common.verbose,
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if verbose { "info" } else { "warn" }))
        .format_timestamp(None)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 2 } else { 1 })
        }
    }
}
