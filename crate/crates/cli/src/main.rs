use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use barklab_core::classify::Family;
use barklab_core::corpus::{
    corpus_stats, load_manifest, run_stages, write_report, write_stats, ExplainMode, Manifest, PipelineConfig,
    RunOptions, Stage,
};
use barklab_core::synth::{generate, SynthSpec};
use barklab_core::{Error, FeatureSetId};

/// Exit codes.
const OK: u8 = 0;
const VALIDATION: u8 = 1;
const STAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "barklab", version, about = "Vocalization analysis across host language environments")]
struct Cli {
    /// Worker threads for per-clip work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clip counts, length mean/variance, language and scene shares.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
        /// Also write stats.csv and scenes.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect events, drop noisy sentences, split into words.
    Segment(StageArgs),
    /// Compute feature sets for dog words and host speech.
    Extract(StageArgs),
    /// Enumerate context-matched clip pairs.
    Pair(StageArgs),
    /// Cross-validate every feature set and model family.
    Train(StageArgs),
    /// Shapley attribution and dog/host correlation.
    Explain(StageArgs),
    /// Syllable rates per group.
    Speed(StageArgs),
    /// Assemble the report bundle from existing stage outputs.
    Report {
        #[arg(long, env = "BARKLAB_OUT")]
        out: PathBuf,
    },
    /// Run several stages in order (all by default).
    Pipeline {
        #[command(flatten)]
        args: StageArgs,
        /// Comma-separated subset, e.g. `segment,extract`.
        #[arg(long, value_delimiter = ',')]
        stages: Vec<String>,
    },
    /// Generate a synthetic corpus with planted ground truth.
    Synth {
        #[arg(long, env = "BARKLAB_OUT")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Preset::Separable)]
        preset: Preset,
        /// JSON spec file; overrides the preset.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        clips_per_group: Option<usize>,
        #[arg(long)]
        snr_db: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// F0 and AM rate each separate the groups.
    Separable,
    /// F0 and AM rate distributions overlap between groups.
    Overlapping,
}

#[derive(Args)]
struct StageArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, env = "BARKLAB_OUT")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Feature sets to use (repeatable or comma-separated).
    #[arg(long = "feature-set", value_delimiter = ',')]
    feature_sets: Vec<FeatureSetId>,
    /// Model families to cross-validate (repeatable or comma-separated).
    #[arg(long = "family", value_delimiter = ',')]
    families: Vec<Family>,
    /// Minimum activity cosine for a context match [default: 0.95].
    #[arg(long)]
    cos_threshold: Option<f64>,
    /// Attribution above this is prominent [default: 0.04].
    #[arg(long)]
    prominence_cutoff: Option<f64>,
    /// Cross-validation folds [default: 5].
    #[arg(long)]
    folds: Option<usize>,
    /// Pairs sampled per class (all when omitted).
    #[arg(long)]
    quota: Option<usize>,
    /// Explained feature set [default: gemaps_lite].
    #[arg(long)]
    explain_set: Option<FeatureSetId>,
    /// Explained model family [default: gradient_boosted_trees].
    #[arg(long)]
    explain_family: Option<Family>,
    #[arg(long, value_enum)]
    explain_mode: Option<ModeArg>,
    /// Ignore the ledger and re-run.
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Clip,
    Pair,
}

impl StageArgs {
    /// Manifest defaults with command-line overrides applied.
    fn config(&self, manifest: &Manifest) -> PipelineConfig {
        let mut c = manifest.header.defaults.clone();
        if !self.feature_sets.is_empty() {
            c.feature_sets = self.feature_sets.clone();
        }
        if !self.families.is_empty() {
            c.classify.families = self.families.clone();
        }
        if let Some(v) = self.cos_threshold {
            c.pairing.cos_threshold = v;
        }
        if let Some(v) = self.prominence_cutoff {
            c.explain.shap.prominence_cutoff = v;
        }
        if let Some(v) = self.folds {
            c.classify.folds = v;
        }
        if self.quota.is_some() {
            c.pairing.per_class_quota = self.quota;
        }
        if let Some(v) = self.explain_set {
            c.explain.feature_set = v;
        }
        if let Some(v) = self.explain_family {
            c.explain.family = v;
        }
        match self.explain_mode {
            Some(ModeArg::Clip) => c.explain.mode = ExplainMode::Clip,
            Some(ModeArg::Pair) => c.explain.mode = ExplainMode::Pair,
            None => {}
        }
        c
    }
}

fn run_pipeline(args: &StageArgs, stages: &[Stage]) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let opts = RunOptions {
        out_dir: args.out.clone(),
        seed: args.seed,
        config: args.config(&manifest),
        force: args.force,
    };
    for o in run_stages(&manifest, stages, &opts)? {
        let status = if o.skipped { "up to date" } else { "done" };
        println!("{:<8} {status}", o.stage.as_str());
        for p in &o.outputs {
            println!("         {}", p.display());
        }
    }
    Ok(())
}

fn stats(manifest: &Path, out: Option<&Path>) -> Result<()> {
    let m = load_manifest(manifest)?;
    let s = corpus_stats(&m);
    println!("{:<12} {:>7} {:>10} {:>10} {:>7} {:>7}", "kind", "clips", "avg_len_s", "var_len_s", "En%", "Ja%");
    for k in &s.kinds {
        let pct = |l| k.lang_pct.get(&l).copied().unwrap_or(0.0);
        println!(
            "{:<12} {:>7} {:>10.3} {:>10.3} {:>7.2} {:>7.2}",
            k.kind.as_str(),
            k.n,
            k.mean_len_s,
            k.var_len_s,
            pct(barklab_core::LangEnv::En),
            pct(barklab_core::LangEnv::Ja)
        );
    }
    if s.scenes.iter().any(|x| x.n > 0) {
        println!();
        println!("{:<20} {:>7} {:>7}", "scene", "clips", "%");
        for x in &s.scenes {
            println!("{:<20} {:>7} {:>7.2}", format!("{:?}", x.scene), x.n, x.pct);
        }
    }
    if let Some(out) = out {
        write_stats(&s, out)?;
        let path = out.join("stats.json");
        std::fs::write(&path, serde_json::to_string_pretty(&s)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn synth(
    out: &Path,
    seed: u64,
    preset: Preset,
    spec: Option<&Path>,
    clips: Option<usize>,
    snr: Option<f64>,
) -> Result<()> {
    let mut s = match spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).map_err(Error::from)?
        }
        None => match preset {
            Preset::Separable => SynthSpec { seed, ..SynthSpec::default() },
            Preset::Overlapping => SynthSpec::overlapping(seed),
        },
    };
    if let Some(n) = clips {
        s.n_clips_per_group = n;
    }
    if let Some(v) = snr {
        s.noise_snr_db = v;
    }
    let o = generate(&s, out, &PipelineConfig::default())?;
    println!("manifest {}", o.manifest_path.display());
    println!("truth    {}", o.truth_path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        rayon_pool(n)?;
    }
    match cli.command {
        Command::Stats { manifest, out } => stats(&manifest, out.as_deref()),
        Command::Segment(a) => run_pipeline(&a, &[Stage::Segment]),
        Command::Extract(a) => run_pipeline(&a, &[Stage::Extract]),
        Command::Pair(a) => run_pipeline(&a, &[Stage::Pair]),
        Command::Train(a) => run_pipeline(&a, &[Stage::Train]),
        Command::Explain(a) => run_pipeline(&a, &[Stage::Explain]),
        Command::Speed(a) => run_pipeline(&a, &[Stage::Speed]),
        Command::Report { out } => {
            for p in write_report(&out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Pipeline { args, stages } => {
            let stages = if stages.is_empty() {
                Stage::ALL.to_vec()
            } else {
                stages.iter().map(|s| s.parse()).collect::<Result<Vec<Stage>, _>>()?
            };
            run_pipeline(&args, &stages)
        }
        Command::Synth {
            out,
            seed,
            preset,
            spec,
            clips_per_group,
            snr_db,
        } => synth(&out, seed, preset, spec.as_deref(), clips_per_group, snr_db),
    }
}

fn rayon_pool(n: usize) -> Result<()> {
    barklab_core::set_threads(n).context("configuring worker threads")
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Manifest(_) | Error::InvalidArgument(_)) => VALIDATION,
        _ => STAGE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { VALIDATION } else { OK });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::from(OK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
