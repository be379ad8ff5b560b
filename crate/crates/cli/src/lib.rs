//! The `evoipd` command line.

pub mod config;
pub mod manifest;
pub mod report;
pub mod stages;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use evoipd_core::bank::{Attitude, AttitudeBank, BankSet};
use evoipd_core::dsl;
use evoipd_core::game::PayoffMatrix;
use evoipd_core::ingest::{
    self, ChatTransport, FixtureTransport, GenerationJob, HttpTransport, PromptStyle, RecordingTransport,
};

use config::ExperimentConfig;
use manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_STAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("stage failed: {0}")]
    Stage(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Stage(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Stage(_) => EXIT_STAGE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "evoipd", version, about = "Iterated Prisoner's Dilemma experiments with attitude-labelled strategy banks")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML config, or a previous run_manifest.json to replay.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bank set, or a root laid out as <model>/<style>/<attitude>/.
    #[arg(long)]
    pub banks: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rounds: Option<u32>,
    /// Payoffs as R,T,S,P.
    #[arg(long, value_delimiter = ',')]
    pub payoffs: Option<Vec<i64>>,
    /// Accept payoff matrices that are not a Prisoner's Dilemma.
    #[arg(long)]
    pub allow_any_matrix: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate strategy files, optionally auditing bank sets.
    Validate {
        paths: Vec<PathBuf>,
        /// Also audit every bank set under --banks.
        #[arg(long)]
        audit: bool,
        #[command(flatten)]
        common: Common,
    },
    /// All-play-all tournaments over every bank member.
    Tournament {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        noise: Option<Vec<f64>>,
        #[arg(long)]
        repetitions: Option<u32>,
        #[arg(long)]
        keep_matches: bool,
    },
    /// Moran processes over attitude-agent populations.
    Moran {
        #[command(flatten)]
        common: Common,
        /// Initial populations such as 4:4:4 or 8:2:2.
        #[arg(long, value_delimiter = ',')]
        initial: Option<Vec<String>>,
        #[arg(long)]
        runs: Option<u32>,
        #[arg(long, value_delimiter = ',')]
        noise: Option<Vec<f64>>,
        #[arg(long)]
        population: Option<usize>,
        #[arg(long)]
        max_iterations: Option<u64>,
        /// Never let the parent replace itself.
        #[arg(long)]
        exclude_parent: bool,
        /// Disable the match cache for deterministic banks.
        #[arg(long)]
        no_memo: bool,
    },
    /// Attitude-agents against the classic roster.
    Beaufils {
        #[command(flatten)]
        common: Common,
        /// One classic strategy per line; `#` starts a comment.
        #[arg(long)]
        roster: Option<PathBuf>,
        #[arg(long)]
        repetitions: Option<u32>,
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Generate a strategy bank through a chat-completions endpoint.
    Generate(GenerateArgs),
    /// validate, tournament, moran and beaufils in sequence.
    RunAll {
        #[command(flatten)]
        common: Common,
    },
    /// Print result tables from an output directory.
    Report {
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value = "https://api.openai.com/v1/chat/completions")]
    pub endpoint: String,
    /// Model that writes the natural-language strategies.
    #[arg(long, alias = "author-model")]
    pub model: String,
    /// Model that converts them to the DSL (default: same as --model).
    #[arg(long)]
    pub converter_model: Option<String>,
    #[arg(long, default_value = "default")]
    pub style: String,
    /// aggressive, cooperative, neutral or all.
    #[arg(long, default_value = "all")]
    pub attitude: String,
    #[arg(long, default_value_t = 25)]
    pub count: usize,
    /// Banks root; the bank set goes to <out>/<model>/<style>/.
    #[arg(long, default_value = "banks")]
    pub out: PathBuf,
    /// Replay recorded responses instead of calling the endpoint.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// Record every exchange as a fixture.
    #[arg(long)]
    pub record: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub max_retries: u32,
    #[arg(long, default_value_t = 25)]
    pub max_rejections: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,
    #[arg(long, default_value_t = 1000)]
    pub rounds: u32,
}

fn resolve(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut c = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(b) = &common.banks {
        c.banks = b.clone();
    }
    if let Some(o) = &common.out {
        c.out = o.clone();
    }
    if let Some(s) = common.seed {
        c.seed = s;
    }
    if let Some(r) = common.rounds {
        c.rounds = r;
    }
    if let Some(p) = &common.payoffs {
        let [r, t, s, p] = p[..]
            .try_into()
            .map_err(|_| CliError::Config(format!("--payoffs takes R,T,S,P, got {} values", p.len())))?;
        c.payoffs = PayoffMatrix::new_unchecked(r, t, s, p);
    }
    c.allow_any_matrix |= common.allow_any_matrix;
    Ok(c)
}

/// Runs `body` under a manifest that is marked complete only on success.
fn with_manifest(
    command: &str,
    config: &ExperimentConfig,
    body: impl FnOnce(&[BankSet], &mut RunManifest) -> Result<(), CliError>,
) -> Result<(), CliError> {
    config.validate()?;
    let sets = stages::load_bank_sets(&config.banks)?;
    std::fs::create_dir_all(&config.out).map_err(|e| CliError::io(&config.out, e))?;
    let mut m = RunManifest::new(command, config);
    m.write(&config.out)?;
    let result = body(&sets, &mut m);
    match &result {
        Ok(()) => m.complete = true,
        Err(e) => m.error = Some(e.to_string()),
    }
    m.write(&config.out)?;
    result
}

fn stage<T>(m: &mut RunManifest, name: &str, f: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
    match f() {
        Ok(v) => {
            m.stage(name, "ok", None);
            Ok(v)
        }
        Err(e) => {
            m.stage(name, "failed", Some(e.to_string()));
            Err(e)
        }
    }
}

fn validate_files(paths: &[PathBuf]) -> Result<bool, CliError> {
    let mut ok = true;
    for root in paths {
        for f in stages::ipd_files(root)? {
            let src = std::fs::read_to_string(&f).map_err(|e| CliError::io(&f, e))?;
            match dsl::parse(&src) {
                Err(e) => {
                    ok = false;
                    println!("{}: {e}", f.display());
                }
                Ok(spec) => {
                    let diags = dsl::validate(&spec);
                    ok &= !dsl::has_errors(&diags);
                    if diags.is_empty() {
                        println!("{}: ok", f.display());
                    }
                    for d in diags {
                        println!("{}: {d}", f.display());
                    }
                }
            }
        }
    }
    Ok(ok)
}

fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let style: PromptStyle = args.style.parse().map_err(CliError::Config)?;
    let attitudes: Vec<Attitude> = if args.attitude == "all" {
        Attitude::ALL.to_vec()
    } else {
        vec![args.attitude.parse().map_err(CliError::Config)?]
    };
    let transport: Box<dyn ChatTransport> = match &args.fixtures {
        Some(dir) => Box::new(FixtureTransport::new(dir)),
        None => {
            let http = HttpTransport::from_env(&args.endpoint).map_err(|e| CliError::Config(e.to_string()))?;
            match &args.record {
                Some(dir) => Box::new(RecordingTransport::new(http, dir)),
                None => Box::new(http),
            }
        }
    };
    let set_dir = args.out.join(&args.model).join(style.as_str());
    let generated_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let mut peers: Vec<Arc<AttitudeBank>> = Attitude::ALL
        .iter()
        .filter(|a| !attitudes.contains(a))
        .filter_map(|&a| evoipd_core::bank::load_bank(&set_dir.join(a.as_str()), a).ok().map(Arc::new))
        .collect();
    for attitude in attitudes {
        let job = GenerationJob {
            converter_model: args.converter_model.clone().unwrap_or_else(|| args.model.clone()),
            count: args.count,
            max_retries: args.max_retries,
            max_rejections: args.max_rejections,
            seed: args.seed,
            rounds: args.rounds,
            parallelism: args.parallelism,
            generated_at: Some(generated_at.clone()),
            ..GenerationJob::new(&args.model, style, attitude)
        };
        log::info!("generating {count} {attitude} strategies into {}", set_dir.display(), count = job.count);
        let built = ingest::build_bank(&job, transport.as_ref(), transport.as_ref(), &set_dir, &peers).map_err(|e| match e {
            ingest::IngestError::Config(c) => CliError::Config(c.0),
            other => CliError::Stage(other.to_string()),
        })?;
        println!(
            "{attitude}: {} admitted, {} rejected{}",
            built.report.admitted,
            built.report.rejections.len(),
            built.report.faithful.map(|f| format!(", faithful={f}")).unwrap_or_default()
        );
        peers.push(Arc::new(built.bank));
    }
    Ok(())
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { paths, audit, common } => {
            let config = resolve(&common)?;
            let targets = if paths.is_empty() { vec![config.banks.clone()] } else { paths };
            let ok = validate_files(&targets)?;
            if audit {
                let sets = stages::load_bank_sets(&config.banks)?;
                for a in stages::audit(&sets, &config)? {
                    println!("{}: faithful={}", a.bank_set, a.faithful);
                }
            }
            if ok {
                Ok(())
            } else {
                Err(CliError::Stage("some strategies failed validation".into()))
            }
        }
        Command::Tournament { common, noise, repetitions, keep_matches } => {
            let mut c = resolve(&common)?;
            if let Some(n) = noise {
                c.noise = n;
            }
            if let Some(r) = repetitions {
                c.tournament.repetitions = r;
            }
            c.tournament.keep_matches |= keep_matches;
            with_manifest("tournament", &c.clone(), |sets, m| {
                stage(m, "tournament", || stages::tournament(sets, &c, &c.out))
            })
        }
        Command::Moran { common, initial, runs, noise, population, max_iterations, exclude_parent, no_memo } => {
            let mut c = resolve(&common)?;
            if let Some(i) = initial {
                c.moran.initial = i;
            }
            if let Some(r) = runs {
                c.moran.runs = r;
            }
            if let Some(n) = noise {
                c.noise = n;
            }
            if let Some(p) = population {
                c.moran.population = p;
            }
            if let Some(m) = max_iterations {
                c.moran.max_iterations = m;
            }
            c.moran.exclude_parent |= exclude_parent;
            c.moran.memoize &= !no_memo;
            with_manifest("moran", &c.clone(), |sets, m| run_moran(sets, &c, m))
        }
        Command::Beaufils { common, roster, repetitions, noise } => {
            let mut c = resolve(&common)?;
            if let Some(path) = roster {
                c.beaufils.roster = config::read_roster(&path)?;
            }
            if let Some(r) = repetitions {
                c.beaufils.repetitions = r;
            }
            if let Some(n) = noise {
                c.beaufils.noise = n;
            }
            with_manifest("beaufils", &c.clone(), |sets, m| stage(m, "beaufils", || stages::beaufils(sets, &c, &c.out)))
        }
        Command::Generate(args) => generate(&args),
        Command::RunAll { common } => {
            let c = resolve(&common)?;
            with_manifest("run-all", &c.clone(), |sets, m| run_all(sets, &c, m))
        }
        Command::Report { out } => {
            print!("{}", report::render(&out)?);
            Ok(())
        }
    }
}

fn run_moran(sets: &[BankSet], c: &ExperimentConfig, m: &mut RunManifest) -> Result<(), CliError> {
    let failed = stage(m, "moran", || stages::moran(sets, c, &c.out))?;
    if failed > 0 {
        return Err(CliError::Stage(format!("{failed} moran runs did not reach fixation")));
    }
    Ok(())
}

pub fn run_all(sets: &[BankSet], c: &ExperimentConfig, m: &mut RunManifest) -> Result<(), CliError> {
    m.audits = stage(m, "validate", || stages::audit(sets, c))?;
    stage(m, "tournament", || stages::tournament(sets, c, &c.out))?;
    run_moran(sets, c, m)?;
    stage(m, "beaufils", || stages::beaufils(sets, c, &c.out))?;
    Ok(())
}

/// Parses `args`, runs the command on a pool of `--threads` workers and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_CONFIG;
        }
    };
    match pool.install(|| execute(cli.command)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
