//! Strategy generation through a chat endpoint, conversion to the DSL, and
//! admission checks.

pub mod prompts;
pub mod transport;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bank::{
    self, audit_bank, Attitude, AttitudeBank, BankError, ClassicKind, Manifest, ManifestEntry, Provenance,
    StrategyRef, MANIFEST_FILE,
};
use crate::dsl::{self, Severity, StrategySpec};
use crate::error::ConfigError;
use crate::game::{self, Action, MatchConfig, PayoffMatrix};
use crate::rng::{self, tag};

pub use transport::{
    fixture_key, ChatTransport, FixtureTransport, HttpTransport, Message, RecordingTransport, ScriptedTransport,
    TransportError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptStyle {
    Default,
    Refine,
    Prose,
}

impl PromptStyle {
    pub const ALL: [PromptStyle; 3] = [PromptStyle::Default, PromptStyle::Refine, PromptStyle::Prose];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptStyle::Default => "default",
            PromptStyle::Refine => "refine",
            PromptStyle::Prose => "prose",
        }
    }
}

impl fmt::Display for PromptStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptStyle::ALL
            .into_iter()
            .find(|p| p.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown prompt style `{s}` (expected default, refine or prose)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Admitted,
    ParseFailed,
    ValidationFailed,
    BehaviorMismatch,
    Inexpressible,
    Refused,
}

/// One request/response pair with the endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub phase: String,
    pub model: String,
    pub request: Vec<Message>,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub request: usize,
    pub natural_language: String,
    pub dsl_source: Option<String>,
    pub verdict: Verdict,
    pub diagnostics: Vec<String>,
    pub transcript: Vec<Exchange>,
}

#[derive(Debug, Clone)]
pub struct GenerationJob {
    pub author_model: String,
    pub converter_model: String,
    pub style: PromptStyle,
    pub attitude: Attitude,
    pub count: usize,
    /// Extra conversion attempts after a rejected program.
    pub max_retries: u32,
    /// Rejected strategies tolerated before `build_bank` gives up.
    pub max_rejections: usize,
    pub seed: u64,
    pub payoffs: PayoffMatrix,
    pub rounds: u32,
    /// Requests in flight at once.
    pub parallelism: usize,
    pub generated_at: Option<String>,
}

impl GenerationJob {
    pub fn new(model: impl Into<String>, style: PromptStyle, attitude: Attitude) -> Self {
        let model = model.into();
        GenerationJob {
            converter_model: model.clone(),
            author_model: model,
            style,
            attitude,
            count: 25,
            max_retries: 2,
            max_rejections: 25,
            seed: 0,
            payoffs: PayoffMatrix::default(),
            rounds: 1000,
            parallelism: 1,
            generated_at: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.count == 0 {
            return Err(ConfigError("count must be at least 1".into()));
        }
        if self.style == PromptStyle::Prose && prompts::SCENARIOS.len() < 4 {
            return Err(ConfigError("prose prompts need at least four scenarios".into()));
        }
        if self.parallelism == 0 {
            return Err(ConfigError("parallelism must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Bank(#[from] BankError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("gave up after {rejected} rejected strategies ({admitted} admitted); last verdict {last:?}")]
    ExhaustedRetries { admitted: usize, rejected: usize, last: Verdict },
}

const REFUSAL_OPENINGS: [&str; 9] = [
    "i can't",
    "i can’t",
    "i cannot",
    "i won't",
    "i will not",
    "i'm sorry",
    "i’m sorry",
    "i am sorry",
    "sorry, but",
];
const REFUSAL_PHRASES: [&str; 4] = ["unable to assist", "can't assist", "cannot assist", "cannot help with"];

pub fn is_refusal(text: &str) -> bool {
    let t = text.trim_start().to_lowercase();
    REFUSAL_OPENINGS.iter().any(|p| t.starts_with(p)) || REFUSAL_PHRASES.iter().any(|p| t.contains(p))
}

/// Removes a surrounding Markdown code fence, if any.
pub fn strip_code_fence(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else { return t };
    let body = rest.split_once('\n').map_or("", |(_, b)| b);
    body.trim_end().strip_suffix("```").unwrap_or(body).trim()
}

fn normalize(text: &str) -> String {
    text.replace("\r\n", "\n").trim().to_string()
}

struct Session<'a> {
    transcript: Vec<Exchange>,
    transport: &'a dyn ChatTransport,
}

impl Session<'_> {
    fn ask(&mut self, phase: &str, model: &str, request: Vec<Message>) -> Result<String, TransportError> {
        let response = self.transport.complete(model, &request)?;
        self.transcript.push(Exchange { phase: phase.into(), model: model.into(), request, response: response.clone() });
        Ok(response)
    }
}

/// One critique turn and one rewrite turn; returns the rewritten strategy.
pub fn refine_loop(
    initial: &str,
    model: &str,
    transport: &dyn ChatTransport,
    transcript: &mut Vec<Exchange>,
) -> Result<String, IngestError> {
    if initial.trim().is_empty() {
        return Err(ConfigError("cannot refine an empty strategy".into()).into());
    }
    let mut s = Session { transcript: Vec::new(), transport };
    let mut messages = vec![Message::system(prompts::author_system()), Message::user(prompts::critique_prompt(initial))];
    let critique = s.ask("critique", model, messages.clone())?;
    messages.push(Message::assistant(critique.clone()));
    messages.push(Message::user(prompts::rewrite_prompt(&critique)));
    let rewritten = s.ask("rewrite", model, messages)?;
    transcript.append(&mut s.transcript);
    Ok(rewritten)
}

/// Plays the program against simple probes and checks it acts its label.
pub fn behavior_check(spec: &StrategySpec, seed: u64, rounds: u32) -> Result<(), String> {
    const PROBES: [ClassicKind; 4] = [ClassicKind::AllC, ClassicKind::AllD, ClassicKind::TitForTat, ClassicKind::Random];
    let spec = Arc::new(spec.clone());
    let mut ever_defects = false;
    for (i, probe) in PROBES.into_iter().enumerate() {
        let mc = MatchConfig { rounds, seed: rng::derive_seed(seed, &[tag::PROBE, i as u64]), ..MatchConfig::default() };
        let mut me = StrategyRef::Dsl(Arc::clone(&spec)).instantiate();
        let mut opp = probe.instantiate();
        let rec = game::play_match(&mut me, &mut opp, &mc)
            .map_err(|e| format!("fails against {}: {e}", probe.name()))?;
        let first_d = rec.actions_a.iter().position(|&a| a == Action::Defect);
        ever_defects |= first_d.is_some();
        if spec.attitude == Attitude::Cooperative && probe == ClassicKind::AllC {
            if let Some(r) = first_d {
                return Err(format!("labelled cooperative but defects first against AllC (round {})", r + 1));
            }
        }
    }
    if spec.attitude == Attitude::Aggressive && !ever_defects {
        return Err("labelled aggressive but never defects against AllC, AllD, TitForTat or Random".into());
    }
    Ok(())
}

enum Checked {
    Admitted(Box<StrategySpec>),
    Final(Verdict, Vec<String>),
    Retry(Verdict, Vec<String>),
}

fn check_conversion(response: &str, natural_language: &str, job: &GenerationJob, request: usize) -> Checked {
    let text = strip_code_fence(response);
    if let Some(reason) = text.strip_prefix("INEXPRESSIBLE") {
        return Checked::Final(Verdict::Inexpressible, vec![reason.trim_start_matches(':').trim().to_string()]);
    }
    if is_refusal(text) {
        return Checked::Final(Verdict::Refused, vec![text.to_string()]);
    }
    let mut spec = match dsl::parse(text) {
        Ok(s) => s,
        Err(e) => return Checked::Retry(Verdict::ParseFailed, vec![e.to_string()]),
    };
    let mut errors: Vec<String> = dsl::validate(&spec)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| d.to_string())
        .collect();
    if spec.attitude != job.attitude {
        errors.push(format!("attitude must be {}, found {}", job.attitude, spec.attitude));
    }
    if !errors.is_empty() {
        return Checked::Retry(Verdict::ValidationFailed, errors);
    }
    let probe_seed = rng::derive_seed(job.seed, &[tag::PROBE, request as u64]);
    if let Err(e) = behavior_check(&spec, probe_seed, 100) {
        return Checked::Retry(Verdict::BehaviorMismatch, vec![e]);
    }
    spec.description = Some(natural_language.to_string());
    Checked::Admitted(Box::new(spec))
}

fn author_phase(job: &GenerationJob, request: usize, s: &mut Session) -> Result<String, IngestError> {
    let model = job.author_model.as_str();
    let system = Message::system(prompts::author_system());
    match job.style {
        PromptStyle::Default | PromptStyle::Refine => {
            let prompt = prompts::default_prompt(job.attitude, &job.payoffs, job.rounds, request);
            let initial = s.ask("author", model, vec![system, Message::user(prompt)])?;
            if job.style == PromptStyle::Default || is_refusal(&initial) {
                return Ok(initial);
            }
            refine_loop(&initial, model, s.transport, &mut s.transcript)
        }
        PromptStyle::Prose => {
            let mut r = rng::stream(job.seed, &[tag::SCENARIO, request as u64]);
            let scenario = &prompts::SCENARIOS[r.gen_range(0..prompts::SCENARIOS.len())];
            let prompt = prompts::prose_prompt(scenario, job.attitude, request);
            let approach = s.ask("scenario", model, vec![system.clone(), Message::user(prompt)])?;
            if is_refusal(&approach) {
                return Ok(approach);
            }
            let transfer = prompts::prose_transfer_prompt(&approach, &job.payoffs, job.rounds);
            Ok(s.ask("transfer", model, vec![system, Message::user(transfer)])?)
        }
    }
}

/// Elicits one natural-language strategy, converts it, and checks it.
/// Rejected programs are fed back with diagnostics up to `max_retries` times.
pub fn generate_strategy(
    job: &GenerationJob,
    request: usize,
    author: &dyn ChatTransport,
    converter: &dyn ChatTransport,
) -> Result<GenerationRecord, IngestError> {
    let mut s = Session { transcript: Vec::new(), transport: author };
    let authored = author_phase(job, request, &mut s)?;
    let natural_language = normalize(&authored);
    let record = |verdict, diagnostics, dsl_source, transcript| GenerationRecord {
        request,
        natural_language: natural_language.clone(),
        dsl_source,
        verdict,
        diagnostics,
        transcript,
    };
    if is_refusal(&authored) {
        return Ok(record(Verdict::Refused, vec![authored.trim().to_string()], None, s.transcript));
    }

    s.transport = converter;
    let mut messages = vec![
        Message::system(prompts::converter_system()),
        Message::user(prompts::convert_prompt(&natural_language, job.attitude)),
    ];
    let mut attempt = 0;
    loop {
        let response = s.ask("convert", &job.converter_model, messages.clone())?;
        match check_conversion(&response, &natural_language, job, request) {
            Checked::Admitted(spec) => {
                let src = dsl::pretty_print(&spec);
                return Ok(record(Verdict::Admitted, Vec::new(), Some(src), s.transcript));
            }
            Checked::Final(v, d) => return Ok(record(v, d, None, s.transcript)),
            Checked::Retry(v, d) => {
                if attempt >= job.max_retries {
                    let src = strip_code_fence(&response).to_string();
                    return Ok(record(v, d, Some(src), s.transcript));
                }
                messages.push(Message::assistant(response));
                messages.push(Message::user(prompts::repair_prompt(&d)));
                attempt += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub request: usize,
    pub verdict: Verdict,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub author_model: String,
    pub converter_model: String,
    pub prompt_style: PromptStyle,
    pub attitude: Attitude,
    pub requested: usize,
    pub admitted: usize,
    pub rejections: Vec<Rejection>,
    /// Audit result; absent when the other two attitude banks were not given.
    pub faithful: Option<bool>,
    pub cooperation: Option<[[Option<f64>; 3]; 3]>,
    pub complete: bool,
}

#[derive(Debug)]
pub struct BuiltBank {
    pub bank: AttitudeBank,
    pub report: GenerationReport,
    pub records: Vec<GenerationRecord>,
}

fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    let s = s.trim_matches('_').to_string();
    if s.is_empty() {
        "strategy".into()
    } else {
        s
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io { path: path.into(), source }
}

struct BankWriter<'a> {
    set_dir: &'a Path,
    job: &'a GenerationJob,
    entries: Vec<ManifestEntry>,
    records: Vec<GenerationRecord>,
    report: GenerationReport,
}

impl BankWriter<'_> {
    fn admit(&mut self, rec: &GenerationRecord) -> Result<(), IngestError> {
        let src = rec.dsl_source.as_deref().expect("admitted records carry source");
        let name = dsl::parse(src).map(|s| s.name).unwrap_or_default();
        let idx = self.report.admitted + 1;
        let file = format!("{}/{idx:02}_{}.ipd", self.job.attitude, slug(&name));
        let path = self.set_dir.join(&file);
        fs::write(&path, src).map_err(io_err(&path))?;
        self.entries.push(ManifestEntry {
            attitude: self.job.attitude,
            name,
            file,
            provenance: Provenance {
                model: self.job.author_model.clone(),
                prompt_style: self.job.style.to_string(),
                generated_at: self.job.generated_at.clone(),
                file: None,
            },
            sha256: bank::sha256_hex(src.as_bytes()),
        });
        self.report.admitted += 1;
        Ok(())
    }

    /// Writes the manifest, report and transcripts in their current state.
    fn flush(&self) -> Result<(), IngestError> {
        let mpath = self.set_dir.join(MANIFEST_FILE);
        let mut manifest = if mpath.is_file() { Manifest::read(&mpath)? } else { Manifest::default() };
        manifest.strategies.retain(|e| e.attitude != self.job.attitude);
        manifest.strategies.extend(self.entries.iter().cloned());
        manifest.strategies.sort_by(|a, b| (a.attitude, &a.file).cmp(&(b.attitude, &b.file)));
        manifest.write(&mpath)?;

        let a = self.job.attitude;
        let rpath = self.set_dir.join(format!("generation_report_{a}.json"));
        let text = serde_json::to_string_pretty(&self.report).expect("report serializes") + "\n";
        fs::write(&rpath, text).map_err(io_err(&rpath))?;

        let tpath = self.set_dir.join(format!("transcripts_{a}.jsonl"));
        let mut lines = String::new();
        for r in &self.records {
            lines.push_str(&serde_json::to_string(r).expect("records serialize"));
            lines.push('\n');
        }
        fs::write(&tpath, lines).map_err(io_err(&tpath))
    }
}

/// Generates strategies until `job.count` are admitted and writes them to
/// `set_dir/<attitude>/`, with provenance in `set_dir/manifest.json`.
/// When `peers` supplies banks for the other two attitudes, the finished
/// bank set is audited and the result recorded in the report.
pub fn build_bank(
    job: &GenerationJob,
    author: &dyn ChatTransport,
    converter: &dyn ChatTransport,
    set_dir: &Path,
    peers: &[Arc<AttitudeBank>],
) -> Result<BuiltBank, IngestError> {
    job.validate()?;
    let dir = set_dir.join(job.attitude.as_str());
    if dir.is_dir() {
        for e in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let p = e.map_err(io_err(&dir))?.path();
            if p.extension().is_some_and(|x| x == "ipd") {
                fs::remove_file(&p).map_err(io_err(&p))?;
            }
        }
    }
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;

    let mut w = BankWriter {
        set_dir,
        job,
        entries: Vec::new(),
        records: Vec::new(),
        report: GenerationReport {
            author_model: job.author_model.clone(),
            converter_model: job.converter_model.clone(),
            prompt_style: job.style,
            attitude: job.attitude,
            requested: job.count,
            admitted: 0,
            rejections: Vec::new(),
            faithful: None,
            cooperation: None,
            complete: false,
        },
    };

    let mut next = 0usize;
    while w.report.admitted < job.count {
        let batch: Vec<usize> = (next..next + job.parallelism).collect();
        next += job.parallelism;
        let results: Vec<Result<GenerationRecord, IngestError>> =
            batch.par_iter().map(|&r| generate_strategy(job, r, author, converter)).collect();
        for res in results {
            if w.report.admitted == job.count {
                break;
            }
            let rec = match res {
                Ok(rec) => rec,
                Err(e) => {
                    w.flush()?;
                    return Err(e);
                }
            };
            if rec.verdict == Verdict::Admitted {
                w.admit(&rec)?;
            } else {
                log::info!("request {} rejected: {:?}", rec.request, rec.verdict);
                w.report.rejections.push(Rejection {
                    request: rec.request,
                    verdict: rec.verdict,
                    diagnostics: rec.diagnostics.clone(),
                });
            }
            let last = rec.verdict;
            w.records.push(rec);
            if w.report.rejections.len() > job.max_rejections {
                w.flush()?;
                return Err(IngestError::ExhaustedRetries {
                    admitted: w.report.admitted,
                    rejected: w.report.rejections.len(),
                    last,
                });
            }
        }
    }

    // Admission and loading must agree; a disagreement surfaces here.
    let bank = bank::load_bank(&dir, job.attitude)?;
    let mut set: [Option<Arc<AttitudeBank>>; 3] = Default::default();
    for p in peers {
        set[p.attitude().index()] = Some(Arc::clone(p));
    }
    set[job.attitude.index()] = Some(Arc::new(bank.clone()));
    if let [Some(a), Some(c), Some(n)] = set {
        let mc = MatchConfig { rounds: job.rounds, payoffs: job.payoffs, ..MatchConfig::default() };
        let audit = audit_bank(&[a, c, n], &mc, rng::derive_seed(job.seed, &[tag::AUDIT]))
            .map_err(|e| ConfigError(format!("audit failed: {e}")))?;
        w.report.faithful = Some(audit.faithful);
        w.report.cooperation = Some(audit.cooperation);
    }
    w.report.complete = true;
    w.flush()?;
    Ok(BuiltBank { bank, report: w.report, records: w.records })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TFT_NL: &str = "Start by trusting. Then copy whatever the opponent did last round.";
    const TFT_DSL: &str = "strategy \"tft\" attitude=cooperative {\n  first: C\n  rules:\n    if opp_last(1) == D -> D\n  default: C\n}";

    fn job(style: PromptStyle, attitude: Attitude) -> GenerationJob {
        GenerationJob { max_retries: 0, ..GenerationJob::new("m", style, attitude) }
    }

    #[test]
    fn admitted_round_trip() {
        let t = ScriptedTransport::new([TFT_NL, TFT_DSL]);
        let r = generate_strategy(&job(PromptStyle::Default, Attitude::Cooperative), 0, &t, &t).unwrap();
        assert_eq!(r.verdict, Verdict::Admitted);
        let src = r.dsl_source.unwrap();
        assert_eq!(dsl::extract_header(&src).as_deref(), Some(TFT_NL));
        assert_eq!(r.transcript.len(), 2);
    }

    #[test]
    fn undeclared_register_is_validation_failure() {
        let bad = TFT_DSL.replace("opp_last(1) == D", "streak > 2");
        let t = ScriptedTransport::new([TFT_NL, bad.as_str()]);
        let r = generate_strategy(&job(PromptStyle::Default, Attitude::Cooperative), 0, &t, &t).unwrap();
        assert_eq!(r.verdict, Verdict::ValidationFailed);
        assert!(r.diagnostics[0].contains("streak"), "{:?}", r.diagnostics);
    }

    #[test]
    fn refusal_is_recorded() {
        let t = ScriptedTransport::new(["I can't help create an aggressive strategy."]);
        let r = generate_strategy(&job(PromptStyle::Default, Attitude::Aggressive), 0, &t, &t).unwrap();
        assert_eq!(r.verdict, Verdict::Refused);
        assert_eq!(t.requests(), 1);
    }

    #[test]
    fn retry_feeds_back_diagnostics() {
        let t = ScriptedTransport::new([TFT_NL, "strategy oops", TFT_DSL]);
        let j = GenerationJob { max_retries: 1, ..job(PromptStyle::Default, Attitude::Cooperative) };
        let r = generate_strategy(&j, 0, &t, &t).unwrap();
        assert_eq!(r.verdict, Verdict::Admitted);
        let last = &r.transcript.last().unwrap().request;
        assert_eq!(last.len(), 4);
        assert!(last[3].content.contains("rejected"));
    }

    #[test]
    fn behavior_mismatch_and_inexpressible() {
        let alld = TFT_DSL.replace("default: C", "default: D");
        let t = ScriptedTransport::new([TFT_NL, alld.as_str()]);
        let r = generate_strategy(&job(PromptStyle::Default, Attitude::Cooperative), 0, &t, &t).unwrap();
        assert_eq!(r.verdict, Verdict::BehaviorMismatch);

        let t = ScriptedTransport::new([TFT_NL, "INEXPRESSIBLE: needs floating state"]);
        let r = generate_strategy(&job(PromptStyle::Default, Attitude::Cooperative), 0, &t, &t).unwrap();
        assert_eq!((r.verdict, r.diagnostics[0].as_str()), (Verdict::Inexpressible, "needs floating state"));
    }

    #[test]
    fn refine_adds_two_exchanges() {
        let t = ScriptedTransport::new(["", "better"]);
        let mut tr = Vec::new();
        assert_eq!(refine_loop("initial", "m", &t, &mut tr).unwrap(), "better");
        assert_eq!(tr.len(), 2);
        assert!(tr[1].request.last().unwrap().content.ends_with("Critique:\n"));

        let t = ScriptedTransport::default();
        let mut tr = Vec::new();
        assert!(matches!(refine_loop("x", "m", &t, &mut tr), Err(IngestError::Transport(_))));
        assert!(tr.is_empty());
    }

    #[test]
    fn prose_uses_two_author_turns() {
        let t = ScriptedTransport::new(["be generous", TFT_NL, TFT_DSL]);
        let r = generate_strategy(&job(PromptStyle::Prose, Attitude::Cooperative), 3, &t, &t).unwrap();
        assert_eq!(r.verdict, Verdict::Admitted);
        let phases: Vec<&str> = r.transcript.iter().map(|e| e.phase.as_str()).collect();
        assert_eq!(phases, ["scenario", "transfer", "convert"]);
        assert!(prompts::banned_words(&r.transcript[0].request[1].content).is_empty());
    }

    #[test]
    fn code_fences_and_refusals() {
        assert_eq!(strip_code_fence("```ipd\nabc\n```"), "abc");
        assert_eq!(strip_code_fence("abc"), "abc");
        assert!(is_refusal("I'm sorry, but I cannot write that."));
        assert!(!is_refusal("Cooperate first, then mirror."));
    }
}
