//! Attitude-labelled strategy banks and the classic strategy roster.

pub mod audit;
pub mod classic;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dsl::{self, Diagnostic, DslError, StrategySpec};

pub use audit::{audit_bank, AuditReport};
pub use classic::{beaufils_roster, classic, ClassicKind, ClassicStrategy, StrategyInstance, StrategyRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attitude {
    Aggressive,
    Cooperative,
    Neutral,
}

impl Attitude {
    pub const ALL: [Attitude; 3] = [Attitude::Aggressive, Attitude::Cooperative, Attitude::Neutral];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Attitude::Aggressive => "aggressive",
            Attitude::Cooperative => "cooperative",
            Attitude::Neutral => "neutral",
        }
    }
}

impl fmt::Display for Attitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Attitude {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "aggressive" | "a" => Ok(Attitude::Aggressive),
            "cooperative" | "c" => Ok(Attitude::Cooperative),
            "neutral" | "n" => Ok(Attitude::Neutral),
            _ => Err(format!("unknown attitude `{s}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum BankError {
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Dsl {
        path: PathBuf,
        #[source]
        source: DslError,
    },
    #[error("{}: failed validation: {}", path.display(), diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid { path: PathBuf, diagnostics: Vec<Diagnostic> },
    #[error("{}: strategy is labelled {found}, bank is {expected}", path.display())]
    AttitudeMismatch { path: PathBuf, expected: Attitude, found: Attitude },
    #[error("{}: no strategies in bank", path.display())]
    EmptyBank { path: PathBuf },
    #[error("{}: bad manifest: {message}", path.display())]
    Manifest { path: PathBuf, message: String },
    #[error("{}: missing attitude directory `{attitude}`", root.display())]
    MissingAttitude { root: PathBuf, attitude: Attitude },
}

/// Where a bank member came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: String,
    pub prompt_style: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    /// Path relative to the bank-set directory; filled in on load.
    #[serde(skip)]
    pub file: Option<String>,
}

/// A bank member: an immutable parsed spec plus a content fingerprint.
#[derive(Debug, Clone)]
pub struct BankMember {
    pub spec: Arc<StrategySpec>,
    pub provenance: Provenance,
    pub fingerprint: u64,
}

impl BankMember {
    pub fn new(spec: StrategySpec, provenance: Provenance) -> Self {
        let fingerprint = fingerprint(&spec);
        BankMember { spec: Arc::new(spec), provenance, fingerprint }
    }
}

/// Hash of the canonical source, ignoring the description and attitude label.
pub fn fingerprint(spec: &StrategySpec) -> u64 {
    let mut canonical = spec.clone();
    canonical.description = None;
    canonical.attitude = Attitude::Neutral;
    let digest = Sha256::digest(dsl::pretty_print(&canonical).as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Strategies sharing one attitude, sampled uniformly by an attitude-agent.
#[derive(Debug, Clone)]
pub struct AttitudeBank {
    attitude: Attitude,
    members: Vec<BankMember>,
}

impl AttitudeBank {
    /// Builds a bank, checking every member carries `attitude`.
    pub fn new(attitude: Attitude, members: Vec<BankMember>) -> Result<Self, BankError> {
        if members.is_empty() {
            return Err(BankError::EmptyBank { path: PathBuf::from(format!("<{attitude}>")) });
        }
        for m in &members {
            if m.spec.attitude != attitude {
                return Err(BankError::AttitudeMismatch {
                    path: PathBuf::from(m.provenance.file.clone().unwrap_or_else(|| m.spec.name.clone())),
                    expected: attitude,
                    found: m.spec.attitude,
                });
            }
        }
        Ok(AttitudeBank { attitude, members })
    }

    /// Builds a bank from arbitrary specs, relabelling each to `attitude`.
    pub fn relabeled(attitude: Attitude, specs: impl IntoIterator<Item = StrategySpec>) -> Result<Self, BankError> {
        let members = specs
            .into_iter()
            .map(|mut s| {
                s.attitude = attitude;
                BankMember::new(s, Provenance::default())
            })
            .collect();
        AttitudeBank::new(attitude, members)
    }

    /// A degenerate bank holding the DSL encodings of classic strategies.
    pub fn of_classics(attitude: Attitude, kinds: &[ClassicKind]) -> Result<Self, BankError> {
        AttitudeBank::relabeled(attitude, kinds.iter().map(|k| k.dsl_spec()))
    }

    pub fn attitude(&self) -> Attitude {
        self.attitude
    }

    pub fn members(&self) -> &[BankMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_deterministic(&self) -> bool {
        self.members.iter().all(|m| m.spec.is_deterministic())
    }
}

/// One manifest entry per strategy file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub attitude: Attitude,
    pub name: String,
    pub file: String,
    #[serde(flatten)]
    pub provenance: Provenance,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub strategies: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, BankError> {
        let text = fs::read_to_string(path).map_err(|source| BankError::Io { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|e| BankError::Manifest { path: path.into(), message: e.to_string() })
    }

    pub fn write(&self, path: &Path) -> Result<(), BankError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        fs::write(path, text).map_err(|source| BankError::Io { path: path.into(), source })
    }

    fn lookup(&self, attitude: Attitude, file: &str) -> Option<&ManifestEntry> {
        self.strategies.iter().find(|e| e.attitude == attitude && e.file == file)
    }
}

fn dir_name(p: Option<&Path>) -> String {
    p.and_then(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Loads every `.ipd` file in `dir` (sorted by file name) as an attitude bank.
///
/// Each file must parse, pass validation with no errors, and carry the
/// requested attitude. Provenance is read from `manifest.json` in the parent
/// directory when present, otherwise inferred from the directory layout
/// `<model>/<prompt_style>/<attitude>/`.
pub fn load_bank(dir: &Path, attitude: Attitude) -> Result<AttitudeBank, BankError> {
    let entries = fs::read_dir(dir).map_err(|source| BankError::Io { path: dir.into(), source })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ipd"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(BankError::EmptyBank { path: dir.into() });
    }

    let set_dir = dir.parent();
    let manifest = match set_dir.map(|p| p.join(MANIFEST_FILE)) {
        Some(p) if p.is_file() => Some(Manifest::read(&p)?),
        _ => None,
    };
    let default_prov = Provenance {
        model: dir_name(set_dir.and_then(Path::parent)),
        prompt_style: dir_name(set_dir),
        generated_at: None,
        file: None,
    };

    let mut members = Vec::with_capacity(files.len());
    for path in files {
        let src = fs::read_to_string(&path).map_err(|source| BankError::Io { path: path.clone(), source })?;
        let spec = dsl::parse(&src).map_err(|source| BankError::Dsl { path: path.clone(), source })?;
        let diagnostics = dsl::validate(&spec);
        if dsl::has_errors(&diagnostics) {
            return Err(BankError::Invalid { path, diagnostics });
        }
        if spec.attitude != attitude {
            return Err(BankError::AttitudeMismatch { path, expected: attitude, found: spec.attitude });
        }
        let file = format!("{}/{}", attitude, dir_name(Some(&path)));
        let mut provenance = manifest
            .as_ref()
            .and_then(|m| m.lookup(attitude, &file))
            .map(|e| e.provenance.clone())
            .unwrap_or_else(|| default_prov.clone());
        provenance.file = Some(file);
        members.push(BankMember::new(spec, provenance));
    }
    AttitudeBank::new(attitude, members)
}

/// The three attitude banks produced by one model and prompt style.
#[derive(Debug, Clone)]
pub struct BankSet {
    pub model: String,
    pub prompt_style: String,
    pub banks: [Arc<AttitudeBank>; 3],
}

impl BankSet {
    pub fn new(model: impl Into<String>, prompt_style: impl Into<String>, banks: [AttitudeBank; 3]) -> Self {
        for (a, b) in Attitude::ALL.iter().zip(&banks) {
            assert_eq!(*a, b.attitude(), "banks must be ordered aggressive, cooperative, neutral");
        }
        let [a, c, n] = banks;
        BankSet { model: model.into(), prompt_style: prompt_style.into(), banks: [Arc::new(a), Arc::new(c), Arc::new(n)] }
    }

    pub fn bank(&self, attitude: Attitude) -> &Arc<AttitudeBank> {
        &self.banks[attitude.index()]
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.model, self.prompt_style)
    }

    /// Loads `<dir>/{aggressive,cooperative,neutral}`.
    pub fn load(dir: &Path) -> Result<Self, BankError> {
        let mut banks = Vec::with_capacity(3);
        for attitude in Attitude::ALL {
            let sub = dir.join(attitude.as_str());
            if !sub.is_dir() {
                return Err(BankError::MissingAttitude { root: dir.into(), attitude });
            }
            banks.push(load_bank(&sub, attitude)?);
        }
        let banks: [AttitudeBank; 3] = banks.try_into().expect("three attitudes");
        Ok(BankSet::new(dir_name(dir.parent()), dir_name(Some(dir)), banks))
    }
}

fn is_bank_set_dir(dir: &Path) -> bool {
    Attitude::ALL.iter().all(|a| dir.join(a.as_str()).is_dir())
}

/// Finds bank sets under `root`, sorted by path: `root` itself, a model
/// directory `root/<prompt_style>/`, or a banks root
/// `root/<model>/<prompt_style>/`.
pub fn discover_bank_sets(root: &Path) -> Result<Vec<BankSet>, BankError> {
    if !root.is_dir() {
        return Err(BankError::Io {
            path: root.into(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "bank directory not found"),
        });
    }
    if is_bank_set_dir(root) {
        return Ok(vec![BankSet::load(root)?]);
    }
    let mut dirs: Vec<PathBuf> = sorted_subdirs(root)?.into_iter().filter(|d| is_bank_set_dir(d)).collect();
    for model in sorted_subdirs(root)? {
        for style in sorted_subdirs(&model)? {
            if is_bank_set_dir(&style) {
                dirs.push(style);
            }
        }
    }
    if dirs.is_empty() {
        return Err(BankError::EmptyBank { path: root.into() });
    }
    dirs.iter().map(|d| BankSet::load(d)).collect()
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<PathBuf>, BankError> {
    let rd = fs::read_dir(dir).map_err(|source| BankError::Io { path: dir.into(), source })?;
    let mut out: Vec<PathBuf> = rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::create_dir_all(dir).unwrap();
        fs::write(dir.join(name), body).unwrap();
    }

    fn allc(name: &str, attitude: &str) -> String {
        format!("strategy \"{name}\" attitude={attitude} {{ first: C rules: default: C }}\n")
    }

    #[test]
    fn loads_sorted_and_counts() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("m/default/cooperative");
        for i in (0..25).rev() {
            write(&dir, &format!("s{i:02}.ipd"), &allc(&format!("s{i:02}"), "cooperative"));
        }
        write(&dir, "notes.txt", "ignored");
        let bank = load_bank(&dir, Attitude::Cooperative).unwrap();
        assert_eq!(bank.len(), 25);
        assert_eq!(bank.members()[0].spec.name, "s00");
        assert_eq!(bank.members()[0].provenance.model, "m");
        assert_eq!(bank.members()[0].provenance.prompt_style, "default");
    }

    #[test]
    fn mismatched_label_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "a.ipd", &allc("a", "cooperative"));
        write(tmp.path(), "b.ipd", &allc("b", "aggressive"));
        let err = load_bank(tmp.path(), Attitude::Cooperative).unwrap_err();
        assert!(matches!(err, BankError::AttitudeMismatch { found: Attitude::Aggressive, .. }), "{err}");
    }

    #[test]
    fn empty_directory() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(load_bank(tmp.path(), Attitude::Neutral), Err(BankError::EmptyBank { .. })));
    }

    #[test]
    fn parse_and_validation_errors_name_the_file() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "bad.ipd", "strategy \"x\" attitude=neutral { first: C rules: if -> D default: C }");
        let err = load_bank(tmp.path(), Attitude::Neutral).unwrap_err();
        assert!(matches!(err, BankError::Dsl { .. }));
        assert!(err.to_string().contains("bad.ipd"));

        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "undeclared.ipd", "strategy \"x\" attitude=neutral { first: C rules: if grudge > 0 -> D default: C }");
        let err = load_bank(tmp.path(), Attitude::Neutral).unwrap_err();
        assert!(matches!(err, BankError::Invalid { .. }));
        assert!(err.to_string().contains("grudge"));
    }

    #[test]
    fn manifest_provenance() {
        let tmp = tempfile::tempdir().unwrap();
        let set = tmp.path().join("gpt/prose");
        write(&set.join("neutral"), "t.ipd", &allc("t", "neutral"));
        let manifest = Manifest {
            strategies: vec![ManifestEntry {
                attitude: Attitude::Neutral,
                name: "t".into(),
                file: "neutral/t.ipd".into(),
                provenance: Provenance {
                    model: "gpt-x".into(),
                    prompt_style: "prose".into(),
                    generated_at: Some("2026-01-01T00:00:00Z".into()),
                    file: None,
                },
                sha256: String::new(),
            }],
        };
        manifest.write(&set.join(MANIFEST_FILE)).unwrap();
        let bank = load_bank(&set.join("neutral"), Attitude::Neutral).unwrap();
        assert_eq!(bank.members()[0].provenance.model, "gpt-x");
        assert_eq!(bank.members()[0].provenance.generated_at.as_deref(), Some("2026-01-01T00:00:00Z"));
    }

    #[test]
    fn fingerprint_ignores_description() {
        let mut a = ClassicKind::TitForTat.dsl_spec();
        let f = fingerprint(&a);
        a.description = Some("mirror the opponent".into());
        assert_eq!(fingerprint(&a), f);
        assert_ne!(fingerprint(&ClassicKind::Grudger.dsl_spec()), f);
    }
}
