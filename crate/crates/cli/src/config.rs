//! Experiment configuration: TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use evoipd_core::bank::{beaufils_roster, ClassicKind};
use evoipd_core::game::PayoffMatrix;
use evoipd_core::moran::{InitialCounts, DEFAULT_MAX_ITERATIONS};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub banks: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub rounds: u32,
    pub noise: Vec<f64>,
    pub payoffs: PayoffMatrix,
    pub allow_any_matrix: bool,
    pub tournament: TournamentSection,
    pub moran: MoranSection,
    pub beaufils: BeaufilsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TournamentSection {
    pub repetitions: u32,
    pub keep_matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoranSection {
    pub runs: u32,
    pub population: usize,
    pub initial: Vec<String>,
    pub max_iterations: u64,
    pub exclude_parent: bool,
    pub memoize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeaufilsSection {
    pub repetitions: u32,
    pub noise: f64,
    pub roster: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            banks: PathBuf::from("banks"),
            out: PathBuf::from("results"),
            seed: 0,
            rounds: 1000,
            noise: vec![0.0, 0.1],
            payoffs: PayoffMatrix::default(),
            allow_any_matrix: false,
            tournament: TournamentSection::default(),
            moran: MoranSection::default(),
            beaufils: BeaufilsSection::default(),
        }
    }
}

impl Default for TournamentSection {
    fn default() -> Self {
        TournamentSection { repetitions: 20, keep_matches: false }
    }
}

impl Default for MoranSection {
    fn default() -> Self {
        MoranSection {
            runs: 100,
            population: 12,
            initial: vec!["4:4:4".into(), "8:2:2".into()],
            max_iterations: DEFAULT_MAX_ITERATIONS,
            exclude_parent: false,
            memoize: true,
        }
    }
}

impl Default for BeaufilsSection {
    fn default() -> Self {
        BeaufilsSection {
            repetitions: 200,
            noise: 0.0,
            roster: beaufils_roster().iter().map(|k| k.name().to_string()).collect(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    /// Reads a TOML config, or the `config` object of a previous `run_manifest.json`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|x| x == "json") {
            let v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            return serde_json::from_value(v["config"].clone())
                .map_err(|e| CliError::Config(format!("{}: no usable `config` object: {e}", path.display())));
        }
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !self.allow_any_matrix {
            self.payoffs.check_dilemma().map_err(|e| CliError::Config(e.0))?;
        }
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if self.noise.is_empty() {
            return bad("at least one noise level is required".into());
        }
        for &p in self.noise.iter().chain([&self.beaufils.noise]) {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("noise probability {p} outside [0, 1]"));
            }
        }
        if self.tournament.repetitions == 0 || self.beaufils.repetitions == 0 || self.moran.runs == 0 {
            return bad("repetitions and runs must be at least 1".into());
        }
        if self.moran.population < 2 {
            return bad("moran population must be at least 2".into());
        }
        self.initial_counts()?;
        self.roster()?;
        Ok(())
    }

    pub fn initial_counts(&self) -> Result<Vec<InitialCounts>, CliError> {
        self.moran
            .initial
            .iter()
            .map(|s| {
                let c: InitialCounts = s.parse().map_err(|e: evoipd_core::error::ConfigError| CliError::Config(e.0))?;
                InitialCounts::from_ratio(c.0, self.moran.population).map_err(|e| CliError::Config(e.0))
            })
            .collect()
    }

    pub fn roster(&self) -> Result<Vec<ClassicKind>, CliError> {
        if self.beaufils.roster.is_empty() {
            return Err(CliError::Config("the beaufils roster is empty".into()));
        }
        self.beaufils
            .roster
            .iter()
            .map(|n| n.parse::<ClassicKind>().map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }

    /// Canonical JSON form, hashed into the run manifest. The output
    /// directory is left out so relocated replays hash alike.
    pub fn canonical_json(&self) -> String {
        let c = ExperimentConfig { out: PathBuf::new(), ..self.clone() };
        serde_json::to_string(&c).expect("config serializes")
    }
}

/// Reads a roster file: one classic strategy per line, `#` comments.
pub fn read_roster(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let names: Vec<String> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    for n in &names {
        n.parse::<ClassicKind>().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_experiment_grid() {
        let c = ExperimentConfig::default();
        assert_eq!(c.noise, vec![0.0, 0.1]);
        assert_eq!((c.rounds, c.tournament.repetitions, c.moran.runs, c.beaufils.repetitions), (1000, 20, 100, 200));
        assert_eq!(c.initial_counts().unwrap().iter().map(|i| i.0).collect::<Vec<_>>(), vec![[4, 4, 4], [8, 2, 2]]);
        assert_eq!(c.roster().unwrap().len(), 11);
        c.validate().unwrap();
    }

    #[test]
    fn toml_overrides_and_rejects_unknown_keys() {
        let c = ExperimentConfig::from_toml("seed = 9\n[moran]\nruns = 4\ninitial = [\"1:1:1\"]\n").unwrap();
        assert_eq!((c.seed, c.moran.runs, c.moran.population), (9, 4, 12));
        assert!(ExperimentConfig::from_toml("sede = 9").is_err());
    }

    #[test]
    fn rejects_non_dilemma_unless_allowed() {
        let mut c = ExperimentConfig { payoffs: PayoffMatrix::new_unchecked(3, 2, 0, 1), ..Default::default() };
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        c.allow_any_matrix = true;
        c.validate().unwrap();
    }
}
