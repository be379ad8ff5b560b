//! Experiment stages shared by the subcommands and `run-all`.

use std::fs;
use std::path::{Path, PathBuf};

use evoipd_core::bank::{audit_bank, discover_bank_sets, sha256_hex, Attitude, BankSet};
use evoipd_core::game::MatchConfig;
use evoipd_core::moran::{self, InitialCounts, MoranConfig};
use evoipd_core::output::{self, BeaufilsRow, EquilibriumRow, MatrixRow, TrajectoryRow};
use evoipd_core::rng::{self, tag};
use evoipd_core::tournament::{beaufils_harness, run_tournament, Player, TournamentConfig};

use crate::config::ExperimentConfig;
use crate::manifest::AuditRecord;
use crate::CliError;

pub const HEAD_TO_HEAD_CSV: &str = "head_to_head.csv";
pub const COOPERATION_CSV: &str = "cooperation.csv";
pub const EQUILIBRIA_CSV: &str = "equilibria.csv";
pub const BEAUFILS_CSV: &str = "beaufils_scores.csv";
pub const TRAJECTORY_DIR: &str = "trajectories";
pub const MATCH_DIR: &str = "matches";

/// Stable key for a bank set, so seeds do not depend on discovery order.
fn label_key(label: &str) -> u64 {
    let h = sha256_hex(label.as_bytes());
    u64::from_str_radix(&h[..16], 16).expect("hex digest")
}

fn match_config(config: &ExperimentConfig, noise: f64) -> MatchConfig {
    MatchConfig { rounds: config.rounds, noise_prob: noise, seed: 0, payoffs: config.payoffs }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write<T: serde::Serialize>(path: &Path, columns: &[&str], rows: &[T]) -> Result<(), CliError> {
    output::write_csv_file(path, columns, rows).map_err(|e| CliError::io(path, e))
}

pub fn load_bank_sets(root: &Path) -> Result<Vec<BankSet>, CliError> {
    let sets = discover_bank_sets(root).map_err(|e| CliError::Config(e.to_string()))?;
    if sets.is_empty() {
        return Err(CliError::Config(format!("{}: no bank sets found", root.display())));
    }
    Ok(sets)
}

/// Audits every bank set without noise.
pub fn audit(sets: &[BankSet], config: &ExperimentConfig) -> Result<Vec<AuditRecord>, CliError> {
    let mut out = Vec::new();
    for set in sets {
        let seed = rng::derive_seed(config.seed, &[tag::AUDIT, label_key(&set.label())]);
        let r = audit_bank(&set.banks, &match_config(config, 0.0), seed).map_err(|e| CliError::Stage(e.to_string()))?;
        if !r.faithful {
            log::warn!("{}: aggressive bank does not cooperate less than the cooperative bank", set.label());
        }
        out.push(AuditRecord { bank_set: set.label(), faithful: r.faithful, cooperation: r.cooperation });
    }
    Ok(out)
}

fn noise_dir(noise: f64) -> String {
    format!("noise{noise}")
}

/// All-play-all tournaments over every bank member, per bank set and noise
/// level. Writes `head_to_head.csv` and `cooperation.csv`.
pub fn tournament(sets: &[BankSet], config: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    create_dir(out)?;
    let mut h2h: Vec<MatrixRow> = Vec::new();
    let mut coop: Vec<MatrixRow> = Vec::new();
    for set in sets {
        for &noise in &config.noise {
            log::info!("tournament {} noise {noise}", set.label());
            let players: Vec<Player> = set.banks.iter().flat_map(|b| Player::members_of(b)).collect();
            let seed = rng::derive_seed(config.seed, &[tag::TOURNAMENT_MATCH, label_key(&set.label()), noise.to_bits()]);
            let mut tc = TournamentConfig::new(players, config.tournament.repetitions, match_config(config, noise), seed);
            tc.keep_matches = config.tournament.keep_matches;
            let r = run_tournament(&tc).map_err(|e| CliError::Stage(format!("{}: {e}", set.label())))?;
            h2h.extend(output::matrix_rows(&set.prompt_style, &set.model, noise, &r.head_to_head()));
            coop.extend(output::matrix_rows(&set.prompt_style, &set.model, noise, &r.totals.cooperation()));
            if config.tournament.keep_matches {
                write_matches(out, set, noise, &r)?;
            }
        }
    }
    write(&out.join(HEAD_TO_HEAD_CSV), output::HEAD_TO_HEAD, &h2h)?;
    write(&out.join(COOPERATION_CSV), output::COOPERATION, &coop)
}

fn write_matches(out: &Path, set: &BankSet, noise: f64, r: &evoipd_core::tournament::TournamentResult) -> Result<(), CliError> {
    let dir = out.join(MATCH_DIR).join(&set.model).join(&set.prompt_style);
    create_dir(&dir)?;
    let path = dir.join(format!("{}.jsonl", noise_dir(noise)));
    let mut text = String::new();
    for (rep, rr) in r.repetitions.iter().enumerate() {
        for p in &rr.pairs {
            let line = serde_json::json!({
                "repetition": rep,
                "a": r.players[p.a].name,
                "b": r.players[p.b].name,
                "match": p.record,
            });
            text.push_str(&line.to_string());
            text.push('\n');
        }
    }
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

/// Moran batches per bank set, noise level and initial population. Writes
/// `equilibria.csv` and one trajectory file per successful run.
pub fn moran(sets: &[BankSet], config: &ExperimentConfig, out: &Path) -> Result<usize, CliError> {
    create_dir(out)?;
    let initial = config.initial_counts()?;
    let mut rows: Vec<EquilibriumRow> = Vec::new();
    let mut failed = 0;
    for set in sets {
        for &noise in &config.noise {
            for init in &initial {
                log::info!("moran {} noise {noise} start {init}", set.label());
                let key = [tag::MORAN_RUN, label_key(&set.label()), noise.to_bits(), counts_key(init)];
                let mc = MoranConfig {
                    initial: *init,
                    match_config: match_config(config, noise),
                    seed: rng::derive_seed(config.seed, &key),
                    max_iterations: config.moran.max_iterations,
                    exclude_parent: config.moran.exclude_parent,
                    memoize: config.moran.memoize,
                };
                let batch = moran::run_batch(&set.banks, &mc, config.moran.runs).map_err(|e| CliError::Stage(e.to_string()))?;
                let dir = out
                    .join(TRAJECTORY_DIR)
                    .join(&set.model)
                    .join(&set.prompt_style)
                    .join(noise_dir(noise))
                    .join(init.to_string().replace(':', "-"));
                create_dir(&dir)?;
                for (run, o) in batch.outcomes.iter().enumerate() {
                    match o {
                        Ok(o) => {
                            let rows: Vec<TrajectoryRow> = output::trajectory_rows(o);
                            write(&dir.join(format!("trajectory_{run}.csv")), output::TRAJECTORY, &rows)?;
                        }
                        Err(e) => {
                            failed += 1;
                            log::error!("{} noise {noise} start {init} run {run}: {e}", set.label());
                        }
                    }
                }
                let p = batch.proportions();
                for a in Attitude::ALL {
                    rows.push(EquilibriumRow {
                        prompt_style: set.prompt_style.clone(),
                        model: set.model.clone(),
                        noise,
                        initial_ratio: init.to_string(),
                        attitude: a,
                        proportion: p[a.index()],
                        runs: config.moran.runs,
                    });
                }
            }
        }
    }
    write(&out.join(EQUILIBRIA_CSV), output::EQUILIBRIA, &rows)?;
    Ok(failed)
}

fn counts_key(c: &InitialCounts) -> u64 {
    c.0.iter().fold(0u64, |acc, &x| acc.wrapping_mul(1_000_003).wrapping_add(x as u64))
}

/// Participant label; bank-set names are prefixed only when several sets run.
fn participant(set: &BankSet, name: &str, many: bool) -> String {
    if many {
        format!("{}/{name}", set.label())
    } else {
        name.to_string()
    }
}

/// Beaufils tournaments per bank set. Writes `beaufils_scores.csv`.
pub fn beaufils(sets: &[BankSet], config: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    create_dir(out)?;
    let roster = config.roster()?;
    let mut rows: Vec<BeaufilsRow> = Vec::new();
    for set in sets {
        log::info!("beaufils {}", set.label());
        let seed = rng::derive_seed(config.seed, &[tag::BEAUFILS, label_key(&set.label())]);
        let mc = match_config(config, config.beaufils.noise);
        let r = beaufils_harness(&set.banks, &roster, config.beaufils.repetitions, &mc, seed)
            .map_err(|e| CliError::Stage(format!("{}: {e}", set.label())))?;
        for p in &r.participants {
            for (rep, &s) in p.scores.iter().enumerate() {
                rows.push(BeaufilsRow {
                    participant: participant(set, &p.name, sets.len() > 1),
                    repetition: rep as u32,
                    tournament_score: s,
                });
            }
        }
    }
    write(&out.join(BEAUFILS_CSV), output::BEAUFILS_SCORES, &rows)
}

/// Every `.ipd` file under `path`, or `path` itself.
pub fn ipd_files(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        return Err(CliError::Config(format!("{}: no such file or directory", path.display())));
    }
    let mut out = Vec::new();
    let mut stack = vec![path.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).map_err(|e| CliError::io(&dir, e))? {
            let p = e.map_err(|e| CliError::io(&dir, e))?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "ipd") {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}
