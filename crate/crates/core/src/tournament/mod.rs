//! All-play-all tournaments over fixed strategies and attitude-agents.

pub mod beaufils;
pub mod metrics;

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::bank::{Attitude, AttitudeBank, StrategyRef};
use crate::error::ConfigError;
use crate::game::{self, MatchConfig, MatchError, MatchRecord, MatchSummary};
use crate::rng::{self, tag};

pub use beaufils::{beaufils_harness, BeaufilsResult};
pub use metrics::{AttitudeMatrix, Tally};

#[derive(Debug, Clone)]
pub enum PlayerKind {
    Fixed(StrategyRef),
    /// Samples a fresh strategy from the bank for every match.
    Agent(Arc<AttitudeBank>),
}

#[derive(Debug, Clone)]
pub struct Player {
    pub name: String,
    pub attitude: Option<Attitude>,
    pub kind: PlayerKind,
}

impl Player {
    pub fn fixed(strategy: StrategyRef) -> Self {
        let attitude = match &strategy {
            StrategyRef::Dsl(s) => Some(s.attitude),
            StrategyRef::Classic(_) => None,
        };
        Player { name: strategy.name().to_string(), attitude, kind: PlayerKind::Fixed(strategy) }
    }

    pub fn agent(name: impl Into<String>, bank: Arc<AttitudeBank>) -> Self {
        Player { name: name.into(), attitude: Some(bank.attitude()), kind: PlayerKind::Agent(bank) }
    }

    /// One fixed player per bank member, labelled with the bank's attitude.
    pub fn members_of(bank: &AttitudeBank) -> Vec<Player> {
        bank.members().iter().map(|m| Player::fixed(StrategyRef::Dsl(Arc::clone(&m.spec)))).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TournamentConfig {
    pub players: Vec<Player>,
    pub repetitions: u32,
    pub match_config: MatchConfig,
    pub seed: u64,
    pub keep_matches: bool,
}

impl TournamentConfig {
    pub fn new(players: Vec<Player>, repetitions: u32, match_config: MatchConfig, seed: u64) -> Self {
        TournamentConfig { players, repetitions, match_config, seed, keep_matches: false }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.players.len() < 2 {
            return Err(ConfigError("a tournament needs at least two players".into()));
        }
        if self.repetitions == 0 {
            return Err(ConfigError("repetitions must be at least 1".into()));
        }
        self.match_config.validate()
    }
}

#[derive(Debug, Error)]
pub enum TournamentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("repetition {repetition}, pair ({}, {}): {source}", pair.0, pair.1)]
    Match {
        repetition: u32,
        pair: (usize, usize),
        #[source]
        source: MatchError,
    },
}

/// Every unordered pair of player indices, once, in lexicographic order.
pub fn schedule(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect()
}

/// Outcome of one scheduled match.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome {
    pub a: usize,
    pub b: usize,
    /// Bank member indices sampled by attitude-agents.
    pub sampled_a: Option<usize>,
    pub sampled_b: Option<usize>,
    pub summary: MatchSummary,
    pub record: Option<MatchRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionResult {
    pub pairs: Vec<PairOutcome>,
    /// Mean round payoff per player in this repetition.
    pub scores: Vec<f64>,
    /// Pooled attitude tallies for this repetition alone.
    pub tallies: AttitudeMatrix,
}

#[derive(Debug, Clone)]
pub struct PlayerInfo {
    pub name: String,
    pub attitude: Option<Attitude>,
}

#[derive(Debug, Clone)]
pub struct TournamentResult {
    pub players: Vec<PlayerInfo>,
    pub repetitions: Vec<RepetitionResult>,
    /// Tallies pooled over all repetitions.
    pub totals: AttitudeMatrix,
}

impl TournamentResult {
    /// Head-to-head normalized payoff by attitude.
    pub fn head_to_head(&self) -> [[Option<f64>; 3]; 3] {
        self.totals.normalized_payoff()
    }

    /// Tournament scores of player `i`, one per repetition.
    pub fn score_distribution(&self, i: usize) -> Vec<f64> {
        self.repetitions.iter().map(|r| r.scores[i]).collect()
    }
}

/// Cooperation propensity by attitude, `None` where no such pairing exists.
pub fn cooperation_matrix(result: &TournamentResult) -> [[Option<f64>; 3]; 3] {
    result.totals.cooperation()
}

/// Picks a uniform bank member from the stream addressed by `path`.
pub fn sample_member(bank: &AttitudeBank, seed: u64, path: &[u64]) -> usize {
    let mut r = rng::stream(seed, path);
    r.gen_range(0..bank.len())
}

fn resolve(player: &Player, seed: u64, path: &[u64]) -> (StrategyRef, Option<usize>) {
    match &player.kind {
        PlayerKind::Fixed(s) => (s.clone(), None),
        PlayerKind::Agent(bank) => {
            let k = sample_member(bank, seed, path);
            (StrategyRef::Dsl(Arc::clone(&bank.members()[k].spec)), Some(k))
        }
    }
}

fn play_pair(
    config: &TournamentConfig,
    repetition: u32,
    (a, b): (usize, usize),
) -> Result<PairOutcome, TournamentError> {
    // Streams are keyed by player ids rather than schedule position, so
    // appending players leaves existing pairs untouched.
    let (rep, ia, ib) = (repetition as u64, a as u64, b as u64);
    let (sa, ka) = resolve(&config.players[a], config.seed, &[tag::SAMPLING, rep, ia, ib, ia]);
    let (sb, kb) = resolve(&config.players[b], config.seed, &[tag::SAMPLING, rep, ia, ib, ib]);
    let mc = MatchConfig {
        seed: rng::derive_seed(config.seed, &[tag::TOURNAMENT_MATCH, rep, ia, ib]),
        ..config.match_config
    };
    let (mut ia, mut ib) = (sa.instantiate(), sb.instantiate());
    let wrap = |source| TournamentError::Match { repetition, pair: (a, b), source };
    let (summary, record) = if config.keep_matches {
        let rec = game::play_match(&mut ia, &mut ib, &mc).map_err(wrap)?;
        (MatchSummary::of(&rec), Some(rec))
    } else {
        (game::play_match_summary(&mut ia, &mut ib, &mc).map_err(wrap)?, None)
    };
    Ok(PairOutcome { a, b, sampled_a: ka, sampled_b: kb, summary, record })
}

fn run_repetition(config: &TournamentConfig, repetition: u32) -> Result<RepetitionResult, TournamentError> {
    let pairs = schedule(config.players.len());
    let outcomes: Vec<PairOutcome> = pairs
        .par_iter()
        .map(|&p| play_pair(config, repetition, p))
        .collect::<Result<_, _>>()?;

    let n = config.players.len();
    let mut points = vec![0i64; n];
    let mut rounds = vec![0u64; n];
    let mut tallies = AttitudeMatrix::default();
    for o in &outcomes {
        points[o.a] += o.summary.score_a;
        points[o.b] += o.summary.score_b;
        rounds[o.a] += o.summary.rounds as u64;
        rounds[o.b] += o.summary.rounds as u64;
        tallies.add_match(config.players[o.a].attitude, config.players[o.b].attitude, &o.summary);
    }
    let scores = points.iter().zip(&rounds).map(|(&p, &r)| p as f64 / r as f64).collect();
    Ok(RepetitionResult { pairs: outcomes, scores, tallies })
}

/// Plays `repetitions` all-play-all tournaments. Matches and repetitions run
/// in parallel; results depend only on the configuration and seed.
pub fn run_tournament(config: &TournamentConfig) -> Result<TournamentResult, TournamentError> {
    config.validate()?;
    let repetitions: Vec<RepetitionResult> = (0..config.repetitions)
        .into_par_iter()
        .map(|r| run_repetition(config, r))
        .collect::<Result<_, _>>()?;
    let mut totals = AttitudeMatrix::default();
    for r in &repetitions {
        totals.merge(&r.tallies);
    }
    let players = config.players.iter().map(|p| PlayerInfo { name: p.name.clone(), attitude: p.attitude }).collect();
    Ok(TournamentResult { players, repetitions, totals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bank::ClassicKind;

    fn classic_player(k: ClassicKind) -> Player {
        Player::fixed(StrategyRef::Classic(k))
    }

    fn dsl_player(k: ClassicKind, attitude: Attitude) -> Player {
        let mut spec = k.dsl_spec();
        spec.attitude = attitude;
        Player::fixed(StrategyRef::Dsl(Arc::new(spec)))
    }

    #[test]
    fn schedule_counts() {
        assert_eq!(schedule(12).len(), 66);
        assert_eq!(schedule(75).len(), 2775);
        assert_eq!(schedule(2), vec![(0, 1)]);
        assert!(schedule(5).iter().all(|&(a, b)| a < b));
    }

    #[test]
    fn allc_pair_scores_three() {
        let cfg = TournamentConfig::new(
            vec![classic_player(ClassicKind::AllC), classic_player(ClassicKind::AllC)],
            1,
            MatchConfig::default(),
            1,
        );
        let r = run_tournament(&cfg).unwrap();
        assert_eq!(r.repetitions[0].scores, vec![3.0, 3.0]);
    }

    #[test]
    fn alld_vs_allc_head_to_head() {
        let cfg = TournamentConfig::new(
            vec![dsl_player(ClassicKind::AllD, Attitude::Aggressive), dsl_player(ClassicKind::AllC, Attitude::Cooperative)],
            1,
            MatchConfig::default(),
            1,
        );
        let r = run_tournament(&cfg).unwrap();
        let h = r.head_to_head();
        assert_eq!(h[0][1], Some(5.0));
        assert_eq!(h[1][0], Some(0.0));
        assert_eq!(h[0][0], None);
        let c = cooperation_matrix(&r);
        assert_eq!(c[0][1], Some(0.0));
        assert_eq!(c[1][0], Some(1.0));
    }

    #[test]
    fn three_player_toy() {
        let cfg = TournamentConfig::new(
            vec![
                classic_player(ClassicKind::AllC),
                classic_player(ClassicKind::AllD),
                classic_player(ClassicKind::TitForTat),
            ],
            1,
            MatchConfig::default(),
            1,
        );
        let r = run_tournament(&cfg).unwrap();
        assert_eq!(r.repetitions[0].scores, vec![1.5, 3.002, 1.9995]);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = TournamentConfig::new(vec![classic_player(ClassicKind::AllC)], 1, MatchConfig::default(), 1);
        assert!(matches!(run_tournament(&cfg), Err(TournamentError::Config(_))));
    }

    #[test]
    fn agents_of_one_bank_still_meet() {
        let bank = Arc::new(AttitudeBank::of_classics(Attitude::Neutral, &[ClassicKind::TitForTat]).unwrap());
        let cfg = TournamentConfig::new(
            vec![Player::agent("n1", Arc::clone(&bank)), Player::agent("n2", bank)],
            3,
            MatchConfig::default(),
            9,
        );
        let r = run_tournament(&cfg).unwrap();
        assert!(r.repetitions.iter().all(|rep| rep.pairs.len() == 1));
        assert_eq!(r.head_to_head()[2][2], Some(3.0));
    }
}
