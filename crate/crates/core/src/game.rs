//! Actions, payoffs, noise and the round-by-round match loop.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ConfigError, EvalError};
use crate::rng::{self, StreamRng};

/// A single move. `Cooperate < Defect` is the serialization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    Cooperate,
    Defect,
}

pub use Action::{Cooperate as C, Defect as D};

impl Action {
    pub fn flip(self) -> Self {
        match self {
            Action::Cooperate => Action::Defect,
            Action::Defect => Action::Cooperate,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Action::Cooperate => 'C',
            Action::Defect => 'D',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'C' => Some(Action::Cooperate),
            'D' => Some(Action::Defect),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// Renders a move sequence as a string over `{C, D}`.
pub fn actions_to_string(actions: &[Action]) -> String {
    actions.iter().map(|a| a.to_char()).collect()
}

pub fn actions_from_str(s: &str) -> Option<Vec<Action>> {
    s.chars().map(Action::from_char).collect()
}

mod action_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(actions: &[Action], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&actions_to_string(actions))
    }

    pub fn deserialize<'de, De: Deserializer<'de>>(d: De) -> Result<Vec<Action>, De::Error> {
        let s = String::deserialize(d)?;
        actions_from_str(&s).ok_or_else(|| serde::de::Error::custom("expected a string over {C, D}"))
    }
}

/// The 2x2 stage game, in integer points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PayoffMatrix {
    pub reward: i64,
    pub temptation: i64,
    pub sucker: i64,
    pub punishment: i64,
}

impl Default for PayoffMatrix {
    fn default() -> Self {
        PayoffMatrix { reward: 3, temptation: 5, sucker: 0, punishment: 1 }
    }
}

impl PayoffMatrix {
    /// Builds a matrix, rejecting anything that is not a Prisoner's Dilemma.
    pub fn new(reward: i64, temptation: i64, sucker: i64, punishment: i64) -> Result<Self, ConfigError> {
        let m = PayoffMatrix { reward, temptation, sucker, punishment };
        m.check_dilemma()?;
        Ok(m)
    }

    /// Builds a matrix without the dilemma checks (`--allow-any-matrix`).
    pub fn new_unchecked(reward: i64, temptation: i64, sucker: i64, punishment: i64) -> Self {
        PayoffMatrix { reward, temptation, sucker, punishment }
    }

    pub fn check_dilemma(&self) -> Result<(), ConfigError> {
        let PayoffMatrix { reward: r, temptation: t, sucker: s, punishment: p } = *self;
        if !(t > r && r > p && p > s) {
            return Err(ConfigError(format!(
                "payoffs must satisfy T > R > P > S, got T={t} R={r} P={p} S={s}"
            )));
        }
        if 2 * r <= t + s {
            return Err(ConfigError(format!("payoffs must satisfy 2R > T + S, got R={r} T={t} S={s}")));
        }
        Ok(())
    }

    pub fn min_payoff(&self) -> i64 {
        self.reward.min(self.temptation).min(self.sucker).min(self.punishment)
    }

    pub fn max_payoff(&self) -> i64 {
        self.reward.max(self.temptation).max(self.sucker).max(self.punishment)
    }
}

/// Row-player and column-player points for one round.
#[inline]
pub fn payoff(a: Action, b: Action, m: &PayoffMatrix) -> (i64, i64) {
    match (a, b) {
        (Action::Cooperate, Action::Cooperate) => (m.reward, m.reward),
        (Action::Cooperate, Action::Defect) => (m.sucker, m.temptation),
        (Action::Defect, Action::Cooperate) => (m.temptation, m.sucker),
        (Action::Defect, Action::Defect) => (m.punishment, m.punishment),
    }
}

/// Replaces `intended` by the other action with probability `noise_prob`.
/// Always consumes exactly one uniform draw.
#[inline]
pub fn apply_noise(intended: Action, noise_prob: f64, rng: &mut StreamRng) -> Action {
    let u: f64 = rng.gen();
    if u < noise_prob {
        intended.flip()
    } else {
        intended
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub rounds: u32,
    pub noise_prob: f64,
    pub seed: u64,
    pub payoffs: PayoffMatrix,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig { rounds: 1000, noise_prob: 0.0, seed: 0, payoffs: PayoffMatrix::default() }
    }
}

impl MatchConfig {
    pub fn with_noise(noise_prob: f64) -> Self {
        MatchConfig { noise_prob, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.rounds == 0 {
            return Err(ConfigError("rounds must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_prob) {
            return Err(ConfigError(format!("noise probability {} outside [0, 1]", self.noise_prob)));
        }
        Ok(())
    }
}

/// One player's realized moves plus running tallies.
#[derive(Debug, Clone, Default)]
pub struct Track {
    actions: Vec<Action>,
    coops: u32,
    score: i64,
    streak_defects: u32,
    streak_coops: u32,
}

impl Track {
    fn with_capacity(n: usize) -> Self {
        Track { actions: Vec::with_capacity(n), ..Default::default() }
    }

    fn push(&mut self, action: Action, points: i64) {
        self.actions.push(action);
        self.score += points;
        match action {
            Action::Cooperate => {
                self.coops += 1;
                self.streak_coops += 1;
                self.streak_defects = 0;
            }
            Action::Defect => {
                self.streak_defects += 1;
                self.streak_coops = 0;
            }
        }
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn coops(&self) -> u32 {
        self.coops
    }

    pub fn defects(&self) -> u32 {
        self.actions.len() as u32 - self.coops
    }

    pub fn score(&self) -> i64 {
        self.score
    }
}

/// Shared realized history of a match in progress.
#[derive(Debug, Clone)]
pub struct History {
    a: Track,
    b: Track,
    mutual_defect_streak: u32,
    total_rounds: u32,
    payoffs: PayoffMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

impl History {
    pub fn new(total_rounds: u32, payoffs: PayoffMatrix) -> Self {
        let cap = total_rounds.min(1 << 20) as usize;
        History {
            a: Track::with_capacity(cap),
            b: Track::with_capacity(cap),
            mutual_defect_streak: 0,
            total_rounds,
            payoffs,
        }
    }

    /// Rebuilds a history from complete move sequences (used by tests and probes).
    pub fn from_actions(a: &[Action], b: &[Action], total_rounds: u32, payoffs: PayoffMatrix) -> Self {
        assert_eq!(a.len(), b.len(), "histories must have equal length");
        let mut h = History::new(total_rounds, payoffs);
        for (&x, &y) in a.iter().zip(b) {
            h.push(x, y);
        }
        h
    }

    pub fn push(&mut self, a: Action, b: Action) {
        let (pa, pb) = payoff(a, b, &self.payoffs);
        self.a.push(a, pa);
        self.b.push(b, pb);
        if a == Action::Defect && b == Action::Defect {
            self.mutual_defect_streak += 1;
        } else {
            self.mutual_defect_streak = 0;
        }
    }

    pub fn view(&self, side: Side) -> GameView<'_> {
        let (me, opp) = match side {
            Side::A => (&self.a, &self.b),
            Side::B => (&self.b, &self.a),
        };
        GameView { me, opp, mutual_defect_streak: self.mutual_defect_streak, total_rounds: self.total_rounds }
    }

    pub fn track(&self, side: Side) -> &Track {
        match side {
            Side::A => &self.a,
            Side::B => &self.b,
        }
    }

    pub fn rounds_played(&self) -> usize {
        self.a.actions.len()
    }
}

/// What a strategy may observe: the realized history from its own perspective.
#[derive(Debug, Clone, Copy)]
pub struct GameView<'a> {
    me: &'a Track,
    opp: &'a Track,
    mutual_defect_streak: u32,
    total_rounds: u32,
}

impl<'a> GameView<'a> {
    /// Number of completed rounds (0-based index of the round being decided).
    #[inline]
    pub fn round(&self) -> u32 {
        self.me.actions.len() as u32
    }

    pub fn total_rounds(&self) -> u32 {
        self.total_rounds
    }

    pub fn my_history(&self) -> &'a [Action] {
        &self.me.actions
    }

    pub fn opp_history(&self) -> &'a [Action] {
        &self.opp.actions
    }

    /// k-th most recent own action, 1-based.
    #[inline]
    pub fn my_last(&self, k: usize) -> Option<Action> {
        nth_last(&self.me.actions, k)
    }

    #[inline]
    pub fn opp_last(&self, k: usize) -> Option<Action> {
        nth_last(&self.opp.actions, k)
    }

    pub fn my_coops(&self) -> u32 {
        self.me.coops
    }

    pub fn opp_coops(&self) -> u32 {
        self.opp.coops
    }

    pub fn my_defects(&self) -> u32 {
        self.me.defects()
    }

    pub fn opp_defects(&self) -> u32 {
        self.opp.defects()
    }

    pub fn my_score(&self) -> i64 {
        self.me.score
    }

    pub fn opp_score(&self) -> i64 {
        self.opp.score
    }

    pub fn consec_opp_defects(&self) -> u32 {
        self.opp.streak_defects
    }

    pub fn consec_opp_coops(&self) -> u32 {
        self.opp.streak_coops
    }

    pub fn consec_my_defects(&self) -> u32 {
        self.me.streak_defects
    }

    pub fn consec_mutual_defects(&self) -> u32 {
        self.mutual_defect_streak
    }
}

#[inline]
fn nth_last(actions: &[Action], k: usize) -> Option<Action> {
    if k == 0 || k > actions.len() {
        None
    } else {
        Some(actions[actions.len() - k])
    }
}

/// A decision procedure with per-match state.
///
/// Instances are created fresh for every match; nothing carries over.
pub trait Strategy: Send {
    fn decide(&mut self, view: &GameView<'_>, rng: &mut StreamRng) -> Result<Action, EvalError>;

    /// Called once after each completed round with the updated history.
    fn observe(&mut self, _view: &GameView<'_>) -> Result<(), EvalError> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("player {side:?} faulted in round {round}: {source}")]
pub struct MatchError {
    pub side: Side,
    pub round: u32,
    #[source]
    pub source: EvalError,
}

/// Full trace of a match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    #[serde(with = "action_string")]
    pub actions_a: Vec<Action>,
    #[serde(with = "action_string")]
    pub actions_b: Vec<Action>,
    #[serde(with = "action_string")]
    pub intended_a: Vec<Action>,
    #[serde(with = "action_string")]
    pub intended_b: Vec<Action>,
    pub score_a: i64,
    pub score_b: i64,
    pub config: MatchConfig,
}

/// Aggregate tallies of a match, enough for every tournament metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchSummary {
    pub rounds: u32,
    pub score_a: i64,
    pub score_b: i64,
    pub coops_a: u32,
    pub coops_b: u32,
}

impl MatchSummary {
    pub fn of(record: &MatchRecord) -> Self {
        let coops = |xs: &[Action]| xs.iter().filter(|&&x| x == Action::Cooperate).count() as u32;
        MatchSummary {
            rounds: record.actions_a.len() as u32,
            score_a: record.score_a,
            score_b: record.score_b,
            coops_a: coops(&record.actions_a),
            coops_b: coops(&record.actions_b),
        }
    }

    /// The same match seen from the other seat.
    pub fn swapped(self) -> Self {
        MatchSummary {
            rounds: self.rounds,
            score_a: self.score_b,
            score_b: self.score_a,
            coops_a: self.coops_b,
            coops_b: self.coops_a,
        }
    }
}

struct Streams {
    noise_a: StreamRng,
    noise_b: StreamRng,
    strat_a: StreamRng,
    strat_b: StreamRng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Streams {
            noise_a: rng::stream(seed, &[rng::tag::NOISE_A]),
            noise_b: rng::stream(seed, &[rng::tag::NOISE_B]),
            strat_a: rng::stream(seed, &[rng::tag::STRATEGY_A]),
            strat_b: rng::stream(seed, &[rng::tag::STRATEGY_B]),
        }
    }
}

fn run_rounds(
    a: &mut dyn Strategy,
    b: &mut dyn Strategy,
    config: &MatchConfig,
    mut intended: Option<(&mut Vec<Action>, &mut Vec<Action>)>,
) -> Result<History, MatchError> {
    let mut streams = Streams::new(config.seed);
    let mut history = History::new(config.rounds, config.payoffs);
    for round in 0..config.rounds {
        let ia = a
            .decide(&history.view(Side::A), &mut streams.strat_a)
            .map_err(|source| MatchError { side: Side::A, round, source })?;
        let ib = b
            .decide(&history.view(Side::B), &mut streams.strat_b)
            .map_err(|source| MatchError { side: Side::B, round, source })?;
        let ra = apply_noise(ia, config.noise_prob, &mut streams.noise_a);
        let rb = apply_noise(ib, config.noise_prob, &mut streams.noise_b);
        if let Some((xa, xb)) = intended.as_mut() {
            xa.push(ia);
            xb.push(ib);
        }
        history.push(ra, rb);
        a.observe(&history.view(Side::A))
            .map_err(|source| MatchError { side: Side::A, round, source })?;
        b.observe(&history.view(Side::B))
            .map_err(|source| MatchError { side: Side::B, round, source })?;
    }
    Ok(history)
}

/// Plays a full match and keeps every move, pre- and post-noise.
pub fn play_match(
    a: &mut dyn Strategy,
    b: &mut dyn Strategy,
    config: &MatchConfig,
) -> Result<MatchRecord, MatchError> {
    let mut intended_a = Vec::with_capacity(config.rounds as usize);
    let mut intended_b = Vec::with_capacity(config.rounds as usize);
    let history = run_rounds(a, b, config, Some((&mut intended_a, &mut intended_b)))?;
    Ok(MatchRecord {
        score_a: history.a.score,
        score_b: history.b.score,
        actions_a: history.a.actions,
        actions_b: history.b.actions,
        intended_a,
        intended_b,
        config: *config,
    })
}

/// Plays a full match, returning only the tallies.
pub fn play_match_summary(
    a: &mut dyn Strategy,
    b: &mut dyn Strategy,
    config: &MatchConfig,
) -> Result<MatchSummary, MatchError> {
    let h = run_rounds(a, b, config, None)?;
    Ok(MatchSummary {
        rounds: config.rounds,
        score_a: h.a.score,
        score_b: h.b.score,
        coops_a: h.a.coops,
        coops_b: h.b.coops,
    })
}
