use std::sync::Arc;

use crate::bank::{AttitudeBank, ClassicKind, StrategyRef};
use crate::error::ConfigError;
use crate::game::MatchConfig;
use crate::rng::{self, tag};

use super::{run_tournament, Player, TournamentConfig, TournamentError};

#[derive(Debug, Clone, PartialEq)]
pub struct ParticipantScores {
    pub name: String,
    /// One tournament score per repetition, in repetition order.
    pub scores: Vec<f64>,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeaufilsResult {
    pub participants: Vec<ParticipantScores>,
}

impl BeaufilsResult {
    pub fn get(&self, name: &str) -> Option<&ParticipantScores> {
        self.participants.iter().find(|p| p.name == name)
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Repeats a tournament of the three attitude-agents plus `roster`. Agents
/// are named after their attitude.
pub fn beaufils_harness(
    banks: &[Arc<AttitudeBank>; 3],
    roster: &[ClassicKind],
    repetitions: u32,
    match_config: &MatchConfig,
    seed: u64,
) -> Result<BeaufilsResult, TournamentError> {
    if roster.is_empty() {
        return Err(ConfigError("the roster is empty".into()).into());
    }
    let mut players: Vec<Player> =
        banks.iter().map(|b| Player::agent(b.attitude().as_str(), Arc::clone(b))).collect();
    players.extend(roster.iter().map(|&k| Player::fixed(StrategyRef::Classic(k))));
    let config = TournamentConfig::new(
        players,
        repetitions,
        *match_config,
        rng::derive_seed(seed, &[tag::BEAUFILS]),
    );
    let result = run_tournament(&config)?;
    let participants = result
        .players
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let scores = result.score_distribution(i);
            ParticipantScores { name: p.name.clone(), median: median(&scores), scores }
        })
        .collect();
    Ok(BeaufilsResult { participants })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bank::{beaufils_roster, Attitude};

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn small_harness_shape() {
        let banks = [
            Arc::new(AttitudeBank::of_classics(Attitude::Aggressive, &[ClassicKind::AllD]).unwrap()),
            Arc::new(AttitudeBank::of_classics(Attitude::Cooperative, &[ClassicKind::TitForTat]).unwrap()),
            Arc::new(AttitudeBank::of_classics(Attitude::Neutral, &[ClassicKind::Pavlov]).unwrap()),
        ];
        let mc = MatchConfig { rounds: 50, ..MatchConfig::default() };
        let r = beaufils_harness(&banks, &beaufils_roster(), 3, &mc, 5).unwrap();
        assert_eq!(r.participants.len(), 14);
        assert!(r.participants.iter().all(|p| p.scores.len() == 3));
        assert_eq!(r.participants[0].name, "aggressive");
        assert!(r.get("TitForTat").is_some());
        assert!(beaufils_harness(&banks, &[], 1, &mc, 5).is_err());
    }
}
