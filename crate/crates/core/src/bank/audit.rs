use std::sync::Arc;

use crate::game::MatchConfig;
use crate::tournament::{run_tournament, AttitudeMatrix, Player, TournamentConfig, TournamentError};

use super::{Attitude, AttitudeBank};

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub tallies: AttitudeMatrix,
    /// Cooperation propensity, row attitude vs column attitude.
    pub cooperation: [[Option<f64>; 3]; 3],
    /// Aggressive members cooperate less than cooperative members, pooled
    /// over all their pairings.
    pub faithful: bool,
}

impl AuditReport {
    pub fn cell(&self, row: Attitude, col: Attitude) -> Option<f64> {
        self.cooperation[row.index()][col.index()]
    }
}

/// Plays one all-play-all tournament over every member of the three banks.
pub fn audit_bank(banks: &[Arc<AttitudeBank>; 3], config: &MatchConfig, seed: u64) -> Result<AuditReport, TournamentError> {
    let players: Vec<Player> = banks.iter().flat_map(|b| Player::members_of(b)).collect();
    let result = run_tournament(&TournamentConfig::new(players, 1, *config, seed))?;
    let tallies = result.totals;
    let faithful = match (tallies.row_cooperation(Attitude::Aggressive), tallies.row_cooperation(Attitude::Cooperative)) {
        (Some(a), Some(c)) => a < c,
        _ => false,
    };
    Ok(AuditReport { tallies, cooperation: tallies.cooperation(), faithful })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bank::ClassicKind;

    fn banks(a: &[ClassicKind], c: &[ClassicKind], n: &[ClassicKind]) -> [Arc<AttitudeBank>; 3] {
        [
            Arc::new(AttitudeBank::of_classics(Attitude::Aggressive, a).unwrap()),
            Arc::new(AttitudeBank::of_classics(Attitude::Cooperative, c).unwrap()),
            Arc::new(AttitudeBank::of_classics(Attitude::Neutral, n).unwrap()),
        ]
    }

    #[test]
    fn singleton_banks() {
        let b = banks(&[ClassicKind::AllD], &[ClassicKind::AllC], &[ClassicKind::TitForTat]);
        let r = audit_bank(&b, &MatchConfig::default(), 3).unwrap();
        assert_eq!(r.cell(Attitude::Aggressive, Attitude::Cooperative), Some(0.0));
        assert_eq!(r.cell(Attitude::Cooperative, Attitude::Cooperative), None);
        assert!(r.faithful);
    }

    #[test]
    fn swapped_labels_are_unfaithful() {
        let b = banks(&[ClassicKind::AllC], &[ClassicKind::AllD], &[ClassicKind::TitForTat]);
        assert!(!audit_bank(&b, &MatchConfig::default(), 3).unwrap().faithful);
    }
}
