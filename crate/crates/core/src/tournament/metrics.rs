use crate::bank::Attitude;
use crate::game::MatchSummary;

/// Pooled totals for one row player.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub points: i64,
    pub actions: u64,
    pub coops: u64,
}

impl Tally {
    fn add(&mut self, points: i64, actions: u64, coops: u64) {
        self.points += points;
        self.actions += actions;
        self.coops += coops;
    }
}

/// 3x3 tallies; cell (X, Y) counts only X-players' points and actions in
/// X-vs-Y matches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AttitudeMatrix {
    pub cells: [[Tally; 3]; 3],
}

impl AttitudeMatrix {
    /// Adds one match; matches involving unlabelled players are ignored.
    pub fn add_match(&mut self, a: Option<Attitude>, b: Option<Attitude>, m: &MatchSummary) {
        let (Some(x), Some(y)) = (a, b) else { return };
        let rounds = m.rounds as u64;
        self.cells[x.index()][y.index()].add(m.score_a, rounds, m.coops_a as u64);
        self.cells[y.index()][x.index()].add(m.score_b, rounds, m.coops_b as u64);
    }

    pub fn merge(&mut self, other: &AttitudeMatrix) {
        for (row, orow) in self.cells.iter_mut().zip(&other.cells) {
            for (c, o) in row.iter_mut().zip(orow) {
                c.add(o.points, o.actions, o.coops);
            }
        }
    }

    fn map(&self, f: impl Fn(&Tally) -> f64) -> [[Option<f64>; 3]; 3] {
        let mut out = [[None; 3]; 3];
        for (i, row) in self.cells.iter().enumerate() {
            for (j, t) in row.iter().enumerate() {
                if t.actions > 0 {
                    out[i][j] = Some(f(t));
                }
            }
        }
        out
    }

    /// Total points / total rounds per cell.
    pub fn normalized_payoff(&self) -> [[Option<f64>; 3]; 3] {
        self.map(|t| t.points as f64 / t.actions as f64)
    }

    /// Cooperations / actions per cell.
    pub fn cooperation(&self) -> [[Option<f64>; 3]; 3] {
        self.map(|t| t.coops as f64 / t.actions as f64)
    }

    /// Cooperation rate of one attitude across all its labelled pairings.
    pub fn row_cooperation(&self, attitude: Attitude) -> Option<f64> {
        let row = &self.cells[attitude.index()];
        let (coops, actions) = row.iter().fold((0u64, 0u64), |acc, t| (acc.0 + t.coops, acc.1 + t.actions));
        (actions > 0).then(|| coops as f64 / actions as f64)
    }
}
