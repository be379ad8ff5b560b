//! Human-written reference strategies, each with a native implementation
//! and an equivalent DSL encoding.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;

use crate::dsl::{self, StrategySpec};
use crate::error::EvalError;
use crate::game::{Action, GameView, Strategy, C, D};
use crate::rng::StreamRng;

use super::BankError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassicKind {
    AllC,
    AllD,
    Random,
    TitForTat,
    Grudger,
    SoftMajority,
    Mistrust,
    Pavlov,
    Gradual,
    PeriodicCD,
    PeriodicCCD,
    PeriodicDDC,
}

impl ClassicKind {
    pub const ALL: [ClassicKind; 12] = [
        ClassicKind::AllC,
        ClassicKind::AllD,
        ClassicKind::Random,
        ClassicKind::TitForTat,
        ClassicKind::Grudger,
        ClassicKind::SoftMajority,
        ClassicKind::Mistrust,
        ClassicKind::Pavlov,
        ClassicKind::Gradual,
        ClassicKind::PeriodicCD,
        ClassicKind::PeriodicCCD,
        ClassicKind::PeriodicDDC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassicKind::AllC => "AllC",
            ClassicKind::AllD => "AllD",
            ClassicKind::Random => "Random",
            ClassicKind::TitForTat => "TitForTat",
            ClassicKind::Grudger => "Grudger",
            ClassicKind::SoftMajority => "SoftMajority",
            ClassicKind::Mistrust => "Mistrust",
            ClassicKind::Pavlov => "Pavlov",
            ClassicKind::Gradual => "Gradual",
            ClassicKind::PeriodicCD => "PeriodicCD",
            ClassicKind::PeriodicCCD => "PeriodicCCD",
            ClassicKind::PeriodicDDC => "PeriodicDDC",
        }
    }

    /// The same behavior written in the strategy DSL.
    pub fn dsl_source(self) -> &'static str {
        match self {
            ClassicKind::AllC => r#"strategy "AllC" attitude=cooperative { first: C rules: default: C }"#,
            ClassicKind::AllD => r#"strategy "AllD" attitude=aggressive { first: D rules: default: D }"#,
            ClassicKind::Random => {
                r#"strategy "Random" attitude=neutral { first: mix(0.5) rules: default: mix(0.5) }"#
            }
            ClassicKind::TitForTat => {
                r#"strategy "TitForTat" attitude=neutral {
  first: C
  rules:
    if opp_last(1) == D -> D
  default: C
}"#
            }
            ClassicKind::Grudger => {
                r#"strategy "Grudger" attitude=neutral {
  first: C
  rules:
    if opp_defects > 0 -> D
  default: C
}"#
            }
            ClassicKind::SoftMajority => {
                r#"strategy "SoftMajority" attitude=cooperative {
  first: C
  rules:
    if opp_defects > opp_coops -> D
  default: C
}"#
            }
            ClassicKind::Mistrust => {
                r#"strategy "Mistrust" attitude=neutral {
  first: D
  rules:
    if opp_last(1) == D -> D
  default: C
}"#
            }
            ClassicKind::Pavlov => {
                r#"strategy "Pavlov" attitude=neutral {
  first: C
  rules:
    if my_last(1) != opp_last(1) -> D
  default: C
}"#
            }
            ClassicKind::Gradual => {
                r#"strategy "Gradual" attitude=neutral {
  first: C
  registers:
    punish = 0 in [0, 1000000]
    calm = 0 in [0, 2]
  rules:
    if punish > 0 -> D
  default: C
  updates:
    calm := calm - 1 if punish == 0 and calm > 0
    punish := punish - 1 if punish > 0
    punish := opp_defects if punish == 0 and calm == 0 and opp_last(1) == D
    calm := 2 if punish > 0 and calm == 0
}"#
            }
            ClassicKind::PeriodicCD => {
                r#"strategy "PeriodicCD" attitude=neutral { first: C rules: if round % 2 == 1 -> D default: C }"#
            }
            ClassicKind::PeriodicCCD => {
                r#"strategy "PeriodicCCD" attitude=neutral { first: C rules: if round % 3 == 2 -> D default: C }"#
            }
            ClassicKind::PeriodicDDC => {
                r#"strategy "PeriodicDDC" attitude=aggressive { first: D rules: if round % 3 == 2 -> C default: D }"#
            }
        }
    }

    pub fn dsl_spec(self) -> StrategySpec {
        dsl::parse(self.dsl_source()).expect("bundled classic encodings parse")
    }

    pub fn instantiate(self) -> ClassicStrategy {
        ClassicStrategy { kind: self, punish_left: 0, calm_left: 0 }
    }

    pub fn is_deterministic(self) -> bool {
        self != ClassicKind::Random
    }
}

impl fmt::Display for ClassicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassicKind {
    type Err = BankError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Ok(match key.as_str() {
            "allc" | "cooperate" | "alwayscooperate" => ClassicKind::AllC,
            "alld" | "defect" | "alwaysdefect" => ClassicKind::AllD,
            "random" | "random05" => ClassicKind::Random,
            "titfortat" | "tft" => ClassicKind::TitForTat,
            "grudger" | "spiteful" | "grimtrigger" => ClassicKind::Grudger,
            "softmajority" | "softmajo" => ClassicKind::SoftMajority,
            "mistrust" | "suspicioustitfortat" | "stft" => ClassicKind::Mistrust,
            "pavlov" | "winstayloseshift" => ClassicKind::Pavlov,
            "gradual" => ClassicKind::Gradual,
            "periodiccd" | "percd" => ClassicKind::PeriodicCD,
            "periodicccd" | "perccd" => ClassicKind::PeriodicCCD,
            "periodicddc" | "perddc" => ClassicKind::PeriodicDDC,
            _ => return Err(BankError::UnknownStrategy(s.to_string())),
        })
    }
}

/// Looks up a classic strategy by name.
pub fn classic(name: &str) -> Result<ClassicStrategy, BankError> {
    Ok(name.parse::<ClassicKind>()?.instantiate())
}

/// The eleven-strategy benchmark roster: the twelve classics minus the
/// second periodic player.
pub fn beaufils_roster() -> Vec<ClassicKind> {
    ClassicKind::ALL.iter().copied().filter(|&k| k != ClassicKind::PeriodicCCD).collect()
}

/// Native implementation of a classic strategy.
#[derive(Debug, Clone)]
pub struct ClassicStrategy {
    kind: ClassicKind,
    punish_left: u32,
    calm_left: u32,
}

impl ClassicStrategy {
    pub fn kind(&self) -> ClassicKind {
        self.kind
    }
}

impl Strategy for ClassicStrategy {
    fn decide(&mut self, view: &GameView<'_>, rng: &mut StreamRng) -> Result<Action, EvalError> {
        let round = view.round();
        let opp_last = view.opp_last(1);
        Ok(match self.kind {
            ClassicKind::AllC => C,
            ClassicKind::AllD => D,
            ClassicKind::Random => {
                if rng.gen::<f64>() < 0.5 {
                    C
                } else {
                    D
                }
            }
            ClassicKind::TitForTat => opp_last.unwrap_or(C),
            ClassicKind::Grudger => {
                if view.opp_history().contains(&D) {
                    D
                } else {
                    C
                }
            }
            ClassicKind::SoftMajority => {
                let defects = view.opp_history().iter().filter(|&&a| a == D).count();
                if defects * 2 > view.opp_history().len() {
                    D
                } else {
                    C
                }
            }
            ClassicKind::Mistrust => opp_last.unwrap_or(D),
            ClassicKind::Pavlov => match (view.my_last(1), opp_last) {
                (None, _) => C,
                (mine, theirs) if mine == theirs => C,
                _ => D,
            },
            ClassicKind::Gradual => {
                // After the opponent's n-th defection: n defections, then two cooperations.
                if round == 0 {
                    C
                } else if self.punish_left > 0 {
                    self.punish_left -= 1;
                    D
                } else if self.calm_left > 0 {
                    self.calm_left -= 1;
                    C
                } else if opp_last == Some(D) {
                    let n = view.opp_history().iter().filter(|&&a| a == D).count() as u32;
                    self.punish_left = n - 1;
                    self.calm_left = 2;
                    D
                } else {
                    C
                }
            }
            ClassicKind::PeriodicCD => [C, D][round as usize % 2],
            ClassicKind::PeriodicCCD => [C, C, D][round as usize % 3],
            ClassicKind::PeriodicDDC => [D, D, C][round as usize % 3],
        })
    }
}

/// A strategy reference that can be instantiated for a match.
#[derive(Debug, Clone)]
pub enum StrategyRef {
    Classic(ClassicKind),
    Dsl(Arc<StrategySpec>),
}

impl StrategyRef {
    pub fn name(&self) -> &str {
        match self {
            StrategyRef::Classic(k) => k.name(),
            StrategyRef::Dsl(s) => &s.name,
        }
    }

    pub fn instantiate(&self) -> StrategyInstance {
        match self {
            StrategyRef::Classic(k) => StrategyInstance::Classic(k.instantiate()),
            StrategyRef::Dsl(s) => StrategyInstance::Dsl(dsl::DslStrategy::new(Arc::clone(s))),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        match self {
            StrategyRef::Classic(k) => k.is_deterministic(),
            StrategyRef::Dsl(s) => s.is_deterministic(),
        }
    }
}

/// Concrete per-match strategy state, without boxing.
#[derive(Debug, Clone)]
pub enum StrategyInstance {
    Classic(ClassicStrategy),
    Dsl(dsl::DslStrategy),
}

impl Strategy for StrategyInstance {
    #[inline]
    fn decide(&mut self, view: &GameView<'_>, rng: &mut StreamRng) -> Result<Action, EvalError> {
        match self {
            StrategyInstance::Classic(s) => s.decide(view, rng),
            StrategyInstance::Dsl(s) => s.decide(view, rng),
        }
    }

    #[inline]
    fn observe(&mut self, view: &GameView<'_>) -> Result<(), EvalError> {
        match self {
            StrategyInstance::Classic(s) => s.observe(view),
            StrategyInstance::Dsl(s) => s.observe(view),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{actions_to_string, play_match, History, MatchConfig, PayoffMatrix, Side};
    use rand::SeedableRng;

    #[test]
    fn every_encoding_is_valid() {
        for k in ClassicKind::ALL {
            let spec = k.dsl_spec();
            assert_eq!(spec.name, k.name());
            assert!(dsl::validate(&spec).is_empty(), "{k}: {:?}", dsl::validate(&spec));
            assert_eq!(spec.is_deterministic(), k.is_deterministic());
        }
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!("tit-for-tat".parse::<ClassicKind>().unwrap(), ClassicKind::TitForTat);
        assert_eq!("Spiteful".parse::<ClassicKind>().unwrap(), ClassicKind::Grudger);
        assert_eq!("per_ddc".parse::<ClassicKind>().unwrap(), ClassicKind::PeriodicDDC);
        assert!(matches!(classic("Joss"), Err(BankError::UnknownStrategy(_))));
        assert_eq!(beaufils_roster().len(), 11);
        assert!(!beaufils_roster().contains(&ClassicKind::PeriodicCCD));
    }

    #[test]
    fn tft_opens_with_cooperation() {
        let h = History::new(10, PayoffMatrix::default());
        let mut rng = StreamRng::seed_from_u64(0);
        let mut s = classic("TitForTat").unwrap();
        assert_eq!(s.decide(&h.view(Side::A), &mut rng).unwrap(), C);
    }

    #[test]
    fn grudger_never_forgives() {
        let opp: Vec<Action> = "CCDCCCCCCC".chars().map(|c| Action::from_char(c).unwrap()).collect();
        let mut s = classic("Grudger").unwrap();
        let mut rng = StreamRng::seed_from_u64(0);
        let mut mine = Vec::new();
        for t in 0..opp.len() {
            let h = History::from_actions(&mine, &opp[..t], 10, PayoffMatrix::default());
            mine.push(s.decide(&h.view(Side::A), &mut rng).unwrap());
        }
        assert_eq!(actions_to_string(&mine), "CCCDDDDDDD");
    }

    #[test]
    fn gradual_against_alld_first_twelve_rounds() {
        // Hand simulation: C; opp has 1 defection -> D, C, C; opp has 4 -> D x4, C, C;
        // opp has 10 -> D ...
        let cfg = MatchConfig { rounds: 12, ..Default::default() };
        let rec = play_match(&mut ClassicKind::Gradual.instantiate(), &mut ClassicKind::AllD.instantiate(), &cfg).unwrap();
        assert_eq!(actions_to_string(&rec.actions_a), "CDCCDDDDCCDD");
        let spec = Arc::new(ClassicKind::Gradual.dsl_spec());
        let rec = play_match(&mut dsl::DslStrategy::new(spec), &mut ClassicKind::AllD.instantiate(), &cfg).unwrap();
        assert_eq!(actions_to_string(&rec.actions_a), "CDCCDDDDCCDD");
    }

    #[test]
    fn periodic_players() {
        let cfg = MatchConfig { rounds: 7, ..Default::default() };
        let rec = play_match(&mut ClassicKind::PeriodicCD.instantiate(), &mut ClassicKind::PeriodicDDC.instantiate(), &cfg)
            .unwrap();
        assert_eq!(actions_to_string(&rec.actions_a), "CDCDCDC");
        assert_eq!(actions_to_string(&rec.actions_b), "DDCDDCD");
    }
}
