//! Prompt templates for the three prompt styles and the DSL converter.

use crate::bank::Attitude;
use crate::game::PayoffMatrix;

pub const GRAMMAR: &str = include_str!("../../../../docs/grammar.ebnf");

/// Words that must not appear in scenario text.
pub const BANNED_WORDS: [&str; 4] = ["cooperate", "defect", "payoff", "game"];

pub struct Scenario {
    pub title: &'static str,
    pub text: &'static str,
}

/// Situations with the same incentives as the dilemma, told without its vocabulary.
pub const SCENARIOS: [Scenario; 4] = [
    Scenario {
        title: "trade protocol",
        text: "Two neighbouring nations renegotiate their trade protocol every quarter. Each quarter, \
               each delegation either keeps its tariffs low as agreed or quietly raises them on the \
               other's goods. If both keep tariffs low, both economies prosper. If one raises tariffs \
               while the other keeps them low, the one raising them gains a large advantage and the \
               other suffers badly. If both raise tariffs, both economies stagnate, though less \
               painfully than being the only one to hold back. Each delegation learns what the other \
               did at the end of every quarter, and the talks continue for many quarters.",
    },
    Scenario {
        title: "engineering partnership",
        text: "Two firms jointly develop a product, and each month every firm decides whether to \
               share its latest engineering work openly with the partner or to hold it back while \
               still using whatever the partner shares. When both share, the product advances quickly \
               and both profit well. A firm that holds back while the partner shares captures the most \
               value for itself, leaving the partner with nothing to show for its effort. When both hold \
               back, progress is slow and both earn little. Each firm sees at month end what the other \
               contributed, and the partnership runs for many months.",
    },
    Scenario {
        title: "shared fishery",
        text: "Two fishing fleets work the same bay. Each season, each fleet either respects the \
               agreed catch limit or overfishes. If both respect the limit, stocks stay healthy and \
               both earn a good living. If one fleet overfishes while the other holds to the limit, the \
               overfishing fleet earns a windfall and the other earns almost nothing. If both \
               overfish, catches shrink and both earn a poor living. Each fleet learns the other's \
               catch after every season, and the fleets expect to share the bay for many seasons.",
    },
    Scenario {
        title: "research consortium",
        text: "Two laboratories in a research consortium must each decide, every funding cycle, \
               whether to contribute their data to the shared pool or to keep it private while drawing \
               on the pool. If both contribute, both publish strong results. A laboratory that keeps its \
               data private while the other contributes gains a decisive lead, and the contributing \
               laboratory is scooped. If both keep their data private, both publish weak results. At the \
               end of each cycle each laboratory can see what the other contributed, and the consortium \
               lasts for many cycles.",
    },
];

/// Banned words found in `text`, case-insensitively.
pub fn banned_words(text: &str) -> Vec<&'static str> {
    let lower = text.to_lowercase();
    BANNED_WORDS.iter().copied().filter(|w| lower.contains(w)).collect()
}

pub fn game_description(payoffs: &PayoffMatrix, rounds: u32) -> String {
    let PayoffMatrix { reward, temptation, sucker, punishment } = *payoffs;
    format!(
        "You are playing the iterated prisoner's dilemma against one opponent for {rounds} rounds. \
         In every round both players simultaneously choose to cooperate (C) or defect (D). \
         If both cooperate, each receives {reward} points. If both defect, each receives {punishment} \
         point(s). If one defects while the other cooperates, the defector receives {temptation} points \
         and the cooperator receives {sucker}. After each round both players see what the other chose. \
         Moves are occasionally flipped by noise, so an observed move may differ from the intended one. \
         Your goal is a strategy for the whole match."
    )
}

fn disposition(attitude: Attitude) -> &'static str {
    match attitude {
        Attitude::Aggressive => "aggressive",
        Attitude::Cooperative => "cooperative",
        Attitude::Neutral => "neutral",
    }
}

/// Attitude wording that avoids game-theoretic vocabulary.
fn prose_disposition(attitude: Attitude) -> &'static str {
    match attitude {
        Attitude::Aggressive => "assertive and self-interested, pressing for advantage",
        Attitude::Cooperative => "trusting and generous, building a lasting partnership",
        Attitude::Neutral => "balanced and pragmatic, neither trusting nor hostile by default",
    }
}

pub fn author_system() -> String {
    "You design strategies for repeated decision problems. Answer with a clear, complete description \
     of the strategy in plain English, covering the first move and how later moves depend on what has \
     happened so far."
        .into()
}

pub fn default_prompt(attitude: Attitude, payoffs: &PayoffMatrix, rounds: u32, request: usize) -> String {
    format!(
        "{}\n\nCreate a strategy with a {} attitude. Describe it in natural language only, without code. \
         (Request {request}.)",
        game_description(payoffs, rounds),
        disposition(attitude)
    )
}

pub fn critique_prompt(strategy: &str) -> String {
    format!("Here is a strategy for the iterated prisoner's dilemma:\n\n{strategy}\n\nList your critiques of this strategy.")
}

pub fn rewrite_prompt(critique: &str) -> String {
    format!(
        "Rewrite the strategy taking into account the critique below. Reply with the rewritten strategy \
         only, in natural language.\n\nCritique:\n{critique}"
    )
}

pub fn prose_prompt(scenario: &Scenario, attitude: Attitude, request: usize) -> String {
    format!(
        "{}\n\nYou advise one side. Describe a high-level approach for the whole period that is {}. \
         (Request {request}.)",
        scenario.text,
        prose_disposition(attitude)
    )
}

pub fn prose_transfer_prompt(approach: &str, payoffs: &PayoffMatrix, rounds: u32) -> String {
    format!(
        "{}\n\nConvert the following high-level approach into a strategy for this game, described in \
         natural language only.\n\nApproach:\n{approach}",
        game_description(payoffs, rounds)
    )
}

pub fn converter_system() -> String {
    format!(
        "You translate natural-language strategies for the iterated prisoner's dilemma into a small \
         strategy language. Its grammar:\n\n{GRAMMAR}\n\nExample (tit for tat):\n\n\
         strategy \"tit_for_tat\" attitude=cooperative {{\n  first: C\n  rules:\n    if opp_last(1) == D -> D\n  default: C\n}}\n\n\
         Reply with exactly one program and nothing else. If the strategy cannot be expressed in this \
         language, reply with a single line starting with INEXPRESSIBLE: followed by the reason."
    )
}

pub fn convert_prompt(strategy: &str, attitude: Attitude) -> String {
    format!(
        "Translate this strategy. Label it attitude={}.\n\nStrategy:\n{strategy}",
        attitude.as_str()
    )
}

pub fn repair_prompt(diagnostics: &[String]) -> String {
    format!(
        "That program was rejected:\n{}\nReply with a corrected program only.",
        diagnostics.iter().map(|d| format!("- {d}")).collect::<Vec<_>>().join("\n")
    )
}
