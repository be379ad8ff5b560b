use std::path::PathBuf;
use std::sync::Arc;

use proptest::prelude::*;

use evoipd_core::bank::{ClassicKind, StrategyRef};
use evoipd_core::dsl::{self, pretty_print};
use evoipd_core::game::{self, MatchConfig};

fn ints() -> impl Strategy<Value = String> {
    prop_oneof![
        (0i64..50).prop_map(|n| n.to_string()),
        Just("round".to_string()),
        Just("opp_defects".to_string()),
        Just("my_score".to_string()),
        Just("consec_opp_coops".to_string()),
        Just("streak".to_string()),
        (1usize..5).prop_map(|k| format!("coop_rate(opp, {k})")),
    ]
}

fn arith() -> impl Strategy<Value = String> {
    ints().prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "%"]), inner.clone())
                .prop_map(|(a, op, b)| format!("({a} {op} {b})")),
            inner.clone().prop_map(|a| format!("-{a}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("max({a}, {b})")),
            inner.prop_map(|a| format!("abs({a})")),
        ]
    })
}

fn conditions() -> impl Strategy<Value = String> {
    let atom = prop_oneof![
        (arith(), prop::sample::select(vec!["==", "!=", "<", "<=", ">", ">="]), arith())
            .prop_map(|(a, op, b)| format!("{a} {op} {b}")),
        (1usize..4, prop::sample::select(vec!["C", "D"])).prop_map(|(k, m)| format!("opp_last({k}) == {m}")),
        prop::sample::select(vec!["CD", "DD", "C"]).prop_map(|p| format!("pattern(my, \"{p}\")")),
        Just("true".to_string()),
    ];
    atom.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} and {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} or {b})")),
            inner.prop_map(|a| format!("not ({a})")),
        ]
    })
}

fn moves() -> impl Strategy<Value = String> {
    prop_oneof![Just("C".to_string()), Just("D".to_string()), (0u32..=10).prop_map(|p| format!("mix({})", p as f64 / 10.0))]
}

fn programs() -> impl Strategy<Value = String> {
    (moves(), prop::collection::vec((conditions(), moves()), 0..4), moves(), arith()).prop_map(|(first, rules, default, up)| {
        let rules: String = rules.iter().map(|(c, m)| format!("    if {c} -> {m}\n")).collect();
        format!(
            "#> generated\nstrategy \"p\" attitude=neutral {{\n  first: {first}\n  registers:\n    streak = 0 in [0, 100]\n  rules:\n{rules}  default: {default}\n  updates:\n    streak := {up}\n}}\n"
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pretty_print_round_trips(src in programs()) {
        let spec = dsl::parse(&src).unwrap();
        let printed = pretty_print(&spec);
        prop_assert_eq!(dsl::parse(&printed).unwrap(), spec.clone());
        prop_assert_eq!(pretty_print(&dsl::parse(&printed).unwrap()), printed);
    }

    #[test]
    fn printed_program_plays_identically(src in programs(), seed in any::<u64>()) {
        let spec = dsl::parse(&src).unwrap();
        let again = dsl::parse(&pretty_print(&spec)).unwrap();
        let mc = MatchConfig { rounds: 60, noise_prob: 0.05, seed, ..Default::default() };
        let play = |s: dsl::StrategySpec| {
            let mut me = StrategyRef::Dsl(Arc::new(s)).instantiate();
            let mut opp = ClassicKind::Random.instantiate();
            game::play_match(&mut me, &mut opp, &mc).map(|r| r.actions_a).map_err(|e| e.to_string())
        };
        prop_assert_eq!(play(spec), play(again));
    }
}

#[test]
fn bundled_and_classic_programs_round_trip() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../banks/reference/default");
    let mut sources: Vec<String> = ClassicKind::ALL.iter().map(|k| k.dsl_source().to_string()).collect();
    for att in ["aggressive", "cooperative", "neutral"] {
        for e in std::fs::read_dir(root.join(att)).unwrap() {
            sources.push(std::fs::read_to_string(e.unwrap().path()).unwrap());
        }
    }
    assert_eq!(sources.len(), 12 + 75);
    for src in sources {
        let spec = dsl::parse(&src).unwrap();
        assert!(!dsl::has_errors(&dsl::validate(&spec)), "{}", spec.name);
        assert_eq!(dsl::parse(&pretty_print(&spec)).unwrap(), spec);
    }
}
