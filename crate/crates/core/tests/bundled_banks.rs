use std::path::PathBuf;

use evoipd_core::bank::{beaufils_roster, sha256_hex, Attitude, BankSet, Manifest};
use evoipd_core::game::MatchConfig;
use evoipd_core::tournament::{beaufils_harness, run_tournament, Player, TournamentConfig};

fn reference() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../banks/reference/default")
}

#[test]
fn loads_three_banks_of_25() {
    let set = BankSet::load(&reference()).unwrap();
    assert_eq!((set.model.as_str(), set.prompt_style.as_str()), ("reference", "default"));
    for a in Attitude::ALL {
        assert_eq!(set.bank(a).len(), 25, "{a}");
        assert!(set.bank(a).members().iter().all(|m| m.provenance.model == "reference"));
    }
}

#[test]
fn manifest_hashes_match_files() {
    let root = reference();
    let m = Manifest::read(&root.join("manifest.json")).unwrap();
    assert_eq!(m.strategies.len(), 75);
    for e in &m.strategies {
        let bytes = std::fs::read(root.join(&e.file)).unwrap();
        assert_eq!(sha256_hex(&bytes), e.sha256, "{}", e.file);
    }
}

#[test]
fn cooperative_self_play() {
    let set = BankSet::load(&reference()).unwrap();
    let players = Player::members_of(set.bank(Attitude::Cooperative));
    let r = run_tournament(&TournamentConfig::new(players, 1, MatchConfig::default(), 7)).unwrap();
    let c = Attitude::Cooperative.index();
    assert!(r.head_to_head()[c][c].unwrap() >= 2.95);
    assert!(r.totals.cooperation()[c][c].unwrap() >= 0.98);
}

#[test]
fn beaufils_ordering_small() {
    let set = BankSet::load(&reference()).unwrap();
    let banks = set.banks.clone();
    let r = beaufils_harness(&banks, &beaufils_roster(), 40, &MatchConfig::default(), 11).unwrap();
    for p in &r.participants {
        eprintln!("{:>14} {:.4}", p.name, p.median);
    }
    let med = |a: Attitude| r.get(a.as_str()).unwrap().median;
    assert!(med(Attitude::Cooperative) > med(Attitude::Aggressive));
    assert!(med(Attitude::Neutral) > med(Attitude::Aggressive));
}
