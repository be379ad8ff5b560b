use std::sync::Arc;

use evoipd_core::bank::{Attitude, AttitudeBank, ClassicKind, StrategyRef};
use evoipd_core::game::{self, MatchConfig, PayoffMatrix};
use evoipd_core::moran::{self, InitialCounts, MoranConfig, MoranError};
use evoipd_core::tournament::{run_tournament, Player, TournamentConfig};

fn bank(a: Attitude, kinds: &[ClassicKind]) -> Arc<AttitudeBank> {
    Arc::new(AttitudeBank::relabeled(a, kinds.iter().map(|k| k.dsl_spec())).unwrap())
}

fn genomes() -> [Arc<AttitudeBank>; 3] {
    [
        bank(Attitude::Aggressive, &[ClassicKind::AllD, ClassicKind::Mistrust]),
        bank(Attitude::Cooperative, &[ClassicKind::TitForTat, ClassicKind::Grudger]),
        bank(Attitude::Neutral, &[ClassicKind::Random, ClassicKind::Pavlov]),
    ]
}

#[test]
fn same_seed_same_match() {
    let mc = MatchConfig { rounds: 300, noise_prob: 0.2, seed: 9, ..Default::default() };
    let play = || {
        game::play_match(&mut ClassicKind::Random.instantiate(), &mut ClassicKind::Pavlov.instantiate(), &mc).unwrap()
    };
    assert_eq!(play(), play());
    let other = MatchConfig { seed: 10, ..mc };
    let r = game::play_match(&mut ClassicKind::Random.instantiate(), &mut ClassicKind::Pavlov.instantiate(), &other).unwrap();
    assert_ne!(r.actions_a, play().actions_a);
}

#[test]
fn custom_matrix_scores() {
    let payoffs = PayoffMatrix::new(4, 7, 0, 2).unwrap();
    let mc = MatchConfig { rounds: 10, payoffs, ..Default::default() };
    let r = game::play_match(&mut ClassicKind::TitForTat.instantiate(), &mut ClassicKind::AllD.instantiate(), &mc).unwrap();
    assert_eq!((r.score_a, r.score_b), (9 * 2, 7 + 9 * 2));
    assert!(PayoffMatrix::new(3, 5, 0, 3).is_err());
}

#[test]
fn tournament_is_thread_independent() {
    let players: Vec<Player> = genomes()
        .iter()
        .map(|b| Player::agent(b.attitude().as_str(), Arc::clone(b)))
        .chain(ClassicKind::ALL.iter().map(|&k| Player::fixed(StrategyRef::Classic(k))))
        .collect();
    let tc = TournamentConfig::new(players, 3, MatchConfig { rounds: 200, noise_prob: 0.1, ..Default::default() }, 77);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_tournament(&tc).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.repetitions, b.repetitions);
    assert_eq!(a.head_to_head(), b.head_to_head());
    assert_eq!(a.repetitions[0].pairs.len(), 15 * 14 / 2);
}

#[test]
fn moran_batches_are_reproducible() {
    let g = genomes();
    let config = MoranConfig::new(InitialCounts([2, 2, 2]), MatchConfig { rounds: 100, noise_prob: 0.05, ..Default::default() }, 3);
    let a = moran::run_batch(&g, &config, 8).unwrap();
    let b = moran::run_batch(&g, &config, 8).unwrap();
    let ok = |r: &moran::BatchResult| r.outcomes.iter().map(|o| o.as_ref().ok().cloned()).collect::<Vec<_>>();
    assert_eq!(ok(&a), ok(&b));
    for o in a.outcomes.iter().flatten() {
        assert!(o.trajectory.iter().all(|c| c.iter().sum::<usize>() == 6));
        assert_eq!(o.trajectory.last().unwrap()[o.fixated.index()], 6);
    }
    let p = a.proportions();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn iteration_cap_is_reported() {
    let config = MoranConfig { max_iterations: 1, ..MoranConfig::new(InitialCounts([3, 3, 3]), MatchConfig::default(), 1) };
    let b = moran::run_batch(&genomes(), &config, 2).unwrap();
    assert_eq!(b.failures(), 2);
    assert!(matches!(b.outcomes[0], Err(MoranError::MaxIterations { iterations: 1, .. })));
}

#[test]
fn from_ratio_scales_presets() {
    assert_eq!(InitialCounts::from_ratio([1, 1, 1], 12).unwrap(), InitialCounts([4, 4, 4]));
    assert_eq!(InitialCounts::from_ratio([4, 1, 1], 12).unwrap(), InitialCounts([8, 2, 2]));
    assert!(InitialCounts::from_ratio([1, 1, 1], 10).is_err());
}
