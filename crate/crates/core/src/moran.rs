//! Moran process over populations of attitude-agents.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::bank::{Attitude, AttitudeBank, BankMember, StrategyRef};
use crate::error::ConfigError;
use crate::game::{self, MatchConfig, MatchError};
use crate::rng::{self, tag, StreamRng};
use crate::tournament::{sample_member, schedule};

pub const DEFAULT_MAX_ITERATIONS: u64 = 100_000;

/// One bank per attitude; players of the same attitude share a genome.
pub type Genomes = [Arc<AttitudeBank>; 3];

/// Initial population counts, indexed by attitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InitialCounts(pub [usize; 3]);

impl InitialCounts {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Scales a ratio such as 4:1:1 to a population of `n`; counts that
    /// already sum to `n` are kept.
    pub fn from_ratio(ratio: [usize; 3], n: usize) -> Result<Self, ConfigError> {
        let sum: usize = ratio.iter().sum();
        if sum == 0 || !n.is_multiple_of(sum) {
            return Err(ConfigError(format!("ratio {} cannot be scaled to a population of {n}", InitialCounts(ratio))));
        }
        Ok(InitialCounts(ratio.map(|r| r * (n / sum))))
    }
}

impl fmt::Display for InitialCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.0[0], self.0[1], self.0[2])
    }
}

impl FromStr for InitialCounts {
    type Err = ConfigError;

    /// Parses `a:c:n` (aggressive, cooperative, neutral).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || ConfigError(format!("invalid initial population {s:?}, expected a:c:n"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let mut out = [0usize; 3];
        for (o, p) in out.iter_mut().zip(&parts) {
            *o = p.trim().parse().map_err(|_| bad())?;
        }
        Ok(InitialCounts(out))
    }
}

#[derive(Debug, Clone)]
pub struct MoranConfig {
    pub initial: InitialCounts,
    pub match_config: MatchConfig,
    pub seed: u64,
    pub max_iterations: u64,
    /// Draw the victim from everyone but the parent.
    pub exclude_parent: bool,
    /// Cache match results between deterministic strategies when noise is off.
    pub memoize: bool,
}

impl MoranConfig {
    pub fn new(initial: InitialCounts, match_config: MatchConfig, seed: u64) -> Self {
        MoranConfig {
            initial,
            match_config,
            seed,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            exclude_parent: false,
            memoize: true,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.initial.total() < 2 {
            return Err(ConfigError(format!("population {} is smaller than 2", self.initial)));
        }
        self.match_config.validate()
    }
}

#[derive(Debug, Error)]
pub enum MoranError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no fixation after {iterations} iterations (counts {counts:?})")]
    MaxIterations { iterations: u64, counts: [usize; 3] },
    #[error("iteration {iteration}, players ({}, {}): {source}", players.0, players.1)]
    Match {
        iteration: u64,
        players: (usize, usize),
        #[source]
        source: MatchError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoranOutcome {
    pub fixated: Attitude,
    pub iterations: u64,
    /// Attitude counts after each iteration, starting with the initial state.
    pub trajectory: Vec<[usize; 3]>,
}

/// Match-result cache keyed by member fingerprints.
#[derive(Debug, Default)]
pub struct Memo {
    table: Mutex<HashMap<(u64, u64), (i64, i64)>>,
}

impl Memo {
    pub fn len(&self) -> usize {
        self.table.lock().expect("memo lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Whether memoized results are exact for these genomes and match settings.
pub fn memo_eligible(genomes: &Genomes, match_config: &MatchConfig) -> bool {
    match_config.noise_prob == 0.0 && genomes.iter().all(|b| b.is_deterministic())
}

fn play(a: &BankMember, b: &BankMember, mc: &MatchConfig, memo: Option<&Memo>) -> Result<(i64, i64), MatchError> {
    let key = (a.fingerprint, b.fingerprint);
    if let Some(m) = memo {
        if let Some(&hit) = m.table.lock().expect("memo lock").get(&key) {
            return Ok(hit);
        }
    }
    let mut sa = StrategyRef::Dsl(Arc::clone(&a.spec)).instantiate();
    let mut sb = StrategyRef::Dsl(Arc::clone(&b.spec)).instantiate();
    let s = game::play_match_summary(&mut sa, &mut sb, mc)?;
    if let Some(m) = memo {
        let mut t = m.table.lock().expect("memo lock");
        t.insert(key, (s.score_a, s.score_b));
        t.insert((key.1, key.0), (s.score_b, s.score_a));
    }
    Ok((s.score_a, s.score_b))
}

/// Round-robin fitness: each player's total payoff over its n-1 matches,
/// with a fresh strategy sampled from its genome for every match.
pub fn fitness_round(
    genomes: &Genomes,
    members: &[Attitude],
    match_config: &MatchConfig,
    seed: u64,
    memo: Option<&Memo>,
) -> Result<Vec<i64>, (usize, usize, MatchError)> {
    let pairs = schedule(members.len());
    let scores: Vec<(i64, i64)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (bi, bj) = (&genomes[members[i].index()], &genomes[members[j].index()]);
            let (ii, jj) = (i as u64, j as u64);
            let a = &bi.members()[sample_member(bi, seed, &[tag::SAMPLING, ii, jj, ii])];
            let b = &bj.members()[sample_member(bj, seed, &[tag::SAMPLING, ii, jj, jj])];
            let mc = MatchConfig { seed: rng::derive_seed(seed, &[tag::TOURNAMENT_MATCH, ii, jj]), ..*match_config };
            play(a, b, &mc, memo).map_err(|e| (i, j, e))
        })
        .collect::<Result<_, _>>()?;
    let mut fitness = vec![0i64; members.len()];
    for (&(i, j), (si, sj)) in pairs.iter().zip(scores) {
        fitness[i] += si;
        fitness[j] += sj;
    }
    Ok(fitness)
}

/// Fitness-proportional parent, uniform victim. Returns (parent, victim).
pub fn moran_step(members: &mut [Attitude], fitness: &[i64], exclude_parent: bool, rng: &mut StreamRng) -> (usize, usize) {
    let n = members.len();
    assert_eq!(fitness.len(), n, "one fitness value per member");
    let total: i64 = fitness.iter().sum();
    let parent = if total <= 0 {
        rng.gen_range(0..n)
    } else {
        let mut r = rng.gen_range(0..total);
        let mut chosen = n - 1;
        for (i, &f) in fitness.iter().enumerate() {
            if r < f {
                chosen = i;
                break;
            }
            r -= f;
        }
        chosen
    };
    let victim = if exclude_parent {
        let v = rng.gen_range(0..n - 1);
        if v >= parent {
            v + 1
        } else {
            v
        }
    } else {
        rng.gen_range(0..n)
    };
    members[victim] = members[parent];
    (parent, victim)
}

pub fn counts(members: &[Attitude]) -> [usize; 3] {
    let mut c = [0usize; 3];
    for m in members {
        c[m.index()] += 1;
    }
    c
}

fn initial_members(initial: &InitialCounts) -> Vec<Attitude> {
    Attitude::ALL.iter().flat_map(|&a| std::iter::repeat_n(a, initial.0[a.index()])).collect()
}

fn fixated(c: &[usize; 3], n: usize) -> Option<Attitude> {
    Attitude::ALL.into_iter().find(|a| c[a.index()] == n)
}

/// Runs one process to fixation using `config.seed` as the run seed.
pub fn run_process(genomes: &Genomes, config: &MoranConfig, memo: Option<&Memo>) -> Result<MoranOutcome, MoranError> {
    config.validate()?;
    let mut members = initial_members(&config.initial);
    let n = members.len();
    let mut trajectory = vec![counts(&members)];
    let mut iteration = 0u64;
    loop {
        let c = *trajectory.last().expect("trajectory starts non-empty");
        if let Some(a) = fixated(&c, n) {
            return Ok(MoranOutcome { fixated: a, iterations: iteration, trajectory });
        }
        if iteration >= config.max_iterations {
            return Err(MoranError::MaxIterations { iterations: iteration, counts: c });
        }
        let fseed = rng::derive_seed(config.seed, &[tag::MORAN_FITNESS, iteration]);
        let fitness = fitness_round(genomes, &members, &config.match_config, fseed, memo)
            .map_err(|(i, j, source)| MoranError::Match { iteration, players: (i, j), source })?;
        let mut step_rng = rng::stream(config.seed, &[tag::MORAN_STEP, iteration]);
        moran_step(&mut members, &fitness, config.exclude_parent, &mut step_rng);
        iteration += 1;
        trajectory.push(counts(&members));
    }
}

#[derive(Debug)]
pub struct BatchResult {
    pub outcomes: Vec<Result<MoranOutcome, MoranError>>,
}

impl BatchResult {
    /// Fraction of all runs fixating to each attitude.
    pub fn proportions(&self) -> [f64; 3] {
        let mut c = [0usize; 3];
        for o in self.outcomes.iter().flatten() {
            c[o.fixated.index()] += 1;
        }
        c.map(|x| x as f64 / self.outcomes.len() as f64)
    }

    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| o.is_err()).count()
    }
}

/// Seed of run `run` in a batch with master seed `seed`.
pub fn run_seed(seed: u64, run: u64) -> u64 {
    rng::derive_seed(seed, &[tag::MORAN_RUN, run])
}

/// Independent runs on derived seeds; failed runs are kept, not fatal.
pub fn run_batch(genomes: &Genomes, config: &MoranConfig, runs: u32) -> Result<BatchResult, MoranError> {
    config.validate()?;
    if runs == 0 {
        return Err(ConfigError("runs must be at least 1".into()).into());
    }
    let memo = (config.memoize && memo_eligible(genomes, &config.match_config)).then(Memo::default);
    let outcomes = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let cfg = MoranConfig { seed: run_seed(config.seed, r), ..config.clone() };
            run_process(genomes, &cfg, memo.as_ref())
        })
        .collect();
    Ok(BatchResult { outcomes })
}
