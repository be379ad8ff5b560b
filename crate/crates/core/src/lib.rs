pub mod bank;
pub mod dsl;
pub mod error;
pub mod game;
pub mod ingest;
pub mod moran;
pub mod output;
pub mod rng;
pub mod tournament;
