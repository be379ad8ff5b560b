//! CSV results consumed by the plotting tools.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::bank::Attitude;
use crate::moran::MoranOutcome;

pub const HEAD_TO_HEAD: &[&str] = &["prompt_style", "model", "row_attitude", "col_attitude", "noise", "normalized_payoff"];
pub const COOPERATION: &[&str] = &["prompt_style", "model", "row_attitude", "col_attitude", "noise", "propensity"];
pub const BEAUFILS_SCORES: &[&str] = &["participant", "repetition", "tournament_score"];
pub const EQUILIBRIA: &[&str] = &["prompt_style", "model", "noise", "initial_ratio", "attitude", "proportion", "runs"];
pub const TRAJECTORY: &[&str] = &["iteration", "aggressive", "cooperative", "neutral"];

/// File name to column list, matching `schemas/csv_schemas.json`.
pub const SCHEMAS: [(&str, &[&str]); 5] = [
    ("head_to_head.csv", HEAD_TO_HEAD),
    ("cooperation.csv", COOPERATION),
    ("beaufils_scores.csv", BEAUFILS_SCORES),
    ("equilibria.csv", EQUILIBRIA),
    ("trajectory_<run>.csv", TRAJECTORY),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixRow {
    pub prompt_style: String,
    pub model: String,
    pub row_attitude: Attitude,
    pub col_attitude: Attitude,
    pub noise: f64,
    /// Empty when no such pairing was played.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeaufilsRow {
    pub participant: String,
    pub repetition: u32,
    pub tournament_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumRow {
    pub prompt_style: String,
    pub model: String,
    pub noise: f64,
    pub initial_ratio: String,
    pub attitude: Attitude,
    pub proportion: f64,
    pub runs: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrajectoryRow {
    pub iteration: u64,
    pub aggressive: usize,
    pub cooperative: usize,
    pub neutral: usize,
}

/// Flattens a 3x3 attitude matrix into rows, aggressive first.
pub fn matrix_rows(prompt_style: &str, model: &str, noise: f64, m: &[[Option<f64>; 3]; 3]) -> Vec<MatrixRow> {
    let mut rows = Vec::with_capacity(9);
    for r in Attitude::ALL {
        for c in Attitude::ALL {
            rows.push(MatrixRow {
                prompt_style: prompt_style.into(),
                model: model.into(),
                row_attitude: r,
                col_attitude: c,
                noise,
                value: m[r.index()][c.index()],
            });
        }
    }
    rows
}

pub fn trajectory_rows(outcome: &MoranOutcome) -> Vec<TrajectoryRow> {
    outcome
        .trajectory
        .iter()
        .enumerate()
        .map(|(i, c)| TrajectoryRow { iteration: i as u64, aggressive: c[0], cooperative: c[1], neutral: c[2] })
        .collect()
}

/// Writes `columns` as the header, then one record per row. The header is
/// written even when there are no rows.
pub fn write_csv<W: Write, T: Serialize>(out: W, columns: &[&str], rows: &[T]) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(columns)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}

pub fn write_csv_file<T: Serialize>(path: &Path, columns: &[&str], rows: &[T]) -> io::Result<()> {
    write_csv(io::BufWriter::new(File::create(path)?), columns, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn render<T: Serialize>(columns: &[&str], rows: &[T]) -> String {
        let mut buf = Vec::new();
        write_csv(&mut buf, columns, rows).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn header_only_when_empty() {
        assert_eq!(render::<BeaufilsRow>(BEAUFILS_SCORES, &[]), "participant,repetition,tournament_score\n");
    }

    #[test]
    fn matrix_rows_leave_absent_cells_empty() {
        let mut m = [[Some(1.0); 3]; 3];
        m[1][1] = None;
        let rows = matrix_rows("default", "ref", 0.1, &m);
        assert_eq!(rows.len(), 9);
        let text = render(HEAD_TO_HEAD, &rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], HEAD_TO_HEAD.join(","));
        assert_eq!(lines[1], "default,ref,aggressive,aggressive,0.1,1.0");
        assert_eq!(lines[5], "default,ref,cooperative,cooperative,0.1,");
    }

    #[test]
    fn trajectory_columns() {
        let o = MoranOutcome { fixated: Attitude::Aggressive, iterations: 1, trajectory: vec![[2, 1, 0], [3, 0, 0]] };
        let text = render(TRAJECTORY, &trajectory_rows(&o));
        assert_eq!(text, "iteration,aggressive,cooperative,neutral\n0,2,1,0\n1,3,0,0\n");
    }

    #[test]
    fn schema_file_matches() {
        let text = include_str!("../../../schemas/csv_schemas.json");
        let v: serde_json::Value = serde_json::from_str(text).unwrap();
        let obj = v.as_object().unwrap();
        assert_eq!(obj.len(), SCHEMAS.len());
        for (file, cols) in SCHEMAS {
            let listed: Vec<&str> = obj[file].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
            assert_eq!(listed, cols, "{file}");
        }
    }
}
