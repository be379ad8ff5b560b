//! Human-readable tables from the result CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::stages::{BEAUFILS_CSV, COOPERATION_CSV, EQUILIBRIA_CSV, HEAD_TO_HEAD_CSV};
use crate::CliError;

const ATTITUDES: [&str; 3] = ["aggressive", "cooperative", "neutral"];

fn read(path: &Path) -> Result<Option<Vec<csv::StringRecord>>, CliError> {
    if !path.is_file() {
        return Ok(None);
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let rows = r
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(Some(rows))
}

/// (model, style, noise) to (row, col) to value.
type Groups = BTreeMap<(String, String, String), BTreeMap<(String, String), String>>;

fn matrix_table(title: &str, rows: &[csv::StringRecord], out: &mut String) {
    let mut groups = Groups::new();
    for r in rows {
        groups
            .entry((r[1].to_string(), r[0].to_string(), r[4].to_string()))
            .or_default()
            .insert((r[2].to_string(), r[3].to_string()), r[5].to_string());
    }
    for ((model, style, noise), cells) in groups {
        let _ = writeln!(out, "{title}: {model}/{style}, noise {noise}");
        let _ = writeln!(out, "{:>12} {:>12} {:>12} {:>12}", "", ATTITUDES[0], ATTITUDES[1], ATTITUDES[2]);
        for row in ATTITUDES {
            let _ = write!(out, "{row:>12}");
            for col in ATTITUDES {
                let v = cells.get(&(row.to_string(), col.to_string())).map(String::as_str).unwrap_or("");
                let shown = v.parse::<f64>().map(|x| format!("{x:.3}")).unwrap_or_else(|_| "-".into());
                let _ = write!(out, " {shown:>12}");
            }
            out.push('\n');
        }
        out.push('\n');
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Renders every result table found in `dir`.
pub fn render(dir: &Path) -> Result<String, CliError> {
    let mut out = String::new();
    let mut found = false;
    if let Some(rows) = read(&dir.join(HEAD_TO_HEAD_CSV))? {
        found = true;
        matrix_table("Normalized head-to-head payoff", &rows, &mut out);
    }
    if let Some(rows) = read(&dir.join(COOPERATION_CSV))? {
        found = true;
        matrix_table("Cooperation propensity", &rows, &mut out);
    }
    if let Some(rows) = read(&dir.join(EQUILIBRIA_CSV))? {
        found = true;
        let _ = writeln!(out, "Moran equilibria");
        let _ = writeln!(out, "{:<24} {:>6} {:>8} {:>12} {:>10} {:>5}", "bank set", "noise", "start", "attitude", "share", "runs");
        for r in &rows {
            let _ = writeln!(out, "{:<24} {:>6} {:>8} {:>12} {:>10} {:>5}", format!("{}/{}", &r[1], &r[0]), &r[2], &r[3], &r[4], &r[5], &r[6]);
        }
        out.push('\n');
    }
    if let Some(rows) = read(&dir.join(BEAUFILS_CSV))? {
        found = true;
        let mut scores: Vec<(String, Vec<f64>)> = Vec::new();
        for r in &rows {
            let s: f64 = r[2].parse().map_err(|_| CliError::Config(format!("bad score `{}` in {BEAUFILS_CSV}", &r[2])))?;
            match scores.iter_mut().find(|(n, _)| n == &r[0]) {
                Some((_, v)) => v.push(s),
                None => scores.push((r[0].to_string(), vec![s])),
            }
        }
        let _ = writeln!(out, "Beaufils tournament scores");
        let _ = writeln!(out, "{:<32} {:>8} {:>6}", "participant", "median", "reps");
        for (name, mut v) in scores {
            let n = v.len();
            let _ = writeln!(out, "{name:<32} {:>8.4} {n:>6}", median(&mut v));
        }
    }
    if !found {
        return Err(CliError::Config(format!("{}: no result files", dir.display())));
    }
    Ok(out)
}
