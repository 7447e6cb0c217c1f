//! Post-hoc aggregation of episode-style results CSVs (tower and grid).
//!
//! Rows are grouped by episode and averaged across seeds; a trailing
//! window mean is reported alongside the overall mean so late-training
//! behaviour can be read off directly. Columns that never contain a value
//! (e.g. `mean_trust` for a trustless roster) are dropped.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::LabError;

#[derive(Clone, Debug)]
pub struct ColumnSummary {
    pub name: String,
    /// Cross-seed mean per episode, in episode order.
    pub per_episode: Vec<f64>,
    pub overall_mean: f64,
    pub window_mean: f64,
}

#[derive(Clone, Debug)]
pub struct Summary {
    pub seeds: usize,
    pub episodes: usize,
    pub rows: usize,
    /// Trailing window actually used (clamped to the episode count).
    pub window: usize,
    pub columns: Vec<ColumnSummary>,
}

pub fn summarize_file(path: &Path, window: usize) -> Result<Summary, LabError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LabError::Io { path: path.to_path_buf(), source: e })?;
    summarize_text(&text, window, path)
}

pub fn summarize_text(text: &str, window: usize, origin: &Path) -> Result<Summary, LabError> {
    let schema = |message: String| LabError::Schema { path: origin.to_path_buf(), message };

    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| schema("empty file".to_string()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "seed" || cols[1] != "episode" {
        return Err(schema(format!(
            "expected a header starting 'seed,episode', got '{header}'"
        )));
    }
    let names: Vec<String> = cols[2..].iter().map(|s| s.to_string()).collect();

    // samples[column][episode] = values across seeds
    let mut samples: Vec<Vec<Vec<f64>>> = vec![Vec::new(); names.len()];
    let mut seeds = BTreeSet::new();
    let mut rows = 0usize;
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(schema(format!(
                "line {lineno}: expected {} fields, got {}",
                cols.len(),
                fields.len()
            )));
        }
        let seed: u64 = fields[0]
            .parse()
            .map_err(|_| schema(format!("line {lineno}: bad seed '{}'", fields[0])))?;
        let episode: usize = fields[1]
            .parse()
            .map_err(|_| schema(format!("line {lineno}: bad episode '{}'", fields[1])))?;
        seeds.insert(seed);
        for (i, cell) in fields[2..].iter().enumerate() {
            if samples[i].len() <= episode {
                samples[i].resize(episode + 1, Vec::new());
            }
            if !cell.is_empty() {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| schema(format!("line {lineno}: bad number '{cell}'")))?;
                samples[i][episode].push(v);
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(schema("no data rows".to_string()));
    }
    let episodes = samples.iter().map(Vec::len).max().unwrap_or(0);
    let window = window.clamp(1, episodes);

    let mut columns = Vec::new();
    for (name, per_episode_samples) in names.into_iter().zip(samples) {
        if per_episode_samples.iter().all(Vec::is_empty) {
            continue;
        }
        let per_episode: Vec<f64> = per_episode_samples.iter().map(|v| mean(v)).collect();
        let overall_mean = mean(&per_episode);
        let window_mean = mean(&per_episode[per_episode.len() - window..]);
        columns.push(ColumnSummary { name, per_episode, overall_mean, window_mean });
    }
    Ok(Summary { seeds: seeds.len(), episodes, rows, window, columns })
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

pub fn render(summary: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "rows: {}  seeds: {}  episodes: {}  window: last {}",
        summary.rows, summary.seeds, summary.episodes, summary.window
    );
    let width = summary
        .columns
        .iter()
        .map(|c| c.name.len())
        .chain(std::iter::once("column".len()))
        .max()
        .unwrap_or(6);
    let _ = writeln!(out, "{:<width$}  {:>14}  {:>14}", "column", "mean", "window mean");
    for c in &summary.columns {
        let _ = writeln!(
            out,
            "{:<width$}  {:>14.6}  {:>14.6}",
            c.name, c.overall_mean, c.window_mean
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn run(text: &str, window: usize) -> Result<Summary, LabError> {
        summarize_text(text, window, &PathBuf::from("test.csv"))
    }

    const SAMPLE: &str = "seed,episode,success,mean_trust\n\
        0,0,0,0.5\n\
        0,1,1,0.7\n\
        1,0,1,0.1\n\
        1,1,1,0.9\n";

    #[test]
    fn cross_seed_means_by_hand() {
        let s = run(SAMPLE, 1).unwrap();
        assert_eq!((s.seeds, s.episodes, s.rows, s.window), (2, 2, 4, 1));
        let success = &s.columns[0];
        assert_eq!(success.name, "success");
        assert_eq!(success.per_episode, vec![0.5, 1.0]);
        assert_eq!(success.overall_mean, 0.75);
        assert_eq!(success.window_mean, 1.0);
        let trust = &s.columns[1];
        assert!((trust.per_episode[0] - 0.3).abs() < 1e-12);
        assert!((trust.window_mean - 0.8).abs() < 1e-12);
    }

    #[test]
    fn window_clamps_to_episode_count() {
        let s = run(SAMPLE, 100).unwrap();
        assert_eq!(s.window, 2);
        assert_eq!(s.columns[0].window_mean, s.columns[0].overall_mean);
        let s = run(SAMPLE, 0).unwrap();
        assert_eq!(s.window, 1);
    }

    #[test]
    fn empty_column_is_dropped() {
        let text = "seed,episode,deaths,mean_trust\n0,0,1,\n0,1,2,\n";
        let s = run(text, 1).unwrap();
        assert_eq!(s.columns.len(), 1);
        assert_eq!(s.columns[0].name, "deaths");
    }

    #[test]
    fn schema_violations_are_reported_with_line_numbers() {
        assert!(run("", 1).unwrap_err().to_string().contains("empty file"));
        let err = run("seed,game,x\n0,0,1\n", 1).unwrap_err();
        assert!(err.to_string().contains("seed,episode"));
        let err = run("seed,episode,x\n0,0\n", 1).unwrap_err();
        assert!(err.to_string().contains("line 2"));
        let err = run("seed,episode,x\n0,0,oops\n", 1).unwrap_err();
        assert!(err.to_string().contains("bad number 'oops'"));
        let err = run("seed,episode,x\n", 1).unwrap_err();
        assert!(err.to_string().contains("no data rows"));
    }

    #[test]
    fn render_lists_every_surviving_column() {
        let text = render(&run(SAMPLE, 2).unwrap());
        assert!(text.contains("rows: 4"));
        assert!(text.contains("success"));
        assert!(text.contains("mean_trust"));
    }
}
