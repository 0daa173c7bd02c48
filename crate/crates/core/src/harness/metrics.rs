use std::fs::File;
use std::path::Path;

use super::HarnessError;

/// Bumped whenever the column set changes.
pub const METRICS_SCHEMA_VERSION: u32 = 1;

/// One completed episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub episode: usize,
    /// Sum of the shared extrinsic reward over the episode.
    pub return_mean: f64,
    pub return_trailing100: f64,
    /// Per agent, mean over the episode's updates of the aggregated CI.
    pub intrinsic: Vec<f64>,
    /// Per ordered pair, mean over the episode's updates.
    pub ci: Vec<f64>,
    pub seconds: f64,
}

/// Header of a run with `n_agents` learners and the given pair order.
pub fn header(n_agents: usize, pairs: &[(usize, usize)]) -> Vec<String> {
    let mut h = vec![
        "episode".to_string(),
        "return_mean".to_string(),
        "return_trailing100".to_string(),
    ];
    h.extend((0..n_agents).map(|i| format!("intrinsic_mean_agent_{i}")));
    h.extend(pairs.iter().map(|(i, j)| format!("ci_pair_{i}_{j}")));
    h.push("seconds".to_string());
    h
}

fn record(row: &EpisodeRow) -> Vec<String> {
    let mut r = vec![
        row.episode.to_string(),
        row.return_mean.to_string(),
        row.return_trailing100.to_string(),
    ];
    r.extend(row.intrinsic.iter().map(f64::to_string));
    r.extend(row.ci.iter().map(f64::to_string));
    r.push(row.seconds.to_string());
    r
}

/// Streams rows to a CSV file, flushing after each one.
pub struct MetricsWriter {
    writer: csv::Writer<File>,
    width: usize,
}

impl MetricsWriter {
    pub fn create(path: &Path, n_agents: usize, pairs: &[(usize, usize)]) -> Result<Self, HarnessError> {
        let mut writer = csv::Writer::from_path(path)?;
        let h = header(n_agents, pairs);
        writer.write_record(&h)?;
        writer.flush()?;
        Ok(Self {
            writer,
            width: h.len(),
        })
    }

    /// Opens an existing file for appending, checking its header.
    pub fn append(path: &Path, n_agents: usize, pairs: &[(usize, usize)]) -> Result<Self, HarnessError> {
        let expected = header(n_agents, pairs);
        let mut reader = csv::Reader::from_path(path)?;
        let found: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if found != expected {
            return Err(HarnessError::Metrics("existing metrics header differs".into()));
        }
        let file = std::fs::OpenOptions::new().append(true).open(path)?;
        Ok(Self {
            writer: csv::WriterBuilder::new().has_headers(false).from_writer(file),
            width: expected.len(),
        })
    }

    pub fn write(&mut self, row: &EpisodeRow) -> Result<(), HarnessError> {
        let r = record(row);
        if r.len() != self.width {
            return Err(HarnessError::Metrics("row width differs from header".into()));
        }
        self.writer.write_record(&r)?;
        self.writer.flush()?;
        Ok(())
    }
}

/// Parses a metrics file back into rows.
pub fn read_metrics(path: &Path) -> Result<Vec<EpisodeRow>, HarnessError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let n_agents = headers.iter().filter(|h| h.starts_with("intrinsic_mean_agent_")).count();
    let n_pairs = headers.iter().filter(|h| h.starts_with("ci_pair_")).count();
    if headers.len() != 4 + n_agents + n_pairs {
        return Err(HarnessError::Metrics("unexpected columns".into()));
    }
    let num = |s: &str| -> Result<f64, HarnessError> {
        s.parse().map_err(|_| HarnessError::Metrics(format!("bad number '{s}'")))
    };
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let f: Vec<&str> = rec.iter().collect();
        rows.push(EpisodeRow {
            episode: f[0]
                .parse()
                .map_err(|_| HarnessError::Metrics(format!("bad episode '{}'", f[0])))?,
            return_mean: num(f[1])?,
            return_trailing100: num(f[2])?,
            intrinsic: f[3..3 + n_agents].iter().map(|s| num(s)).collect::<Result<_, _>>()?,
            ci: f[3 + n_agents..3 + n_agents + n_pairs]
                .iter()
                .map(|s| num(s))
                .collect::<Result<_, _>>()?,
            seconds: num(f[f.len() - 1])?,
        });
    }
    Ok(rows)
}

/// Mean of the last `window` values (or all of them if fewer).
pub fn trailing_mean(values: &[f64], window: usize) -> f64 {
    let tail = &values[values.len().saturating_sub(window)..];
    if tail.is_empty() {
        0.0
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        assert_eq!(
            header(2, &[(0, 1), (1, 0)]),
            vec![
                "episode",
                "return_mean",
                "return_trailing100",
                "intrinsic_mean_agent_0",
                "intrinsic_mean_agent_1",
                "ci_pair_0_1",
                "ci_pair_1_0",
                "seconds"
            ]
        );
    }

    #[test]
    fn rows_parse_back_losslessly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let rows = vec![
            EpisodeRow {
                episode: 0,
                return_mean: -12.345678901234567,
                return_trailing100: -12.345678901234567,
                intrinsic: vec![0.1 + 0.2, 1e-300],
                ci: vec![std::f64::consts::PI, 0.0],
                seconds: 0.0,
            },
            EpisodeRow {
                episode: 1,
                return_mean: 3.0,
                return_trailing100: -4.672839450617283,
                intrinsic: vec![0.0, 5e-324],
                ci: vec![-0.0, 7.0],
                seconds: 1.25,
            },
        ];
        let mut w = MetricsWriter::create(&path, 2, &[(0, 1), (1, 0)]).unwrap();
        w.write(&rows[0]).unwrap();
        drop(w);
        let mut w = MetricsWriter::append(&path, 2, &[(0, 1), (1, 0)]).unwrap();
        w.write(&rows[1]).unwrap();
        drop(w);
        let back = read_metrics(&path).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in back.iter().zip(&rows) {
            assert_eq!(a.return_mean.to_bits(), b.return_mean.to_bits());
            assert_eq!(a, b);
        }
        assert!(MetricsWriter::append(&path, 3, &[]).is_err());
    }

    #[test]
    fn trailing_window() {
        assert_eq!(trailing_mean(&[1.0, 2.0, 3.0], 2), 2.5);
        assert_eq!(trailing_mean(&[1.0], 100), 1.0);
        assert_eq!(trailing_mean(&[], 100), 0.0);
    }
}
