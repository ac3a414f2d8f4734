//! Per-tick metrics as CSV, header row included.

use std::fs::File;
use std::io;
use std::path::Path;

use serde::Serialize;
use sreason_core::engine::{RunSummary, TickRecord};

#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize, PartialEq, Eq)]
pub struct MetricsRow {
    pub tick: usize,
    pub arrival_ns: u64,
    pub emit_ns: u64,
    pub latency_ns: u64,
    pub queue_len: usize,
    pub ground_rules_total: usize,
    pub ground_rules_new: usize,
    pub failed: bool,
}

impl From<&TickRecord> for MetricsRow {
    fn from(r: &TickRecord) -> MetricsRow {
        MetricsRow {
            tick: r.tick,
            arrival_ns: r.arrival_ns,
            emit_ns: r.emit_ns,
            latency_ns: r.latency_ns,
            queue_len: r.queue_len,
            ground_rules_total: r.ground_rules_total,
            ground_rules_new: r.ground_rules_new,
            failed: r.failed,
        }
    }
}

pub struct MetricsWriter {
    w: csv::Writer<File>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> io::Result<MetricsWriter> {
        let file = File::create(path).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        Ok(MetricsWriter {
            w: csv::Writer::from_writer(file),
        })
    }

    pub fn record(&mut self, r: &TickRecord) -> io::Result<()> {
        self.w.serialize(MetricsRow::from(r)).map_err(io::Error::other)
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.w.flush()
    }
}

pub fn read_metrics(path: &Path) -> io::Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path).map_err(io::Error::other)?;
    r.deserialize().map(|row| row.map_err(io::Error::other)).collect()
}

/// One-line human summary of a run.
pub fn summary_line(s: &RunSummary) -> String {
    let ms = |ns: u64| ns as f64 / 1e6;
    format!(
        "accepted {} failed {} total {:.3}ms latency ms min {:.3} mean {:.3} p50 {:.3} p95 {:.3} p99 {:.3} max {:.3}",
        s.accepted,
        s.failed,
        s.total.as_secs_f64() * 1e3,
        ms(s.latency.min_ns),
        s.latency.mean_ns / 1e6,
        ms(s.latency.p50_ns),
        ms(s.latency.p95_ns),
        ms(s.latency.p99_ns),
        ms(s.latency.max_ns),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let mut w = MetricsWriter::create(&path).unwrap();
        for t in 0..3 {
            w.record(&TickRecord {
                tick: t,
                latency_ns: 10,
                ..TickRecord::default()
            })
            .unwrap();
        }
        w.flush().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text
            .starts_with("tick,arrival_ns,emit_ns,latency_ns,queue_len,ground_rules_total,ground_rules_new,failed\n"));
        let rows = read_metrics(&path).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].tick, 2);
    }
}
