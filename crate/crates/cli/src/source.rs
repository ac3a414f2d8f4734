//! Tick sources: the wire protocol over a file, stdin or one TCP connection.
//!
//! One fact per line, `#end.` closes a time point. Blank and comment lines
//! are ignored.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::net::{SocketAddr, TcpListener};
use std::path::PathBuf;
use std::str::FromStr;
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::Sender;
use sreason_core::engine::TickInput;
use sreason_core::lang::{parse_fact_line, ParseError, WireLine};
use sreason_core::GroundAtom;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SourceSpec {
    File(PathBuf),
    Stdin,
    Tcp(u16),
}

impl FromStr for SourceSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<SourceSpec, String> {
        if s == "stdin" {
            return Ok(SourceSpec::Stdin);
        }
        if let Some(p) = s.strip_prefix("file:") {
            return Ok(SourceSpec::File(p.into()));
        }
        if let Some(p) = s.strip_prefix("tcp:") {
            return p.parse().map(SourceSpec::Tcp).map_err(|_| format!("bad port `{p}`"));
        }
        Err(format!("expected file:PATH, stdin or tcp:PORT, got `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("input: {0}")]
    Io(#[from] io::Error),
    #[error("input line {line}: {source}")]
    Parse { line: usize, source: ParseError },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SourceReport {
    pub ticks: usize,
    pub skipped_lines: usize,
    /// A trailing tick without `#end.` was dropped.
    pub discarded_partial: bool,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ReaderOptions {
    /// Abort on a malformed line instead of skipping it.
    pub strict: bool,
    /// Accept a trailing tick that lacks `#end.`.
    pub accept_partial: bool,
    /// Release tick `k` no earlier than `start + k * period`.
    pub period: Option<Duration>,
    pub start: Option<Instant>,
}

/// Reads ticks from `reader` into `tx`. Arrival is stamped when the tick's
/// `#end.` line is read, or when a paced tick is released.
pub fn read_ticks(
    reader: impl BufRead,
    tx: &Sender<TickInput>,
    opts: ReaderOptions,
) -> Result<SourceReport, SourceError> {
    let mut report = SourceReport::default();
    let mut facts: Vec<GroundAtom> = Vec::new();
    let mut open = false;
    let start = opts.start.unwrap_or_else(Instant::now);
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        match parse_fact_line(&line) {
            Ok(WireLine::Fact(a)) => {
                facts.push(a);
                open = true;
            }
            Ok(WireLine::EndOfTick) => {
                emit(tx, &mut facts, &mut report, opts.period, start);
                open = false;
            }
            Ok(WireLine::Skip) => {}
            Err(e) if opts.strict => return Err(SourceError::Parse { line: i + 1, source: e }),
            Err(e) => {
                log::warn!("input line {}: {e}; skipped", i + 1);
                report.skipped_lines += 1;
            }
        }
    }
    if open {
        if opts.accept_partial {
            emit(tx, &mut facts, &mut report, opts.period, start);
        } else {
            log::warn!("input ended inside a time point; {} facts discarded", facts.len());
            report.discarded_partial = true;
        }
    }
    Ok(report)
}

fn emit(
    tx: &Sender<TickInput>,
    facts: &mut Vec<GroundAtom>,
    report: &mut SourceReport,
    period: Option<Duration>,
    start: Instant,
) {
    if let Some(p) = period {
        let due = start + p * report.ticks as u32;
        let now = Instant::now();
        if due > now {
            thread::sleep(due - now);
        }
    }
    let input = TickInput {
        facts: std::mem::take(facts),
        arrival: Instant::now(),
    };
    report.ticks += 1;
    // a closed receiver means evaluation stopped; remaining ticks are moot
    let _ = tx.send(input);
}

/// A bound TCP source that has not yet accepted its connection.
pub struct TcpSource {
    listener: TcpListener,
}

impl TcpSource {
    pub fn bind(port: u16) -> io::Result<TcpSource> {
        Ok(TcpSource {
            listener: TcpListener::bind(("127.0.0.1", port))?,
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves a single connection until the peer closes it. A tick cut off
    /// by the disconnect is discarded.
    pub fn serve(self, tx: &Sender<TickInput>, strict: bool) -> Result<SourceReport, SourceError> {
        let (stream, peer) = self.listener.accept()?;
        log::info!("connection from {peer}");
        let opts = ReaderOptions {
            strict,
            ..ReaderOptions::default()
        };
        match read_ticks(BufReader::new(stream), tx, opts) {
            Err(SourceError::Io(e)) if e.kind() == io::ErrorKind::ConnectionReset => {
                log::warn!("connection reset by {peer}");
                Ok(SourceReport {
                    discarded_partial: true,
                    ..SourceReport::default()
                })
            }
            r => r,
        }
    }
}

/// Starts the ingestion thread for a source.
pub fn spawn(
    spec: SourceSpec,
    tx: Sender<TickInput>,
    strict: bool,
    period: Option<Duration>,
    start: Instant,
) -> io::Result<thread::JoinHandle<Result<SourceReport, SourceError>>> {
    let opts = ReaderOptions {
        strict,
        accept_partial: true,
        period,
        start: Some(start),
    };
    let handle = match spec {
        SourceSpec::File(path) => {
            let file = File::open(&path).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
            thread::spawn(move || read_ticks(BufReader::new(file), &tx, opts))
        }
        SourceSpec::Stdin => thread::spawn(move || read_ticks(io::stdin().lock(), &tx, opts)),
        SourceSpec::Tcp(port) => {
            let src = TcpSource::bind(port)?;
            eprintln!("listening on {}", src.local_addr()?);
            thread::spawn(move || src.serve(&tx, strict))
        }
    };
    Ok(handle)
}

/// Parses a whole stream text into ticks.
pub fn parse_stream(text: &str, strict: bool) -> Result<Vec<Vec<GroundAtom>>, SourceError> {
    let (tx, rx) = crossbeam_channel::unbounded();
    let opts = ReaderOptions {
        strict,
        accept_partial: true,
        ..ReaderOptions::default()
    };
    read_ticks(text.as_bytes(), &tx, opts)?;
    drop(tx);
    Ok(rx.into_iter().map(|t| t.facts).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parsing() {
        assert_eq!("stdin".parse::<SourceSpec>().unwrap(), SourceSpec::Stdin);
        assert_eq!("tcp:9000".parse::<SourceSpec>().unwrap(), SourceSpec::Tcp(9000));
        assert_eq!(
            "file:a.s".parse::<SourceSpec>().unwrap(),
            SourceSpec::File("a.s".into())
        );
        assert!("tcp:x".parse::<SourceSpec>().is_err());
        assert!("a.s".parse::<SourceSpec>().is_err());
    }

    #[test]
    fn delimited_ticks() {
        let ticks = parse_stream("a(1).\n#end.\n% note\n\nb(2).\n#end.\n", true).unwrap();
        assert_eq!(ticks.len(), 2);
        assert_eq!(ticks[0][0].to_string(), "a(1)");
        assert_eq!(ticks[1][0].to_string(), "b(2)");
    }

    #[test]
    fn empty_ticks_count() {
        assert_eq!(parse_stream("#end.\n#end.\n", true).unwrap().len(), 2);
    }

    #[test]
    fn malformed_lines() {
        let (tx, rx) = crossbeam_channel::unbounded();
        let r = read_ticks("a(1).\nb(X).\nc(\n#end.\n".as_bytes(), &tx, ReaderOptions::default()).unwrap();
        assert_eq!(r.skipped_lines, 2);
        assert_eq!(rx.try_recv().unwrap().facts.len(), 1);
        let strict = ReaderOptions {
            strict: true,
            ..ReaderOptions::default()
        };
        assert!(matches!(
            read_ticks("a(1).\nb(X).\n".as_bytes(), &tx, strict),
            Err(SourceError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn partial_tick_discarded() {
        let (tx, rx) = crossbeam_channel::unbounded();
        let r = read_ticks("a(1).\n#end.\nb(2).\n".as_bytes(), &tx, ReaderOptions::default()).unwrap();
        assert_eq!(r.ticks, 1);
        assert!(r.discarded_partial);
        drop(tx);
        assert_eq!(rx.iter().count(), 1);
    }

    #[test]
    fn paced_release() {
        let (tx, rx) = crossbeam_channel::unbounded();
        let start = Instant::now();
        let opts = ReaderOptions {
            period: Some(Duration::from_millis(20)),
            start: Some(start),
            ..ReaderOptions::default()
        };
        read_ticks("#end.\n#end.\n#end.\n".as_bytes(), &tx, opts).unwrap();
        let arrivals: Vec<Instant> = rx.try_iter().map(|t| t.arrival).collect();
        assert!(arrivals[2] - start >= Duration::from_millis(40));
    }

    #[test]
    fn tcp_round_trip() {
        use std::io::Write;
        let src = TcpSource::bind(0).unwrap();
        let addr = src.local_addr().unwrap();
        let (tx, rx) = crossbeam_channel::unbounded();
        let h = thread::spawn(move || src.serve(&tx, false));
        let mut c = std::net::TcpStream::connect(addr).unwrap();
        c.write_all(b"a(1).\n#end.\nb(2).\n#end.\nc(3).\n").unwrap();
        drop(c);
        let report = h.join().unwrap().unwrap();
        assert_eq!(report.ticks, 2);
        assert!(report.discarded_partial);
        assert_eq!(rx.try_iter().count(), 2);
    }
}
