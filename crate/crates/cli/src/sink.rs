//! Output of tick results: `@timepoint N` blocks or one JSON object per line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use serde::Serialize;
use sreason_core::GroundAtom;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Text,
    Jsonl,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OutputSpec {
    Stdout,
    File(PathBuf),
}

impl FromStr for OutputSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<OutputSpec, String> {
        if s == "stdout" {
            return Ok(OutputSpec::Stdout);
        }
        match s.strip_prefix("file:") {
            Some(p) => Ok(OutputSpec::File(p.into())),
            None => Err(format!("expected stdout or file:PATH, got `{s}`")),
        }
    }
}

#[derive(Serialize)]
struct JsonTick<'a> {
    tick: usize,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    failed: bool,
    atoms: &'a [String],
}

pub struct Sink {
    out: Box<dyn Write>,
    format: OutputFormat,
}

/// Atoms rendered and sorted lexicographically.
pub fn sorted_atoms<'a>(atoms: impl IntoIterator<Item = &'a GroundAtom>) -> Vec<String> {
    let mut v: Vec<String> = atoms.into_iter().map(ToString::to_string).collect();
    v.sort();
    v
}

impl Sink {
    pub fn open(spec: &OutputSpec, format: OutputFormat) -> io::Result<Sink> {
        let out: Box<dyn Write> = match spec {
            OutputSpec::Stdout => Box::new(BufWriter::new(io::stdout())),
            OutputSpec::File(p) => Box::new(BufWriter::new(
                File::create(p).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", p.display())))?,
            )),
        };
        Ok(Sink { out, format })
    }

    pub fn to_writer(out: Box<dyn Write>, format: OutputFormat) -> Sink {
        Sink { out, format }
    }

    /// Writes one tick; `None` marks a failed tick.
    pub fn write_tick(&mut self, tick: usize, atoms: Option<&[String]>) -> io::Result<()> {
        match self.format {
            OutputFormat::Text => match atoms {
                Some(atoms) => {
                    writeln!(self.out, "@timepoint {tick}")?;
                    for a in atoms {
                        writeln!(self.out, "{a}")?;
                    }
                    writeln!(self.out)
                }
                None => writeln!(self.out, "@timepoint {tick} failed\n"),
            },
            OutputFormat::Jsonl => {
                let rec = JsonTick {
                    tick,
                    failed: atoms.is_none(),
                    atoms: atoms.unwrap_or(&[]),
                };
                serde_json::to_writer(&mut self.out, &rec)?;
                writeln!(self.out)
            }
        }
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::{Arc, Mutex};

    #[derive(Clone, Default)]
    struct Shared(Arc<Mutex<Vec<u8>>>);

    impl Write for Shared {
        fn write(&mut self, b: &[u8]) -> io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(b);
            Ok(b.len())
        }
        fn flush(&mut self) -> io::Result<()> {
            Ok(())
        }
    }

    fn render(format: OutputFormat) -> String {
        let buf = Shared::default();
        let mut s = Sink::to_writer(Box::new(buf.clone()), format);
        let atoms = sorted_atoms(&[
            GroundAtom::new("d", vec![sreason_core::Value::Int(5)]),
            GroundAtom::new("c", vec![sreason_core::Value::Int(7)]),
        ]);
        s.write_tick(0, Some(&atoms)).unwrap();
        s.write_tick(1, None).unwrap();
        s.flush().unwrap();
        let v = buf.0.lock().unwrap().clone();
        String::from_utf8(v).unwrap()
    }

    #[test]
    fn text_blocks() {
        assert_eq!(
            render(OutputFormat::Text),
            "@timepoint 0\nc(7)\nd(5)\n\n@timepoint 1 failed\n\n"
        );
    }

    #[test]
    fn jsonl_lines() {
        assert_eq!(
            render(OutputFormat::Jsonl),
            "{\"tick\":0,\"atoms\":[\"c(7)\",\"d(5)\"]}\n{\"tick\":1,\"failed\":true,\"atoms\":[]}\n"
        );
    }

    #[test]
    fn output_spec() {
        assert_eq!("stdout".parse::<OutputSpec>().unwrap(), OutputSpec::Stdout);
        assert_eq!(
            "file:o.txt".parse::<OutputSpec>().unwrap(),
            OutputSpec::File("o.txt".into())
        );
        assert!("o.txt".parse::<OutputSpec>().is_err());
    }
}
