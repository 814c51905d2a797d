use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("cannot write {}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config: &'a RunConfig,
    result: &'a T,
}

/// Writes `{"config": ..., "result": ...}` to `out/name`.
pub fn write_json<T: Serialize>(cfg: &RunConfig, name: &str, result: &T) -> Result<PathBuf, CliError> {
    let path = cfg.out.join(name);
    let text = serde_json::to_string_pretty(&Envelope { config: cfg, result })
        .map_err(|e| CliError::Io(format!("cannot serialise {name}: {e}")))?;
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(path)
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes a CSV whose first line is the config echo as a `#` comment.
pub fn write_csv(cfg: &RunConfig, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
    let mut buf = Vec::new();
    write_rows(&mut buf, header, rows);
    write_raw_csv(cfg, name, &buf)
}

/// Like [`write_csv`] for an already formatted body.
pub fn write_raw_csv(cfg: &RunConfig, name: &str, body: &[u8]) -> Result<PathBuf, CliError> {
    let path = cfg.out.join(name);
    let mut f = fs::File::create(&path).map_err(io_err(&path))?;
    writeln!(f, "{}", cfg.echo_line()).map_err(io_err(&path))?;
    f.write_all(body).map_err(io_err(&path))?;
    Ok(path)
}

fn write_rows(buf: &mut Vec<u8>, header: &[String], rows: &[Vec<String>]) {
    let line = |cells: &[String]| cells.iter().map(|c| field(c)).collect::<Vec<_>>().join(",");
    buf.extend(line(header).bytes());
    buf.push(b'\n');
    for r in rows {
        buf.extend(line(r).bytes());
        buf.push(b'\n');
    }
}

pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

pub fn strings<I: IntoIterator<Item = S>, S: Into<String>>(it: I) -> Vec<String> {
    it.into_iter().map(Into::into).collect()
}
