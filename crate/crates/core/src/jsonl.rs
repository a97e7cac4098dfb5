//! Line-delimited JSON helpers shared by every file format in the toolkit.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}:{line}: invalid UTF-8")]
    Encoding { path: String, line: usize },
}

/// One physical line of a JSONL file, before decoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLine {
    /// 1-based line number.
    pub line: usize,
    pub bytes: Vec<u8>,
}

/// Read every non-blank line as raw bytes. UTF-8 validity is left to the caller
/// so that bad lines can be routed to a rejects sink.
pub fn read_raw_lines(path: &Path) -> Result<Vec<RawLine>, JsonlError> {
    let file = File::open(path).map_err(|source| io_err(path, source))?;
    read_raw_lines_from(BufReader::new(file)).map_err(|source| io_err(path, source))
}

pub fn read_raw_lines_from<R: BufRead>(mut reader: R) -> io::Result<Vec<RawLine>> {
    let mut out = Vec::new();
    let mut buf = Vec::new();
    let mut line = 0;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        if buf.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        out.push(RawLine {
            line,
            bytes: buf.clone(),
        });
    }
    Ok(out)
}

/// Decode a whole JSONL file into typed records; any bad line is an error.
pub fn read<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    let shown = path.display().to_string();
    read_raw_lines(path)?
        .into_iter()
        .map(|raw| {
            let text = std::str::from_utf8(&raw.bytes).map_err(|_| JsonlError::Encoding {
                path: shown.clone(),
                line: raw.line,
            })?;
            serde_json::from_str(text).map_err(|source| JsonlError::Parse {
                path: shown.clone(),
                line: raw.line,
                source,
            })
        })
        .collect()
}

/// Serialize records one per line, LF-terminated.
pub fn write_to<T: Serialize, W: Write>(mut out: W, records: &[T]) -> io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write<T: Serialize>(path: &Path, records: &[T]) -> Result<(), JsonlError> {
    let file = File::create(path).map_err(|source| io_err(path, source))?;
    write_to(BufWriter::new(file), records).map_err(|source| io_err(path, source))
}

/// Pretty JSON document with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), JsonlError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| JsonlError::Parse {
        path: path.display().to_string(),
        line: 0,
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| io_err(path, source))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, JsonlError> {
    let text = std::fs::read_to_string(path).map_err(|source| io_err(path, source))?;
    serde_json::from_str(&text).map_err(|source| JsonlError::Parse {
        path: path.display().to_string(),
        line: source.line(),
        source,
    })
}

fn io_err(path: &Path, source: io::Error) -> JsonlError {
    JsonlError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_lines_skip_blanks_and_keep_numbers() {
        let input = b"{\"a\":1}\r\n\n  \n{\"a\":2}\n\xff\xfe\n";
        let lines = read_raw_lines_from(&input[..]).unwrap();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].line, 1);
        assert_eq!(lines[1].line, 4);
        assert_eq!(lines[2].bytes, vec![0xff, 0xfe]);
    }

    #[test]
    fn write_is_lf_terminated() {
        let mut buf = Vec::new();
        write_to(&mut buf, &[1, 2, 3]).unwrap();
        assert_eq!(buf, b"1\n2\n3\n");
    }
}
