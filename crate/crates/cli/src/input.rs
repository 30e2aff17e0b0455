//! Reading command inputs: a file path, `-` for stdin, or inline JSON.

use std::fs;
use std::io::Read;

use serde::de::DeserializeOwned;

use crate::Failure;

/// Raw text of an input argument. Arguments starting with `{` or `[` are
/// taken as inline JSON.
pub fn read_source(arg: &str) -> Result<String, Failure> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        return Ok(arg.to_string());
    }
    if arg == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Failure::invalid(format!("stdin: {e}")))?;
        return Ok(buf);
    }
    fs::read_to_string(arg).map_err(|e| Failure::invalid(format!("{arg}: {e}")))
}

/// Parses JSON with line/column diagnostics on failure.
pub fn parse_json<T: DeserializeOwned>(arg: &str, text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| {
        let name = if arg.trim_start().starts_with(['{', '[']) { "<inline>" } else { arg };
        Failure::invalid(format!(
            "{name}: line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}

pub fn load<T: DeserializeOwned>(arg: &str) -> Result<T, Failure> {
    let text = read_source(arg)?;
    parse_json(arg, &text)
}

/// `"1,0,0;0,1,0"` into integer vectors.
pub fn parse_vectors(s: &str) -> Result<Vec<Vec<i64>>, Failure> {
    s.split(';')
        .filter(|v| !v.trim().is_empty())
        .map(|v| {
            v.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<i64>()
                        .map_err(|_| Failure::invalid(format!("bad integer `{}` in `{s}`", x.trim())))
                })
                .collect()
        })
        .collect()
}

/// `"a..b"` (inclusive) or a single number.
pub fn parse_range(s: &str) -> Result<(u64, u64), Failure> {
    let bad = || Failure::invalid(format!("bad range `{s}`, expected a..b"));
    match s.split_once("..") {
        Some((a, b)) => {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            Ok((a, b))
        }
        None => {
            let a: u64 = s.trim().parse().map_err(|_| bad())?;
            Ok((a, a))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_and_ranges() {
        assert_eq!(parse_vectors("1,0;0,-1").unwrap(), vec![vec![1, 0], vec![0, -1]]);
        assert!(parse_vectors("1,x").is_err());
        assert_eq!(parse_range("1..30").unwrap(), (1, 30));
        assert_eq!(parse_range("1..=30").unwrap(), (1, 30));
        assert_eq!(parse_range("47").unwrap(), (47, 47));
        assert!(parse_range("5..1").is_err());
    }

    #[test]
    fn json_diagnostics() {
        let err = parse_json::<serde_json::Value>("x.json", "{\n  \"a\": ,\n}").unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("line 2, column"), "{}", err.message);
    }
}
