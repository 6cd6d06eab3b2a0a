//! JSON instance files.
//!
//! ```json
//! {
//!   "lambda": 1.0,
//!   "initial_server": 1,
//!   "rates": [1.0, 1.5],
//!   "requests": [{"t": 0.34, "s": 2}, {"t": 1.01, "s": 1}]
//! }
//! ```
//!
//! Servers are one-based; rates must be ascending and request times strictly
//! increasing (a first request may sit at time 0 only at the initial server).

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::instance::{Instance, InstanceError, ServerId};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    lambda: f64,
    initial_server: usize,
    rates: Vec<f64>,
    #[serde(default)]
    requests: Vec<RawRequest>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRequest {
    t: f64,
    s: usize,
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{origin}: cannot read: {source}")]
    Io {
        origin: String,
        source: std::io::Error,
    },
    #[error("{origin}:{line}:{column}: {message}")]
    Syntax {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{origin}:{line}: {source}")]
    Invalid {
        origin: String,
        line: usize,
        source: InstanceError,
    },
}

pub fn read_instance(path: &Path) -> Result<Instance, FormatError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        origin: origin.clone(),
        source,
    })?;
    parse_instance(&text, &origin)
}

/// Parses an instance document; `origin` labels error messages (usually the file path).
pub fn parse_instance(text: &str, origin: &str) -> Result<Instance, FormatError> {
    let raw: RawInstance = serde_json::from_str(text).map_err(|e| FormatError::Syntax {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let invalid = |line: usize, source: InstanceError| FormatError::Invalid {
        origin: origin.to_string(),
        line,
        source,
    };
    let key_line = |key: &str| key_line(text, key).unwrap_or(1);

    let initial = ServerId::from_ordinal(raw.initial_server).ok_or_else(|| {
        invalid(
            key_line("initial_server"),
            InstanceError::UnknownServer {
                ordinal: 0,
                n: raw.rates.len(),
            },
        )
    })?;
    let mut requests = Vec::with_capacity(raw.requests.len());
    for (k, r) in raw.requests.iter().enumerate() {
        let server = ServerId::from_ordinal(r.s).ok_or_else(|| {
            let line = element_lines(text, "requests").get(k).copied().unwrap_or(1);
            invalid(
                line,
                InstanceError::UnknownServer {
                    ordinal: 0,
                    n: raw.rates.len(),
                },
            )
        })?;
        requests.push((r.t, server));
    }
    Instance::new(raw.rates, raw.lambda, initial, requests).map_err(|err| {
        let line = match &err {
            InstanceError::BadRate { ordinal, .. } | InstanceError::RatesNotAscending { ordinal, .. } => {
                element_line(text, "rates", ordinal - 1)
            }
            InstanceError::BadTime { index, .. }
            | InstanceError::TimesNotIncreasing { index, .. }
            | InstanceError::ZeroTimeOffInitial { index } => element_line(text, "requests", index - 1),
            InstanceError::UnknownServer { .. } => None,
            InstanceError::BadLambda(_) => Some(key_line("lambda")),
            InstanceError::NoServers => Some(key_line("rates")),
        };
        let line = line.unwrap_or_else(|| match &err {
            InstanceError::UnknownServer { .. } => first_bad_server_line(text, &err),
            _ => 1,
        });
        invalid(line, err)
    })
}

fn first_bad_server_line(text: &str, err: &InstanceError) -> usize {
    // Either the initial server or some request names a server beyond n.
    if let InstanceError::UnknownServer { ordinal, .. } = err {
        if let Ok(raw) = serde_json::from_str::<RawInstance>(text) {
            if raw.initial_server == *ordinal {
                return key_line(text, "initial_server").unwrap_or(1);
            }
            if let Some(k) = raw.requests.iter().position(|r| r.s == *ordinal) {
                return element_line(text, "requests", k).unwrap_or(1);
            }
        }
    }
    1
}

pub fn instance_to_json(instance: &Instance) -> String {
    let raw = RawInstance {
        lambda: instance.lambda(),
        initial_server: instance.initial().ordinal(),
        rates: instance.rates().to_vec(),
        requests: instance
            .real_requests()
            .iter()
            .map(|r| RawRequest {
                t: r.time,
                s: r.server.ordinal(),
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&raw).expect("instance serializes");
    out.push('\n');
    out
}

pub fn write_instance(path: &Path, instance: &Instance) -> std::io::Result<()> {
    std::fs::write(path, instance_to_json(instance))
}

fn element_line(text: &str, key: &str, k: usize) -> Option<usize> {
    element_lines(text, key).get(k).copied()
}

fn key_line(text: &str, key: &str) -> Option<usize> {
    let mut scan = Scanner::new(text);
    scan.find_top_level_key(key).map(|_| scan.line)
}

/// One-based line numbers where each element of the top-level array `key` starts.
fn element_lines(text: &str, key: &str) -> Vec<usize> {
    let mut scan = Scanner::new(text);
    let mut lines = Vec::new();
    if scan.find_top_level_key(key).is_none() {
        return lines;
    }
    scan.skip_ws_and(':');
    if scan.peek() != Some('[') {
        return lines;
    }
    scan.bump();
    let mut depth = 0usize;
    let mut expecting = true;
    while let Some(c) = scan.peek() {
        match c {
            c if c.is_whitespace() => {
                scan.bump();
                continue;
            }
            '"' => {
                if depth == 0 && expecting {
                    lines.push(scan.line);
                    expecting = false;
                }
                scan.skip_string();
                continue;
            }
            '[' | '{' => {
                if depth == 0 && expecting {
                    lines.push(scan.line);
                    expecting = false;
                }
                depth += 1;
            }
            ']' | '}' => {
                if depth == 0 {
                    break;
                }
                depth -= 1;
            }
            ',' if depth == 0 => expecting = true,
            _ => {
                if depth == 0 && expecting {
                    lines.push(scan.line);
                    expecting = false;
                }
            }
        }
        scan.bump();
    }
    lines
}

struct Scanner<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().peekable(),
            line: 1,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next();
        if c == Some('\n') {
            self.line += 1;
        }
        c
    }

    fn skip_ws_and(&mut self, expected: char) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() || c == expected {
                self.bump();
                if c == expected {
                    break;
                }
            } else {
                break;
            }
        }
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    /// Reads a string starting at the opening quote and returns its contents.
    fn skip_string(&mut self) -> String {
        let mut out = String::new();
        self.bump();
        while let Some(c) = self.bump() {
            match c {
                '\\' => {
                    self.bump();
                }
                '"' => break,
                c => out.push(c),
            }
        }
        out
    }

    /// Advances to just past the top-level object key `key`.
    fn find_top_level_key(&mut self, key: &str) -> Option<()> {
        let mut depth = 0usize;
        let mut expect_key = false;
        while let Some(c) = self.peek() {
            match c {
                '"' => {
                    let at_key = depth == 1 && expect_key;
                    let s = self.skip_string();
                    if at_key {
                        if s == key {
                            return Some(());
                        }
                        expect_key = false;
                    }
                    continue;
                }
                '{' | '[' => {
                    depth += 1;
                    expect_key = c == '{' && depth == 1;
                }
                '}' | ']' => depth = depth.saturating_sub(1),
                ',' if depth == 1 => expect_key = true,
                _ => {}
            }
            self.bump();
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TIGHT_PAIR: &str = r#"{
  "lambda": 1.0,
  "initial_server": 1,
  "rates": [1.0, 1.5],
  "requests": [
    {"t": 0.3433333333333333, "s": 2},
    {"t": 1.01, "s": 1}
  ]
}
"#;

    #[test]
    fn parses_and_round_trips() {
        let inst = parse_instance(TIGHT_PAIR, "tight_pair.json").unwrap();
        assert_eq!(inst.m(), 2);
        assert_eq!(inst.rates(), &[1.0, 1.5]);
        assert_eq!(inst.request(1).server, ServerId(1));
        let again = parse_instance(&instance_to_json(&inst), "again").unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn non_increasing_time_reports_its_line() {
        let text = TIGHT_PAIR.replace("1.01", "0.2");
        let err = parse_instance(&text, "f.json").unwrap_err();
        match err {
            FormatError::Invalid { line, source, .. } => {
                assert_eq!(line, 7);
                assert!(matches!(source, InstanceError::TimesNotIncreasing { index: 2, .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_ascending_rates_report_their_line() {
        let text = r#"{
  "lambda": 1,
  "initial_server": 1,
  "rates": [
    2.0,
    1.0
  ],
  "requests": []
}"#;
        let err = parse_instance(text, "r.json").unwrap_err();
        assert!(err.to_string().starts_with("r.json:6:"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_instance("{\n  \"lambda\": ,\n}", "bad.json").unwrap_err();
        assert!(matches!(err, FormatError::Syntax { line: 2, .. }), "{err}");
    }

    #[test]
    fn unknown_server_points_at_request() {
        let text = TIGHT_PAIR.replace("\"s\": 2", "\"s\": 7");
        let err = parse_instance(&text, "u.json").unwrap_err();
        assert!(err.to_string().starts_with("u.json:6:"), "{err}");
    }
}
