use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::model::ServerId;

/// Offset used to break timestamp ties and to move reads off time 0.
pub const TIE_STEP: f64 = 1e-6;

/// Which columns of a delimited trace hold the fields of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMap {
    pub timestamp: String,
    pub op: String,
    pub object: String,
    /// Timestamp units per second (1000 for milliseconds).
    pub units_per_second: f64,
    pub delimiter: u8,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            op: "op".into(),
            object: "object_id".into(),
            units_per_second: 1.0,
            delimiter: b',',
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("{path}:{line}: bad timestamp `{value}`")]
    BadTimestamp { path: String, line: u64, value: String },
    #[error("{path}:{line}: timestamp {value} is earlier than the previous record")]
    Unordered { path: String, line: u64, value: f64 },
    #[error("{path}: no read of object `{object}`")]
    NoMatches { path: String, object: String },
    #[error("units_per_second must be positive, got {0}")]
    BadUnits(f64),
}

/// Whether an operation name denotes a read (`GET`, `REST.GET.OBJECT`, `read`, ...).
pub fn is_read_op(op: &str) -> bool {
    let op = op.to_ascii_lowercase();
    op.contains("get") || op.contains("read")
}

/// Read times of `object_id`, in seconds since the first record of the file.
///
/// Equal timestamps `t, t, ..., t` (k of them) become `t + TIE_STEP`,
/// `t + 2 TIE_STEP`, ..., `t + k TIE_STEP`. If a read sits at exactly 0 all
/// times move up by `TIE_STEP`, since time 0 belongs to the initial copy.
pub fn ingest_trace(path: &Path, object_id: &str, columns: &ColumnMap) -> Result<Vec<f64>, TraceError> {
    let name = path.display().to_string();
    if !(columns.units_per_second > 0.0) {
        return Err(TraceError::BadUnits(columns.units_per_second));
    }
    let csv_err = |source| TraceError::Csv {
        path: name.clone(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(columns.delimiter)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?.clone();
    let column = |want: &str| {
        headers
            .iter()
            .position(|h| h == want)
            .ok_or_else(|| TraceError::MissingColumn {
                path: name.clone(),
                column: want.to_string(),
            })
    };
    let (ts_col, op_col, obj_col) = (column(&columns.timestamp)?, column(&columns.op)?, column(&columns.object)?);

    let mut start = None;
    let mut previous = f64::NEG_INFINITY;
    let mut raw = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let text = record.get(ts_col).unwrap_or("");
        let value: f64 = text.parse().map_err(|_| TraceError::BadTimestamp {
            path: name.clone(),
            line,
            value: text.to_string(),
        })?;
        if !value.is_finite() {
            return Err(TraceError::BadTimestamp {
                path: name.clone(),
                line,
                value: text.to_string(),
            });
        }
        if value < previous {
            return Err(TraceError::Unordered {
                path: name.clone(),
                line,
                value,
            });
        }
        previous = value;
        let origin = *start.get_or_insert(value);
        let is_match = record.get(obj_col) == Some(object_id)
            && record.get(op_col).is_some_and(is_read_op);
        if is_match {
            raw.push((value - origin) / columns.units_per_second);
        }
    }
    if raw.is_empty() {
        return Err(TraceError::NoMatches {
            path: name,
            object: object_id.to_string(),
        });
    }
    Ok(untie(raw))
}

/// Applies the tie and origin rules to nondecreasing times.
pub fn untie(mut times: Vec<f64>) -> Vec<f64> {
    let mut i = 0;
    while i < times.len() {
        let mut k = i + 1;
        while k < times.len() && times[k] == times[i] {
            k += 1;
        }
        if k - i > 1 {
            let base = times[i];
            for (step, t) in times[i..k].iter_mut().enumerate() {
                *t = base + (step + 1) as f64 * TIE_STEP;
            }
        }
        i = k;
    }
    if times.first() == Some(&0.0) {
        for t in &mut times {
            *t += TIE_STEP;
        }
    }
    for k in 1..times.len() {
        if times[k] <= times[k - 1] {
            times[k] = times[k - 1] + TIE_STEP;
        }
    }
    times
}

/// Maps each time to a uniformly random server, reproducibly per seed.
pub fn assign_servers(times: &[f64], n: usize, seed: u64) -> Vec<(f64, ServerId)> {
    assert!(n >= 1, "at least one server");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    times
        .iter()
        .map(|&t| (t, ServerId(rng.random_range(0..n))))
        .collect()
}

/// Arrival times of a Poisson process with the given mean gap.
pub fn gen_poisson_trace(seed: u64, total: usize, mean_gap: f64) -> Vec<f64> {
    assert!(mean_gap > 0.0, "mean gap must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exp = Exp::new(1.0 / mean_gap).expect("positive rate");
    let mut t = 0.0f64;
    (0..total)
        .map(|_| {
            let next = t + exp.sample(&mut rng);
            t = if next > t { next } else { t.next_up() };
            t
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    fn trace(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_of_one_object_shifted_off_zero() {
        let f = trace("timestamp,op,object_id\n0,GET,X\n1,REST.GET.OBJECT,X\n1,PUT,X\n2,get,X\n2,GET,Y\n");
        let times = ingest_trace(f.path(), "X", &ColumnMap::default()).unwrap();
        assert!(close(&times, &[1e-6, 1.000001, 2.000001]), "{times:?}");
    }

    #[test]
    fn ties_are_spread() {
        let times = untie(vec![3.0, 5.0, 5.0, 5.0]);
        assert!(close(&times, &[3.0, 5.000001, 5.000002, 5.000003]), "{times:?}");
    }

    #[test]
    fn errors_name_the_problem() {
        let f = trace("ts,op,object_id\n0,GET,X\n");
        let err = ingest_trace(f.path(), "X", &ColumnMap::default()).unwrap_err();
        assert!(matches!(err, TraceError::MissingColumn { ref column, .. } if column == "timestamp"));
        let f = trace("timestamp,op,object_id\n0,GET,X\n");
        let err = ingest_trace(f.path(), "Z", &ColumnMap::default()).unwrap_err();
        assert!(matches!(err, TraceError::NoMatches { .. }));
        let f = trace("timestamp,op,object_id\n5,GET,X\n4,GET,X\n");
        let err = ingest_trace(f.path(), "X", &ColumnMap::default()).unwrap_err();
        assert!(matches!(err, TraceError::Unordered { line: 3, .. }), "{err}");
    }

    #[test]
    fn milliseconds_are_rescaled() {
        let f = trace("t;kind;obj\n1000;read;A\n2500;read;A\n");
        let map = ColumnMap {
            timestamp: "t".into(),
            op: "kind".into(),
            object: "obj".into(),
            units_per_second: 1000.0,
            delimiter: b';',
        };
        let times = ingest_trace(f.path(), "A", &map).unwrap();
        assert!(close(&times, &[1e-6, 1.500001]), "{times:?}");
    }

    #[test]
    fn poisson_trace_properties() {
        assert!(gen_poisson_trace(1, 0, 5.0).is_empty());
        let a = gen_poisson_trace(9, 10_000, 50.0);
        assert_eq!(a, gen_poisson_trace(9, 10_000, 50.0));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        let mean = a.last().unwrap() / a.len() as f64;
        assert!((mean - 50.0).abs() < 0.05 * 50.0, "{mean}");
    }

    #[test]
    fn assignment_is_reproducible_and_balanced() {
        let times: Vec<f64> = (1..=11_683).map(f64::from).collect();
        let a = assign_servers(&times, 10, 4);
        assert_eq!(a, assign_servers(&times, 10, 4));
        let mut counts = [0usize; 10];
        for (_, s) in &a {
            counts[s.0] += 1;
        }
        let sigma = (11_683.0 * 0.1 * 0.9f64).sqrt();
        for c in counts {
            assert!((c as f64 - 1168.3).abs() < 5.0 * sigma, "{counts:?}");
        }
        assert!(assign_servers(&times[..5], 1, 0).iter().all(|(_, s)| s.0 == 0));
    }
}
