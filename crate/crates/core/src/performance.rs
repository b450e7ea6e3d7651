//! Downstream task scores per (source, target) pair, read from `source,target,score` CSV.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRecord {
    pub source: String,
    pub target: String,
    pub score: f64,
}

impl PerformanceRecord {
    pub fn new(source: impl Into<String>, target: impl Into<String>, score: f64) -> Self {
        PerformanceRecord { source: source.into(), target: target.into(), score }
    }

    /// `source/target`, the key used in reports.
    pub fn pair_code(&self) -> String {
        format!("{}/{}", self.source, self.target)
    }
}

pub fn read_performance_csv<R: Read>(input: R) -> Result<Vec<PerformanceRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.deserialize() {
        let r: PerformanceRecord = record?;
        if !r.score.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite score for {}", r.pair_code())));
        }
        if !seen.insert((r.source.clone(), r.target.clone())) {
            return Err(Error::InvalidInput(format!("duplicate pair {}", r.pair_code())));
        }
        out.push(r);
    }
    Ok(out)
}

pub fn write_performance_csv<W: Write>(records: &[PerformanceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_and_validates() {
        let recs = read_performance_csv("source,target,score\ndan,eng,0.91\nrus,eng,0.85\n".as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].pair_code(), "dan/eng");
        assert!(read_performance_csv("source,target,score\na,b,1\na,b,2\n".as_bytes()).is_err());
        assert!(read_performance_csv("source,target,score\na,b,NaN\n".as_bytes()).is_err());
        assert!(read_performance_csv("source,target,score\na,b,high\n".as_bytes()).is_err());
    }

    #[test]
    fn write_then_read() {
        let recs = vec![PerformanceRecord::new("a", "b", 0.125), PerformanceRecord::new("c", "b", 1.0)];
        let mut buf = Vec::new();
        write_performance_csv(&recs, &mut buf).unwrap();
        assert_eq!(read_performance_csv(buf.as_slice()).unwrap(), recs);
    }
}
