//! Solution CSV (`r,h,hp,f1..fn,fp1..fpn`, 17 significant digits) and atomic
//! file writes.

use std::io::Write;
use std::path::Path;

use ricci_tube::solver::{MetricSolution, Provenance};

use crate::error::{CliError, Result};

pub fn header(n: usize) -> Vec<String> {
    let mut h = vec!["r".to_string(), "h".into(), "hp".into()];
    h.extend((1..=n).map(|i| format!("f{i}")));
    h.extend((1..=n).map(|i| format!("fp{i}")));
    h
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn solution_csv(sol: &MetricSolution) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    // writing to a Vec cannot fail
    w.write_record(header(sol.n)).unwrap();
    for j in 0..sol.nodes() {
        let mut row = vec![fmt(sol.r[j]), fmt(sol.h[j]), fmt(sol.hp[j])];
        row.extend(sol.f_at(j).iter().map(|&v| fmt(v)));
        row.extend(sol.fp_at(j).iter().map(|&v| fmt(v)));
        w.write_record(&row).unwrap();
    }
    w.into_inner().unwrap()
}

/// Reads a solution written by [`solution_csv`]; the module count comes from the header.
pub fn read_solution(path: &Path) -> Result<MetricSolution> {
    let malformed = |message: String| CliError::Solution {
        path: path.to_owned(),
        message,
    };
    let mut rd = csv::Reader::from_path(path).map_err(|e| malformed(e.to_string()))?;
    let head: Vec<String> = rd
        .headers()
        .map_err(|e| malformed(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    // header(n) has 3 + 2n columns, so an odd count never matches
    let n = head.len().saturating_sub(3) / 2;
    if n == 0 || head != header(n) {
        return Err(malformed(format!("unexpected header {head:?}")));
    }
    let mut sol = MetricSolution {
        n,
        r: vec![],
        f: vec![],
        fp: vec![],
        h: vec![],
        hp: vec![],
        provenance: Provenance::External,
    };
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        let vals = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| malformed(format!("row {}: {e}", line + 1)))?;
        sol.r.push(vals[0]);
        sol.h.push(vals[1]);
        sol.hp.push(vals[2]);
        sol.f.extend_from_slice(&vals[3..3 + n]);
        sol.fp.extend_from_slice(&vals[3 + n..]);
    }
    if sol.r.is_empty() {
        return Err(malformed("no data rows".into()));
    }
    sol.validate().map_err(|e| malformed(e.to_string()))?;
    Ok(sol)
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let err = |source| CliError::Write {
        path: path.to_owned(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}
