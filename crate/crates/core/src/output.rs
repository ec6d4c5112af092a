//! File formats: exit-record CSV, histogram CSV, plain 16-bit PGM, and
//! atomic writes.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::analysis::HistogramGrid;
use crate::newton::ExitRecord;
use crate::vec3::Vec3;

pub const RECORDS_HEADER: &str = "particle_id,vx,vz,sx,sy,sz";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CsvError {
    #[error("line 1: expected header `{RECORDS_HEADER}`")]
    Header,
    #[error("line {line}: expected 6 fields, got {got}")]
    FieldCount { line: usize, got: usize },
    #[error("line {line}: cannot parse `{field}`")]
    Value { line: usize, field: String },
}

/// Full round-trip precision: 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn records_csv(records: &[ExitRecord]) -> String {
    let mut s = String::with_capacity(128 * (records.len() + 1));
    s.push_str(RECORDS_HEADER);
    s.push('\n');
    for r in records {
        let row = [num(r.vx), num(r.vz), num(r.spin.x), num(r.spin.y), num(r.spin.z)];
        s.push_str(&r.particle_id.to_string());
        for v in row {
            s.push(',');
            s.push_str(&v);
        }
        s.push('\n');
    }
    s
}

pub fn parse_records_csv(text: &str) -> Result<Vec<ExitRecord>, CsvError> {
    let mut lines = text.lines();
    if lines.next() != Some(RECORDS_HEADER) {
        return Err(CsvError::Header);
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(CsvError::FieldCount { line: line_no, got: fields.len() });
        }
        let bad = |f: &str| CsvError::Value { line: line_no, field: f.to_string() };
        let particle_id = fields[0].parse::<u64>().map_err(|_| bad(fields[0]))?;
        let mut v = [0.0; 5];
        for (slot, f) in v.iter_mut().zip(&fields[1..]) {
            *slot = f.parse::<f64>().map_err(|_| bad(f))?;
        }
        out.push(ExitRecord { particle_id, vx: v[0], vz: v[1], spin: Vec3::new(v[2], v[3], v[4]) });
    }
    Ok(out)
}

/// `# axis=<unit> bins=<nx> range=<r>` then one line per `vz` row, lowest
/// `vz` first, values ordered by increasing `vx`.
pub fn histogram_csv(h: &HistogramGrid) -> String {
    let range = h.x_range.1.max(-h.x_range.0);
    let mut s = format!("# axis={} bins={} range={}\n", h.unit.label(), h.nx, range);
    for row in h.values.chunks(h.nx) {
        let line: Vec<String> = row.iter().map(|&v| num(v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// Plain (`P2`) 16-bit graymap, linear in the bin value with the maximum at
/// 65535. The top image row is the highest `vz`.
pub fn histogram_pgm(h: &HistogramGrid) -> String {
    let max = h.values.iter().cloned().fold(0.0, f64::max);
    let mut s = format!("P2\n# {} bins, axes in {}\n{} {}\n65535\n", h.nx, h.unit.label(), h.nx, h.nz);
    for row in h.values.chunks(h.nx).rev() {
        let line: Vec<String> = row
            .iter()
            .map(|&v| if max > 0.0 { ((v / max) * 65535.0).round() as u16 } else { 0 }.to_string())
            .collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

/// Writes `contents` to a temporary sibling, then renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}
