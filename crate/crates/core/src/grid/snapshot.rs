//! `HRFIELD` snapshot files: one ASCII header line
//! `HRFIELD <dim> <N1> [N2] [N3] <u|v|w> <t>` followed by the cell values as
//! little-endian `f64` in row-major order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Domain, Field};
use crate::error::{HrError, Result};
use crate::model::Component;

const MAGIC: &str = "HRFIELD";

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub counts: Vec<usize>,
    pub component: Component,
    pub t: f64,
    pub values: Vec<f64>,
}

impl Snapshot {
    /// Attaches the snapshot to `dom`, which must have the recorded counts.
    pub fn into_field(self, dom: &Domain) -> Result<Field> {
        if dom.counts() != self.counts.as_slice() {
            return Err(HrError::Snapshot(format!(
                "snapshot counts {:?} do not match domain counts {:?}",
                self.counts,
                dom.counts()
            )));
        }
        Field::from_values(dom, self.values)
    }
}

pub fn write_snapshot<W: Write>(mut out: W, field: &Field, component: Component, t: f64) -> std::io::Result<()> {
    let mut header = format!("{MAGIC} {}", field.domain().dim());
    for n in field.domain().counts() {
        header.push_str(&format!(" {n}"));
    }
    header.push_str(&format!(" {} {t}\n", component.as_char()));
    out.write_all(header.as_bytes())?;
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()
}

pub fn read_snapshot<R: BufRead>(mut input: R) -> Result<Snapshot> {
    let mut header = Vec::new();
    input
        .read_until(b'\n', &mut header)
        .map_err(|e| HrError::Snapshot(e.to_string()))?;
    if header.last() != Some(&b'\n') {
        return Err(HrError::Snapshot("missing header line".into()));
    }
    header.pop();
    let header = String::from_utf8(header).map_err(|_| HrError::Snapshot("header is not UTF-8".into()))?;
    let tokens: Vec<&str> = header.split(' ').collect();
    if tokens.first() != Some(&MAGIC) {
        return Err(HrError::Snapshot(format!("bad magic in header {header:?}")));
    }
    let dim: usize = tokens
        .get(1)
        .and_then(|s| s.parse().ok())
        .filter(|d| (1..=3).contains(d))
        .ok_or_else(|| HrError::Snapshot(format!("bad dimension in header {header:?}")))?;
    if tokens.len() != dim + 4 {
        return Err(HrError::Snapshot(format!("expected {} header tokens, got {}", dim + 4, tokens.len())));
    }
    let counts = tokens[2..2 + dim]
        .iter()
        .map(|s| s.parse::<usize>().map_err(|_| HrError::Snapshot(format!("bad cell count {s:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let component = Component::from_label(tokens[2 + dim])
        .ok_or_else(|| HrError::Snapshot(format!("bad component {:?}", tokens[2 + dim])))?;
    let t: f64 = tokens[3 + dim]
        .parse()
        .map_err(|_| HrError::Snapshot(format!("bad time {:?}", tokens[3 + dim])))?;

    let n: usize = counts.iter().product();
    let mut bytes = vec![0u8; n * 8];
    input
        .read_exact(&mut bytes)
        .map_err(|e| HrError::Snapshot(format!("payload: {e}")))?;
    let mut extra = [0u8; 1];
    if input.read(&mut extra).map_err(|e| HrError::Snapshot(e.to_string()))? != 0 {
        return Err(HrError::Snapshot("trailing bytes after payload".into()));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(Snapshot {
        counts,
        component,
        t,
        values,
    })
}

pub fn write_snapshot_file(path: &Path, field: &Field, component: Component, t: f64) -> Result<()> {
    let file = File::create(path).map_err(|e| HrError::io(path, e))?;
    write_snapshot(BufWriter::new(file), field, component, t).map_err(|e| HrError::io(path, e))
}

pub fn read_snapshot_file(path: &Path) -> Result<Snapshot> {
    let file = File::open(path).map_err(|e| HrError::io(path, e))?;
    read_snapshot(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let d = make_grid(2, &[1.0, 1.0], &[2, 3]).unwrap();
        let f = Field::constant(&d, 1.5);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f, Component::W, 0.25).unwrap();
        let nl = buf.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(&buf[..nl], b"HRFIELD 2 2 3 w 0.25");
        assert_eq!(buf.len(), nl + 1 + 6 * 8);
        assert_eq!(&buf[nl + 1..nl + 9], &1.5f64.to_le_bytes());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(read_snapshot(&b"HRFIELD 1 2 u 0\n"[..]).is_err()); // short payload
        assert!(read_snapshot(&b"HRFELD 1 2 u 0\n"[..]).is_err());
        assert!(read_snapshot(&b"HRFIELD 1 2 x 0\n"[..]).is_err());
        assert!(read_snapshot(&b"HRFIELD 4 2 2 2 2 u 0\n"[..]).is_err());
        let mut ok = b"HRFIELD 1 2 v 1\n".to_vec();
        ok.extend_from_slice(&[0u8; 17]);
        assert!(read_snapshot(&ok[..]).is_err()); // trailing byte
    }

    proptest! {
        #[test]
        fn bit_exact_round_trip(
            values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 12),
            t in prop::num::f64::ANY.prop_filter("finite", |t| t.is_finite()),
        ) {
            let d = make_grid(3, &[1.0, 2.0, 3.0], &[2, 3, 2]).unwrap();
            let f = Field::from_values(&d, values.clone()).unwrap();
            let mut buf = Vec::new();
            write_snapshot(&mut buf, &f, Component::V, t).unwrap();
            let snap = read_snapshot(&buf[..]).unwrap();
            prop_assert_eq!(snap.component, Component::V);
            prop_assert_eq!(snap.t.to_bits(), t.to_bits());
            let back = snap.into_field(&d).unwrap();
            for (a, b) in back.values().iter().zip(&values) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
