//! File formats: event-log CSV, result tables, JSON documents and dense
//! density matrices. Every writer goes through a temp file in the target
//! directory followed by a rename, so readers never see partial output.

use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::detection::{DetectionEvent, Origin, Port};
use crate::error::{Error, Result};
use crate::interference::JointDensity;

/// Header of the event-log CSV.
pub const EVENTS_HEADER: [&str; 4] = ["trial", "port", "timestamp_ns", "origin"];

/// Writes `path` atomically from whatever `fill` puts into the buffer.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes serialisable rows as CSV with a header taken from the field names.
pub fn write_csv_rows<T: Serialize>(w: &mut dyn Write, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_events(w: &mut dyn Write, events: &[DetectionEvent]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(EVENTS_HEADER).map_err(csv_error)?;
    for e in events {
        out.serialize(e).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads an event log. Errors name the 1-based line of the file.
pub fn read_events<R: Read>(reader: R) -> Result<Vec<DetectionEvent>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    if headers.iter().ne(EVENTS_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", EVENTS_HEADER.join(",")),
        });
    }
    let mut events = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| Error::Parse { line, message };
        let field = |k: usize| rec.get(k).unwrap_or("");
        let trial = field(0)
            .parse()
            .map_err(|_| bad(format!("trial `{}` is not an unsigned integer", field(0))))?;
        let port = match field(1) {
            "C" | "c" => Port::C,
            "D" | "d" => Port::D,
            other => return Err(bad(format!("port `{other}` is neither C nor D"))),
        };
        let timestamp_ns: f64 = field(2)
            .parse()
            .map_err(|_| bad(format!("timestamp `{}` is not a number", field(2))))?;
        if !timestamp_ns.is_finite() {
            return Err(bad("timestamp must be finite".into()));
        }
        let origin = match field(3) {
            "photon" | "" => Origin::Photon,
            "extra" => Origin::Extra,
            "dark" => Origin::Dark,
            other => return Err(bad(format!("unknown origin `{other}`"))),
        };
        events.push(DetectionEvent {
            trial,
            port,
            timestamp_ns,
            origin,
        });
    }
    Ok(events)
}

/// Dimensions of a raw little-endian f64 matrix, stored next to it as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    pub order: String,
    pub t_start_ns: f64,
    pub dt_ns: f64,
    pub quantity: String,
}

/// Writes one density as `<stem>.f64` plus `<stem>.json`.
pub fn write_matrix_raw(
    dir: &Path,
    stem: &str,
    values: &[f64],
    sidecar: &MatrixSidecar,
) -> Result<()> {
    write_atomic(&dir.join(format!("{stem}.f64")), |w| {
        for v in values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    })?;
    write_json(&dir.join(format!("{stem}.json")), sidecar)
}

pub fn read_matrix_raw(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Parse {
            line: 0,
            message: format!("{} bytes is not a whole number of f64 values", bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

/// Long-format CSV `t1_ns,t2_ns,p_cross,p_same`.
pub fn write_density_csv(w: &mut dyn Write, jd: &JointDensity) -> Result<()> {
    let g = jd.grid();
    let n = g.len();
    writeln!(w, "t1_ns,t2_ns,p_cross,p_same")?;
    for i in 0..n {
        for j in 0..n {
            writeln!(
                w,
                "{},{},{:e},{:e}",
                g.time(i),
                g.time(j),
                jd.cross_at(i, j),
                jd.same_at(i, j)
            )?;
        }
    }
    Ok(())
}

pub fn density_sidecar(jd: &JointDensity, quantity: &str) -> MatrixSidecar {
    let g = jd.grid();
    MatrixSidecar {
        rows: g.len(),
        cols: g.len(),
        dtype: "f64-le".into(),
        order: "row-major, row = t1".into(),
        t_start_ns: g.t_start(),
        dt_ns: g.dt(),
        quantity: quantity.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<DetectionEvent> {
        vec![
            DetectionEvent {
                trial: 0,
                port: Port::C,
                timestamp_ns: -12.5,
                origin: Origin::Photon,
            },
            DetectionEvent {
                trial: 3,
                port: Port::D,
                timestamp_ns: 4_054.054_054_054_054,
                origin: Origin::Dark,
            },
        ]
    }

    #[test]
    fn events_survive_a_round_trip() {
        let mut buf = Vec::new();
        write_events(&mut buf, &sample()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("trial,port,timestamp_ns,origin\n"));
        assert_eq!(read_events(buf.as_slice()).unwrap(), sample());
    }

    #[test]
    fn malformed_rows_name_their_line() {
        let text = "trial,port,timestamp_ns,origin\n0,C,1.0,photon\n1,X,2.0,photon\n";
        match read_events(text.as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = "trial,port,timestamp_ns,origin\n0,C,abc,photon\n";
        assert!(matches!(
            read_events(text.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_events("a,b\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_inputs() {
        assert!(read_events("".as_bytes()).unwrap().is_empty());
        assert!(read_events("trial,port,timestamp_ns,origin\n".as_bytes())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.json");
        write_json(&p, &vec![1, 2]).unwrap();
        write_json(&p, &vec![3]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "[\n  3\n]\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn raw_matrix_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let side = MatrixSidecar {
            rows: 1,
            cols: 3,
            dtype: "f64-le".into(),
            order: "row-major".into(),
            t_start_ns: 0.0,
            dt_ns: 1.0,
            quantity: "test".into(),
        };
        write_matrix_raw(dir.path(), "m", &[1.0, -2.5, 3e-300], &side).unwrap();
        assert_eq!(
            read_matrix_raw(&dir.path().join("m.f64")).unwrap(),
            vec![1.0, -2.5, 3e-300]
        );
    }
}
