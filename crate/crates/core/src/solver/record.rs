//! Per-frame fit output: `frame, 20 beta, 102 theta, energy, accepted`.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::hand_model::{HandParams, NUM_SHAPE, PARAM_DIM, POSE_DIM};

#[derive(Clone, Debug, PartialEq)]
pub struct FrameRecord {
    pub frame: usize,
    pub params: HandParams,
    pub energy: f64,
    pub accepted: usize,
}

pub fn record_header() -> String {
    let mut cols = vec!["frame".to_string()];
    for h in ["l", "r"] {
        cols.extend((0..NUM_SHAPE).map(|i| format!("beta_{h}{i}")));
    }
    for h in ["l", "r"] {
        cols.extend((0..POSE_DIM).map(|i| format!("theta_{h}{i}")));
    }
    cols.push("energy".into());
    cols.push("accepted".into());
    cols.join(",")
}

pub fn write_records<W: Write>(out: &mut W, records: &[FrameRecord]) -> Result<()> {
    let mut s = record_header();
    s.push('\n');
    for r in records {
        s.push_str(&r.frame.to_string());
        for v in r.params.to_vec() {
            s.push_str(&format!(",{v:?}"));
        }
        s.push_str(&format!(",{:?},{}\n", r.energy, r.accepted));
    }
    out.write_all(s.as_bytes())
        .map_err(|e| Error::io("<records>", e))
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<FrameRecord>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::io("<records>", e))?;
        let err = |msg: String| Error::Csv { line: line_no, msg };
        if line.trim().is_empty() || line.starts_with("frame") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != PARAM_DIM + 3 {
            return Err(err(format!("expected {} fields, got {}", PARAM_DIM + 3, fields.len())));
        }
        let frame = fields[0].parse().map_err(|_| err(format!("bad frame `{}`", fields[0])))?;
        let values = fields[1..=PARAM_DIM]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| err(format!("bad number `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        let energy = fields[PARAM_DIM + 1]
            .parse()
            .map_err(|_| err(format!("bad energy `{}`", fields[PARAM_DIM + 1])))?;
        let accepted = fields[PARAM_DIM + 2]
            .parse()
            .map_err(|_| err(format!("bad accepted count `{}`", fields[PARAM_DIM + 2])))?;
        out.push(FrameRecord {
            frame,
            params: HandParams::from_slice(&values)?,
            energy,
            accepted,
        });
    }
    Ok(out)
}

pub fn save_records(path: &Path, records: &[FrameRecord]) -> Result<()> {
    let mut buf = Vec::new();
    write_records(&mut buf, records)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_records(path: &Path) -> Result<Vec<FrameRecord>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(std::io::BufReader::new(f)).map_err(|e| match e {
        Error::Csv { line, msg } => Error::Csv {
            line,
            msg: format!("{}: {msg}", path.display()),
        },
        e => e,
    })
}
