//! CSV export and import of simulated sessions.
//!
//! One file per session with columns `step,t,P,dX,dZ,dY,lambda,v`. Row 0
//! carries the opening price with zero increments and zero impact.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::kyle::SimSession;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TapeRow {
    pub step: usize,
    pub t: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "dX")]
    pub dx: f64,
    #[serde(rename = "dZ")]
    pub dz: f64,
    #[serde(rename = "dY")]
    pub dy: f64,
    pub lambda: f64,
    pub v: f64,
}

/// Tape rows of a session. Increments are differences of the stored levels.
pub fn tape_rows(session: &SimSession) -> Vec<TapeRow> {
    let n = session.n_steps();
    let mut rows = Vec::with_capacity(n + 1);
    rows.push(TapeRow { step: 0, t: 0.0, p: session.p[0], dx: 0.0, dz: 0.0, dy: 0.0, lambda: 0.0, v: session.v });
    for i in 1..=n {
        rows.push(TapeRow {
            step: i,
            t: i as f64 * session.dt,
            p: session.p[i],
            dx: session.x[i] - session.x[i - 1],
            dz: session.z[i] - session.z[i - 1],
            dy: session.y[i] - session.y[i - 1],
            lambda: session.lambda[i - 1],
            v: session.v,
        });
    }
    rows
}

pub fn write_tape<W: Write>(session: &SimSession, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in tape_rows(session) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// A tape read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Tape {
    pub rows: Vec<TapeRow>,
}

impl Tape {
    pub fn n_steps(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn horizon(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.t)
    }

    pub fn open_price(&self) -> f64 {
        self.rows[0].p
    }
}

pub fn read_tape<R: Read>(reader: R) -> Result<Tape> {
    let mut r = csv::Reader::from_reader(reader);
    let rows = r.deserialize().collect::<std::result::Result<Vec<TapeRow>, _>>()?;
    if rows.len() < 2 {
        return Err(Error::Malformed("tape needs an opening row and at least one step".into()));
    }
    if rows.iter().enumerate().any(|(i, r)| r.step != i) {
        return Err(Error::Malformed("tape steps must run 0, 1, 2, ...".into()));
    }
    Ok(Tape { rows })
}
