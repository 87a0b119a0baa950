use std::io::Write;

use crate::error::{Error, Result};
use crate::frame::Vec2;

/// Column names of the CSV export, in order.
pub const COLUMNS: [&str; 14] = [
    "t",
    "i_alpha",
    "i_beta",
    "i_mag",
    "u_alpha",
    "u_beta",
    "u_mag",
    "p",
    "q",
    "omega_delta",
    "p_ref_active",
    "q_ref_active",
    "saturated",
    "in_lvrt",
];

/// One captured row.
///
/// `omega_delta` is the per-unit frequency channel: the dCVOC state `ω_Δ`,
/// or `(θ̇ − ω_0)/ω_b` for the other controllers.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub i: Vec2,
    pub u: Vec2,
    pub p: f64,
    pub q: f64,
    pub omega_delta: f64,
    pub p_ref_active: f64,
    pub q_ref_active: f64,
    pub saturated: bool,
    pub in_lvrt: bool,
}

impl Sample {
    /// The continuous columns used for settling checks.
    pub fn signals(&self) -> [f64; 9] {
        [self.i.a1, self.i.a2, self.i.norm(), self.u.a1, self.u.a2, self.u.norm(), self.p, self.q, self.omega_delta]
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeSeries {
    pub samples: Vec<Sample>,
    pub dt: f64,
    pub stride: usize,
    /// Time at which integration stopped early, if it did.
    pub truncated_at: Option<f64>,
}

impl TimeSeries {
    pub fn new(dt: f64, stride: usize) -> Self {
        TimeSeries { samples: Vec::new(), dt, stride, truncated_at: None }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> TimeSeries {
        TimeSeries { samples: self.samples[range].to_vec(), truncated_at: None, ..*self }
    }

    /// Samples with `t ≥ t0`.
    pub fn since(&self, t0: f64) -> &[Sample] {
        let k = self.samples.partition_point(|s| s.t < t0);
        &self.samples[k..]
    }

    /// Writes the `#` preamble followed by the CSV table.
    pub fn write_csv<W: Write>(&self, out: &mut W, meta: &[(&str, String)]) -> Result<()> {
        for (k, v) in meta {
            writeln!(out, "# {k}: {v}")?;
        }
        if let Some(t) = self.truncated_at {
            writeln!(out, "# truncated_at: {t}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let map = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(COLUMNS).map_err(map)?;
        for s in &self.samples {
            let row = [
                s.t,
                s.i.a1,
                s.i.a2,
                s.i.norm(),
                s.u.a1,
                s.u.a2,
                s.u.norm(),
                s.p,
                s.q,
                s.omega_delta,
                s.p_ref_active,
                s.q_ref_active,
            ];
            let mut rec: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            rec.push(u8::from(s.saturated).to_string());
            rec.push(u8::from(s.in_lvrt).to_string());
            w.write_record(&rec).map_err(map)?;
        }
        w.flush()?;
        Ok(())
    }
}
