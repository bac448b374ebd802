use super::SimState;
use crate::diagnostics::{energy_inequality_residual, energy_record, EnergyRecord, CSV_HEADER};
use crate::error::{Error, Result};
use crate::grid::snapshot;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

/// Receives every sampled record from the stepping loop.
pub trait RecordSink {
    fn record(&mut self, state: &SimState, record: &EnergyRecord) -> Result<()>;

    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

impl RecordSink for Vec<EnergyRecord> {
    fn record(&mut self, _: &SimState, record: &EnergyRecord) -> Result<()> {
        self.push(*record);
        Ok(())
    }
}

/// Writes records as CSV rows, header first.
pub struct CsvSink<W: Write> {
    out: W,
    header: bool,
}

impl<W: Write> CsvSink<W> {
    pub fn new(out: W) -> Self {
        Self { out, header: false }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> RecordSink for CsvSink<W> {
    fn record(&mut self, _: &SimState, record: &EnergyRecord) -> Result<()> {
        if !self.header {
            writeln!(self.out, "{CSV_HEADER}")?;
            self.header = true;
        }
        writeln!(self.out, "{}", record.csv_row())?;
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Writes the director field to `dir/d_<sample>.snap` every `every` samples.
pub struct SnapshotSink {
    dir: PathBuf,
    every: usize,
    seen: usize,
}

impl SnapshotSink {
    pub fn new(dir: impl Into<PathBuf>, every: usize) -> Result<Self> {
        if every == 0 {
            return Err(Error::Parameter(
                "snapshot interval must be positive".into(),
            ));
        }
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            every,
            seen: 0,
        })
    }
}

impl RecordSink for SnapshotSink {
    fn record(&mut self, state: &SimState, _: &EnergyRecord) -> Result<()> {
        if self.seen.is_multiple_of(self.every) {
            let path = self.dir.join(format!("d_{:06}.snap", self.seen));
            let mut w = BufWriter::new(File::create(path)?);
            snapshot::write_vector(&mut w, &state.d, state.t)?;
            w.flush()?;
        }
        self.seen += 1;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_state: SimState,
    pub records: Vec<EnergyRecord>,
    pub steps: u64,
    pub max_cfl: f64,
    /// Largest energy-inequality residual between consecutive steps.
    pub max_energy_residual: f64,
    /// Largest one-step increase of the lifted energy.
    pub max_energy_increase: f64,
}

/// Steps `s0` until `t ≥ t_end`, recording the initial state and every
/// `sample_every`-th step.
pub fn run(
    s0: SimState,
    t_end: f64,
    sample_every: usize,
    sinks: &mut [&mut dyn RecordSink],
) -> Result<RunSummary> {
    if !(t_end > s0.t) {
        return Err(Error::Parameter(format!(
            "t_end = {t_end} must exceed the start time {}",
            s0.t
        )));
    }
    if sample_every == 0 {
        return Err(Error::Parameter("sample_every must be positive".into()));
    }
    let n = (((t_end - s0.t) / s0.dt) * (1.0 - 1e-12)).ceil().max(1.0) as u64;
    let mut records = Vec::new();
    let mut s = s0;
    let mut prev = energy_record(&s);
    let emit = |s: &SimState, r: &EnergyRecord, sinks: &mut [&mut dyn RecordSink]| -> Result<()> {
        for sink in sinks.iter_mut() {
            sink.record(s, r)?;
        }
        Ok(())
    };
    emit(&s, &prev, sinks)?;
    records.push(prev);
    let mut max_cfl = s.cfl();
    let mut max_res = f64::NEG_INFINITY;
    let mut max_rise = f64::NEG_INFINITY;
    for k in 1..=n {
        s = s.step().inspect_err(|e| {
            if let Error::NonFinite { .. } = e {
                log::error!("aborting run: {e}; last good record {prev:?}");
            }
        })?;
        max_cfl = max_cfl.max(s.cfl());
        let rec = energy_record(&s);
        max_res = max_res.max(energy_inequality_residual(&prev, &rec, s.dt));
        max_rise = max_rise.max(rec.e_hat - prev.e_hat);
        if k % sample_every as u64 == 0 {
            emit(&s, &rec, sinks)?;
            records.push(rec);
        }
        prev = rec;
    }
    for sink in sinks.iter_mut() {
        sink.finish()?;
    }
    Ok(RunSummary {
        final_state: s,
        records,
        steps: n,
        max_cfl,
        max_energy_residual: max_res,
        max_energy_increase: max_rise,
    })
}
