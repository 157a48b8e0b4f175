//! Parameter sweeps and the per-point evaluation shared with `point`.

use std::io::Write;

use clap::ValueEnum;
use qcc_core::quadrature::QuadOptions;
use qcc_core::scenario::Scenario;
use qcc_core::signalling::{field_energy_sig, interaction_energy_sig, s2, Estimate, SignallingError};
use rayon::prelude::*;

use crate::format::number;

pub const MAX_GRID_POINTS: usize = 1_000_000;

pub const SWEEP_HEADER: [&str; 8] = ["param", "s2", "hB_sig", "hI_on", "hI_off", "hf_sig", "quad_error", "status"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    /// Bob's switch-on time; his window length is kept.
    #[value(name = "bob_t_on")]
    BobTOn,
    /// Detector separation.
    #[value(name = "separation_L")]
    SeparationL,
    /// Bob's energy gap.
    #[value(name = "gap_B")]
    GapB,
}

impl SweepParam {
    pub fn apply(self, s: &Scenario, value: f64) -> Scenario {
        match self {
            SweepParam::BobTOn => s.with_bob_t_on(value),
            SweepParam::SeparationL => s.with_separation(value),
            SweepParam::GapB => s.with_bob_gap(value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridRange {
    /// Parses `start:stop:step`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(format!("range {text:?} is not of the form start:stop:step"));
        };
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("range {text:?}: {s:?} is not a finite number"))
        };
        let r = Self {
            start: num(a)?,
            stop: num(b)?,
            step: num(c)?,
        };
        if r.step <= 0.0 {
            return Err(format!("range {text:?}: step must be positive"));
        }
        if r.start >= r.stop {
            return Err(format!("range {text:?}: start must be below stop"));
        }
        if (r.stop - r.start) / r.step > MAX_GRID_POINTS as f64 {
            return Err(format!("range {text:?}: more than {MAX_GRID_POINTS} grid points"));
        }
        Ok(r)
    }

    /// `start + i·step` for every `i` with the value not beyond `stop`
    /// (up to a relative slack of 1e-9 steps).
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    InvalidScenario,
    InvalidEvalTime,
    Rejected,
    NonConvergence,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::InvalidScenario => "invalid_scenario",
            RowStatus::InvalidEvalTime => "invalid_eval_time",
            RowStatus::Rejected => "rejected_lightcone",
            RowStatus::NonConvergence => "nonconvergence",
        }
    }

    fn of(e: &SignallingError) -> Self {
        match e {
            SignallingError::Invalid(_) => RowStatus::InvalidScenario,
            SignallingError::BeforeBobSwitchOn { .. } | SignallingError::OutsideBobWindow { .. } => {
                RowStatus::InvalidEvalTime
            }
            SignallingError::Quadrature(_) => RowStatus::NonConvergence,
            SignallingError::LightconeCrossing { .. }
            | SignallingError::NotTimelike { .. }
            | SignallingError::DimensionMismatch { .. }
            | SignallingError::ZeroSeparation => RowStatus::Rejected,
        }
    }
}

/// One evaluated grid point. A field the scenario does not determine is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub param: f64,
    pub s2: Option<f64>,
    pub hb_sig: Option<f64>,
    pub hi_on: Option<f64>,
    pub hi_off: Option<f64>,
    pub hf_sig: Option<f64>,
    pub quad_error: f64,
    pub status: RowStatus,
    /// First error met, for diagnostics.
    pub message: Option<String>,
}

impl Row {
    /// Evaluates every signalling column independently so that one rejected
    /// quantity does not hide the others.
    pub fn evaluate(param: f64, s: &Scenario, eval_time: Option<f64>, opts: &QuadOptions) -> Row {
        let mut row = Row {
            param,
            s2: None,
            hb_sig: None,
            hi_on: None,
            hi_off: None,
            hf_sig: None,
            quad_error: 0.0,
            status: RowStatus::Ok,
            message: None,
        };
        if let Err(e) = s.check() {
            row.status = RowStatus::InvalidScenario;
            row.message = Some(e.to_string());
            return row;
        }
        let w = s.bob().window;
        let t = eval_time.unwrap_or(w.t_off);
        let mut take = |r: Result<Estimate, SignallingError>| match r {
            Ok(e) => {
                row.quad_error += e.error;
                Some(e.value)
            }
            Err(e) => {
                if row.status == RowStatus::Ok {
                    row.status = RowStatus::of(&e);
                    row.message = Some(e.to_string());
                }
                None
            }
        };
        let s2v = take(s2(s, t, opts));
        let hi_on = take(interaction_energy_sig(s, w.t_on, opts));
        let hi_off = take(interaction_energy_sig(s, w.t_off, opts));
        let hf = take(field_energy_sig(s, t, opts));
        row.s2 = s2v;
        row.hb_sig = s2v.map(|v| s.bob().gap * v);
        row.hi_on = hi_on;
        row.hi_off = hi_off;
        row.hf_sig = hf;
        row
    }

    pub fn signalling_fields(&self) -> [String; 7] {
        let opt = |x: Option<f64>| x.map(number).unwrap_or_default();
        [
            opt(self.s2),
            opt(self.hb_sig),
            opt(self.hi_on),
            opt(self.hi_off),
            opt(self.hf_sig),
            number(self.quad_error),
            self.status.as_str().to_owned(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub range: GridRange,
    /// `None` evaluates at Bob's switch-off.
    pub eval_time: Option<f64>,
}

/// Evaluates the grid in parallel; rows come back in grid order.
pub fn run_sweep(base: &Scenario, spec: &SweepSpec, opts: &QuadOptions) -> Vec<Row> {
    spec.range
        .points()
        .into_par_iter()
        .map(|v| Row::evaluate(v, &spec.param.apply(base, v), spec.eval_time, opts))
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        let mut record = vec![number(r.param)];
        record.extend(r.signalling_fields());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use qcc_core::scenario::Dimension;

    #[test]
    fn grid_includes_stop_and_counts_exactly() {
        let r = GridRange::parse("4.05:12:0.05").unwrap();
        let p = r.points();
        assert_eq!(p.len(), 160);
        assert_eq!(p[0], 4.05);
        assert!((p[159] - 12.0).abs() < 1e-12);
        assert!(GridRange::parse("1:0:0.1").is_err());
        assert!(GridRange::parse("0:1:0").is_err());
        assert!(GridRange::parse("0:1").is_err());
        assert!(GridRange::parse("0:1e7:1").is_err());
        assert!(GridRange::parse("0:x:1").is_err());
    }

    #[test]
    fn rows_report_partial_results_with_status() {
        let s = Scenario::reference(Dimension::D2p1, 3.5);
        let row = Row::evaluate(3.5, &s, None, &QuadOptions::default());
        assert_eq!(row.status, RowStatus::Rejected);
        assert!(row.s2.is_some() && row.hf_sig.is_none());

        let row = Row::evaluate(2.0, &Scenario::reference(Dimension::D2p1, 2.0), None, &QuadOptions::default());
        assert_eq!(row.status, RowStatus::InvalidScenario);
        assert_eq!(row.signalling_fields()[..5], ["", "", "", "", ""].map(String::from));

        let row = Row::evaluate(5.0, &Scenario::reference(Dimension::D1p1, 5.0), Some(4.0), &QuadOptions::default());
        assert_eq!(row.status, RowStatus::InvalidEvalTime);
    }

    #[test]
    fn sweep_rows_equal_point_rows() {
        let base = Scenario::reference(Dimension::D2p1, 5.0);
        let spec = SweepSpec {
            param: SweepParam::BobTOn,
            range: GridRange::parse("4.5:6:0.5").unwrap(),
            eval_time: None,
        };
        let opts = QuadOptions::default();
        let rows = run_sweep(&base, &spec, &opts);
        for r in &rows {
            let single = Row::evaluate(r.param, &base.with_bob_t_on(r.param), None, &opts);
            assert_eq!(r, &single);
        }
    }
}
