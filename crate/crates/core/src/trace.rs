//! Uniformly sampled time records and their CSV form.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::csvfmt::{fmt_real, parse_row};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("a trace needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("trace csv: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A value that can be stored in a [`TimeTrace`].
pub trait Sample: Copy + Send + Sync {
    const HEADER: &'static str;
    fn is_finite(&self) -> bool;
    fn write_fields(&self, out: &mut String);
    fn from_fields(fields: &[f64]) -> Option<Self>;
}

impl Sample for f64 {
    const HEADER: &'static str = "time_s,value";
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn write_fields(&self, out: &mut String) {
        out.push_str(&fmt_real(*self));
    }
    fn from_fields(fields: &[f64]) -> Option<Self> {
        match fields {
            [v] => Some(*v),
            _ => None,
        }
    }
}

impl Sample for Complex64 {
    const HEADER: &'static str = "time_s,re,im";
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn write_fields(&self, out: &mut String) {
        out.push_str(&fmt_real(self.re));
        out.push(',');
        out.push_str(&fmt_real(self.im));
    }
    fn from_fields(fields: &[f64]) -> Option<Self> {
        match fields {
            [re, im] => Some(Complex64::new(*re, *im)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace<S> {
    pub t0: f64,
    pub dt: f64,
    samples: Vec<S>,
}

pub type ComplexTrace = TimeTrace<Complex64>;
pub type RealTrace = TimeTrace<f64>;

impl<S: Sample> TimeTrace<S> {
    pub fn new(t0: f64, dt: f64, samples: Vec<S>) -> Result<Self, TraceError> {
        if !(dt > 0.0 && dt.is_finite()) || !t0.is_finite() {
            return Err(TraceError::BadStep(dt));
        }
        if samples.len() < 2 {
            return Err(TraceError::TooShort(samples.len()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(TraceError::NonFinite(i));
        }
        Ok(Self { t0, dt, samples })
    }

    pub fn samples(&self) -> &[S] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |i| self.time(i))
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.samples.len() - 1)
    }

    pub fn map<T: Sample>(&self, f: impl FnMut(&S) -> T) -> Result<TimeTrace<T>, TraceError> {
        TimeTrace::new(self.t0, self.dt, self.samples.iter().map(f).collect())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), TraceError> {
        writeln!(w, "{}", S::HEADER)?;
        let mut line = String::new();
        for (i, s) in self.samples.iter().enumerate() {
            line.clear();
            line.push_str(&fmt_real(self.time(i)));
            line.push(',');
            s.write_fields(&mut line);
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Parse a trace written by [`write_csv`](Self::write_csv). The time step
    /// is taken from the first two rows.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, TraceError> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != S::HEADER {
            return Err(TraceError::Format(format!("expected header `{}`, got `{header}`", S::HEADER)));
        }
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = parse_row(&line).map_err(|e| TraceError::Format(format!("row {}: {e}", n + 2)))?;
            let s = S::from_fields(&row[1..])
                .ok_or_else(|| TraceError::Format(format!("row {}: wrong column count", n + 2)))?;
            times.push(row[0]);
            samples.push(s);
        }
        if times.len() < 2 {
            return Err(TraceError::TooShort(times.len()));
        }
        Self::new(times[0], times[1] - times[0], samples)
    }
}

/// Trapezoidal integral of `f(sample)` over the trace.
pub fn trapezoid<S: Sample>(trace: &TimeTrace<S>, mut f: impl FnMut(usize, &S) -> f64) -> f64 {
    let s = trace.samples();
    let mut acc = 0.0;
    let mut prev = f(0, &s[0]);
    for (i, x) in s.iter().enumerate().skip(1) {
        let cur = f(i, x);
        acc += 0.5 * (prev + cur);
        prev = cur;
    }
    acc * trace.dt
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_traces() {
        assert!(matches!(RealTrace::new(0.0, 0.0, vec![1.0, 2.0]), Err(TraceError::BadStep(_))));
        assert!(matches!(RealTrace::new(0.0, 1.0, vec![1.0]), Err(TraceError::TooShort(1))));
        assert!(matches!(RealTrace::new(0.0, 1.0, vec![1.0, f64::NAN]), Err(TraceError::NonFinite(1))));
    }

    #[test]
    fn complex_csv_header() {
        let t = ComplexTrace::new(0.0, 1e-9, vec![Complex64::new(1.0, -2.0); 3]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time_s,re,im\n"));
        let back = ComplexTrace::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.samples(), t.samples());
        assert!(RealTrace::read_csv(buf.as_slice()).is_err());
    }

    #[test]
    fn trapezoid_of_line() {
        let t = RealTrace::new(0.0, 0.5, vec![0.0, 1.0, 2.0]).unwrap();
        assert!((trapezoid(&t, |_, v| *v) - 1.0).abs() < 1e-15);
    }
}
