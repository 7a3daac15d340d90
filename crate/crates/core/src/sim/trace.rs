//! CSV traces and key-value summaries.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

pub const SLIP_RIGHT: u8 = 1;
pub const SLIP_LEFT: u8 = 2;
pub const SLIP_LATERAL: u8 = 4;

/// One row per control tick: the state at the start of the tick, the torques
/// applied over it and the contact forces averaged over it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub x_ref: f64,
    pub y_ref: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
    pub omega_r: f64,
    pub omega_l: f64,
    pub tau_r: f64,
    pub tau_l: f64,
    pub f_xr: f64,
    pub f_xl: f64,
    /// Bit set of [`SLIP_RIGHT`], [`SLIP_LEFT`], [`SLIP_LATERAL`].
    pub slip_flags: u8,
    /// Smaller of the two wheel friction coefficients.
    pub mu: f64,
    pub v_planned: f64,
    pub displacement_error: f64,
}

pub const HEADER: [&str; 19] = [
    "t",
    "x",
    "y",
    "theta",
    "x_ref",
    "y_ref",
    "u",
    "v",
    "r",
    "omega_r",
    "omega_l",
    "tau_r",
    "tau_l",
    "F_xr",
    "F_xl",
    "slip_flags",
    "mu",
    "v_planned",
    "displacement_error",
];

/// Fixed-point rendering with at least twelve significant digits and at least nine decimals.
pub fn format_value(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let v = if v == 0.0 { 0.0 } else { v };
    let decimals = if v == 0.0 {
        9
    } else {
        (11 - v.abs().log10().floor() as i64).clamp(9, 40) as usize
    };
    let s = format!("{v:.decimals$}");
    // a tiny negative value can round to "-0.000…"
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

impl TraceRow {
    fn values(&self) -> [f64; 18] {
        [
            self.t,
            self.x,
            self.y,
            self.theta,
            self.x_ref,
            self.y_ref,
            self.u,
            self.v,
            self.r,
            self.omega_r,
            self.omega_l,
            self.tau_r,
            self.tau_l,
            self.f_xr,
            self.f_xl,
            self.mu,
            self.v_planned,
            self.displacement_error,
        ]
    }

    pub fn to_csv_line(&self) -> String {
        let vals = self.values();
        let mut out = String::with_capacity(256);
        for (i, v) in vals[..15].iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format_value(*v));
        }
        let _ = write!(out, ",{}", self.slip_flags);
        for v in &vals[15..] {
            out.push(',');
            out.push_str(&format_value(*v));
        }
        out
    }
}

pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let mut out = HEADER.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

pub fn write_trace(rows: &[TraceRow], destination: impl AsRef<Path>) -> io::Result<()> {
    std::fs::write(destination, trace_to_csv(rows))
}

/// Parses a trace written by [`write_trace`].
pub fn read_trace(text: &str) -> Result<Vec<TraceRow>, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty trace")?;
    if header != HEADER.join(",") {
        return Err(format!("unexpected header `{header}`"));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != HEADER.len() {
                return Err(format!("line {}: expected {} fields, got {}", i + 2, HEADER.len(), fields.len()));
            }
            let f = |k: usize| {
                fields[k]
                    .parse::<f64>()
                    .map_err(|e| format!("line {}: {}: {e}", i + 2, HEADER[k]))
            };
            Ok(TraceRow {
                t: f(0)?,
                x: f(1)?,
                y: f(2)?,
                theta: f(3)?,
                x_ref: f(4)?,
                y_ref: f(5)?,
                u: f(6)?,
                v: f(7)?,
                r: f(8)?,
                omega_r: f(9)?,
                omega_l: f(10)?,
                tau_r: f(11)?,
                tau_l: f(12)?,
                f_xr: f(13)?,
                f_xl: f(14)?,
                slip_flags: fields[15].parse().map_err(|e| format!("line {}: slip_flags: {e}", i + 2))?,
                mu: f(16)?,
                v_planned: f(17)?,
                displacement_error: f(18)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_value(1.0), "1.00000000000");
        assert_eq!(format_value(1234.5), "1234.500000000");
        assert_eq!(format_value(1.5e-3), "0.00150000000000");
        assert_eq!(format_value(-1e-12), "-0.00000000000100000000000");
        assert_eq!(format_value(123456789.0), "123456789.000000000");
        assert_eq!(format_value(0.0), "0.000000000");
        assert_eq!(format_value(-0.0), "0.000000000");
    }

    #[test]
    fn negative_zero_after_rounding() {
        assert_eq!(format_value(-1e-45), "0.0000000000000000000000000000000000000000");
    }

    #[test]
    fn round_trip() {
        let row = TraceRow {
            t: 0.01,
            x: 1.25,
            theta: -0.5,
            slip_flags: SLIP_LEFT | SLIP_LATERAL,
            mu: 0.8,
            ..TraceRow::default()
        };
        let csv = trace_to_csv(&[row, row]);
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 19);
        assert_eq!(read_trace(&csv).unwrap(), vec![row, row]);
    }
}
