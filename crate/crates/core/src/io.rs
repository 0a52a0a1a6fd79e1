//! Plain CSV writers for trajectories, mixing curves and coupling runs.
//!
//! Floats are written with 17 significant digits, lines end in `\n`, and an
//! optional `# ` comment line carrying the run configuration precedes the
//! single header row.

use std::io::{self, Write};

use crate::coupling::CouplingRun;
use crate::glauber::Trajectory;

/// `x` in scientific notation with 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn preamble<W: Write>(w: &mut W, comment: Option<&str>, header: &str) -> io::Result<()> {
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    writeln!(w, "{header}")
}

/// `t,count_1,...,count_q`.
pub fn write_trajectory_csv<W: Write>(w: &mut W, traj: &Trajectory, q: usize, comment: Option<&str>) -> io::Result<()> {
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=q).map(|k| format!("count_{k}")))
        .collect();
    preamble(w, comment, &header.join(","))?;
    for (t, c) in traj.times.iter().zip(&traj.counts) {
        write!(w, "{t}")?;
        for x in c {
            write!(w, ",{x}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// `t,d_tv`.
pub fn write_mixing_csv<W: Write>(w: &mut W, d_curve: &[f64], comment: Option<&str>) -> io::Result<()> {
    preamble(w, comment, "t,d_tv")?;
    for (t, d) in d_curve.iter().enumerate() {
        writeln!(w, "{t},{}", format_float(*d))?;
    }
    Ok(())
}

/// `trial,coupling_time,censored`.
pub fn write_coupling_trials_csv<W: Write>(w: &mut W, run: &CouplingRun, comment: Option<&str>) -> io::Result<()> {
    preamble(w, comment, "trial,coupling_time,censored")?;
    for (i, o) in run.outcomes.iter().enumerate() {
        writeln!(w, "{i},{},{}", o.coupling_time, u8::from(o.censored))?;
    }
    Ok(())
}

/// `t,mean_distance`.
pub fn write_mean_distance_csv<W: Write>(w: &mut W, run: &CouplingRun, comment: Option<&str>) -> io::Result<()> {
    preamble(w, comment, "t,mean_distance")?;
    for (t, d) in &run.mean_distance {
        writeln!(w, "{t},{}", format_float(*d))?;
    }
    Ok(())
}

/// Parses `a:b:s` (inclusive of `b` when it is hit to within rounding) or a
/// single value.
pub fn parse_range(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("bad number {p:?} in {s:?}: {e}"));
    match parts.as_slice() {
        [x] => Ok(vec![num(x)?]),
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || !a.is_finite() || !b.is_finite() {
                return Err(format!("range {s:?} needs finite ends and a positive step"));
            }
            if b < a {
                return Err(format!("range {s:?} is empty"));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=count).map(|i| a + i as f64 * step).collect())
        }
        _ => Err(format!("expected a value or a:b:s, got {s:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(2.0), "2.0000000000000000e0");
        assert_eq!(format_float(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("10:40:10").unwrap(), vec![10.0, 20.0, 30.0, 40.0]);
        assert_eq!(parse_range("0.5").unwrap(), vec![0.5]);
        assert_eq!(parse_range("0:0.3:0.1").unwrap().len(), 4);
        assert!(parse_range("3:1:1").is_err());
        assert!(parse_range("1:2:0").is_err());
        assert!(parse_range("1:2").is_err());
    }

    #[test]
    fn mixing_csv_layout() {
        let mut out = Vec::new();
        write_mixing_csv(&mut out, &[1.0, 0.25], Some("{\"q\":3}")).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "# {\"q\":3}\nt,d_tv\n0,1.0000000000000000e0\n1,2.5000000000000000e-1\n"
        );
    }
}
