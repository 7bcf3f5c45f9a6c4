//! Text formats: function files, window CSV and 8-bit graymaps.
//!
//! A function file starts with `dim <d>` and then lists one entry per line as
//! `<x1> ... <xd> <re> <im>`. Lines starting with `#` and blank lines are ignored.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{LatconvError, Result};
use crate::lattice::{DenseGrid, LatticeFunction};

pub fn parse_function(text: &str) -> Result<LatticeFunction> {
    read_function(text.as_bytes())
}

pub fn read_function<R: BufRead>(reader: R) -> Result<LatticeFunction> {
    let mut dim: Option<usize> = None;
    let mut entries = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let err = |message: String| LatconvError::Parse {
            line: lineno,
            message,
        };
        let Some(d) = dim else {
            let mut it = t.split_whitespace();
            if it.next() != Some("dim") {
                return Err(err("expected 'dim <d>' header".into()));
            }
            let d: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .filter(|&d| d > 0)
                .ok_or_else(|| err("dimension must be a positive integer".into()))?;
            if it.next().is_some() {
                return Err(err("trailing tokens after dimension".into()));
            }
            dim = Some(d);
            continue;
        };
        let toks: Vec<&str> = t.split_whitespace().collect();
        if toks.len() != d + 2 {
            return Err(err(format!(
                "expected {} fields, found {}",
                d + 2,
                toks.len()
            )));
        }
        let mut x = Vec::with_capacity(d);
        for s in &toks[..d] {
            x.push(
                s.parse::<i64>()
                    .map_err(|_| err(format!("bad coordinate '{s}'")))?,
            );
        }
        let re: f64 = toks[d]
            .parse()
            .map_err(|_| err(format!("bad real part '{}'", toks[d])))?;
        let im: f64 = toks[d + 1]
            .parse()
            .map_err(|_| err(format!("bad imaginary part '{}'", toks[d + 1])))?;
        if !(re.is_finite() && im.is_finite()) {
            return Err(err("non-finite value".into()));
        }
        entries.push((x, Complex64::new(re, im)));
    }
    let d = dim.ok_or(LatconvError::Parse {
        line: 0,
        message: "missing 'dim <d>' header".into(),
    })?;
    LatticeFunction::from_entries(d, entries)
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_function<W: Write>(f: &LatticeFunction, mut w: W) -> Result<()> {
    writeln!(w, "dim {}", f.dim())?;
    for (x, v) in f.iter() {
        for c in x {
            write!(w, "{c} ")?;
        }
        writeln!(w, "{} {}", fmt_f64(v.re), fmt_f64(v.im))?;
    }
    Ok(())
}

pub fn format_function(f: &LatticeFunction) -> String {
    let mut buf = Vec::new();
    write_function(f, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Window CSV with columns `x_1..x_d,re,im`.
pub fn write_grid_csv<W: Write>(g: &DenseGrid, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=g.dim()).map(|j| format!("x_{j}")).collect();
    header.push("re".into());
    header.push("im".into());
    wr.write_record(&header).map_err(csv_err)?;
    let mut result = Ok(());
    g.for_each(|x, v| {
        if result.is_err() {
            return;
        }
        let mut rec: Vec<String> = x.iter().map(|c| c.to_string()).collect();
        rec.push(fmt_f64(v.re));
        rec.push(fmt_f64(v.im));
        result = wr.write_record(&rec).map_err(csv_err);
    });
    result?;
    wr.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> LatconvError {
    LatconvError::Io(std::io::Error::other(e.to_string()))
}

/// Which real quantity a graymap shows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrayChannel {
    Real,
    Abs,
}

/// Binary `P5` graymap of a 2-d grid: rows follow the second axis (top = largest), columns the first.
///
/// Returns the `(min, max)` used for the linear map to `0..=255`.
pub fn write_graymap<W: Write>(
    g: &DenseGrid,
    channel: GrayChannel,
    mut w: W,
) -> Result<(f64, f64)> {
    if g.dim() != 2 {
        return Err(LatconvError::invalid("graymaps need a 2-d grid"));
    }
    let value = |v: Complex64| match channel {
        GrayChannel::Real => v.re,
        GrayChannel::Abs => v.norm(),
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in g.data() {
        let a = value(*v);
        lo = lo.min(a);
        hi = hi.max(a);
    }
    let (nx, ny) = (g.shape()[0], g.shape()[1]);
    write!(w, "P5\n{nx} {ny}\n255\n")?;
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut bytes = Vec::with_capacity(nx * ny);
    for row in (0..ny).rev() {
        for col in 0..nx {
            let a = value(g.data()[col * ny + row]);
            bytes.push((((a - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    w.write_all(&bytes)?;
    Ok((lo, hi))
}

/// Sidecar text recording how a graymap was scaled.
pub fn graymap_sidecar(channel: GrayChannel, lo: f64, hi: f64, g: &DenseGrid) -> String {
    let ch = match channel {
        GrayChannel::Real => "re",
        GrayChannel::Abs => "abs",
    };
    format!(
        "channel {ch}\nmin {}\nmax {}\nwindow {}\n",
        fmt_f64(lo),
        fmt_f64(hi),
        g.bounds()
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_write_round_trip() {
        let text =
            "# a comment\ndim 2\n0 0 0.5 0\n# another\n1 -1 0.25 -0.125\n\n-1 1 0.25 0.125\n";
        let f = parse_function(text).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f.get(&[1, -1]), Complex64::new(0.25, -0.125));
        let out = format_function(&f);
        assert!(out.starts_with("dim 2\n-1 1 "));
        assert_eq!(parse_function(&out).unwrap(), f);
    }

    #[test]
    fn exact_round_trip_of_irrational_values() {
        let v = 1.0 / (22.0 + 2.0 * 3f64.sqrt());
        let f = LatticeFunction::from_entries(1, [(vec![0], Complex64::new(v, -v / 3.0))]).unwrap();
        assert_eq!(parse_function(&format_function(&f)).unwrap(), f);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_function("dim 2\n0 0 1 0\n1 x 1 0\n").unwrap_err();
        assert!(matches!(e, LatconvError::Parse { line: 3, .. }), "{e}");
        let e = parse_function("# only\n0 0 1 0\n").unwrap_err();
        assert!(matches!(e, LatconvError::Parse { line: 2, .. }));
        let e = parse_function("dim 1\n0 1\n").unwrap_err();
        assert!(matches!(e, LatconvError::Parse { line: 2, .. }));
        assert!(parse_function("").is_err());
    }

    #[test]
    fn graymap_has_header_and_payload() {
        let f = LatticeFunction::from_real(2, [(vec![0, 0], 1.0), (vec![1, 1], 0.5)]).unwrap();
        let g = f.to_dense().unwrap();
        let mut buf = Vec::new();
        let (lo, hi) = write_graymap(&g, GrayChannel::Abs, &mut buf).unwrap();
        assert_eq!((lo, hi), (0.0, 1.0));
        assert!(buf.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(buf.len(), 11 + 4);
        // Top-left pixel is (0, 1), which is zero; bottom-left is (0, 0), the maximum.
        assert_eq!(&buf[11..], &[0, 128, 255, 0]);
    }
}
