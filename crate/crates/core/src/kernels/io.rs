use super::kernel::Kernel;
use crate::error::{Error, Result};
use std::io::{BufRead, Write};

/// Round-trippable text form of a real: 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// `s,t` header and values, then `x,y,value` rows for the nonzero entries.
pub fn write_kernel_csv(kernel: &Kernel<f64>, mut w: impl Write) -> Result<()> {
    writeln!(w, "s,t")?;
    writeln!(w, "{},{}", fmt_real(kernel.s()), fmt_real(kernel.t()))?;
    writeln!(w, "x,y,value")?;
    let m = kernel.dense();
    for x in 0..m.rows() {
        for (y, &v) in m.row(x).iter().enumerate() {
            if v != 0.0 {
                writeln!(w, "{x},{y},{}", fmt_real(v))?;
            }
        }
    }
    Ok(())
}

/// `(s, t, nonzeros)` from the kernel CSV format.
pub fn read_kernel_csv(r: impl BufRead) -> Result<(f64, f64, Vec<(usize, usize, f64)>)> {
    let bad = |line: &str| Error::InvalidConfig(format!("malformed kernel csv line: {line}"));
    let mut lines = r.lines();
    let mut next = || -> Result<String> { lines.next().ok_or_else(|| bad("<eof>"))?.map_err(Error::from) };
    if next()?.trim() != "s,t" {
        return Err(bad("missing s,t header"));
    }
    let st = next()?;
    let (s, t) = st.split_once(',').ok_or_else(|| bad(&st))?;
    let s: f64 = s.trim().parse().map_err(|_| bad(&st))?;
    let t: f64 = t.trim().parse().map_err(|_| bad(&st))?;
    if next()?.trim() != "x,y,value" {
        return Err(bad("missing x,y,value header"));
    }
    let mut entries = Vec::new();
    while let Ok(line) = next() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(bad(&line));
        }
        let x = parts[0].parse().map_err(|_| bad(&line))?;
        let y = parts[1].parse().map_err(|_| bad(&line))?;
        let v = parts[2].parse().map_err(|_| bad(&line))?;
        entries.push((x, y, v));
    }
    Ok((s, t, entries))
}

/// `x,value` rows.
pub fn write_measure_csv(values: &[f64], mut w: impl Write) -> Result<()> {
    writeln!(w, "x,value")?;
    for (x, &v) in values.iter().enumerate() {
        writeln!(w, "{x},{}", fmt_real(v))?;
    }
    Ok(())
}
