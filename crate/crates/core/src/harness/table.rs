use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::sweep::{CellStatus, SweepCell, SweepResult};

pub const SWEEP_CSV_HEADER: &str = "alpha,beta,h,var,t_final,n_steps,termination";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Text,
}

impl TableFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Text => "txt",
        }
    }
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "text" => Ok(TableFormat::Text),
            other => Err(Error::Config(format!("unknown table format '{other}' (expected csv or text)"))),
        }
    }
}

pub fn emit_table(result: &SweepResult, format: TableFormat) -> String {
    match format {
        TableFormat::Csv => emit_csv(result),
        TableFormat::Text => emit_text(result),
    }
}

/// One row per cell. Floats use the shortest representation that parses back
/// to the same value.
pub fn emit_csv(result: &SweepResult) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for c in &result.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.alpha,
            c.beta,
            c.h,
            c.var,
            c.t_final,
            c.n_steps,
            c.status.label()
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<SweepResult> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == SWEEP_CSV_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "expected header '{SWEEP_CSV_HEADER}', found {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut cells = Vec::new();
    for (k, line) in lines.enumerate() {
        let f: Vec<&str> = line.trim().split(',').collect();
        let row = k + 2;
        if f.len() != 7 {
            return Err(Error::Parse(format!("line {row}: expected 7 fields, found {}", f.len())));
        }
        let num = |i: usize| -> Result<f64> {
            f[i].parse()
                .map_err(|_| Error::Parse(format!("line {row}: bad number '{}'", f[i])))
        };
        cells.push(SweepCell {
            alpha: num(0)?,
            beta: num(1)?,
            h: num(2)?,
            var: num(3)?,
            t_final: num(4)?,
            n_steps: f[5]
                .parse()
                .map_err(|_| Error::Parse(format!("line {row}: bad step count '{}'", f[5])))?,
            status: CellStatus::from_label(f[6])
                .ok_or_else(|| Error::Parse(format!("line {row}: unknown termination '{}'", f[6])))?,
        });
    }
    Ok(SweepResult { cells })
}

fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for v in values {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// One block per `α`: rows `β`, columns `h`, each entry `Var` over `t_f (steps)`.
pub fn emit_text(result: &SweepResult) -> String {
    const W: usize = 14;
    let alphas = distinct(result.cells.iter().map(|c| c.alpha));
    let mut out = String::new();
    for (k, &a) in alphas.iter().enumerate() {
        let block: Vec<&SweepCell> = result.cells.iter().filter(|c| c.alpha == a).collect();
        let betas = distinct(block.iter().map(|c| c.beta));
        let mut hs = distinct(block.iter().map(|c| c.h));
        hs.sort_by(f64::total_cmp);
        if k > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "alpha = {a}");
        let _ = write!(out, "{:>6} |", "beta");
        for h in &hs {
            let _ = write!(out, "{:>W$}", format!("{h:.1e}"));
        }
        out.push('\n');
        let _ = writeln!(out, "{}", "-".repeat(8 + W * hs.len()));
        for &b in &betas {
            let find = |h: f64| block.iter().find(|c| c.beta == b && c.h == h);
            let _ = write!(out, "{b:>6.1} |");
            for &h in &hs {
                let s = find(h).map_or(String::from("-"), |c| format!("{:.3e}", c.var));
                let _ = write!(out, "{s:>W$}");
            }
            out.push('\n');
            let _ = write!(out, "{:>6} |", "");
            for &h in &hs {
                let s = find(h).map_or(String::from("-"), |c| format!("{:.3} ({})", c.t_final, c.n_steps));
                let _ = write!(out, "{s:>W$}");
            }
            out.push('\n');
        }
    }
    out
}
