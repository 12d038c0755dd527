use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::diagnostics::PowerLedger;
use crate::error::{Error, Result};
use crate::integrator::Snapshot;

pub const LEDGER_CSV_HEADER: &str = "t,dt,newton_iters,H,E,qH,qE,QH,QE,bal";
pub const SNAPSHOT_CSV_HEADER: &str = "x,v,e,e_r";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so that `path` is either absent or complete.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(contents.as_bytes()).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

pub fn ledger_csv(ledger: &PowerLedger<f64>) -> String {
    let mut out = String::from(LEDGER_CSV_HEADER);
    out.push('\n');
    for e in ledger.entries() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            e.t, e.dt, e.newton_iters, e.hamiltonian, e.kinetic, e.q_h, e.q_e, e.cum_q_h, e.cum_q_e, e.balance
        );
    }
    out
}

pub fn snapshot_csv(nodes: &[f64], snap: &Snapshot<f64>) -> String {
    let mut out = String::from(SNAPSHOT_CSV_HEADER);
    out.push('\n');
    for (k, x) in nodes.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{}", x, snap.v[k], snap.e[k], snap.e_r[k]);
    }
    out
}

/// Writes `snapshot_NNNN.csv` per snapshot plus an index `snapshots.csv`
/// (`index,step,t,file`). Returns the written paths, index last.
pub fn write_snapshots(dir: &Path, nodes: &[f64], snaps: &[Snapshot<f64>]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::with_capacity(snaps.len() + 1);
    let mut index = String::from("index,step,t,file\n");
    for (k, s) in snaps.iter().enumerate() {
        let name = format!("snapshot_{k:04}.csv");
        let path = dir.join(&name);
        write_atomic(&path, &snapshot_csv(nodes, s))?;
        let _ = writeln!(index, "{k},{},{},{name}", s.step, s.t);
        paths.push(path);
    }
    let path = dir.join("snapshots.csv");
    write_atomic(&path, &index)?;
    paths.push(path);
    Ok(paths)
}
