//! Parameter sweeps, config files and CSV/text serialization.

mod records;
mod settings;
mod sweep;
mod table;

pub use records::{
    ledger_csv, snapshot_csv, write_atomic, write_snapshots, LEDGER_CSV_HEADER, SNAPSHOT_CSV_HEADER,
};
pub use settings::Settings;
pub use sweep::{run_cell, run_sweep, run_sweep_with, CellStatus, SweepCell, SweepGrid, SweepResult};
pub use table::{emit_csv, emit_table, emit_text, parse_csv, TableFormat, SWEEP_CSV_HEADER};
