//! Energy functionals, power ledger, and analytic oracles.

mod characteristics;
mod front;
mod functionals;
mod ledger;

pub use characteristics::{
    characteristics_solution, rankine_hugoniot_speed, shock_dissipation, shock_formation_time,
    AffineProfile, Characteristics, GaussianPulse, InitialProfile, ShockDissipation,
    ShockFormation, ShockPredictor, ShockSample,
};
pub use front::{default_front_threshold, detect_front, Front};
pub use functionals::{dissipation_rates, hamiltonian, kinetic_energy, l2_distance};
pub use ledger::{balance_variation, LedgerEntry, PowerLedger};
