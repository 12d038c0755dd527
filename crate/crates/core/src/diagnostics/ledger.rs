use crate::fem1d::Mesh1D;
use crate::phsystem::State;
use crate::scalar::Real;

use super::functionals::{dissipation_rates, hamiltonian, kinetic_energy};

/// One accepted time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry<T> {
    pub t: T,
    pub dt: T,
    pub newton_iters: usize,
    pub hamiltonian: T,
    pub kinetic: T,
    pub q_h: T,
    pub q_e: T,
    /// `∫ q_H dt`, trapezoidal on the accepted time grid.
    pub cum_q_h: T,
    pub cum_q_e: T,
    /// `H(t) + Q_H(t) − H(t₀)`
    pub balance: T,
}

/// Time series of energy functionals and dissipation over a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerLedger<T> {
    entries: Vec<LedgerEntry<T>>,
}

impl<T: Real> PowerLedger<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn entries(&self) -> &[LedgerEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last(&self) -> Option<&LedgerEntry<T>> {
        self.entries.last()
    }

    /// Appends a time level from raw functional values.
    ///
    /// Panics if `t` does not strictly increase.
    pub fn push(&mut self, t: T, newton_iters: usize, h: T, e: T, q_h: T, q_e: T) {
        let half = T::lit(0.5);
        let entry = match self.entries.last() {
            None => LedgerEntry {
                t,
                dt: T::zero(),
                newton_iters,
                hamiltonian: h,
                kinetic: e,
                q_h,
                q_e,
                cum_q_h: T::zero(),
                cum_q_e: T::zero(),
                balance: T::zero(),
            },
            Some(prev) => {
                assert!(t > prev.t, "ledger times must increase ({} after {})", t, prev.t);
                let dt = t - prev.t;
                let cum_q_h = prev.cum_q_h + half * dt * (prev.q_h + q_h);
                let cum_q_e = prev.cum_q_e + half * dt * (prev.q_e + q_e);
                LedgerEntry {
                    t,
                    dt,
                    newton_iters,
                    hamiltonian: h,
                    kinetic: e,
                    q_h,
                    q_e,
                    cum_q_h,
                    cum_q_e,
                    balance: h + cum_q_h - self.entries[0].hamiltonian,
                }
            }
        };
        self.entries.push(entry);
    }

    /// Evaluates all functionals of a consistent state and appends them.
    pub fn record(&mut self, mesh: &Mesh1D<T>, state: &State<T>, newton_iters: usize) {
        let (q_h, q_e) = dissipation_rates(mesh, state);
        self.push(
            state.t,
            newton_iters,
            hamiltonian(mesh, &state.v),
            kinetic_energy(mesh, &state.v),
            q_h,
            q_e,
        );
    }

    /// `∫ q_H dt` restricted to `[t_start, t_end]` (linear interpolation of the
    /// rate inside the straddling steps).
    pub fn hamiltonian_dissipation_between(&self, t_start: T, t_end: T) -> T {
        let half = T::lit(0.5);
        let mut total = T::zero();
        for w in self.entries.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let lo = a.t.max(t_start);
            let hi = b.t.min(t_end);
            if hi <= lo {
                continue;
            }
            let rate = |t: T| a.q_h + (b.q_h - a.q_h) * (t - a.t) / (b.t - a.t);
            total += half * (hi - lo) * (rate(lo) + rate(hi));
        }
        total
    }
}

/// `Var = max_n |H(t_n) + Q_H(t_n) − H(t₀)| / |H(t₀)|`, the energetic stability indicator.
pub fn balance_variation<T: Real>(ledger: &PowerLedger<T>) -> T {
    let Some(first) = ledger.entries.first() else {
        return T::zero();
    };
    let denom = first.hamiltonian.abs().max(T::min_positive_value());
    ledger
        .entries
        .iter()
        .fold(T::zero(), |m, e| m.max(e.balance.abs()))
        / denom
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_entry_has_zero_variation() {
        let mut l = PowerLedger::new();
        l.push(0.0, 0, 0.3, 0.1, 0.0, 0.0);
        assert_eq!(balance_variation(&l), 0.0);
    }

    #[test]
    fn cumulative_dissipation_is_trapezoidal() {
        let mut l = PowerLedger::<f64>::new();
        l.push(0.0, 0, 1.0, 1.0, 2.0, 1.0);
        l.push(0.5, 3, 0.0, 1.0, 4.0, 1.0);
        let e = l.last().unwrap();
        assert_eq!(e.cum_q_h, 1.5);
        assert_eq!(e.cum_q_e, 0.5);
        assert_eq!(e.balance, 0.5);
        assert_eq!(balance_variation(&l), 0.5);
        assert!((l.hamiltonian_dissipation_between(0.25, 0.5) - 0.25 * 3.5).abs() < 1e-15);
    }

    #[test]
    #[should_panic]
    fn times_must_increase() {
        let mut l = PowerLedger::new();
        l.push(0.1, 0, 1.0, 1.0, 0.0, 0.0);
        l.push(0.1, 0, 1.0, 1.0, 0.0, 0.0);
    }
}
