//! Method-of-characteristics oracles for `∂ₜv + ∂ₓ(v²/2) = 0`.
//!
//! Before the first shock the solution is `v(t, x) = v₀(ξ)` with
//! `ξ + t v₀(ξ) = x`. After it, the foot points fold over and the shock
//! position follows the Rankine–Hugoniot speed fed by the outermost branches.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Initial velocity profile with a known derivative.
pub trait InitialProfile<T: Real>: Sync {
    fn value(&self, x: T) -> T;
    fn slope(&self, x: T) -> T;
}

/// `amplitude · exp(−sharpness (x − center)²)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPulse<T> {
    pub amplitude: T,
    pub center: T,
    pub sharpness: T,
}

impl<T: Real> Default for GaussianPulse<T> {
    /// `exp(−50 (x − 1/2)²)`
    fn default() -> Self {
        Self {
            amplitude: T::one(),
            center: T::lit(0.5),
            sharpness: T::lit(50.0),
        }
    }
}

impl<T: Real> InitialProfile<T> for GaussianPulse<T> {
    fn value(&self, x: T) -> T {
        let d = x - self.center;
        self.amplitude * (-self.sharpness * d * d).exp()
    }

    fn slope(&self, x: T) -> T {
        let d = x - self.center;
        -T::lit(2.0) * self.sharpness * d * self.value(x)
    }
}

/// `intercept + gradient · x`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineProfile<T> {
    pub intercept: T,
    pub gradient: T,
}

impl<T: Real> InitialProfile<T> for AffineProfile<T> {
    fn value(&self, x: T) -> T {
        self.intercept + self.gradient * x
    }

    fn slope(&self, _x: T) -> T {
        self.gradient
    }
}

/// Time and foot point of the first gradient catastrophe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockFormation<T> {
    /// `t* = −1 / min v₀'`
    pub time: T,
    /// Foot point `ξ*` where `v₀'` is most negative.
    pub foot: T,
    /// Position `ξ* + t* v₀(ξ*)` where the shock appears.
    pub position: T,
}

const SLOPE_SAMPLES: usize = 4000;

/// `t* = −1 / min_{[0,1]} v₀'` by dense sampling followed by golden-section refinement.
pub fn shock_formation_time<T: Real>(profile: &impl InitialProfile<T>) -> Result<ShockFormation<T>> {
    let step = T::one() / T::from_count(SLOPE_SAMPLES);
    let (mut k_min, mut s_min) = (0, profile.slope(T::zero()));
    for k in 1..=SLOPE_SAMPLES {
        let s = profile.slope(T::from_count(k) * step);
        if s < s_min {
            k_min = k;
            s_min = s;
        }
    }
    let lo = T::from_count(k_min.saturating_sub(1)) * step;
    let hi = (T::from_count(k_min + 1) * step).min(T::one());
    let foot = golden_section_min(|x| profile.slope(x), lo, hi);
    let min_slope = profile.slope(foot).min(s_min);
    if !(min_slope < T::zero()) {
        return Err(Error::NoShock);
    }
    let time = -T::one() / min_slope;
    Ok(ShockFormation {
        time,
        foot,
        position: foot + time * profile.value(foot),
    })
}

fn golden_section_min<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T) -> T {
    let ratio = T::lit(0.618_033_988_749_894_9);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= T::epsilon() * (T::one() + a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    T::lit(0.5) * (a + b)
}

/// Pre-shock exact solution of the inviscid equation for a fixed initial profile.
pub struct Characteristics<'a, T, P> {
    profile: &'a P,
    shock_time: Option<T>,
}

impl<'a, T: Real, P: InitialProfile<T>> Characteristics<'a, T, P> {
    pub fn new(profile: &'a P) -> Self {
        let shock_time = shock_formation_time(profile).ok().map(|s| s.time);
        Self {
            profile,
            shock_time,
        }
    }

    /// `None` when the profile never steepens.
    pub fn shock_time(&self) -> Option<T> {
        self.shock_time
    }

    /// Foot point `ξ` with `ξ + t v₀(ξ) = x`.
    pub fn foot_point(&self, t: T, x: T) -> Result<T> {
        if t < T::zero() {
            return Err(Error::Domain(format!("negative time {t}")));
        }
        if let Some(ts) = self.shock_time {
            if t >= ts {
                return Err(Error::Domain(format!(
                    "t = {t} is past the shock formation time {ts}"
                )));
            }
        }
        Ok(monotone_root(|xi| xi + t * self.profile.value(xi), |xi| T::one() + t * self.profile.slope(xi), x, x))
    }

    /// `v(t, x)`
    pub fn velocity(&self, t: T, x: T) -> Result<T> {
        Ok(self.profile.value(self.foot_point(t, x)?))
    }
}

/// Convenience wrapper around [`Characteristics::velocity`].
pub fn characteristics_solution<T: Real>(profile: &impl InitialProfile<T>, t: T, x: T) -> Result<T> {
    Characteristics::new(profile).velocity(t, x)
}

/// Solves `g(ξ) = target` for increasing `g`, starting the bracket search at
/// `guess`. Safeguarded Newton: falls back to bisection whenever the Newton
/// iterate leaves the bracket.
fn monotone_root<T: Real>(g: impl Fn(T) -> T, dg: impl Fn(T) -> T, target: T, guess: T) -> T {
    let f = |xi: T| g(xi) - target;
    let mut width = T::lit(1e-3);
    let (mut lo, mut hi) = (guess, guess);
    let mut f_lo = f(lo);
    let mut f_hi = f_lo;
    while f_lo > T::zero() {
        lo -= width;
        width *= T::lit(2.0);
        f_lo = f(lo);
    }
    width = T::lit(1e-3);
    while f_hi < T::zero() {
        hi += width;
        width *= T::lit(2.0);
        f_hi = f(hi);
    }
    if f_lo == T::zero() {
        return lo;
    }
    if f_hi == T::zero() {
        return hi;
    }
    let mut xi = T::lit(0.5) * (lo + hi);
    for _ in 0..200 {
        let fx = f(xi);
        if fx == T::zero() {
            return xi;
        }
        if fx < T::zero() {
            lo = xi;
        } else {
            hi = xi;
        }
        let d = dg(xi);
        let newton = xi - fx / d;
        xi = if d > T::zero() && newton > lo && newton < hi {
            newton
        } else {
            T::lit(0.5) * (lo + hi)
        };
        if hi - lo <= T::epsilon() * (T::one() + xi.abs()) {
            break;
        }
    }
    xi
}

/// Rankine–Hugoniot speed of a Burgers shock: `(v_l + v_r)/2`.
pub fn rankine_hugoniot_speed<T: Real>(v_left: T, v_right: T) -> T {
    T::lit(0.5) * (v_left + v_right)
}

/// Instantaneous contributions of a shock to the energy balances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockDissipation<T> {
    /// `(v_r − v_l)³ / 12`, added to `dE/dt`.
    pub kinetic: T,
    /// `(v_r − v_l)³ (v_r + v_l) / 24`, added to `dH/dt`.
    pub hamiltonian: T,
}

pub fn shock_dissipation<T: Real>(v_left: T, v_right: T) -> ShockDissipation<T> {
    let jump = v_right - v_left;
    let cube = jump * jump * jump;
    ShockDissipation {
        kinetic: cube / T::lit(12.0),
        hamiltonian: cube * (v_right + v_left) / T::lit(24.0),
    }
}

/// One point of the predicted inviscid shock trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockSample<T> {
    pub t: T,
    pub position: T,
    pub v_left: T,
    pub v_right: T,
    /// `∫_{t*}^{t} −dH_shock dt`, the Hamiltonian removed by the shock so far.
    pub cum_hamiltonian_loss: T,
}

/// Tracks the inviscid shock born from a smooth profile, feeding the
/// Rankine–Hugoniot ODE with the outermost characteristic branches.
pub struct ShockPredictor<'a, T, P> {
    profile: &'a P,
    formation: ShockFormation<T>,
    scan_lo: T,
    scan_hi: T,
    scan_points: usize,
}

impl<'a, T: Real, P: InitialProfile<T>> ShockPredictor<'a, T, P> {
    pub fn new(profile: &'a P) -> Result<Self> {
        Ok(Self {
            profile,
            formation: shock_formation_time(profile)?,
            scan_lo: T::lit(-1.0),
            scan_hi: T::lit(2.0),
            scan_points: 6000,
        })
    }

    pub fn formation(&self) -> ShockFormation<T> {
        self.formation
    }

    /// Left and right edge states at `(t, x)`: values carried by the smallest
    /// and the largest foot point reaching `x`.
    pub fn edge_states(&self, t: T, x: T) -> (T, T) {
        let f = |xi: T| xi + t * self.profile.value(xi) - x;
        let step = (self.scan_hi - self.scan_lo) / T::from_count(self.scan_points);
        let mut roots: Vec<T> = Vec::with_capacity(3);
        let mut a = self.scan_lo;
        let mut fa = f(a);
        for k in 1..=self.scan_points {
            let b = self.scan_lo + T::from_count(k) * step;
            let fb = f(b);
            if fa == T::zero() {
                roots.push(a);
            } else if fa * fb < T::zero() {
                roots.push(bisect(f, a, b));
            }
            a = b;
            fa = fb;
        }
        match (roots.first(), roots.last()) {
            (Some(&l), Some(&r)) => (self.profile.value(l), self.profile.value(r)),
            _ => {
                let v = self.profile.value(x);
                (v, v)
            }
        }
    }

    /// Integrates the shock position from `t*` to `t_end` with Heun steps of
    /// size `dt` and accumulates the Hamiltonian shock loss.
    pub fn trajectory(&self, t_end: T, dt: T) -> Vec<ShockSample<T>> {
        let mut t = self.formation.time;
        let mut x = self.formation.position;
        let (vl, vr) = self.edge_states(t, x);
        let mut out = vec![ShockSample {
            t,
            position: x,
            v_left: vl,
            v_right: vr,
            cum_hamiltonian_loss: T::zero(),
        }];
        let half = T::lit(0.5);
        while t < t_end {
            let step = dt.min(t_end - t);
            let prev = *out.last().unwrap();
            let s0 = rankine_hugoniot_speed(prev.v_left, prev.v_right);
            let (pl, pr) = self.edge_states(t + step, x + step * s0);
            let s1 = rankine_hugoniot_speed(pl, pr);
            x += half * step * (s0 + s1);
            t += step;
            let (vl, vr) = self.edge_states(t, x);
            let loss0 = -shock_dissipation(prev.v_left, prev.v_right).hamiltonian;
            let loss1 = -shock_dissipation(vl, vr).hamiltonian;
            out.push(ShockSample {
                t,
                position: x,
                v_left: vl,
                v_right: vr,
                cum_hamiltonian_loss: prev.cum_hamiltonian_loss + half * step * (loss0 + loss1),
            });
        }
        out
    }
}

fn bisect<T: Real>(f: impl Fn(T) -> T, mut a: T, mut b: T) -> T {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = T::lit(0.5) * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == T::zero() {
            return m;
        }
        if (fm < T::zero()) == (fa < T::zero()) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    T::lit(0.5) * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> AffineProfile<f64> {
        AffineProfile {
            intercept: 1.0,
            gradient: -1.0,
        }
    }

    #[test]
    fn identity_at_time_zero() {
        let g = GaussianPulse::default();
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            assert!((characteristics_solution(&g, 0.0, x).unwrap() - g.value(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn ramp_has_closed_form_solution() {
        let p = ramp();
        for &t in &[0.1, 0.5, 0.9] {
            for k in 0..=10 {
                let x = k as f64 / 10.0;
                let got = characteristics_solution(&p, t, x).unwrap();
                assert!((got - (1.0 - x) / (1.0 - t)).abs() < 1e-12, "t={t} x={x}");
            }
        }
    }

    #[test]
    fn past_shock_time_is_domain_error() {
        let p = ramp();
        assert!(matches!(characteristics_solution(&p, 1.0, 0.3), Err(Error::Domain(_))));
    }

    #[test]
    fn shock_times() {
        let ts = shock_formation_time(&ramp()).unwrap().time;
        assert!((ts - 1.0).abs() < 1e-14);

        let g = GaussianPulse::<f64>::default();
        let s = shock_formation_time(&g).unwrap();
        let expected = 0.5f64.exp() / 10.0;
        assert!((s.time - expected).abs() < 1e-10, "{} vs {}", s.time, expected);
        assert!((s.foot - 0.6).abs() < 1e-6);

        let up = AffineProfile {
            intercept: 0.0,
            gradient: 1.0,
        };
        assert!(matches!(shock_formation_time(&up), Err(Error::NoShock)));
    }

    #[test]
    fn gaussian_residual_check() {
        let g = GaussianPulse::<f64>::default();
        let c = Characteristics::new(&g);
        for k in 0..1000 {
            let x = k as f64 / 999.0;
            let xi = c.foot_point(0.1, x).unwrap();
            assert!((xi + 0.1 * g.value(xi) - x).abs() <= 1e-12);
        }
    }

    #[test]
    fn rankine_hugoniot_matches_flux_quotient() {
        assert_eq!(rankine_hugoniot_speed(1.0, 0.0), 0.5);
        assert_eq!(rankine_hugoniot_speed(0.3, 0.3), 0.3);
        let (vl, vr) = (0.9f64, 0.1f64);
        let quotient = (vr * vr / 2.0 - vl * vl / 2.0) / (vr - vl);
        assert!((rankine_hugoniot_speed(vl, vr) - quotient).abs() < 1e-15);
    }

    #[test]
    fn shock_dissipation_values() {
        let s = shock_dissipation(1.0f64, 0.0);
        assert!((s.kinetic + 1.0 / 12.0).abs() < 1e-16);
        assert!((s.hamiltonian + 1.0 / 24.0).abs() < 1e-16);
        assert_eq!(shock_dissipation(0.4, 0.4), ShockDissipation { kinetic: 0.0, hamiltonian: 0.0 });
        assert!((shock_dissipation(0.5f64, 0.1).kinetic + 0.064 / 12.0).abs() < 1e-16);
    }

    #[test]
    fn predicted_shock_moves_right_and_dissipates() {
        let g = GaussianPulse::<f64>::default();
        let p = ShockPredictor::new(&g).unwrap();
        let traj = p.trajectory(0.4, 1e-3);
        let last = traj.last().unwrap();
        assert!((last.t - 0.4).abs() < 1e-12);
        assert!(last.position > p.formation().position);
        assert!(last.v_left > last.v_right);
        assert!(last.cum_hamiltonian_loss > 0.0);
        assert!(traj.windows(2).all(|w| w[1].cum_hamiltonian_loss >= w[0].cum_hamiltonian_loss));
    }
}
