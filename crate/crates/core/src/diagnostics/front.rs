use crate::error::{Error, Result};
use crate::fem1d::Mesh1D;
use crate::scalar::Real;

use super::characteristics::InitialProfile;

/// Samples per element when searching for the steepest descent of `v_d`.
const SAMPLES_PER_ELEMENT: usize = 20;
/// Edge states are read this many viscous-layer widths away from the front.
const EDGE_OFFSET_LAYERS: f64 = 5.0;

/// A steep internal layer of `v_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Front<T> {
    pub position: T,
    pub v_left: T,
    pub v_right: T,
    /// Most negative slope found.
    pub slope: T,
}

/// `10 · max |v₀'|` over `[0, 1]`.
pub fn default_front_threshold<T: Real>(profile: &impl InitialProfile<T>) -> T {
    let n = 4000;
    let max = (0..=n)
        .map(|k| profile.slope(T::from_count(k) / T::from_count(n)).abs())
        .fold(T::zero(), T::max);
    T::lit(10.0) * max
}

/// Locates the steepest negative slope of `v_d` on a grid ten times finer than
/// the node spacing, and reads edge states `5ν / max|v|` on either side.
///
/// The first and last elements are skipped: the homogeneous trace forces an
/// artificial drop there whenever `v` does not vanish at the boundary.
pub fn detect_front<T: Real>(mesh: &Mesh1D<T>, v: &[T], nu: T, threshold: T) -> Result<Front<T>> {
    let n = mesh.n_elems();
    let h = mesh.h();
    let samples = SAMPLES_PER_ELEMENT;
    let mut best = (T::zero(), T::infinity());
    let (first, last) = if n > 2 { (1, n - 1) } else { (0, n) };
    for elem in first..last {
        for k in 0..samples {
            let x = (T::from_count(elem) + T::from_count(k) / T::from_count(samples)) * h;
            let s = mesh.eval_slope(v, x);
            if s < best.1 {
                best = (x, s);
            }
        }
    }
    let (position, slope) = best;
    if !(-slope > threshold) {
        return Err(Error::NoFront {
            max_slope: (-slope).max(T::zero()).to_f64_lossy(),
            threshold: threshold.to_f64_lossy(),
        });
    }
    let vmax = v.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    let offset = T::lit(EDGE_OFFSET_LAYERS) * nu / vmax.max(T::min_positive_value());
    let xl = (position - offset).max(T::zero());
    let xr = (position + offset).min(T::one());
    Ok(Front {
        position,
        v_left: mesh.eval(v, xl),
        v_right: mesh.eval(v, xr),
        slope,
    })
}
