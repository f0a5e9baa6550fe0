use super::density::Density;
use super::quad::{integrate, QuadConfig};
use crate::Result;

/// Below this value of `sqrt(f) + sqrt(g)` the direct form is used.
const ROOT_SUM_FLOOR: f64 = 1e-300;

pub(crate) fn union_breakpoints(f: &Density, g: &Density) -> Vec<f64> {
    let mut b: Vec<f64> = f.breakpoints().iter().chain(g.breakpoints()).copied().collect();
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// `int_0^1 |f - g|`, i.e. twice the total variation of one observation.
pub fn l1_distance(f: &Density, g: &Density, cfg: &QuadConfig) -> Result<f64> {
    let bps = union_breakpoints(f, g);
    integrate(|x| (f.eval(x) - g.eval(x)).abs(), 0.0, 1.0, cfg, &bps)
}

/// `int_0^1 (sqrt f - sqrt g)^2`, the squared Hellinger distance of one
/// observation.
///
/// Evaluated as `(f - g)^2 / (sqrt f + sqrt g)^2`, which avoids cancellation
/// when the two densities nearly agree.
pub fn hellinger_sq_densities(f: &Density, g: &Density, cfg: &QuadConfig) -> Result<f64> {
    let bps = union_breakpoints(f, g);
    integrate(|x| root_gap_sq(f.eval(x), g.eval(x)), 0.0, 1.0, cfg, &bps)
}

#[inline]
pub(crate) fn root_gap_sq(a: f64, b: f64) -> f64 {
    let (ra, rb) = (a.max(0.0).sqrt(), b.max(0.0).sqrt());
    let s = ra + rb;
    if s > ROOT_SUM_FLOOR {
        let d = a - b;
        d * d / (s * s)
    } else {
        (ra - rb) * (ra - rb)
    }
}
