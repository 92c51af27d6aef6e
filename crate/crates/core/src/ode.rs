//! Classical fixed-step fourth-order Runge-Kutta for tuples of ring elements.

use num_complex::Complex64;

use crate::ncring::{NcRing, RingError};

/// `y + c k`, componentwise.
fn axpy<R: NcRing, const N: usize>(y: &[R; N], c: f64, k: &[R; N]) -> Result<[R; N], RingError> {
    let mut out = y.clone();
    for (o, ki) in out.iter_mut().zip(k) {
        *o = o.try_add(&ki.scale(Complex64::new(c, 0.0)))?;
    }
    Ok(out)
}

/// One RK4 step of `y' = f(t, y)`.
pub fn rk4_step<R, const N: usize, E>(
    t: f64,
    y: &[R; N],
    h: f64,
    f: &impl Fn(f64, &[R; N]) -> Result<[R; N], E>,
) -> Result<[R; N], E>
where
    R: NcRing,
    E: From<RingError>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1)?)?;
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2)?)?;
    let k4 = f(t + h, &axpy(y, h, &k3)?)?;
    let mut out = y.clone();
    for i in 0..N {
        let incr = k1[i]
            .try_add(&k2[i].scale(Complex64::new(2.0, 0.0)))?
            .try_add(&k3[i].scale(Complex64::new(2.0, 0.0)))?
            .try_add(&k4[i])?
            .scale(Complex64::new(h / 6.0, 0.0));
        out[i] = out[i].try_add(&incr)?;
    }
    Ok(out)
}
