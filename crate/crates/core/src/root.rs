//! Bracketed scalar root finding (Brent's method) with geometric bracket expansion.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_ITER: usize = 300;

/// Finds a root of `f` in `[a, b]`, which must bracket a sign change.
///
/// Terminates when the bracket half-width drops below
/// `max(rtol, 2 eps) * |x| + tiny` or `f` evaluates to exactly zero.
pub fn brent<S, F>(mut f: F, a: S, b: S, rtol: S) -> Result<S>
where
    S: Scalar,
    F: FnMut(S) -> S,
{
    let two = S::lit(2.0);
    let half = S::lit(0.5);
    let tiny = S::min_positive_value() * S::lit(4.0);

    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::Root(format!("non-finite endpoint value f({a})={fa}, f({b})={fb}")));
    }
    if fa == S::zero() {
        return Ok(a);
    }
    if fb == S::zero() {
        return Ok(b);
    }
    if (fa > S::zero()) == (fb > S::zero()) {
        return Err(Error::Root(format!("no sign change on [{a}, {b}]: f(a)={fa}, f(b)={fb}")));
    }

    let (mut c, mut fc) = (b, fb);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if (fb > S::zero()) == (fc > S::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        // never ask for less than a couple of ulps, or the minimum step stalls
        let tol = (two * S::epsilon()).max(rtol) * b.abs() + tiny;
        let m = half * (c - b);
        if m.abs() <= tol || fb == S::zero() {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            // inverse quadratic interpolation, falling back to secant
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = S::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - S::one()));
                q = (qa - S::one()) * (r - S::one()) * (s - S::one());
            }
            if p > S::zero() {
                q = -q;
            } else {
                p = -p;
            }
            let min1 = S::lit(3.0) * m * q - (tol * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol {
            b + d
        } else if m > S::zero() {
            b + tol
        } else {
            b - tol
        };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::Root(format!("non-finite value f({b})={fb}")));
        }
    }
    Err(Error::Root("maximum iterations reached".into()))
}

/// Widens `[lo, hi]` geometrically (dividing `lo`, multiplying `hi` by
/// `factor`) until `f` changes sign, staying inside `[floor, ceil]`.
pub fn expand_bracket<S, F>(f: &mut F, mut lo: S, mut hi: S, factor: S, floor: S, ceil: S) -> Option<(S, S)>
where
    S: Scalar,
    F: FnMut(S) -> S,
{
    loop {
        let (flo, fhi) = (f(lo), f(hi));
        if flo.is_finite() && fhi.is_finite() && (flo > S::zero()) != (fhi > S::zero()) {
            return Some((lo, hi));
        }
        if lo <= floor && hi >= ceil {
            return None;
        }
        lo = (lo / factor).max(floor);
        hi = (hi * factor).min(ceil);
    }
}

/// Default search window for positive roots: `[1e-12, 1e12]`, expandable to
/// the representable range of the scalar.
pub fn find_positive_root<S, F>(mut f: F) -> Result<S>
where
    S: Scalar,
    F: FnMut(S) -> S,
{
    let floor = S::min_positive_value().sqrt();
    let ceil = S::max_value().sqrt();
    let (lo, hi) = expand_bracket(&mut f, S::lit(1e-12), S::lit(1e12), S::lit(1e3), floor, ceil)
        .ok_or_else(|| Error::Root("could not bracket a sign change".into()))?;
    brent(f, lo, hi, S::root_rtol())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let r: f64 = brent(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn f32_cubic() {
        let r: f32 = brent(|x| x * x * x - x - 1.0, 1.0, 2.0, 1e-6).unwrap();
        assert!((r - 1.324_718).abs() < 1e-5);
    }

    #[test]
    fn tolerance_below_precision_still_converges() {
        let r: f32 = brent(|x| x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f32.sqrt()).abs() < 1e-6);
        let r: f64 = brent(|x: f64| x.ln() - 3.0, 1.0, 100.0, 0.0).unwrap();
        assert!((r - 3f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn no_sign_change() {
        let r = brent(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12);
        assert!(matches!(r, Err(Error::Root(_))));
    }

    #[test]
    fn positive_root_far_out() {
        let r: f64 = find_positive_root(|x: f64| 1e20 - x).unwrap();
        assert!((r / 1e20 - 1.0).abs() < 1e-9);
        let r: f64 = find_positive_root(|x: f64| x - 1e-20).unwrap();
        assert!((r / 1e-20 - 1.0).abs() < 1e-9);
    }
}
