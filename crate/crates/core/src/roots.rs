//! Bracketing root search used for the temperature calibration.

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

/// Finds a sign change of `f` on a logarithmic scan of `[lo, hi]`.
///
/// Returns the first adjacent pair `(a, b)` with `f(a) * f(b) <= 0`.
pub fn scan_log_bracket<F>(f: &mut F, lo: f64, hi: f64, points: usize) -> Result<Option<(f64, f64)>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let step = (ln_hi - ln_lo) / (points.max(2) - 1) as f64;
    let mut prev_x = lo;
    let mut prev_f = f(lo)?;
    for i in 1..points.max(2) {
        let x = if i + 1 == points.max(2) {
            hi
        } else {
            (ln_lo + step * i as f64).exp()
        };
        let fx = f(x)?;
        if prev_f == 0.0 {
            return Ok(Some((prev_x, prev_x)));
        }
        if prev_f.signum() != fx.signum() || fx == 0.0 {
            return Ok(Some((prev_x, x)));
        }
        prev_x = x;
        prev_f = fx;
    }
    Ok(None)
}

/// Illinois-modified regula falsi on `[a, b]`, falling back to bisection
/// whenever the secant step stalls. Stops when the bracket is narrower than
/// `rel_tol * |x|`.
pub fn illinois<F>(f: &mut F, mut a: f64, mut b: f64, rel_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(a);
    }
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket {
            target: 0.0,
            lo: fa.min(fb),
            hi: fa.max(fb),
        });
    }
    let mut side = 0i8;
    for _ in 0..MAX_ITER {
        let width = (b - a).abs();
        if width <= rel_tol * a.abs().max(b.abs()) {
            return Ok(0.5 * (a + b));
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        // Keep the step strictly inside the bracket.
        let margin = 1e-3 * width;
        if !c.is_finite() || c <= a.min(b) + margin || c >= a.max(b) - margin {
            c = 0.5 * (a + b);
        }
        let fc = f(c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NoConvergence { iterations: MAX_ITER })
}
