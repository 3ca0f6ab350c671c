//! Central finite-difference gradient checking.

use crate::error::{Error, Result};

use super::{Tape, Tensor, Var};

/// Compares the tape gradient of a scalar function against central
/// differences at `point`.
///
/// Returns `max_i |analytic_i − numeric_i| / max(1, |numeric_i|)`. The
/// function must build its graph from the supplied input variable only;
/// anything else it places on the tape should be a constant. Points at the
/// kink of `relu`/`leaky_relu` are not meaningful and should be avoided by
/// the caller.
pub fn finite_diff_check<F>(f: F, point: &Tensor, h: f64) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    let mut tape = Tape::new();
    let x = tape.param(point.clone());
    let y = f(&mut tape, x)?;
    let analytic = tape.backward(y)?.wrt(x);

    let eval = |p: Tensor| -> Result<f64> {
        let mut tape = Tape::new();
        let x = tape.constant(p);
        let y = f(&mut tape, x)?;
        let v = tape.value(y).item();
        if !v.is_finite() {
            return Err(Error::NonFinite {
                op: "finite_diff_check",
            });
        }
        Ok(v)
    };

    let mut worst = 0.0f64;
    for i in 0..point.len() {
        let mut plus = point.clone();
        plus.data_mut()[i] += h;
        let mut minus = point.clone();
        minus.data_mut()[i] -= h;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * h);
        let err = (analytic.data()[i] - numeric).abs() / numeric.abs().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}
