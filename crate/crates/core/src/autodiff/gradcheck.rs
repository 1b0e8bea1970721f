//! Central finite-difference comparison against tape gradients.

use super::{ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result};

pub const FD_STEP: f64 = 1e-5;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-4)
}

/// Largest relative error between the tape gradient of `f` at `x` and
/// central differences. `f` is evaluated on an evaluation-mode tape.
pub fn gradient_check<F>(f: F, x: &Tensor) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    let eval = |x: &Tensor| -> Result<f64> {
        let mut t = Tape::eval();
        let v = t.input(x.clone())?;
        let out = f(&mut t, v)?;
        scalar(&t, out)
    };
    let mut t = Tape::eval();
    let v = t.input(x.clone())?;
    let out = f(&mut t, v)?;
    scalar(&t, out)?;
    let analytic = t.backward(out)?.wrt(v);

    let mut worst: f64 = 0.0;
    let mut xp = x.clone();
    for k in 0..x.len() {
        let orig = xp.data()[k];
        xp.data_mut()[k] = orig + FD_STEP;
        let fp = eval(&xp)?;
        xp.data_mut()[k] = orig - FD_STEP;
        let fm = eval(&xp)?;
        xp.data_mut()[k] = orig;
        let num = (fp - fm) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(analytic.data()[k], num));
    }
    Ok(worst)
}

/// As [`gradient_check`], perturbing every value of every parameter in `store`.
pub fn gradient_check_params<F>(f: F, store: &ParamStore) -> Result<f64>
where
    F: Fn(&mut Tape, &ParamStore) -> Result<Var>,
{
    let eval = |s: &ParamStore| -> Result<f64> {
        let mut t = Tape::eval();
        let out = f(&mut t, s)?;
        scalar(&t, out)
    };
    let mut t = Tape::eval();
    let out = f(&mut t, store)?;
    scalar(&t, out)?;
    let grads = t.backward(out)?;

    let mut worst: f64 = 0.0;
    let mut s = store.clone();
    for id in store.ids() {
        let analytic = grads
            .param(id)
            .unwrap_or_else(|| Tensor::zeros(store.get(id).rows(), store.get(id).cols()));
        for k in 0..store.get(id).len() {
            let orig = s.get(id).data()[k];
            s.get_mut(id).data_mut()[k] = orig + FD_STEP;
            let fp = eval(&s)?;
            s.get_mut(id).data_mut()[k] = orig - FD_STEP;
            let fm = eval(&s)?;
            s.get_mut(id).data_mut()[k] = orig;
            let num = (fp - fm) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(analytic.data()[k], num));
        }
    }
    Ok(worst)
}

fn scalar(t: &Tape, v: Var) -> Result<f64> {
    let x = t.value(v);
    if x.shape() != [1, 1] {
        return Err(Error::shape("gradient_check", format!("output must be 1x1, got {:?}", x.shape())));
    }
    if !x.item().is_finite() {
        return Err(Error::NonFinite("gradient_check"));
    }
    Ok(x.item())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_squares() {
        let x = Tensor::new(2, 3, vec![0.3, -1.2, 2.0, 0.7, -0.1, 1.1]).unwrap();
        let e = gradient_check(|t, v| { let s = t.square(v)?; t.sum(s) }, &x).unwrap();
        assert!(e < 1e-6, "{e}");
    }

    #[test]
    fn linear_is_exact() {
        let x = Tensor::row_vector(vec![1.0, 2.0, -3.0]);
        let e = gradient_check(|t, v| { let s = t.scale(v, 2.5)?; t.sum(s) }, &x).unwrap();
        assert!(e < 1e-8, "{e}");
    }
}
