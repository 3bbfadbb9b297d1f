use super::{Tape, Tensor, Var};
use crate::error::{Error, Result};

/// Outcome of comparing tape gradients against central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(parameter index, coordinate)` of the worst coordinate.
    pub worst: Option<(usize, usize)>,
    /// `(analytic, numeric)` at the worst coordinate.
    pub worst_values: Option<(f64, f64)>,
    pub coordinates: usize,
}

/// Central-difference check of the gradients recorded by `f`.
///
/// Uses the fourth-order stencil
/// `(8(f(x+h) − f(x−h)) − (f(x+2h) − f(x−2h))) / 12h`, which tolerates a
/// step large enough to keep roundoff far below small gradients.
///
/// `f` receives a fresh tape and one leaf per entry of `params` and must
/// return a scalar. Each coordinate's error is normalized as
/// `|a - n| / (|a| + |n| + 1e-12)`.
pub fn finite_difference_check<F>(f: F, params: &[Tensor<f64>], eps: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    check_with_fault(f, params, eps, None)
}

#[doc(hidden)]
pub fn check_with_fault<F>(
    f: F,
    params: &[Tensor<f64>],
    eps: f64,
    fault: Option<&'static str>,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    check_gradients_against(
        &f,
        |_, t: &mut Tape<f64>, v: &[Var]| f(t, v),
        params,
        eps,
        fault,
    )
}

/// Compares the tape gradient of `f` for parameter `i` against central
/// differences of `reference(i, ..)`.
///
/// This is for graphs whose backward pass deliberately differs from the
/// derivative of their forward value, such as those containing a
/// gradient-reversal layer: the reference is the scalar each parameter
/// group actually descends.
pub fn check_gradients_against<F, R>(
    f: F,
    reference: R,
    params: &[Tensor<f64>],
    eps: f64,
    fault: Option<&'static str>,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
    R: Fn(usize, &mut Tape<f64>, &[Var]) -> Result<Var>,
{
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::argument(
            "finite_difference_check",
            "eps must be positive",
        ));
    }
    let fresh = |ps: &[Tensor<f64>]| -> (Tape<f64>, Vec<Var>) {
        let mut tape = Tape::new();
        if let Some(op) = fault {
            tape.inject_fault(op);
        }
        let vars = ps.iter().map(|p| tape.leaf(p.clone())).collect();
        (tape, vars)
    };
    let value = |pi: usize, ps: &[Tensor<f64>]| -> Result<f64> {
        let (mut tape, vars) = fresh(ps);
        let root = reference(pi, &mut tape, &vars)?;
        Ok(tape.scalar(root))
    };

    let (mut tape, vars) = fresh(params);
    let root = f(&mut tape, &vars)?;
    let grads = tape.backward(root)?;
    let analytic: Vec<Vec<f64>> = vars.iter().map(|&v| grads.wrt(v)).collect();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        worst_values: None,
        coordinates: 0,
    };
    let mut work = params.to_vec();
    #[allow(clippy::needless_range_loop)]
    for (pi, param) in params.iter().enumerate() {
        for ci in 0..param.len() {
            let orig = param.data()[ci];
            let mut at = |offset: f64| -> Result<f64> {
                work[pi].data_mut()[ci] = orig + offset;
                value(pi, &work)
            };
            let (p1, m1) = (at(eps)?, at(-eps)?);
            let (p2, m2) = (at(2.0 * eps)?, at(-2.0 * eps)?);
            work[pi].data_mut()[ci] = orig;
            let numeric = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * eps);
            let a = analytic[pi][ci];
            let err = (a - numeric).abs() / (a.abs() + numeric.abs() + 1e-12);
            report.coordinates += 1;
            if report.worst.is_none() || err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = Some((pi, ci));
                report.worst_values = Some((a, numeric));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;

    #[test]
    fn sum_of_squares_is_exact_to_roundoff() {
        let params = vec![
            Tensor::vector(vec![0.3, -1.2, 2.5]),
            Tensor::matrix(2, 2, vec![1.0, -0.5, 0.25, 4.0]),
        ];
        let r = finite_difference_check(
            |t, vs| {
                let mut total = None;
                for &v in vs {
                    let sq = t.mul(v, v)?;
                    let s = t.sum(sq);
                    total = Some(match total {
                        None => s,
                        Some(acc) => t.add(acc, s)?,
                    });
                }
                Ok(total.unwrap())
            },
            &params,
            1e-5,
        )
        .unwrap();
        assert!(r.max_rel_error < 1e-8, "{r:?}");
        assert_eq!(r.coordinates, 7);
    }

    #[test]
    fn constant_function_has_zero_error() {
        let params = vec![Tensor::vector(vec![1.0, 2.0])];
        let r = finite_difference_check(|t, _| Ok(t.constant(Tensor::scalar(3.0))), &params, 1e-5)
            .unwrap();
        assert_eq!(r.max_rel_error, 0.0);
    }

    #[test]
    fn detects_corrupted_backward() {
        let params = vec![Tensor::from_f64(Shape::Vector(2), &[0.2, -0.4])];
        let f = |t: &mut Tape<f64>, vs: &[Var]| {
            let y = t.tanh(vs[0]);
            Ok(t.sum(y))
        };
        let clean = finite_difference_check(f, &params, 1e-5).unwrap();
        let broken = check_with_fault(f, &params, 1e-5, Some("tanh")).unwrap();
        assert!(clean.max_rel_error < 1e-8);
        assert!(broken.max_rel_error > 0.1);
    }

    #[test]
    fn rejects_non_positive_step() {
        let params = vec![Tensor::vector(vec![1.0])];
        assert!(finite_difference_check(|t, vs| Ok(t.sum(vs[0])), &params, 0.0).is_err());
    }
}
