//! Gradient checking against central finite differences.

use crate::scalar::Scalar;

use super::{GradError, Tape, Tensor, Var};

/// Outcome of a finite-difference comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Worst relative error over all checked coordinates. The denominator is
    /// floored at 1, so for small gradients this degrades to absolute error.
    pub max_rel_err: f64,
    /// Coordinates compared.
    pub checked: usize,
    /// Coordinates excluded because the one-sided differences disagree,
    /// indicating a non-differentiable point (e.g. relu probed at 0).
    pub kinks_skipped: usize,
}

/// Compare reverse-mode gradients of a scalar-valued function against
/// central differences with the given step, coordinate by coordinate.
///
/// Use 64-bit scalars: the step sizes that keep truncation error small leave
/// no headroom in 32-bit arithmetic.
pub fn grad_check<S, F>(f: &F, inputs: &[Tensor<S>], step: f64) -> Result<GradCheckReport, GradError>
where
    S: Scalar,
    F: Fn(&mut Tape<S>, &[Var]) -> Result<Var, GradError>,
{
    let eval = |points: &[Tensor<S>]| -> Result<f64, GradError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = points.iter().map(|t| tape.leaf(t.clone())).collect();
        let root = f(&mut tape, &vars)?;
        let out = tape.value(root);
        if !out.is_scalar() {
            return Err(GradError::NonScalarRoot {
                shape: out.shape().to_vec(),
            });
        }
        Ok(out.item().as_f64())
    };

    // Analytic gradients.
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let root = f(&mut tape, &vars)?;
    let mut grads = tape.backward(root)?;
    let analytic: Vec<Tensor<S>> = vars
        .iter()
        .zip(inputs)
        .map(|(&v, t)| grads.take_or_zeros(v, t.shape()))
        .collect();

    let f0 = eval(inputs)?;
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        checked: 0,
        kinks_skipped: 0,
    };

    let mut work: Vec<Tensor<S>> = inputs.to_vec();
    for (ti, tensor) in inputs.iter().enumerate() {
        for c in 0..tensor.numel() {
            let x0 = tensor.data()[c].as_f64();
            work[ti].data_mut()[c] = S::from_f64(x0 + step);
            let f_plus = eval(&work)?;
            work[ti].data_mut()[c] = S::from_f64(x0 - step);
            let f_minus = eval(&work)?;
            work[ti].data_mut()[c] = tensor.data()[c];

            let fwd = (f_plus - f0) / step;
            let bwd = (f0 - f_minus) / step;
            let kink_tol = 1e-3_f64.max(1e-3 * fwd.abs().max(bwd.abs()));
            if (fwd - bwd).abs() > kink_tol {
                report.kinks_skipped += 1;
                continue;
            }

            let central = (f_plus - f_minus) / (2.0 * step);
            let a = analytic[ti].data()[c].as_f64();
            let rel = (a - central).abs() / 1.0_f64.max(a.abs()).max(central.abs());
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
            }
            report.checked += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact() {
        let f = |tape: &mut Tape<f64>, vars: &[Var]| {
            let s = tape.scale(vars[0], 3.0);
            Ok(tape.sum(s))
        };
        let report = grad_check(&f, &[Tensor::vector(vec![1.0, -2.0, 0.5])], 1e-5).unwrap();
        assert!(report.max_rel_err <= 1e-10, "{:?}", report);
        assert_eq!(report.kinks_skipped, 0);
    }

    #[test]
    fn relu_away_from_zero_passes() {
        let f = |tape: &mut Tape<f64>, vars: &[Var]| {
            let r = tape.relu(vars[0]);
            Ok(tape.sum(r))
        };
        let report = grad_check(&f, &[Tensor::vector(vec![0.7, -0.4, 1.3])], 1e-5).unwrap();
        assert!(report.max_rel_err <= 1e-4, "{:?}", report);
        assert_eq!(report.kinks_skipped, 0);
    }

    #[test]
    fn relu_at_zero_is_flagged_and_excluded() {
        let f = |tape: &mut Tape<f64>, vars: &[Var]| {
            let r = tape.relu(vars[0]);
            Ok(tape.sum(r))
        };
        let report = grad_check(&f, &[Tensor::vector(vec![0.0, 2.0])], 1e-5).unwrap();
        assert_eq!(report.kinks_skipped, 1);
        assert_eq!(report.checked, 1);
        assert!(report.max_rel_err <= 1e-4);
    }
}
