use super::tape::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Worst entry found by [`GradCheck::run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub param: usize,
    pub entry: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradCheck {
    /// Compares tape gradients of a scalar function against central finite
    /// differences, entry by entry.
    ///
    /// Relative error per entry is `|a − n| / (|a| + |n| + 1e-8)`.
    pub fn run<F>(f: F, params: &[Tensor], step: f64) -> Result<Self>
    where
        F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Result<Var<'t>>,
    {
        if !(step > 0.0) {
            return Err(Error::Config(format!("finite-difference step {step} must be > 0")));
        }
        let tape = Tape::new();
        let vars: Vec<Var<'_>> = params.iter().map(|p| tape.param(p.clone())).collect();
        let out = f(&tape, &vars)?;
        let grads = tape.backward(out)?;
        let analytic: Vec<Tensor> = vars.iter().map(|&v| grads.wrt(v)).collect();

        let eval = |ps: &[Tensor]| -> Result<f64> {
            let tape = Tape::new();
            let vars: Vec<Var<'_>> = ps.iter().map(|p| tape.constant(p.clone())).collect();
            f(&tape, &vars)?.item()
        };

        let mut worst = GradCheck {
            max_rel_error: 0.0,
            param: 0,
            entry: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        let mut work: Vec<Tensor> = params.to_vec();
        for (pi, p) in params.iter().enumerate() {
            for e in 0..p.len() {
                let orig = p.data()[e];
                work[pi].data_mut()[e] = orig + step;
                let plus = eval(&work)?;
                work[pi].data_mut()[e] = orig - step;
                let minus = eval(&work)?;
                work[pi].data_mut()[e] = orig;
                let numeric = (plus - minus) / (2.0 * step);
                let a = analytic[pi].data()[e];
                let rel = (a - numeric).abs() / (a.abs() + numeric.abs() + 1e-8);
                if rel > worst.max_rel_error || !rel.is_finite() {
                    worst = GradCheck {
                        max_rel_error: rel,
                        param: pi,
                        entry: e,
                        analytic: a,
                        numeric,
                    };
                }
            }
        }
        Ok(worst)
    }
}

/// Maximum relative error between analytic and central-difference gradients.
pub fn grad_check<F>(f: F, params: &[Tensor], step: f64) -> Result<f64>
where
    F: for<'t> Fn(&'t Tape, &[Var<'t>]) -> Result<Var<'t>>,
{
    GradCheck::run(f, params, step).map(|g| g.max_rel_error)
}
