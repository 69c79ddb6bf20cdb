//! Damped Newton iteration for the small square systems behind every
//! Riemann solve.

use nalgebra::{SMatrix, SVector};

use crate::error::SolverError;

pub type Vec4 = SVector<f64, 4>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_iterations: 50, fd_step: 1e-7 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOutcome {
    pub root: Vec4,
    pub residual: f64,
    pub iterations: usize,
}

/// Solve `f(x) = 0` from `x0` with a forward-difference Jacobian. The step
/// is halved while the sup-norm residual grows; residual evaluation errors
/// (leaving the admissible region) are treated as growth.
pub fn newton4<F, E>(mut f: F, x0: Vec4, opts: &NewtonOptions) -> Result<NewtonOutcome, SolverError>
where
    F: FnMut(&Vec4) -> Result<Vec4, E>,
    E: Into<SolverError>,
{
    let mut x = x0;
    let mut fx = f(&x).map_err(Into::into)?;
    let mut res = fx.amax();
    for it in 0..opts.max_iterations {
        if res <= opts.tolerance {
            return Ok(NewtonOutcome { root: x, residual: res, iterations: it });
        }
        let mut jac = SMatrix::<f64, 4, 4>::zeros();
        for k in 0..4 {
            let h = opts.fd_step * (1.0 + x[k].abs());
            let mut xp = x;
            xp[k] += h;
            let fp = f(&xp).map_err(Into::into)?;
            jac.set_column(k, &((fp - fx) / h));
        }
        let step = jac.lu().solve(&(-fx)).ok_or(SolverError::Singular)?;
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = x + step * damping;
            if let Ok(ft) = f(&trial) {
                let rt = ft.amax();
                if rt.is_finite() && (rt < res || rt <= opts.tolerance) {
                    x = trial;
                    fx = ft;
                    res = rt;
                    accepted = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !accepted {
            // Stagnation at round-off level counts as converged.
            if res <= opts.tolerance * 100.0 {
                return Ok(NewtonOutcome { root: x, residual: res, iterations: it });
            }
            return Err(SolverError::NoConvergence { iterations: it + 1, residual: res });
        }
    }
    if res <= opts.tolerance {
        Ok(NewtonOutcome { root: x, residual: res, iterations: opts.max_iterations })
    } else {
        Err(SolverError::NoConvergence { iterations: opts.max_iterations, residual: res })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_decoupled_system() {
        let out = newton4(
            |x: &Vec4| -> Result<Vec4, SolverError> {
                Ok(Vec4::new(x[0] * x[0] - 2.0, x[1] - 1.0, x[2].exp() - 3.0, x[3] * x[3] * x[3] - 8.0))
            },
            Vec4::new(1.0, 0.0, 1.0, 1.0),
            &NewtonOptions::default(),
        )
        .unwrap();
        assert!((out.root[0] - 2f64.sqrt()).abs() < 1e-10);
        assert!((out.root[3] - 2.0).abs() < 1e-10);
    }
}
