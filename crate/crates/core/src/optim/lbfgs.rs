use std::cell::{Cell, RefCell};
use std::sync::{Arc, Mutex};

use argmin::core::observers::{Observe, ObserverMode};
use argmin::core::{
    CostFunction, Executor, Gradient, IterState, TerminationReason, TerminationStatus, KV,
};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::LBFGS;

use super::{GradientSettings, OptimizationResult};
use crate::error::{Error, Result};

type Evaluate<'a> = dyn Fn(&[f64]) -> Result<(f64, Vec<f64>)> + 'a;

/// Caches the last point so that cost and gradient share one evaluation.
struct Cached<'a> {
    f: &'a Evaluate<'a>,
    last: RefCell<Option<(Vec<f64>, f64, Vec<f64>)>>,
    evals: &'a Cell<u64>,
}

impl Cached<'_> {
    fn at(&self, x: &[f64]) -> std::result::Result<(f64, Vec<f64>), argmin::core::Error> {
        if let Some((p, v, g)) = self.last.borrow().as_ref() {
            if p.as_slice() == x {
                return Ok((*v, g.clone()));
            }
        }
        self.evals.set(self.evals.get() + 1);
        let (v, g) = (self.f)(x).map_err(argmin::core::Error::new)?;
        if !v.is_finite() || g.iter().any(|d| !d.is_finite()) {
            return Err(argmin::core::Error::new(Error::NonFiniteObjective {
                value: v,
                params: x.to_vec(),
            }));
        }
        *self.last.borrow_mut() = Some((x.to_vec(), v, g.clone()));
        Ok((v, g))
    }
}

impl CostFunction for Cached<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.at(p)?.0)
    }
}

impl Gradient for Cached<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(self.at(p)?.1)
    }
}

#[derive(Clone, Default)]
struct Trace(Arc<Mutex<Vec<f64>>>);

impl Observe<IterState<Vec<f64>, Vec<f64>, (), (), (), f64>> for Trace {
    fn observe_iter(
        &mut self,
        state: &IterState<Vec<f64>, Vec<f64>, (), (), (), f64>,
        _kv: &KV,
    ) -> std::result::Result<(), argmin::core::Error> {
        self.0.lock().expect("trace lock").push(state.best_cost);
        Ok(())
    }
}

fn into_error(e: argmin::core::Error) -> Error {
    match e.downcast::<Error>() {
        Ok(inner) => inner,
        Err(other) => Error::InvalidArgument(other.to_string()),
    }
}

/// L-BFGS with a More–Thuente line search on a function returning its value
/// and gradient. `rounds_used` counts iterations and `history` holds the best
/// value after each of them.
pub fn lbfgs_minimize(
    f: &Evaluate<'_>,
    x0: &[f64],
    settings: &GradientSettings,
) -> Result<OptimizationResult> {
    let evals = Cell::new(0);
    let problem = Cached {
        f,
        last: RefCell::new(None),
        evals: &evals,
    };
    let (v0, _) = problem.at(x0).map_err(into_error)?;
    let solver = LBFGS::new(MoreThuenteLineSearch::new(), settings.memory)
        .with_tolerance_grad(settings.gradient_tolerance)
        .and_then(|s| s.with_tolerance_cost(settings.cost_tolerance))
        .map_err(into_error)?;
    let trace = Trace::default();
    let res = Executor::new(problem, solver)
        .configure(|st| st.param(x0.to_vec()).max_iters(settings.max_iterations))
        .add_observer(trace.clone(), ObserverMode::Always)
        .timer(false)
        .run()
        .map_err(into_error)?;
    let state = res.state();
    let mut history = vec![v0];
    history.extend(trace.0.lock().expect("trace lock").iter().copied());
    let (best_params, best) = match &state.best_param {
        Some(p) if state.best_cost <= v0 => (p.clone(), state.best_cost),
        _ => (x0.to_vec(), v0),
    };
    let converged = !matches!(
        state.termination_status,
        TerminationStatus::Terminated(TerminationReason::MaxItersReached)
    );
    let evaluations_used = evals.get();
    Ok(OptimizationResult {
        best_params,
        best_energy_density: best,
        rounds_used: state.iter as usize,
        evaluations_used,
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_with_gradient() {
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            Ok((v, g))
        };
        let r = lbfgs_minimize(&f, &[-1.2, 1.0], &GradientSettings::default()).unwrap();
        assert!(r.best_energy_density < 1e-14, "{}", r.best_energy_density);
        assert!(r.converged);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn objective_errors_propagate() {
        let f = |_: &[f64]| -> Result<(f64, Vec<f64>)> { Err(Error::DegenerateNorm(0.0)) };
        assert_eq!(
            lbfgs_minimize(&f, &[1.0], &GradientSettings::default()),
            Err(Error::DegenerateNorm(0.0))
        );
    }
}
