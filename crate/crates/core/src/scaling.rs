//! Finite-size scaling of variational errors.
//!
//! The relative error is modelled as `δE(N) = a + b N^c`, fitted by damped
//! least squares on `ln δE` with uniform weights. The largest size meeting an
//! accuracy goal then follows from the fit, and `N* ∝ χ^γ` from a log-log line.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::storage::Owned;
use nalgebra::{DVector, Dyn, Matrix3, OMatrix, Vector3, U3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values below this are raised to it before fitting.
pub const DELTA_E_FLOOR: f64 = 1e-12;

/// Range and spacing of the exponent grid used for starting points.
pub const EXPONENT_GRID: (f64, f64, f64) = (-4.0, 2.0, 0.25);

/// Default accuracy goal.
pub const DEFAULT_GOAL: f64 = 1e-5;

/// Weighting used by [`fit_power_law`], recorded in outputs.
pub const FIT_WEIGHTING: &str = "uniform in ln(delta_E)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Standard errors of `(a, b, c)`.
    pub std_errors: [f64; 3],
    /// Covariance of `(a, b, c)`.
    pub covariance: [[f64; 3]; 3],
    /// `‖ln model - ln δE‖₂`.
    pub residual_norm: f64,
    pub n_points: usize,
    pub n_min: f64,
    pub n_max: f64,
}

impl PowerLawFit {
    pub fn eval(&self, n: f64) -> f64 {
        self.a + self.b * n.powf(self.c)
    }
}

/// Trial steps with a non-positive model see this value instead, so the
/// damping rejects them rather than aborting.
const MODEL_FLOOR: f64 = 1e-300;

struct LogModel<'a> {
    n: &'a [f64],
    ln_y: &'a [f64],
    p: Vector3<f64>,
}

impl LogModel<'_> {
    fn model(&self, n: f64) -> f64 {
        self.p[0] + self.p[1] * n.powf(self.p[2])
    }
}

impl LeastSquaresProblem<f64, Dyn, U3> for LogModel<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, U3>;
    type ParameterStorage = Owned<f64, U3>;

    fn set_params(&mut self, x: &Vector3<f64>) {
        self.p = *x;
    }

    fn params(&self) -> Vector3<f64> {
        self.p
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let r = DVector::from_iterator(
            self.n.len(),
            self.n
                .iter()
                .zip(self.ln_y)
                .map(|(&n, &ly)| self.model(n).max(MODEL_FLOOR).ln() - ly),
        );
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self) -> Option<OMatrix<f64, Dyn, U3>> {
        let mut j = OMatrix::<f64, Dyn, U3>::zeros(self.n.len());
        for (i, &n) in self.n.iter().enumerate() {
            let m = self.model(n).max(MODEL_FLOOR);
            let pw = n.powf(self.p[2]);
            j[(i, 0)] = 1.0 / m;
            j[(i, 1)] = pw / m;
            j[(i, 2)] = self.p[1] * pw * n.ln() / m;
        }
        j.iter().all(|v| v.is_finite()).then_some(j)
    }
}

/// `(a, b)` minimizing `Σ ((a + b N^c) / y - 1)²` at fixed `c`.
fn linear_start(n: &[f64], y: &[f64], c: f64) -> Option<(f64, f64)> {
    let (mut s11, mut s12, mut s22, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&ni, &yi) in n.iter().zip(y) {
        let (u, v) = (1.0 / yi, ni.powf(c) / yi);
        s11 += u * u;
        s12 += u * v;
        s22 += v * v;
        t1 += u;
        t2 += v;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() <= 1e-14 * s11 * s22 {
        return None;
    }
    let a = (t1 * s22 - t2 * s12) / det;
    let b = (s11 * t2 - s12 * t1) / det;
    n.iter()
        .all(|&ni| a + b * ni.powf(c) > 0.0)
        .then_some((a, b))
}

/// Fits `δE = a + b N^c` to `(N, δE)` points in any order.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "a three-parameter fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    let mut pts = points.to_vec();
    if let Some(&(n, e)) = pts
        .iter()
        .find(|(n, e)| !(*e > 0.0) || !(*n > 0.0) || !n.is_finite() || !e.is_finite())
    {
        return Err(Error::InvalidArgument(format!(
            "sizes and errors must be positive and finite, got ({n}, {e})"
        )));
    }
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidArgument("sizes must be distinct".into()));
    }
    let n: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.max(DELTA_E_FLOOR)).collect();
    let ln_y: Vec<f64> = y.iter().map(|v| v.ln()).collect();

    let lm = LevenbergMarquardt::new()
        .with_ftol(1e-15)
        .with_xtol(1e-15)
        .with_gtol(1e-15)
        .with_patience(2000);
    let residual_norm_at = |p: Vector3<f64>| {
        let m = LogModel {
            n: &n,
            ln_y: &ln_y,
            p,
        };
        n.iter()
            .all(|&ni| m.model(ni) > 0.0)
            .then(|| m.residuals())
            .flatten()
            .map(|r| r.norm())
    };
    let (lo, hi, step) = EXPONENT_GRID;
    let steps = ((hi - lo) / step).round() as usize;
    let mut best: Option<(f64, Vector3<f64>)> = None;
    for k in 0..=steps {
        let c0 = lo + step * k as f64;
        let b_line = (y
            .iter()
            .zip(&n)
            .map(|(yi, ni)| yi.ln() - c0 * ni.ln())
            .sum::<f64>()
            / n.len() as f64)
            .exp();
        let starts = linear_start(&n, &y, c0)
            .map(|(a, b)| Vector3::new(a, b, c0))
            .into_iter()
            .chain(std::iter::once(Vector3::new(0.0, b_line, c0)));
        for p0 in starts {
            let Some(r0) = residual_norm_at(p0) else {
                continue;
            };
            let (problem, _) = lm.minimize(LogModel {
                n: &n,
                ln_y: &ln_y,
                p: p0,
            });
            let (rn, p) = match residual_norm_at(problem.p) {
                Some(rn) if rn <= r0 => (rn, problem.p),
                _ => (r0, p0),
            };
            let better = match &best {
                None => true,
                Some((bn, bp)) => {
                    let tie = (rn - bn).abs() <= 1e-12 * bn.max(1e-300) + 1e-300;
                    if tie {
                        p[2].abs() < bp[2].abs()
                    } else {
                        rn < *bn
                    }
                }
            };
            if better {
                best = Some((rn, p));
            }
        }
    }
    let (residual_norm, p) =
        best.ok_or_else(|| Error::DegenerateFit("no start produced a positive model".into()))?;
    let problem = LogModel {
        n: &n,
        ln_y: &ln_y,
        p,
    };
    let j = problem
        .jacobian()
        .ok_or_else(|| Error::DegenerateFit("non-finite jacobian at optimum".into()))?;
    // Columns differ by many orders of magnitude; invert in scaled form.
    let scale = Vector3::from_fn(|i, _| {
        let norm = j.column(i).norm();
        if norm > 0.0 {
            1.0 / norm
        } else {
            0.0
        }
    });
    let d = Matrix3::from_diagonal(&scale);
    let js = &j * d;
    let svd = js.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let sigma = svd.singular_values;
    if !(sigma.min() > f64::EPSILON * sigma.max()) {
        return Err(Error::DegenerateFit("singular covariance".into()));
    }
    let inv: Matrix3<f64> = v_t.transpose()
        * Matrix3::from_diagonal(&Vector3::from_iterator(sigma.iter().map(|x| 1.0 / (x * x))))
        * v_t;
    let dof = (n.len() - 3).max(1) as f64;
    let cov = d * inv * d * (residual_norm * residual_norm / dof);
    let mut covariance = [[0.0; 3]; 3];
    for (i, row) in covariance.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            *v = cov[(i, k)];
        }
    }
    Ok(PowerLawFit {
        a: p[0],
        b: p[1],
        c: p[2],
        std_errors: [cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt(), cov[(2, 2)].sqrt()],
        covariance,
        residual_norm,
        n_points: n.len(),
        n_min: n[0],
        n_max: n[n.len() - 1],
    })
}

/// Largest size meeting an accuracy goal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NStar {
    pub value: f64,
    pub error: f64,
    /// `true` when the crossing lies beyond the largest fitted size.
    pub extrapolated: bool,
}

/// Solves `a + b N^c = goal`; the error bar comes from the fit covariance.
pub fn extract_nstar(fit: &PowerLawFit, goal: f64) -> Result<NStar> {
    if !(goal > 0.0 && goal.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "accuracy goal must be positive, got {goal}"
        )));
    }
    let no = |reason: String| Err(Error::NoCrossing { goal, reason });
    let (a, b, c) = (fit.a, fit.b, fit.c);
    if c == 0.0 || b == 0.0 {
        return no("the fitted error does not depend on N".into());
    }
    if b * c < 0.0 {
        return no(format!(
            "the fitted error decreases with N (b = {b:e}, c = {c})"
        ));
    }
    let ratio = (goal - a) / b;
    if !(ratio > 0.0) {
        return no(format!(
            "the fitted error stays above the goal for every N (a = {a:e})"
        ));
    }
    let value = ratio.powf(1.0 / c);
    if !value.is_finite() {
        return no(format!("the crossing N = {value} is not finite"));
    }
    let grad = [
        -1.0 / (c * (goal - a)),
        -1.0 / (c * b),
        -ratio.ln() / (c * c),
    ];
    let mut var = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            var += grad[i] * fit.covariance[i][k] * grad[k];
        }
    }
    Ok(NStar {
        value,
        error: value * var.max(0.0).sqrt(),
        extrapolated: value > fit.n_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptivePowerResult {
    pub chi: Vec<f64>,
    pub nstar: Vec<f64>,
    pub exponent: f64,
    pub exponent_error: f64,
    /// `ln N*` at `χ = 1`.
    pub intercept: f64,
    pub accuracy_goal: f64,
}

/// Least-squares line through `(ln χ, ln N*)`.
pub fn fit_descriptive_exponent(
    nstars: &[(f64, f64)],
    goal: f64,
) -> Result<DescriptivePowerResult> {
    if nstars.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 (chi, N*) pairs, got {}",
            nstars.len()
        )));
    }
    if nstars
        .iter()
        .any(|&(c, n)| !(c > 0.0 && n > 0.0 && c.is_finite() && n.is_finite()))
    {
        return Err(Error::InvalidArgument("chi and N* must be positive".into()));
    }
    let x: Vec<f64> = nstars.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = nstars.iter().map(|p| p.1.ln()).collect();
    let k = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("all bond dimensions are equal".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    Ok(DescriptivePowerResult {
        chi: nstars.iter().map(|p| p.0).collect(),
        nstar: nstars.iter().map(|p| p.1).collect(),
        exponent: slope,
        exponent_error: (rss / (k - 2.0).max(1.0) / sxx).sqrt(),
        intercept,
        accuracy_goal: goal,
    })
}
