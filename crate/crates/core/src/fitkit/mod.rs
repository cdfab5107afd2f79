//! Least-squares recovery of lineshape parameters from sampled spectra.
//!
//! [`fit`] runs a damped Gauss–Newton (Levenberg–Marquardt) iteration on the
//! weighted residuals `sqrt(w_i) (model(f_i) - S_i)`. Parameters with a
//! positive lower bound are optimised in log space; bounds are enforced by
//! projection.

mod model;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use model::{ForwardModel, Param, ParamSet};

/// A parameter to be adjusted, with its box bounds and starting value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeParam {
    pub param: Param,
    pub initial: f64,
    pub lower: f64,
    pub upper: f64,
}

impl FreeParam {
    pub fn new(param: Param, initial: f64, lower: f64, upper: f64) -> Self {
        FreeParam {
            param,
            initial,
            lower,
            upper,
        }
    }

    fn log_scaled(&self) -> bool {
        self.lower > 0.0
    }

    fn to_internal(&self, v: f64) -> f64 {
        if self.log_scaled() {
            v.ln()
        } else {
            v
        }
    }

    fn to_physical(&self, x: f64) -> f64 {
        if self.log_scaled() {
            x.exp()
        } else {
            x
        }
    }

    fn clamp_internal(&self, x: f64) -> f64 {
        x.clamp(self.to_internal(self.lower), self.to_internal(self.upper))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitProblem {
    pub f: Vec<f64>,
    pub data: Vec<f64>,
    /// Optional per-point weights (inverse variances).
    pub weights: Option<Vec<f64>>,
    pub model: ForwardModel,
    /// Values of all parameters; the free ones are overwritten by their initial guesses.
    pub base: ParamSet,
    pub free: Vec<FreeParam>,
}

impl FitProblem {
    pub fn validate(&self) -> Result<()> {
        let n = self.f.len();
        if self.free.is_empty() {
            return Err(Error::config("fit needs at least one free parameter"));
        }
        if self.data.len() != n {
            return Err(Error::config(format!("{} frequencies but {} data values", n, self.data.len())));
        }
        if n < 5 * self.free.len() {
            return Err(Error::config(format!(
                "{n} data points are too few for {} free parameters (need 5 per parameter)",
                self.free.len()
            )));
        }
        if self.f.iter().chain(&self.data).any(|x| !x.is_finite()) {
            return Err(Error::config("fit data must be finite"));
        }
        if let Some(w) = &self.weights {
            if w.len() != n || w.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
                return Err(Error::config("weights must be positive, finite and one per data point"));
            }
        }
        for (k, fp) in self.free.iter().enumerate() {
            let name = fp.param.name();
            if self.free[..k].iter().any(|o| o.param == fp.param) {
                return Err(Error::config(format!("parameter `{name}` listed twice")));
            }
            if !self.model.params().contains(&fp.param) {
                return Err(Error::config(format!("model {:?} has no parameter `{name}`", self.model)));
            }
            if !(fp.lower.is_finite() && fp.upper.is_finite() && fp.lower < fp.upper) {
                return Err(Error::config(format!("bounds of `{name}` must be finite with lower < upper")));
            }
            if !(fp.lower <= fp.initial && fp.initial <= fp.upper) {
                return Err(Error::config(format!(
                    "initial `{name}` = {} outside [{}, {}]",
                    fp.initial, fp.lower, fp.upper
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    StepTolerance,
    CostTolerance,
    MaxIterations,
    /// No downhill step found even at maximal damping.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ParamSet,
    pub free: Vec<Param>,
    /// Indicative covariance of the free parameters (physical units), `s^2 (J^T J)^-1`.
    pub covariance: Vec<Vec<f64>>,
    /// Weighted residual 2-norm at the solution.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Largest |cos| between the residual vector and a Jacobian column, with
    /// the residual norm floored at 1e-8 of the data norm.
    pub gradient_norm: f64,
    /// Cost after the start and after every accepted step.
    pub cost_history: Vec<f64>,
}

impl FitResult {
    pub fn value(&self, p: Param) -> f64 {
        self.params.get(p)
    }

    pub fn std_error(&self, p: Param) -> Option<f64> {
        let k = self.free.iter().position(|&q| q == p)?;
        Some(self.covariance[k][k].max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub cost_tolerance: f64,
    pub gradient_tolerance: f64,
    /// Columns with `1 - |cos| <` this are treated as degenerate.
    pub collinearity_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            step_tolerance: 1e-10,
            cost_tolerance: 1e-12,
            gradient_tolerance: 1e-6,
            collinearity_tolerance: 1e-9,
        }
    }
}

struct Evaluation {
    residuals: DVector<f64>,
    /// Jacobian with respect to the internal (possibly log) variables.
    jacobian: DMatrix<f64>,
    cost: f64,
}

struct Solver<'a> {
    problem: &'a FitProblem,
    sqrt_w: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn new(problem: &'a FitProblem) -> Self {
        let sqrt_w = match &problem.weights {
            Some(w) => w.iter().map(|x| x.sqrt()).collect(),
            None => vec![1.0; problem.f.len()],
        };
        Solver { problem, sqrt_w }
    }

    fn params(&self, x: &DVector<f64>) -> ParamSet {
        let mut p = self.problem.base;
        for (fp, &xi) in self.problem.free.iter().zip(x.iter()) {
            p.set(fp.param, fp.to_physical(xi));
        }
        p
    }

    fn evaluate(&self, x: &DVector<f64>) -> Result<Evaluation> {
        let pr = self.problem;
        let p = self.params(x);
        let (n, m) = (pr.f.len(), pr.free.len());
        let mut residuals = DVector::zeros(n);
        let mut jacobian = DMatrix::zeros(n, m);
        for i in 0..n {
            let (v, g) = pr.model.value_and_gradient(pr.f[i], &p)?;
            residuals[i] = self.sqrt_w[i] * (v - pr.data[i]);
            for (k, fp) in pr.free.iter().enumerate() {
                let chain = if fp.log_scaled() { p.get(fp.param) } else { 1.0 };
                jacobian[(i, k)] = self.sqrt_w[i] * g[Param::ALL.iter().position(|&q| q == fp.param).unwrap()] * chain;
            }
        }
        if residuals.iter().any(|r| !r.is_finite()) || jacobian.iter().any(|j| !j.is_finite()) {
            return Err(Error::Numeric("non-finite model value or derivative".into()));
        }
        let cost = 0.5 * residuals.norm_squared();
        Ok(Evaluation {
            residuals,
            jacobian,
            cost,
        })
    }

    fn check_collinearity(&self, jac: &DMatrix<f64>, tol: f64) -> Result<()> {
        let names: Vec<&str> = self.problem.free.iter().map(|fp| fp.param.name()).collect();
        let norms: Vec<f64> = (0..jac.ncols()).map(|k| jac.column(k).norm()).collect();
        for a in 0..jac.ncols() {
            if norms[a] == 0.0 {
                return Err(Error::SingularJacobian(names[a].into(), names[a].into()));
            }
            for b in a + 1..jac.ncols() {
                let cos = jac.column(a).dot(&jac.column(b)) / (norms[a] * norms[b]);
                if 1.0 - cos.abs() < tol {
                    return Err(Error::SingularJacobian(names[a].into(), names[b].into()));
                }
            }
        }
        Ok(())
    }
}

/// Residual norms below this fraction of the (weighted) data norm count as exact fits.
const RESIDUAL_FLOOR: f64 = 1e-8;

fn scaled_gradient(ev: &Evaluation, data_norm: f64) -> f64 {
    let rn = ev.residuals.norm().max(RESIDUAL_FLOOR * data_norm);
    if rn == 0.0 {
        return 0.0;
    }
    (0..ev.jacobian.ncols())
        .map(|k| {
            let col = ev.jacobian.column(k);
            (col.dot(&ev.residuals) / (col.norm() * rn)).abs()
        })
        .fold(0.0, f64::max)
}

pub fn fit(problem: &FitProblem) -> Result<FitResult> {
    fit_with(problem, &FitOptions::default())
}

pub fn fit_with(problem: &FitProblem, options: &FitOptions) -> Result<FitResult> {
    problem.validate()?;
    let solver = Solver::new(problem);
    let free = &problem.free;
    let m = free.len();
    let mut x = DVector::from_iterator(m, free.iter().map(|fp| fp.to_internal(fp.initial)));
    let mut ev = solver.evaluate(&x)?;
    solver.check_collinearity(&ev.jacobian, options.collinearity_tolerance)?;

    let mut lambda = 1e-3;
    let mut history = vec![ev.cost];
    let mut iterations = 0;
    let termination = loop {
        if iterations >= options.max_iterations {
            break Termination::MaxIterations;
        }
        iterations += 1;
        let jtj = ev.jacobian.transpose() * &ev.jacobian;
        let grad = ev.jacobian.transpose() * &ev.residuals;
        let mut accepted = None;
        while lambda <= 1e16 {
            let mut a = jtj.clone();
            for k in 0..m {
                a[(k, k)] += lambda * jtj[(k, k)];
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let trial = DVector::from_iterator(m, (0..m).map(|k| free[k].clamp_internal(x[k] + step[k])));
            match solver.evaluate(&trial) {
                Ok(next) if next.cost <= ev.cost => {
                    accepted = Some((trial, next));
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        let Some((trial, next)) = accepted else {
            break Termination::Stalled;
        };
        lambda = (lambda / 10.0).max(1e-15);
        let (old_p, new_p) = (solver.params(&x), solver.params(&trial));
        let rel_step = free
            .iter()
            .map(|fp| {
                let (a, b) = (old_p.get(fp.param), new_p.get(fp.param));
                (b - a).abs() / a.abs().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max);
        let rel_cost = if ev.cost > 0.0 { (ev.cost - next.cost) / ev.cost } else { 0.0 };
        x = trial;
        ev = next;
        history.push(ev.cost);
        if rel_step < options.step_tolerance {
            break Termination::StepTolerance;
        }
        if rel_cost < options.cost_tolerance {
            break Termination::CostTolerance;
        }
    };

    let params = solver.params(&x);
    let data_norm = problem
        .data
        .iter()
        .zip(&solver.sqrt_w)
        .map(|(d, w)| (d * w).powi(2))
        .sum::<f64>()
        .sqrt();
    let gradient_norm = scaled_gradient(&ev, data_norm);
    let converged = termination != Termination::MaxIterations && gradient_norm < options.gradient_tolerance;
    let n = problem.f.len();
    let mut j_phys = ev.jacobian.clone();
    for (k, fp) in free.iter().enumerate() {
        if fp.log_scaled() {
            let v = params.get(fp.param);
            j_phys.column_mut(k).unscale_mut(v);
        }
    }
    let s2 = 2.0 * ev.cost / (n - m) as f64;
    let covariance = (j_phys.transpose() * &j_phys)
        .try_inverse()
        .map(|inv| inv * s2)
        .unwrap_or_else(|| DMatrix::from_element(m, m, f64::NAN));
    Ok(FitResult {
        params,
        free: free.iter().map(|fp| fp.param).collect(),
        covariance: (0..m).map(|r| covariance.row(r).iter().copied().collect()).collect(),
        residual_norm: ev.residuals.norm(),
        iterations,
        converged,
        termination,
        gradient_norm,
        cost_history: history,
    })
}

/// Best of `starts` fits from initial guesses drawn uniformly (in the
/// internal coordinates) within the bounds; the problem's own guess is the first start.
pub fn fit_multistart(problem: &FitProblem, starts: usize, seed: u64) -> Result<FitResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = fit(problem)?;
    for _ in 1..starts {
        let mut trial = problem.clone();
        for fp in &mut trial.free {
            let (lo, hi) = (fp.to_internal(fp.lower), fp.to_internal(fp.upper));
            fp.initial = fp.to_physical(rng.random_range(lo..=hi)).clamp(fp.lower, fp.upper);
        }
        if let Ok(r) = fit(&trial) {
            if r.residual_norm < best.residual_norm {
                best = r;
            }
        }
    }
    Ok(best)
}

/// `values * (1 + relative * N(0, 1))` from a seeded generator.
pub fn multiplicative_noise(values: &[f64], relative: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, relative).expect("noise level must be finite and non-negative");
    values.iter().map(|v| v * (1.0 + normal.sample(&mut rng))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linspace;
    use approx::assert_relative_eq;

    const F_L: f64 = 332e3;

    fn truth() -> ParamSet {
        ParamSet {
            t2: 1e-3,
            amplitude: 3e-9,
            larmor_frequency: F_L,
            waist: 2e-6,
            diffusion: 1.791e-5,
        }
    }

    fn synthetic(model: ForwardModel, p: &ParamSet) -> (Vec<f64>, Vec<f64>) {
        let f = linspace(F_L - 3e3, F_L + 3e3, 601);
        let s = f.iter().map(|&x| model.evaluate(x, p).unwrap()).collect();
        (f, s)
    }

    fn problem(model: ForwardModel, f: Vec<f64>, data: Vec<f64>, free: Vec<FreeParam>) -> FitProblem {
        FitProblem {
            f,
            data,
            weights: None,
            model,
            base: truth(),
            free,
        }
    }

    fn t2_amp(t2: f64, amp: f64) -> Vec<FreeParam> {
        vec![
            FreeParam::new(Param::T2, t2, 1e-5, 1e-1),
            FreeParam::new(Param::Amplitude, amp, 1e-15, 1e-3),
        ]
    }

    #[test]
    fn noiseless_focused_round_trip() {
        let (f, s) = synthetic(ForwardModel::Focused, &truth());
        let r = fit(&problem(ForwardModel::Focused, f, s, t2_amp(2.5e-3, 1e-9))).unwrap();
        assert!(r.converged, "{r:?}");
        assert_relative_eq!(r.value(Param::T2), 1e-3, max_relative = 1e-6);
        assert_relative_eq!(r.value(Param::Amplitude), 3e-9, max_relative = 1e-6);
    }

    #[test]
    fn noisy_lorentzian_recovers_t2() {
        let p = truth();
        let (f, s) = synthetic(ForwardModel::Lorentzian, &p);
        for seed in 0..5 {
            let noisy = multiplicative_noise(&s, 0.01, seed);
            let mut free = t2_amp(0.6e-3, 5e-9);
            free.push(FreeParam::new(Param::LarmorFrequency, F_L + 150.0, F_L - 2e3, F_L + 2e3));
            let r = fit(&problem(ForwardModel::Lorentzian, f.clone(), noisy, free)).unwrap();
            assert!(r.converged);
            assert!((r.value(Param::T2) / p.t2 - 1.0).abs() < 0.05, "seed {seed}: {}", r.value(Param::T2));
            assert!(r.std_error(Param::T2).unwrap() > 0.0);
        }
    }

    #[test]
    fn cost_never_increases() {
        let (f, s) = synthetic(ForwardModel::Collimated, &ParamSet { waist: 50e-6, ..truth() });
        let noisy = multiplicative_noise(&s, 0.02, 7);
        let r = fit(&problem(ForwardModel::Collimated, f, noisy, t2_amp(3e-4, 1e-8))).unwrap();
        assert!(r.cost_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.cost_history.len() >= 2);
    }

    #[test]
    fn rescaling_data_only_rescales_amplitude() {
        let (f, s) = synthetic(ForwardModel::Lorentzian, &truth());
        let noisy = multiplicative_noise(&s, 0.01, 3);
        let k = 37.5;
        let free = |amp: f64| {
            vec![
                FreeParam::new(Param::T2, 0.7e-3, 1e-5, 1e-1),
                FreeParam::new(Param::Amplitude, amp, 1e-15, 1e-3),
                FreeParam::new(Param::LarmorFrequency, F_L - 100.0, F_L - 2e3, F_L + 2e3),
            ]
        };
        let a = fit(&problem(ForwardModel::Lorentzian, f.clone(), noisy.clone(), free(1e-9))).unwrap();
        let scaled: Vec<f64> = noisy.iter().map(|v| v * k).collect();
        let b = fit(&problem(ForwardModel::Lorentzian, f, scaled, free(k * 1e-9))).unwrap();
        assert_relative_eq!(b.value(Param::Amplitude), k * a.value(Param::Amplitude), max_relative = 1e-8);
        assert_relative_eq!(b.value(Param::T2), a.value(Param::T2), max_relative = 1e-8);
        assert_relative_eq!(b.value(Param::LarmorFrequency), a.value(Param::LarmorFrequency), max_relative = 1e-8);
    }

    #[test]
    fn focused_diffusion_is_degenerate_with_amplitude() {
        let (f, s) = synthetic(ForwardModel::Focused, &truth());
        let mut free = t2_amp(1e-3, 3e-9);
        free.push(FreeParam::new(Param::Diffusion, 2e-5, 1e-7, 1e-2));
        let err = fit(&problem(ForwardModel::Focused, f, s, free)).unwrap_err();
        assert_eq!(err, Error::SingularJacobian("amplitude".into(), "diffusion".into()));
    }

    #[test]
    fn validation_errors() {
        let (f, s) = synthetic(ForwardModel::Focused, &truth());
        let few = problem(ForwardModel::Focused, f[..9].to_vec(), s[..9].to_vec(), t2_amp(1e-3, 1e-9));
        assert!(matches!(fit(&few), Err(Error::Config(_))));
        let outside = problem(ForwardModel::Focused, f.clone(), s.clone(), t2_amp(1.0, 1e-9));
        assert!(matches!(fit(&outside), Err(Error::Config(_))));
        let wrong = problem(
            ForwardModel::Lorentzian,
            f,
            s,
            vec![FreeParam::new(Param::Waist, 1e-5, 1e-6, 1e-4)],
        );
        assert!(matches!(fit(&wrong), Err(Error::Config(_))));
    }

    #[test]
    fn max_iterations_reports_not_converged() {
        let (f, s) = synthetic(ForwardModel::Focused, &truth());
        let opts = FitOptions {
            max_iterations: 1,
            ..FitOptions::default()
        };
        let r = fit_with(&problem(ForwardModel::Focused, f, s, t2_amp(5e-3, 1e-10)), &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.termination, Termination::MaxIterations);
    }

    #[test]
    fn multistart_is_reproducible() {
        let (f, s) = synthetic(ForwardModel::Lorentzian, &truth());
        let pr = problem(ForwardModel::Lorentzian, f, s, t2_amp(0.2e-3, 1e-9));
        let a = fit_multistart(&pr, 4, 11).unwrap();
        let b = fit_multistart(&pr, 4, 11).unwrap();
        assert_eq!(a.params, b.params);
        assert_relative_eq!(a.value(Param::T2), 1e-3, max_relative = 1e-6);
    }

    #[test]
    fn noise_is_seeded() {
        let v = vec![1.0; 1000];
        assert_eq!(multiplicative_noise(&v, 0.01, 5), multiplicative_noise(&v, 0.01, 5));
        assert_ne!(multiplicative_noise(&v, 0.01, 5), multiplicative_noise(&v, 0.01, 6));
        let n = multiplicative_noise(&v, 0.01, 5);
        let mean = n.iter().sum::<f64>() / 1000.0;
        assert!((mean - 1.0).abs() < 3e-3);
    }
}
