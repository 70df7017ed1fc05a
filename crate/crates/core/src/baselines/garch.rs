//! GARCH(1,1) by Gaussian maximum likelihood.

use argmin::core::{CostFunction, Executor, Gradient, State, TerminationReason, TerminationStatus};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::BFGS;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{HnnError, Result};
use crate::rng::{derive_seed, rng_from_seed, Stream};

pub const GARCH_STARTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchModel {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Variance used for the first observation.
    pub initial_variance: f64,
    pub log_likelihood: f64,
    pub iterations: u64,
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `(log ω, logit(α+β), logit(α/(α+β)))` ↦ `(ω, α, β)`.
fn untransform(p: &[f64]) -> (f64, f64, f64) {
    let omega = p[0].exp();
    let pers = logistic(p[1]);
    let q = logistic(p[2]);
    (omega, pers * q, pers * (1.0 - q))
}

impl GarchModel {
    /// Conditional variances `σ²_0 … σ²_T`; the last entry is the one-step
    /// forecast after the final residual.
    pub fn filter(&self, resid: &[f64]) -> Vec<f64> {
        filter_path(self.omega, self.alpha, self.beta, self.initial_variance, resid)
    }

    /// Variance of the residual `steps` periods after the end of `resid`.
    pub fn forecast(&self, resid: &[f64], steps: usize) -> f64 {
        let mut h = *self.filter(resid).last().expect("non-empty path");
        for _ in 1..steps.max(1) {
            h = self.omega + (self.alpha + self.beta) * h;
        }
        h
    }

    pub fn persistence(&self) -> f64 {
        self.alpha + self.beta
    }
}

fn filter_path(omega: f64, alpha: f64, beta: f64, h0: f64, resid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(resid.len() + 1);
    let mut h = h0;
    out.push(h);
    for e in resid {
        h = omega + alpha * e * e + beta * h;
        out.push(h);
    }
    out
}

struct Likelihood<'a> {
    resid: &'a [f64],
    h0: f64,
}

impl Likelihood<'_> {
    /// Mean negative log likelihood and its gradient in transformed space.
    fn eval(&self, p: &[f64]) -> (f64, [f64; 3]) {
        let (omega, alpha, beta) = untransform(p);
        let n = self.resid.len() as f64;
        let mut h = self.h0;
        let mut dh = [0.0f64; 3];
        let mut nll = 0.0;
        let mut g = [0.0f64; 3];
        let mut prev_e2 = 0.0;
        for (t, e) in self.resid.iter().enumerate() {
            if t > 0 {
                let dh_new = [1.0 + beta * dh[0], prev_e2 + beta * dh[1], h + beta * dh[2]];
                h = omega + alpha * prev_e2 + beta * h;
                dh = dh_new;
            }
            let e2 = e * e;
            nll += 0.5 * ((2.0 * PI).ln() + h.ln() + e2 / h);
            let w = 0.5 * (1.0 / h - e2 / (h * h));
            for k in 0..3 {
                g[k] += w * dh[k];
            }
            prev_e2 = e2;
        }
        let pers = alpha + beta;
        let q = logistic(p[2]);
        let dpers = pers * (1.0 - pers);
        let dq = q * (1.0 - q);
        let grad = [
            g[0] * omega,
            g[1] * q * dpers + g[2] * (1.0 - q) * dpers,
            g[1] * pers * dq - g[2] * pers * dq,
        ];
        (nll / n, grad.map(|x| x / n))
    }
}

impl CostFunction for Likelihood<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let c = self.eval(p).0;
        Ok(if c.is_finite() { c } else { f64::INFINITY })
    }
}

impl Gradient for Likelihood<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Self::Param) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(self.eval(p).1.to_vec())
    }
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
}

fn start_point(k: usize, var: f64) -> Vec<f64> {
    let (pers, share) = if k == 0 {
        (0.9, 0.1)
    } else {
        let mut rng = rng_from_seed(derive_seed(0, Stream::Garch, k as u64));
        (rng.random_range(0.3..0.98), rng.random_range(0.05..0.6))
    };
    vec![(var * (1.0 - pers)).ln(), logit(pers), logit(share)]
}

struct StartResult {
    param: Vec<f64>,
    cost: f64,
    iterations: u64,
    converged: bool,
}

fn run_start(lik: &Likelihood<'_>, init: Vec<f64>) -> Option<StartResult> {
    let solver = BFGS::new(MoreThuenteLineSearch::new())
        .with_tolerance_grad(1e-7)
        .ok()?
        .with_tolerance_cost(1e-12)
        .ok()?;
    let eye = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
    let res = Executor::new(Likelihood { resid: lik.resid, h0: lik.h0 }, solver)
        .configure(|s| s.param(init).inv_hessian(eye).max_iters(500))
        .run()
        .ok()?;
    let state = res.state();
    let param = state.get_best_param()?.clone();
    let converged = !matches!(
        state.get_termination_status(),
        TerminationStatus::Terminated(TerminationReason::MaxItersReached) | TerminationStatus::NotTerminated
    );
    Some(StartResult {
        param,
        cost: state.get_best_cost(),
        iterations: state.get_iter(),
        converged,
    })
}

/// Gaussian MLE of a GARCH(1,1) on `resid`, starting the recursion at the
/// sample variance; the best of several quasi-Newton starts is kept.
pub fn fit_garch11(resid: &[f64]) -> Result<GarchModel> {
    if resid.len() < 100 {
        return Err(HnnError::Domain(format!("GARCH needs at least 100 residuals, got {}", resid.len())));
    }
    let var = sample_variance(resid);
    if !(var > 0.0) || !var.is_finite() {
        return Err(HnnError::Domain("residuals have no variation".into()));
    }
    let lik = Likelihood { resid, h0: var };
    let results: Vec<StartResult> = (0..GARCH_STARTS).filter_map(|k| run_start(&lik, start_point(k, var))).collect();
    let best = results
        .iter()
        .filter(|r| r.converged && r.cost.is_finite())
        .min_by(|a, b| a.cost.total_cmp(&b.cost))
        .ok_or_else(|| {
            let last = results.last();
            HnnError::Convergence(match last {
                Some(r) => {
                    let (o, a, b) = untransform(&r.param);
                    format!(
                        "no GARCH start converged; last iterate omega={o:.6} alpha={a:.6} beta={b:.6} nll={:.6} after {} iterations",
                        r.cost, r.iterations
                    )
                }
                None => "every GARCH start failed".into(),
            })
        })?;
    let (omega, alpha, beta) = untransform(&best.param);
    Ok(GarchModel {
        omega,
        alpha,
        beta,
        initial_variance: var,
        log_likelihood: -best.cost * resid.len() as f64,
        iterations: best.iterations,
    })
}

/// Draws `(ε, σ²)` from a GARCH(1,1) started at its unconditional variance.
pub fn simulate_garch11(omega: f64, alpha: f64, beta: f64, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = rng_from_seed(seed);
    let uncond = if alpha + beta < 1.0 { omega / (1.0 - alpha - beta) } else { omega };
    let mut h = uncond;
    let mut eps = Vec::with_capacity(n);
    let mut var = Vec::with_capacity(n);
    for _ in 0..n {
        let e = h.sqrt() * rng.sample::<f64, _>(StandardNormal);
        eps.push(e);
        var.push(h);
        h = omega + alpha * e * e + beta * h;
    }
    (eps, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_finite_differences() {
        let (e, _) = simulate_garch11(0.1, 0.15, 0.7, 400, 5);
        let lik = Likelihood { resid: &e, h0: sample_variance(&e) };
        let p = vec![-1.5, 1.2, -0.8];
        let (_, g) = lik.eval(&p);
        for k in 0..3 {
            let mut up = p.clone();
            let mut dn = p.clone();
            up[k] += 1e-6;
            dn[k] -= 1e-6;
            let fd = (lik.eval(&up).0 - lik.eval(&dn).0) / 2e-6;
            assert!((fd - g[k]).abs() < 1e-6 * (1.0 + fd.abs()), "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn filtered_variance_is_positive() {
        let m = GarchModel {
            omega: 1e-6,
            alpha: 0.0,
            beta: 0.999,
            initial_variance: 1e-3,
            log_likelihood: 0.0,
            iterations: 0,
        };
        assert!(m.filter(&[0.0; 1000]).iter().all(|h| *h > 0.0));
    }

    #[test]
    fn iid_residuals_give_a_flat_path() {
        let mut rng = rng_from_seed(11);
        let e: Vec<f64> = (0..3000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let m = fit_garch11(&e).unwrap();
        let path = m.filter(&e);
        let mean = path.iter().sum::<f64>() / path.len() as f64;
        let sd = (path.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / path.len() as f64).sqrt();
        assert!(sd / mean < 0.1, "cv {}", sd / mean);
        assert!(m.alpha < 0.05);
    }

    #[test]
    fn short_input_rejected() {
        assert!(matches!(fit_garch11(&[1.0; 50]), Err(HnnError::Domain(_))));
    }
}
