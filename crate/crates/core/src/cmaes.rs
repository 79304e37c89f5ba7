//! Covariance matrix adaptation evolution strategy.
//!
//! Maximizes by default: `tell` takes fitness values where larger is
//! better. Learning rates and recombination weights are the usual
//! defaults, recomputed from the number of candidates in each `tell`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;

/// Default population size for a problem of dimension `n`.
pub fn default_population(n: usize) -> usize {
    4 + (3.0 * (n as f64).ln()).floor() as usize
}

#[derive(Debug, Clone, Copy)]
struct Rates {
    mu: usize,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
}

fn weights(lambda: usize) -> (Vec<f64>, f64) {
    let mu = (lambda / 2).max(1);
    let raw: Vec<f64> = (1..=mu).map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln()).collect();
    let raw: Vec<f64> = if raw.iter().all(|&w| w > 0.0) { raw } else { vec![1.0; mu] };
    let s: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|x| x / s).collect();
    let mu_eff = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
    (w, mu_eff)
}

fn rates(n: usize, lambda: usize) -> Rates {
    let n = n as f64;
    let (w, mu_eff) = weights(lambda);
    let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
    let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
    let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff));
    Rates { mu: w.len(), mu_eff, c_sigma, d_sigma, c_c, c_1, c_mu }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaState {
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub cov: DMatrix<f64>,
    pub p_sigma: DVector<f64>,
    pub p_c: DVector<f64>,
    pub generation: u64,
    pub evals_used: usize,
    pub budget: usize,
    pub seed: u64,
    basis: DMatrix<f64>,
    scales: DVector<f64>,
    eigen_evals: usize,
}

const EIGEN_FLOOR: f64 = 1e-14;

impl CmaState {
    /// Mean zero, identity covariance.
    pub fn new(dim: usize, sigma: f64, budget: usize, seed: u64) -> Result<Self> {
        Self::with_mean(DVector::zeros(dim), sigma, budget, seed)
    }

    pub fn with_mean(mean: DVector<f64>, sigma: f64, budget: usize, seed: u64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidStepSize(sigma));
        }
        let n = mean.len();
        Ok(CmaState {
            sigma,
            cov: DMatrix::identity(n, n),
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            generation: 0,
            evals_used: 0,
            budget,
            seed,
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            eigen_evals: 0,
            mean,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.evals_used)
    }

    /// Samples up to `batch` candidates from `N(mean, sigma^2 C)`, clipped to
    /// the remaining budget.
    pub fn ask(&mut self, batch: usize) -> Result<Vec<DVector<f64>>> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidStepSize(self.sigma));
        }
        let count = batch.min(self.remaining());
        if count == 0 {
            return Err(Error::BudgetExhausted { used: self.evals_used, budget: self.budget });
        }
        let mut rng = seeding::stream(self.seed, &[seeding::CMA, self.generation]);
        let n = self.dim();
        Ok((0..count)
            .map(|_| {
                let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
                let y = &self.basis * z.component_mul(&self.scales);
                &self.mean + self.sigma * y
            })
            .collect())
    }

    /// Updates the distribution from evaluated candidates; larger fitness
    /// is better, non-finite fitness ranks last.
    pub fn tell(&mut self, candidates: &[DVector<f64>], fitness: &[f64]) -> Result<()> {
        if candidates.len() != fitness.len() || candidates.is_empty() {
            return Err(Error::BatchMismatch { candidates: candidates.len(), fitnesses: fitness.len() });
        }
        let lambda = candidates.len();
        let n = self.dim();
        let r = rates(n, lambda);
        let (w, _) = weights(lambda);
        self.evals_used += lambda;
        self.generation += 1;

        let key = |i: usize| if fitness[i].is_finite() { fitness[i] } else { f64::NEG_INFINITY };
        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
        let flat = order.iter().all(|&i| key(i) == key(order[0]));

        let ys: Vec<DVector<f64>> = order[..r.mu].iter().map(|&i| (&candidates[i] - &self.mean) / self.sigma).collect();
        let mut y_w = DVector::zeros(n);
        if !flat {
            for (wi, y) in w.iter().zip(&ys) {
                y_w.axpy(*wi, y, 1.0);
            }
        }
        self.mean.axpy(self.sigma, &y_w, 1.0);

        // C^{-1/2} y_w = B D^{-1} B^T y_w
        let inv_sqrt_y = &self.basis * (self.basis.transpose() * &y_w).component_div(&self.scales);
        self.p_sigma = (1.0 - r.c_sigma) * &self.p_sigma + (r.c_sigma * (2.0 - r.c_sigma) * r.mu_eff).sqrt() * inv_sqrt_y;
        let nf = n as f64;
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        let ps_norm = self.p_sigma.norm();
        let decay = (1.0 - (1.0 - r.c_sigma).powf(2.0 * self.generation as f64)).sqrt();
        let h_sigma = if ps_norm / decay < (1.4 + 2.0 / (nf + 1.0)) * chi_n { 1.0 } else { 0.0 };

        if !flat {
            self.p_c = (1.0 - r.c_c) * &self.p_c + h_sigma * (r.c_c * (2.0 - r.c_c) * r.mu_eff).sqrt() * &y_w;
            let keep = 1.0 - r.c_1 - r.c_mu + (1.0 - h_sigma) * r.c_1 * r.c_c * (2.0 - r.c_c);
            self.cov *= keep;
            self.cov.ger(r.c_1, &self.p_c, &self.p_c, 1.0);
            for (wi, y) in w.iter().zip(&ys) {
                self.cov.ger(r.c_mu * wi, y, y, 1.0);
            }
        }
        self.sigma *= ((r.c_sigma / r.d_sigma) * (ps_norm / chi_n - 1.0)).exp();

        let lag = (lambda as f64 / ((r.c_1 + r.c_mu) * nf * 10.0)).max(1.0) as usize;
        if !flat && self.evals_used - self.eigen_evals >= lag {
            self.refresh_eigen();
        }
        Ok(())
    }

    fn refresh_eigen(&mut self) {
        self.eigen_evals = self.evals_used;
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let top = eig.eigenvalues.max().max(EIGEN_FLOOR);
        let vals = eig.eigenvalues.map(|v| v.max(top * EIGEN_FLOOR));
        self.scales = vals.map(f64::sqrt);
        self.basis = eig.eigenvectors;
        self.cov = &self.basis * DMatrix::from_diagonal(&vals) * self.basis.transpose();
    }

    pub fn condition_number(&self) -> f64 {
        let max = self.scales.max();
        let min = self.scales.min();
        (max / min).powi(2)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

/// Minimizes `f` from `x0`, stopping when the budget is spent or the best
/// value drops to `target`.
pub fn minimize(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    sigma: f64,
    budget: usize,
    population: Option<usize>,
    target: f64,
    seed: u64,
) -> Result<Minimum> {
    let mut es = CmaState::with_mean(DVector::from_column_slice(x0), sigma, budget, seed)?;
    let lambda = population.unwrap_or_else(|| default_population(x0.len()));
    let mut best = Minimum { x: x0.to_vec(), value: f64::INFINITY, evals: 0 };
    while es.remaining() > 0 && best.value > target {
        let cands = es.ask(lambda)?;
        let vals: Vec<f64> = cands.iter().map(|c| f(c.as_slice())).collect();
        for (c, &v) in cands.iter().zip(&vals) {
            if v < best.value {
                best = Minimum { x: c.as_slice().to_vec(), value: v, evals: 0 };
            }
        }
        let fit: Vec<f64> = vals.iter().map(|v| -v).collect();
        es.tell(&cands, &fit)?;
        if !(es.sigma > 1e-300) {
            break;
        }
    }
    best.evals = es.evals_used;
    Ok(best)
}

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_covariance_near_identity() {
        let mut es = CmaState::new(2, 1.0, 10_000, 3).unwrap();
        let xs = es.ask(10_000).unwrap();
        let mut cov = DMatrix::<f64>::zeros(2, 2);
        for x in &xs {
            cov.ger(1.0 / xs.len() as f64, x, x, 1.0);
        }
        let err = (cov - DMatrix::identity(2, 2)).norm() / 2f64.sqrt();
        assert!(err < 0.1, "{err}");
    }

    #[test]
    fn guards() {
        assert!(matches!(CmaState::new(3, 0.0, 10, 0), Err(Error::InvalidStepSize(_))));
        let mut es = CmaState::new(3, 1.0, 5, 0).unwrap();
        assert_eq!(es.ask(50).unwrap().len(), 5);
        let c = es.ask(5).unwrap();
        es.tell(&c, &[1.0; 5]).unwrap();
        assert!(matches!(es.ask(1), Err(Error::BudgetExhausted { .. })));
        assert!(es.tell(&c, &[1.0; 4]).is_err());
    }

    #[test]
    fn flat_fitness_keeps_mean() {
        let mut es = CmaState::new(4, 0.5, 100, 1).unwrap();
        let c = es.ask(8).unwrap();
        let before = es.mean.clone();
        es.tell(&c, &[2.0; 8]).unwrap();
        assert_eq!(es.mean, before);
        assert_eq!(es.cov, DMatrix::identity(4, 4));
        assert!(es.sigma < 0.5);
    }

    #[test]
    fn nan_ranks_last() {
        let mut es = CmaState::new(1, 1.0, 100, 2).unwrap();
        let c = vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)];
        es.tell(&c, &[f64::NAN, 0.0]).unwrap();
        assert!(es.mean[0] < 0.0);
    }

    #[test]
    fn sphere_converges() {
        let m = minimize(sphere, &[1.0; 10], 1.0, 20_000, None, 1e-8, 7).unwrap();
        assert!(m.value <= 1e-8, "{m:?}");
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut es = CmaState::new(3, 1.0, 100, 4).unwrap();
        let c = es.ask(6).unwrap();
        es.tell(&c, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let mut back = CmaState::from_json(&es.to_json().unwrap()).unwrap();
        assert_eq!(back.ask(6).unwrap(), es.ask(6).unwrap());
    }
}
