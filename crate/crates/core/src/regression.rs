//! Per-node least-squares projections.
//!
//! At node `k` the next value `X_{k+1}` is regressed jointly on
//! `φ_j(s)`, `φ_j(s)ΔW`, `φ_j(s)ΔB` and `φ_j(s)ΔJ`, where `φ_j` are tensor
//! Legendre polynomials in the normalized state. The coefficient functions
//! of the four groups are the continuation value and the three integrands.
//! Factorizations are computed once per node and reused for every target
//! (Picard iterations refit the same design many times).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Functions of the state spanning each coefficient group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Basis {
    /// Tensor Legendre polynomials of total degree `≤ degree`.
    Polynomial { degree: usize },
    /// Continuous piecewise-linear functions with `knots` interior knots at
    /// empirical quantiles, additive across state variables. Extends
    /// linearly beyond the data, which keeps tail estimates sane for kinked
    /// payoffs.
    LinearSpline { knots: usize },
}

impl Basis {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Basis::Polynomial { degree } if degree < 1 => {
                Err(Error::invalid("basis degree must be at least 1"))
            }
            Basis::LinearSpline { knots } if knots > 64 => {
                Err(Error::invalid("at most 64 spline knots are supported"))
            }
            _ => Ok(()),
        }
    }
}

/// Legendre polynomials `P_0..=P_degree` at `x`.
fn legendre(x: f64, degree: usize, out: &mut [f64]) {
    out[0] = 1.0;
    if degree >= 1 {
        out[1] = x;
    }
    for n in 1..degree {
        let nf = n as f64;
        out[n + 1] = ((2.0 * nf + 1.0) * x * out[n] - nf * out[n - 1]) / (nf + 1.0);
    }
}

/// Multi-indices of total degree `≤ degree` over `dims` variables.
fn multi_indices(dims: &[usize], degree: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &cap in dims {
        let mut next = Vec::new();
        for idx in &out {
            let used: usize = idx.iter().sum();
            for e in 0..=cap.min(degree - used.min(degree)) {
                if used + e <= degree {
                    let mut v = idx.clone();
                    v.push(e);
                    next.push(v);
                }
            }
        }
        out = next;
    }
    out.sort_by_key(|v| v.iter().sum::<usize>());
    out
}

fn distinct_count(states: &[&[f64]], n: usize) -> usize {
    let mut rows: Vec<Vec<u64>> = (0..n)
        .map(|p| states.iter().map(|s| s[p].to_bits()).collect())
        .collect();
    rows.sort_unstable();
    rows.dedup();
    rows.len()
}

fn check_finite(states: &[&[f64]], node: usize) -> Result<()> {
    for s in states {
        if let Some(p) = s.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                node,
                path: p,
                what: "regression state",
            });
        }
    }
    Ok(())
}

fn polynomial_columns(states: &[&[f64]], degree: usize, node: usize) -> Result<Vec<Vec<f64>>> {
    check_finite(states, node)?;
    let n = states[0].len();
    // A state that does not vary carries only the constant.
    let mut bounds = Vec::with_capacity(states.len());
    let mut caps = Vec::with_capacity(states.len());
    for s in states {
        let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        caps.push(if hi > lo { degree } else { 0 });
        bounds.push((0.5 * (hi + lo), 0.5 * (hi - lo)));
    }
    let terms = multi_indices(&caps, degree);
    let mut phi = vec![vec![0.0; n]; terms.len()];
    let mut leg: Vec<Vec<f64>> = vec![vec![0.0; degree + 1]; states.len()];
    for p in 0..n {
        for (d, s) in states.iter().enumerate() {
            let (c, h) = bounds[d];
            let x = if h > 0.0 { ((s[p] - c) / h).clamp(-1.0, 1.0) } else { 0.0 };
            legendre(x, degree, &mut leg[d]);
        }
        for (j, idx) in terms.iter().enumerate() {
            phi[j][p] = idx.iter().enumerate().map(|(d, &e)| leg[d][e]).product();
        }
    }
    Ok(phi)
}

/// Interior knots at equally spaced quantiles, deduplicated.
fn quantile_knots(s: &[f64], knots: usize) -> Vec<f64> {
    let mut sorted = s.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let mut out: Vec<f64> = (1..=knots)
        .map(|i| sorted[i * (sorted.len() - 1) / (knots + 1)])
        .filter(|&k| k > lo && k < hi)
        .collect();
    out.dedup();
    out
}

fn spline_columns(states: &[&[f64]], knots: usize, distinct: usize, node: usize) -> Result<Vec<Vec<f64>>> {
    check_finite(states, node)?;
    let n = states[0].len();
    let mut phi = vec![vec![1.0; n]];
    for s in states {
        let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            continue;
        }
        let scale = hi - lo;
        phi.push(s.iter().map(|v| (v - lo) / scale).collect());
        for k in quantile_knots(s, knots.min(distinct.saturating_sub(2))) {
            phi.push(s.iter().map(|v| ((v - k) / scale).max(0.0)).collect());
        }
    }
    Ok(phi)
}

/// Factorized regression design of one node.
#[derive(Clone, Debug)]
pub struct NodeRegression {
    n: usize,
    /// Basis columns `φ_j`, each of length `n`.
    phi: Vec<Vec<f64>>,
    /// Nonzero martingale increments multiplying the basis, in group order.
    incs: Vec<Vec<f64>>,
    scales: Vec<f64>,
    r: DMatrix<f64>,
    penalty: f64,
}

impl NodeRegression {
    /// `states` are the regression variables at the node; `incs` the
    /// increments whose integrands are wanted (caller drops zero columns).
    pub fn build(
        states: &[&[f64]],
        incs: Vec<Vec<f64>>,
        basis: Basis,
        ridge: f64,
        node: usize,
        t: f64,
    ) -> Result<Self> {
        let n = states.first().map_or(0, |s| s.len());
        if n == 0 {
            return Err(Error::RankDeficient {
                node,
                t,
                detail: "no paths".into(),
            });
        }
        let distinct = distinct_count(states, n);
        let phi = match basis {
            Basis::Polynomial { degree } => polynomial_columns(states, degree.min(distinct - 1), node)?,
            Basis::LinearSpline { knots } => spline_columns(states, knots, distinct, node)?,
        };

        let m = phi.len();
        let cols = m * (1 + incs.len());
        let mut reg = Self {
            n,
            phi,
            incs,
            scales: vec![1.0; cols],
            r: DMatrix::zeros(0, 0),
            penalty: ridge * n as f64,
        };
        for c in 0..cols {
            let ss: f64 = (0..n).map(|p| reg.raw(c, p).powi(2)).sum();
            let rms = (ss / n as f64).sqrt();
            reg.scales[c] = if rms > 0.0 { rms } else { 1.0 };
        }
        let sqrt_pen = reg.penalty.sqrt();
        let a = DMatrix::from_fn(n + cols, cols, |i, c| {
            if i < n {
                reg.col(c, i)
            } else if i - n == c {
                sqrt_pen
            } else {
                0.0
            }
        });
        let r = a.qr().r();
        let diag: Vec<f64> = (0..cols).map(|i| r[(i, i)].abs()).collect();
        let max = diag.iter().copied().fold(0.0, f64::max);
        if let Some(i) = diag.iter().position(|&d| !(d > 1e-13 * max)) {
            return Err(Error::RankDeficient {
                node,
                t,
                detail: format!("column {i} of {cols} is linearly dependent"),
            });
        }
        reg.r = r;
        Ok(reg)
    }

    pub fn n_basis(&self) -> usize {
        self.phi.len()
    }

    pub fn n_groups(&self) -> usize {
        1 + self.incs.len()
    }

    fn raw(&self, c: usize, p: usize) -> f64 {
        let m = self.phi.len();
        let (g, j) = (c / m, c % m);
        let v = self.phi[j][p];
        if g == 0 {
            v
        } else {
            v * self.incs[g - 1][p]
        }
    }

    fn col(&self, c: usize, p: usize) -> f64 {
        self.raw(c, p) / self.scales[c]
    }

    fn at_v(&self, v: &[f64]) -> DVector<f64> {
        let cols = self.scales.len();
        DVector::from_fn(cols, |c, _| (0..self.n).map(|p| self.col(c, p) * v[p]).sum())
    }

    fn solve_normal(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let y = self
            .r
            .tr_solve_upper_triangular(rhs)
            .expect("triangular factor is nonsingular");
        self.r
            .solve_upper_triangular(&y)
            .expect("triangular factor is nonsingular")
    }

    /// Fits `target`; returns coefficients per group (continuation first).
    pub fn fit(&self, target: &[f64]) -> Vec<Vec<f64>> {
        let cols = self.scales.len();
        // Semi-normal equations plus one refinement step.
        let mut c = self.solve_normal(&self.at_v(target));
        let resid: Vec<f64> = (0..self.n)
            .map(|p| target[p] - (0..cols).map(|k| self.col(k, p) * c[k]).sum::<f64>())
            .collect();
        let corr = self.at_v(&resid) - &c * self.penalty;
        c += self.solve_normal(&corr);
        let m = self.phi.len();
        (0..self.n_groups())
            .map(|g| (0..m).map(|j| c[g * m + j] / self.scales[g * m + j]).collect())
            .collect()
    }

    /// `Σ_j coef_j φ_j` at path `p`.
    pub fn eval(&self, coef: &[f64], p: usize) -> f64 {
        coef.iter().zip(&self.phi).map(|(c, f)| c * f[p]).sum()
    }
}
