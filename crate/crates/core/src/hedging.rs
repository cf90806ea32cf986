//! Locally risk-minimizing and mean-variance hedges from BSDEJ solutions.
//!
//! The discounted value `Ṽ` solves a linear BSDEJ whose driver is
//! `-h (Y σ_W + ζ σ_B + ∫Zγℓ)`; the amount invested in the asset is the
//! projection `π̃ = (Y σ_W + ζ σ_B + ∫Zγℓ) / κ`, and the orthogonal part
//! `φ` is whatever the hedge leaves unexplained.

use serde::{Deserialize, Serialize};

use crate::bsdej::{self, mean, BsdejSolution, Driver, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::market::{ApproximationKind, KindParams, MarketModel};
use crate::paths::{claim_payoff, PathBundle};

pub use crate::paths::Payoff;

/// A European claim on the terminal price.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContingentClaim {
    #[serde(flatten)]
    pub payoff: Payoff,
    #[serde(default)]
    pub label: String,
}

impl ContingentClaim {
    pub fn new(payoff: Payoff, label: impl Into<String>) -> Self {
        Self {
            payoff,
            label: label.into(),
        }
    }

    pub fn call(strike: f64) -> Self {
        Self::new(Payoff::Call { strike }, format!("call K={strike}"))
    }

    pub fn identity() -> Self {
        Self::new(Payoff::Identity, "underlying")
    }

    pub fn constant(value: f64) -> Self {
        Self::new(Payoff::Constant { value }, format!("constant {value}"))
    }
}

/// Per-step coefficients of the hedging problem of one variant.
#[derive(Clone, Debug, PartialEq)]
pub struct HedgeCoefficients {
    pub kind: ApproximationKind,
    pub dt: f64,
    pub excess: Vec<f64>,
    pub w_vol: Vec<f64>,
    pub b_vol: Vec<f64>,
    /// Second moment of the jump martingale per unit time.
    pub jump_rate: Vec<f64>,
    pub kappa: Vec<f64>,
    pub h: Vec<f64>,
}

impl HedgeCoefficients {
    fn assemble(
        kind: ApproximationKind,
        dt: f64,
        excess: Vec<f64>,
        w_vol: Vec<f64>,
        b_vol: Vec<f64>,
        jump_rate: Vec<f64>,
        kappa: Vec<f64>,
    ) -> Result<Self> {
        let h = kappa
            .iter()
            .zip(&excess)
            .enumerate()
            .map(|(k, (&kap, &e))| {
                if kap > 0.0 {
                    Ok(e / kap)
                } else {
                    Err(Error::DegenerateModel(format!("{kind}: kappa = {kap} at step {k}")))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            kind,
            dt,
            excess,
            w_vol,
            b_vol,
            jump_rate,
            kappa,
            h,
        })
    }

    /// Coefficients with the continuous-time `κ` of the variant.
    pub fn from_model(model: &MarketModel, kind: ApproximationKind, grid: &TimeGrid, reference_epsilon: f64) -> Result<Self> {
        let p = KindParams::resolve(model, kind, reference_epsilon)?;
        let ts: Vec<f64> = (0..grid.n_steps()).map(|k| grid.node(k)).collect();
        Self::assemble(
            kind,
            grid.dt(),
            ts.iter().map(|&t| model.excess(t)).collect(),
            ts.iter().map(|&t| p.w_vol(model, t)).collect(),
            ts.iter().map(|&t| p.b_vol(model, t)).collect(),
            ts.iter()
                .map(|&t| model.gamma_tilde(t).powi(2) * (p.residual_var + p.tail))
                .collect(),
            ts.iter().map(|&t| p.kappa(model, t)).collect(),
        )
    }

    /// Coefficients matching the bundle's increments, with
    /// `κ = σ_W² + σ_B² + E[ΔJ²]/Δt` per step.
    pub fn from_bundle(bundle: &PathBundle, kind: ApproximationKind) -> Result<Self> {
        let kp = bundle.kind(kind)?;
        let dt = bundle.grid().dt();
        let jump_rate: Vec<f64> = kp.jump_var.iter().map(|v| v / dt).collect();
        let kappa = (0..kp.w_vol.len())
            .map(|k| kp.w_vol[k].powi(2) + kp.b_vol[k].powi(2) + jump_rate[k])
            .collect();
        Self::assemble(
            kind,
            dt,
            kp.excess.clone(),
            kp.w_vol.clone(),
            kp.b_vol.clone(),
            jump_rate,
            kappa,
        )
    }

    /// `max √(2κ) |h|`, the Lipschitz constant of the hedging driver.
    pub fn lipschitz(&self) -> f64 {
        self.kappa
            .iter()
            .zip(&self.h)
            .map(|(k, h)| (2.0 * k).sqrt() * h.abs())
            .fold(0.0, f64::max)
    }
}

/// The driver `f = -h (y σ_W + ζ σ_B + ∫Zγℓ)` of the discounted value.
pub fn fs_driver(coeffs: &HedgeCoefficients, grid: &TimeGrid) -> Result<Driver> {
    if coeffs.h.iter().all(|&h| h == 0.0) {
        return Ok(Driver::zero());
    }
    let uses_zeta = coeffs.b_vol.iter().any(|&b| b != 0.0);
    let gamma_norm = coeffs.jump_rate.iter().map(|r| r.sqrt()).collect();
    let c = coeffs.clone();
    Driver::new(grid, coeffs.lipschitz(), uses_zeta, gamma_norm, move |i| {
        let k = i.step;
        -c.h[k] * (i.y * c.w_vol[k] + i.zeta * c.b_vol[k] + i.z_gamma)
    })
}

/// `π̃ = (Y σ_W + ζ σ_B + ∫Zγℓ) / κ`, `[step][path]`.
pub fn extract_pi(solution: &BsdejSolution, coeffs: &HedgeCoefficients) -> Result<Vec<f64>> {
    let np = solution.n_paths;
    let n = solution.grid.n_steps();
    let mut pi = vec![0.0; n * np];
    for k in 0..n {
        let kap = coeffs.kappa[k];
        if !(kap > 0.0) {
            return Err(Error::DegenerateModel(format!("kappa = {kap} at step {k}")));
        }
        let (y, z, zeta) = (solution.y_at(k), solution.z_gamma_at(k), solution.zeta_at(k));
        for p in 0..np {
            pi[k * np + p] = (y[p] * coeffs.w_vol[k] + zeta[p] * coeffs.b_vol[k] + z[p]) / kap;
        }
    }
    Ok(pi)
}

/// Orthogonal component and the node-wise orthogonality diagnostic.
#[derive(Clone, Debug)]
pub struct PhiResult {
    /// `[node][path]`, zero at the first node.
    pub phi: Vec<f64>,
    /// `mean(Δφ ΔM) / Δt` per step.
    pub orth_residual: Vec<f64>,
    /// Standard error of `orth_residual`.
    pub orth_stderr: Vec<f64>,
}

/// `φ_{k+1} = φ_k + ΔṼ_k - (π̃_k / S̃_k) ΔS̃_k`, so that
/// `Ṽ - Ṽ(0) - Σ χ ΔS̃ - φ = 0` holds by construction.
pub fn extract_phi(solution: &BsdejSolution, pi: &[f64], bundle: &PathBundle) -> Result<PhiResult> {
    let kp = bundle.kind(solution.kind)?;
    let np = solution.n_paths;
    let n = solution.grid.n_steps();
    let dt = solution.grid.dt();
    let mut phi = vec![0.0; (n + 1) * np];
    let mut orth_residual = vec![0.0; n];
    let mut orth_stderr = vec![0.0; n];
    let mut prod = vec![0.0; np];
    for k in 0..n {
        let (s0, s1) = (bundle.price(kp, k), bundle.price(kp, k + 1));
        let (v0, v1) = (solution.x_at(k), solution.x_at(k + 1));
        for p in 0..np {
            let ds = s1[p] - s0[p];
            let chi = pi[k * np + p] / s0[p];
            let dphi = (v1[p] - v0[p]) - chi * ds;
            phi[(k + 1) * np + p] = phi[k * np + p] + dphi;
            let dm = ds / s0[p] - kp.excess[k] * dt;
            prod[p] = dphi * dm / dt;
        }
        let m = mean(&prod);
        let var = if np > 1 {
            prod.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (np - 1) as f64
        } else {
            0.0
        };
        orth_residual[k] = m;
        orth_stderr[k] = (var / np as f64).sqrt();
    }
    Ok(PhiResult {
        phi,
        orth_residual,
        orth_stderr,
    })
}

/// Mean-variance wealth `Υ̃_k = π̃_k + h_k (Ṽ_k - Ṽ_0 - G_k)` with the gain
/// `G_k = Σ_{j<k} (Υ̃_j / S̃_j) ΔS̃_j`, `[step][path]`.
pub fn mean_variance_wealth(
    solution: &BsdejSolution,
    pi: &[f64],
    bundle: &PathBundle,
    coeffs: &HedgeCoefficients,
) -> Result<Vec<f64>> {
    let kp = bundle.kind(solution.kind)?;
    let np = solution.n_paths;
    let n = solution.grid.n_steps();
    let mut ups = vec![0.0; n * np];
    let v0 = solution.x_at(0);
    for p in 0..np {
        let mut gain = 0.0;
        for k in 0..n {
            let s = bundle.price(kp, k)[p];
            if !(s > 0.0) {
                return Err(Error::NonFinite {
                    node: k,
                    path: p,
                    what: "nonpositive price in wealth recursion",
                });
            }
            let u = pi[k * np + p] + coeffs.h[k] * (solution.x_at(k)[p] - v0[p] - gain);
            ups[k * np + p] = u;
            gain += u / s * (bundle.price(kp, k + 1)[p] - s);
        }
    }
    Ok(ups)
}

/// `E[(ξ̃ - v0 - Σ (a_k / S̃_k) ΔS̃_k)²]` for wealth amounts `a` (`None` is
/// the zero strategy).
pub fn shortfall(
    bundle: &PathBundle,
    kind: ApproximationKind,
    terminal: &[f64],
    v0: f64,
    amounts: Option<&[f64]>,
) -> Result<f64> {
    let kp = bundle.kind(kind)?;
    let np = bundle.n_paths();
    let n = bundle.grid().n_steps();
    let mut total = 0.0;
    for p in 0..np {
        let mut gain = 0.0;
        if let Some(a) = amounts {
            for k in 0..n {
                let s = bundle.price(kp, k)[p];
                gain += a[k * np + p] / s * (bundle.price(kp, k + 1)[p] - s);
            }
        }
        total += (terminal[p] - v0 - gain).powi(2);
    }
    Ok(total / np as f64)
}

/// Everything the hedging pipeline produces for one variant.
#[derive(Clone, Debug)]
pub struct HedgeResult {
    pub kind: ApproximationKind,
    pub terminal: Vec<f64>,
    pub solution: BsdejSolution,
    pub coefficients: HedgeCoefficients,
    /// `[step][path]`
    pub pi: Vec<f64>,
    /// `π̃ / S̃`, `[step][path]`
    pub chi: Vec<f64>,
    /// `[node][path]`
    pub phi: Vec<f64>,
    /// `φ + Ṽ(0)`, `[node][path]`
    pub cost: Vec<f64>,
    /// `[step][path]`
    pub upsilon: Vec<f64>,
    pub orth_residual: Vec<f64>,
    pub orth_stderr: Vec<f64>,
}

impl HedgeResult {
    pub fn n_paths(&self) -> usize {
        self.solution.n_paths
    }

    pub fn value(&self) -> &[f64] {
        &self.solution.x
    }

    pub fn value_at_zero(&self) -> f64 {
        self.solution.x0()
    }
}

/// Claim → driver → BSDEJ → strategies, on the bundle's paths.
pub fn hedge(
    bundle: &PathBundle,
    kind: ApproximationKind,
    claim: &ContingentClaim,
    config: &SolverConfig,
) -> Result<HedgeResult> {
    let terminal = claim_payoff(bundle, kind, &claim.payoff)?;
    hedge_terminal(bundle, kind, terminal, config)
}

/// As [`hedge`] with precomputed claim samples.
pub fn hedge_terminal(
    bundle: &PathBundle,
    kind: ApproximationKind,
    terminal: Vec<f64>,
    config: &SolverConfig,
) -> Result<HedgeResult> {
    let coeffs = HedgeCoefficients::from_bundle(bundle, kind)?;
    let driver = fs_driver(&coeffs, bundle.grid())?;
    let solution = bsdej::solve(bundle, kind, &terminal, &driver, config)?;
    let pi = extract_pi(&solution, &coeffs)?;
    let np = bundle.n_paths();
    let kp = bundle.kind(kind)?;
    let chi = pi
        .iter()
        .enumerate()
        .map(|(i, v)| v / bundle.price(kp, i / np)[i % np])
        .collect();
    let phi = extract_phi(&solution, &pi, bundle)?;
    let upsilon = mean_variance_wealth(&solution, &pi, bundle, &coeffs)?;
    let v0 = solution.x_at(0);
    let cost = phi
        .phi
        .iter()
        .enumerate()
        .map(|(i, f)| f + v0[i % np])
        .collect();
    Ok(HedgeResult {
        kind,
        terminal,
        solution,
        coefficients: coeffs,
        pi,
        chi,
        phi: phi.phi,
        cost,
        upsilon,
        orth_residual: phi.orth_residual,
        orth_stderr: phi.orth_stderr,
    })
}
