//! Backward solver for `-dX = f dt - Y dW - ∫Z Ñ(dt,dz) - ζ dB`.
//!
//! `Z` is carried through two scalar functionals: `∫Zγℓ` (what every
//! hedging driver consumes) and a pathwise proxy of `‖Z‖²_{L²(ℓ)}` built
//! from the part of `X_{k+1}` left unexplained by the Brownian integrands.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::market::ApproximationKind;
use crate::paths::PathBundle;
pub use crate::regression::Basis;
use crate::regression::NodeRegression;

/// Arguments of a driver evaluation at node `step`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DriverInput {
    pub step: usize,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    /// `∫ Z(z) γ(t,z) ℓ(dz)`
    pub z_gamma: f64,
    /// `∫ Z(z)² ℓ(dz)`
    pub z_norm_sq: f64,
    pub zeta: f64,
}

type EvalFn = dyn Fn(&DriverInput) -> f64 + Send + Sync;

/// Generator `f` with its declared Lipschitz constant.
#[derive(Clone)]
pub struct Driver {
    eval: Arc<EvalFn>,
    lipschitz: f64,
    uses_zeta: bool,
    zero: bool,
}

impl std::fmt::Debug for Driver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Driver")
            .field("lipschitz", &self.lipschitz)
            .field("uses_zeta", &self.uses_zeta)
            .finish_non_exhaustive()
    }
}

const PROBES: usize = 100;
const PROBE_SLACK: f64 = 1e-9;

impl Driver {
    pub fn zero() -> Self {
        Self {
            eval: Arc::new(|_| 0.0),
            lipschitz: 0.0,
            uses_zeta: false,
            zero: true,
        }
    }

    /// Wraps `eval`, probing the Lipschitz bound at random arguments.
    ///
    /// `gamma_norm[k]` is `(∫γ²ℓ)^{1/2}` at step `k`; it converts a change of
    /// `∫Zγℓ` into the smallest compatible change of `‖Z‖`.
    pub fn new<F>(grid: &TimeGrid, lipschitz: f64, uses_zeta: bool, gamma_norm: Vec<f64>, eval: F) -> Result<Self>
    where
        F: Fn(&DriverInput) -> f64 + Send + Sync + 'static,
    {
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(Error::invalid(format!("Lipschitz constant {lipschitz} is not admissible")));
        }
        if gamma_norm.len() != grid.n_steps() {
            return Err(Error::invalid("gamma_norm must have one entry per step"));
        }
        let driver = Self {
            eval: Arc::new(eval),
            lipschitz,
            uses_zeta,
            zero: false,
        };
        driver.probe(grid, &gamma_norm)?;
        Ok(driver)
    }

    fn probe(&self, grid: &TimeGrid, gamma_norm: &[f64]) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let draw = |rng: &mut ChaCha8Rng, step: usize| {
            let u = |rng: &mut ChaCha8Rng| 4.0 * rng.random::<f64>() - 2.0;
            let norm = 2.0 * rng.random::<f64>();
            let gn = gamma_norm[step];
            DriverInput {
                step,
                t: grid.node(step),
                x: u(rng),
                y: u(rng),
                z_gamma: gn * norm * (2.0 * rng.random::<f64>() - 1.0),
                z_norm_sq: norm * norm,
                zeta: if self.uses_zeta { u(rng) } else { 0.0 },
            }
        };
        for _ in 0..PROBES {
            let step = rng.random_range(0..grid.n_steps());
            let a = draw(&mut rng, step);
            let b = draw(&mut rng, step);
            let gn = gamma_norm[step];
            let dz_gamma = if gn > 0.0 {
                (a.z_gamma - b.z_gamma).abs() / gn
            } else {
                0.0
            };
            let dz = dz_gamma.max((a.z_norm_sq.sqrt() - b.z_norm_sq.sqrt()).abs());
            let bound = self.lipschitz
                * ((a.x - b.x).abs() + (a.y - b.y).abs() + dz + (a.zeta - b.zeta).abs());
            let diff = (self.eval(&a) - self.eval(&b)).abs();
            if !(diff <= bound + PROBE_SLACK) {
                return Err(Error::invalid(format!(
                    "driver violates its Lipschitz constant {}: |Δf| = {diff:.3e} > {bound:.3e} at step {step}",
                    self.lipschitz
                )));
            }
        }
        Ok(())
    }

    pub fn eval(&self, input: &DriverInput) -> f64 {
        (self.eval)(input)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn uses_zeta(&self) -> bool {
        self.uses_zeta
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }
}

/// Weight `β` of the exponential norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaRule {
    /// `6C² + 1`
    Contraction,
    /// `8C² + 1`
    Approximation,
    Fixed(f64),
}

impl BetaRule {
    pub fn value(&self, lipschitz: f64) -> f64 {
        let c2 = lipschitz * lipschitz;
        match *self {
            BetaRule::Contraction => 6.0 * c2 + 1.0,
            BetaRule::Approximation => 8.0 * c2 + 1.0,
            BetaRule::Fixed(b) => b,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolveMode {
    OneStepBackward,
    Picard { max_iters: usize, tol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionState {
    /// The discounted price of the variant being solved.
    OwnPrice,
    /// The discounted prices of every variant in the bundle.
    AllVariants,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisSpec {
    pub family: BasisFamily,
    /// Polynomial degree; ignored by splines.
    pub degree: usize,
    /// Interior spline knots; ignored by polynomials.
    pub knots: usize,
    pub state: RegressionState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisFamily {
    Polynomial,
    LinearSpline,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self {
            family: BasisFamily::Polynomial,
            degree: 3,
            knots: 8,
            state: RegressionState::OwnPrice,
        }
    }
}

impl BasisSpec {
    pub fn polynomial(degree: usize) -> Self {
        Self { degree, ..Self::default() }
    }

    pub fn linear_spline(knots: usize) -> Self {
        Self {
            family: BasisFamily::LinearSpline,
            knots,
            ..Self::default()
        }
    }

    pub fn basis(&self) -> Basis {
        match self.family {
            BasisFamily::Polynomial => Basis::Polynomial { degree: self.degree },
            BasisFamily::LinearSpline => Basis::LinearSpline { knots: self.knots },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub beta: BetaRule,
    pub mode: SolveMode,
    pub basis: BasisSpec,
    pub ridge: f64,
    /// One implicit correction sweep of the driver step.
    pub implicit: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: BetaRule::Contraction,
            mode: SolveMode::OneStepBackward,
            basis: BasisSpec::default(),
            ridge: 1e-8,
            implicit: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        self.basis.basis().validate()?;
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(Error::invalid(format!("ridge must be nonnegative, got {}", self.ridge)));
        }
        if let BetaRule::Fixed(b) = self.beta {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::invalid(format!("beta must be nonnegative, got {b}")));
            }
        }
        if let SolveMode::Picard { max_iters, tol } = self.mode {
            if max_iters == 0 || !(tol >= 0.0) {
                return Err(Error::invalid("Picard mode needs max_iters ≥ 1 and tol ≥ 0"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PicardStep {
    pub iteration: usize,
    pub distance: f64,
    /// `distance / previous distance`; `NaN` on the first iteration.
    pub ratio: f64,
}

/// Grid-indexed solution. Node arrays are `[node][path]`; `x` has
/// `n + 1` nodes, the integrands `n`.
#[derive(Clone, Debug)]
pub struct BsdejSolution {
    pub kind: ApproximationKind,
    pub grid: TimeGrid,
    pub n_paths: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z_gamma: Vec<f64>,
    pub z_norm_sq: Vec<f64>,
    pub zeta: Vec<f64>,
    /// `X_{k+1} - C_k - Y_kΔW - ζ_kΔB`, the jump-driven part of the increment.
    pub jump_part: Vec<f64>,
    /// Root-mean-square regression residual per step.
    pub residual_rms: Vec<f64>,
    pub picard: Vec<PicardStep>,
    pub beta: f64,
    pub lipschitz: f64,
    pub uses_zeta: bool,
}

impl BsdejSolution {
    pub fn x_at(&self, node: usize) -> &[f64] {
        &self.x[node * self.n_paths..(node + 1) * self.n_paths]
    }

    fn step_slice<'a>(&self, v: &'a [f64], step: usize) -> &'a [f64] {
        &v[step * self.n_paths..(step + 1) * self.n_paths]
    }

    pub fn y_at(&self, step: usize) -> &[f64] {
        self.step_slice(&self.y, step)
    }

    pub fn z_gamma_at(&self, step: usize) -> &[f64] {
        self.step_slice(&self.z_gamma, step)
    }

    pub fn zeta_at(&self, step: usize) -> &[f64] {
        self.step_slice(&self.zeta, step)
    }

    pub fn x0(&self) -> f64 {
        mean(self.x_at(0))
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

struct Design {
    regs: Vec<NodeRegression>,
    /// Group index of (W, B, J) per node, if present.
    groups: Vec<[Option<usize>; 3]>,
}

fn build_design(
    bundle: &PathBundle,
    kind: ApproximationKind,
    uses_zeta: bool,
    config: &SolverConfig,
) -> Result<Design> {
    let kp = bundle.kind(kind)?;
    let grid = bundle.grid();
    let n = grid.n_steps();
    let mut regs = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n);
    let all: Vec<_> = bundle.kinds().collect();
    for k in 0..n {
        let states: Vec<&[f64]> = match config.basis.state {
            RegressionState::OwnPrice => vec![bundle.price(kp, k)],
            RegressionState::AllVariants => all
                .iter()
                .map(|&kk| bundle.kind(kk).map(|p| bundle.price(p, k)))
                .collect::<Result<_>>()?,
        };
        let candidates = [
            (bundle.dw(k), true),
            (bundle.db(k), uses_zeta),
            (bundle.dj(kp, k), true),
        ];
        let mut incs = Vec::new();
        let mut g = [None; 3];
        for (i, (inc, wanted)) in candidates.into_iter().enumerate() {
            if wanted && inc.iter().any(|&v| v != 0.0) {
                incs.push(inc.to_vec());
                g[i] = Some(incs.len());
            }
        }
        regs.push(NodeRegression::build(
            &states,
            incs,
            config.basis.basis(),
            config.ridge,
            k,
            grid.node(k),
        )?);
        groups.push(g);
    }
    Ok(Design { regs, groups })
}

/// Pathwise arrays produced by one backward pass.
struct Pass {
    x: Vec<f64>,
    c: Vec<f64>,
    y: Vec<f64>,
    z_gamma: Vec<f64>,
    z_norm_sq: Vec<f64>,
    zeta: Vec<f64>,
    jump_part: Vec<f64>,
    residual_rms: Vec<f64>,
}

/// Frozen driver arguments for a Picard sweep.
struct Frozen<'a> {
    c: &'a [f64],
    y: &'a [f64],
    z_gamma: &'a [f64],
    z_norm_sq: &'a [f64],
    zeta: &'a [f64],
}

fn backward_pass(
    bundle: &PathBundle,
    kind: ApproximationKind,
    terminal: &[f64],
    driver: &Driver,
    design: &Design,
    implicit: bool,
    frozen: Option<&Frozen>,
) -> Result<Pass> {
    let kp = bundle.kind(kind)?;
    let grid = bundle.grid();
    let n = grid.n_steps();
    let np = bundle.n_paths();
    let dt = grid.dt();
    let mut pass = Pass {
        x: vec![0.0; (n + 1) * np],
        c: vec![0.0; n * np],
        y: vec![0.0; n * np],
        z_gamma: vec![0.0; n * np],
        z_norm_sq: vec![0.0; n * np],
        zeta: vec![0.0; n * np],
        jump_part: vec![0.0; n * np],
        residual_rms: vec![0.0; n],
    };
    pass.x[n * np..].copy_from_slice(terminal);
    for k in (0..n).rev() {
        let t = grid.node(k);
        let (head, tail) = pass.x.split_at_mut((k + 1) * np);
        let next = &tail[..np];
        let cur = &mut head[k * np..];
        let range = k * np..(k + 1) * np;
        let dw = bundle.dw(k);
        let db = bundle.db(k);
        let dj = bundle.dj(kp, k);
        let jump_rate = kp.jump_var[k] / dt;

        let constant = next.iter().all(|&v| v.to_bits() == next[0].to_bits());
        let fit = (!constant).then(|| design.regs[k].fit(next));
        let reg = &design.regs[k];
        let [gw, gb, gj] = design.groups[k];
        let coef = |g: Option<usize>, p: usize| match (&fit, g) {
            (Some(f), Some(g)) => reg.eval(&f[g], p),
            _ => 0.0,
        };
        let mut ss = 0.0;
        for p in 0..np {
            let c = match &fit {
                Some(f) => reg.eval(&f[0], p),
                None => next[0],
            };
            let y = coef(gw, p);
            let zeta = coef(gb, p);
            let u = coef(gj, p);
            let e = next[p] - c - y * dw[p] - zeta * db[p];
            ss += (e - u * dj[p]).powi(2);
            let z_gamma = u * jump_rate;
            let z_norm_sq = e * e / dt;
            let i = range.start + p;
            let input = match frozen {
                Some(fz) => DriverInput {
                    step: k,
                    t,
                    x: fz.c[i],
                    y: fz.y[i],
                    z_gamma: fz.z_gamma[i],
                    z_norm_sq: fz.z_norm_sq[i],
                    zeta: fz.zeta[i],
                },
                None => DriverInput {
                    step: k,
                    t,
                    x: c,
                    y,
                    z_gamma,
                    z_norm_sq,
                    zeta,
                },
            };
            let mut x = if driver.zero { c } else { c + driver.eval(&input) * dt };
            if implicit && frozen.is_none() && !driver.zero {
                x = c + driver.eval(&DriverInput { x, ..input }) * dt;
            }
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    node: k,
                    path: p,
                    what: "value process",
                });
            }
            cur[p] = x;
            pass.c[i] = c;
            pass.y[i] = y;
            pass.zeta[i] = zeta;
            pass.z_gamma[i] = z_gamma;
            pass.z_norm_sq[i] = z_norm_sq;
            pass.jump_part[i] = e;
        }
        pass.residual_rms[k] = (ss / np as f64).sqrt();
    }
    Ok(pass)
}

fn check_inputs(bundle: &PathBundle, kind: ApproximationKind, terminal: &[f64], config: &SolverConfig) -> Result<()> {
    config.validate()?;
    bundle.kind(kind)?;
    if terminal.len() != bundle.n_paths() {
        return Err(Error::invalid(format!(
            "terminal has {} samples but the bundle has {} paths",
            terminal.len(),
            bundle.n_paths()
        )));
    }
    if let Some(p) = terminal.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            node: bundle.grid().n_steps(),
            path: p,
            what: "terminal condition",
        });
    }
    Ok(())
}

fn into_solution(
    pass: Pass,
    bundle: &PathBundle,
    kind: ApproximationKind,
    driver: &Driver,
    config: &SolverConfig,
    picard: Vec<PicardStep>,
) -> BsdejSolution {
    BsdejSolution {
        kind,
        grid: *bundle.grid(),
        n_paths: bundle.n_paths(),
        x: pass.x,
        y: pass.y,
        z_gamma: pass.z_gamma,
        z_norm_sq: pass.z_norm_sq,
        zeta: pass.zeta,
        jump_part: pass.jump_part,
        residual_rms: pass.residual_rms,
        picard,
        beta: config.beta.value(driver.lipschitz()),
        lipschitz: driver.lipschitz(),
        uses_zeta: driver.uses_zeta(),
    }
}

/// Solves backward from `terminal` (samples of `ξ̃` on the bundle's paths).
///
/// At each node `X_{k+1}` is projected on the state basis and its products
/// with `ΔW`, `ΔB` (when the driver uses `ζ`) and `ΔJ`; the driver is then
/// applied explicitly at the continuation value. In Picard mode this
/// delegates to [`picard_solve`].
pub fn solve(
    bundle: &PathBundle,
    kind: ApproximationKind,
    terminal: &[f64],
    driver: &Driver,
    config: &SolverConfig,
) -> Result<BsdejSolution> {
    if let SolveMode::Picard { .. } = config.mode {
        return picard_solve(bundle, kind, terminal, driver, config);
    }
    check_inputs(bundle, kind, terminal, config)?;
    let design = build_design(bundle, kind, driver.uses_zeta(), config)?;
    let pass = backward_pass(bundle, kind, terminal, driver, &design, config.implicit, None)?;
    Ok(into_solution(pass, bundle, kind, driver, config, Vec::new()))
}

/// Fixed-point iteration: each sweep evaluates the driver at the previous
/// iterate, so every sweep is a pure conditional expectation.
///
/// Starts from zero processes and stops once the `β`-weighted distance
/// between successive iterates falls below `tol` (relative to the size of
/// the iterate).
pub fn picard_solve(
    bundle: &PathBundle,
    kind: ApproximationKind,
    terminal: &[f64],
    driver: &Driver,
    config: &SolverConfig,
) -> Result<BsdejSolution> {
    check_inputs(bundle, kind, terminal, config)?;
    let (max_iters, tol) = match config.mode {
        SolveMode::Picard { max_iters, tol } => (max_iters, tol),
        SolveMode::OneStepBackward => {
            return Err(Error::invalid("picard_solve needs SolveMode::Picard"));
        }
    };
    let design = build_design(bundle, kind, driver.uses_zeta(), config)?;
    let beta = config.beta.value(driver.lipschitz());
    let grid = bundle.grid();
    let n = grid.n_steps();
    let np = bundle.n_paths();

    if driver.is_zero() {
        let pass = backward_pass(bundle, kind, terminal, driver, &design, false, None)?;
        let trace = vec![PicardStep {
            iteration: 1,
            distance: 0.0,
            ratio: f64::NAN,
        }];
        return Ok(into_solution(pass, bundle, kind, driver, config, trace));
    }

    let zeros = vec![0.0; n * np];
    let mut prev: Option<Pass> = None;
    let mut trace: Vec<PicardStep> = Vec::new();
    let mut bad_streak = 0;
    for it in 1..=max_iters {
        let frozen = match &prev {
            Some(p) => Frozen {
                c: &p.c,
                y: &p.y,
                z_gamma: &p.z_gamma,
                z_norm_sq: &p.z_norm_sq,
                zeta: &p.zeta,
            },
            None => Frozen {
                c: &zeros,
                y: &zeros,
                z_gamma: &zeros,
                z_norm_sq: &zeros,
                zeta: &zeros,
            },
        };
        let pass = backward_pass(bundle, kind, terminal, driver, &design, false, Some(&frozen))?;
        let (distance, size) = match &prev {
            Some(p) => (pass_distance(&pass, Some(p), grid, np, beta), pass_distance(&pass, None, grid, np, beta)),
            None => {
                let d = pass_distance(&pass, None, grid, np, beta);
                (d, d)
            }
        };
        let ratio = trace.last().map_or(f64::NAN, |s| distance / s.distance);
        trace.push(PicardStep {
            iteration: it,
            distance,
            ratio,
        });
        let converged = distance <= tol * size.max(1.0);
        // Ratios of distances at rounding level carry no information.
        if !converged && ratio >= 1.0 && distance > 1e-12 * size.max(1.0) {
            bad_streak += 1;
            if bad_streak >= 3 {
                return Err(Error::NotContracting { iteration: it, ratio });
            }
        } else {
            bad_streak = 0;
        }
        prev = Some(pass);
        if converged {
            break;
        }
    }
    let pass = prev.expect("at least one iteration");
    Ok(into_solution(pass, bundle, kind, driver, config, trace))
}

/// `β`-norm of the difference of two passes (or of one pass when `b` is `None`).
fn pass_distance(a: &Pass, b: Option<&Pass>, grid: &TimeGrid, np: usize, beta: f64) -> f64 {
    let dt = grid.dt();
    let mut total = 0.0;
    for k in 0..grid.n_steps() {
        let w = (beta * grid.node(k)).exp() * dt;
        let r = k * np..(k + 1) * np;
        let mut s = 0.0;
        for i in r {
            let d = |u: &Vec<f64>, v: Option<&Vec<f64>>| u[i] - v.map_or(0.0, |v| v[i]);
            let dx = d(&a.x, b.map(|b| &b.x));
            let dy = d(&a.y, b.map(|b| &b.y));
            let de = d(&a.jump_part, b.map(|b| &b.jump_part));
            let dz = d(&a.zeta, b.map(|b| &b.zeta));
            s += dx * dx + dy * dy + de * de / dt + dz * dz;
        }
        total += w * s;
    }
    (total / np as f64).sqrt()
}

/// Discrete `β`-weighted norms, left-endpoint rule in time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BetaNorms {
    pub beta: f64,
    pub x_norm: f64,
    pub y_norm: f64,
    pub z_norm: f64,
    pub zeta_norm: f64,
    /// `E[e^{βT} max_k X_k²]`
    pub sup_norm: f64,
}

pub fn beta_norms(solution: &BsdejSolution, beta: f64) -> BetaNorms {
    let grid = &solution.grid;
    let np = solution.n_paths;
    let dt = grid.dt();
    let weighted = |v: &[f64]| {
        (0..grid.n_steps())
            .map(|k| {
                let s: f64 = v[k * np..(k + 1) * np].iter().map(|a| a * a).sum();
                (beta * grid.node(k)).exp() * dt * s
            })
            .sum::<f64>()
            / np as f64
    };
    let z_norm = (0..grid.n_steps())
        .map(|k| {
            let s: f64 = solution.z_norm_sq[k * np..(k + 1) * np].iter().sum();
            (beta * grid.node(k)).exp() * dt * s
        })
        .sum::<f64>()
        / np as f64;
    let sup = (0..np)
        .map(|p| {
            (0..=grid.n_steps())
                .map(|k| solution.x[k * np + p].powi(2))
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / np as f64;
    BetaNorms {
        beta,
        x_norm: weighted(&solution.x),
        y_norm: weighted(&solution.y),
        z_norm,
        zeta_norm: weighted(&solution.zeta),
        sup_norm: (beta * grid.horizon()).exp() * sup,
    }
}

/// Outcome of the a-priori estimate `‖X‖² + ‖Y‖² + ‖Z‖² (+ ‖ζ‖²) ≤ C E[ξ²]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AprioriReport {
    pub beta: f64,
    pub lhs: f64,
    pub terminal_second_moment: f64,
    /// `C`; infinite when `β` is too small for the estimate to apply.
    pub constant: f64,
    pub ratio: f64,
    pub holds: bool,
    pub norms: BetaNorms,
}

/// Checks the a-priori bound with the constant from the energy estimate.
///
/// Itô on `e^{βt}X²` with `2C|X|Σ|integrands| ≤ kX² + (m C²/k) Σ integrands²`
/// (`m` integrands, `k = 2mC²`) leaves `min(β - 2C - 2mC², ½)` in front of
/// the norms, hence `C_bound = e^{βT} / min(β - 2C - 2mC², ½)`.
pub fn apriori_bound_check(solution: &BsdejSolution, terminal: &[f64]) -> AprioriReport {
    let beta = solution.beta;
    let c = solution.lipschitz;
    let m = if solution.uses_zeta { 3.0 } else { 2.0 };
    let coef = (beta - 2.0 * c - 2.0 * m * c * c).min(0.5);
    let constant = if coef > 0.0 {
        (beta * solution.grid.horizon()).exp() / coef
    } else {
        f64::INFINITY
    };
    let norms = beta_norms(solution, beta);
    let lhs = norms.x_norm + norms.y_norm + norms.z_norm + norms.zeta_norm;
    let e2 = terminal.iter().map(|v| v * v).sum::<f64>() / terminal.len() as f64;
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / (constant * e2) };
    AprioriReport {
        beta,
        lhs,
        terminal_second_moment: e2,
        constant,
        ratio,
        holds: ratio <= 1.0,
        norms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{Atom, CoefficientSpec, JumpSpec, MarkFactor, MarketModel, Measure};
    use crate::paths::{simulate, SimConfig};

    fn bundle(n_paths: usize, n_steps: usize) -> PathBundle {
        let jump = JumpSpec::new(
            Measure::Atoms {
                atoms: vec![Atom {
                    mark: 0.4,
                    intensity: 1.0,
                }],
            },
            MarkFactor::Identity,
        )
        .unwrap();
        let m = MarketModel::new(jump, CoefficientSpec::constant(0.03, 0.2, 0.0, 0.3), 1.0, 1.0).unwrap();
        let grid = TimeGrid::new(1.0, n_steps).unwrap();
        simulate(&m, &[ApproximationKind::ORIGINAL], &grid, n_paths, &SimConfig::new(21)).unwrap()
    }

    fn linear(grid: &TimeGrid, r: f64) -> Driver {
        Driver::new(grid, r, false, vec![1.0; grid.n_steps()], move |i| -r * i.x).unwrap()
    }

    #[test]
    fn constant_terminal_zero_driver() {
        let b = bundle(500, 5);
        let sol = solve(&b, ApproximationKind::ORIGINAL, &vec![2.5; 500], &Driver::zero(), &SolverConfig::default()).unwrap();
        assert!(sol.x.iter().all(|&v| v == 2.5));
        assert!(sol.y.iter().chain(&sol.z_gamma).chain(&sol.zeta).all(|&v| v == 0.0));
    }

    #[test]
    fn discounting_driver() {
        let b = bundle(200, 50);
        let d = linear(b.grid(), 0.05);
        let sol = solve(&b, ApproximationKind::ORIGINAL, &vec![1.0; 200], &d, &SolverConfig::default()).unwrap();
        assert!((sol.x0() - (-0.05f64).exp()).abs() < 2e-3);
    }

    #[test]
    fn lipschitz_probe_rejects_understated_constant() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let r = Driver::new(&grid, 0.1, false, vec![1.0; 4], |i| -i.y);
        assert!(r.is_err());
    }

    #[test]
    fn beta_norms_closed_forms() {
        let b = bundle(10, 1000);
        let ones = vec![1.0; 10];
        let sol = solve(&b, ApproximationKind::ORIGINAL, &ones, &Driver::zero(), &SolverConfig::default()).unwrap();
        let n0 = beta_norms(&sol, 0.0);
        assert!((n0.x_norm - 1.0).abs() < 1e-12);
        assert!((n0.sup_norm - 1.0).abs() < 1e-12);
        let n1 = beta_norms(&sol, 1.0);
        // left Riemann sum of e^t on [0,1] with h = 1e-3
        let h = 1e-3f64;
        let left = (1.0f64.exp() - 1.0) * h / (h.exp() - 1.0);
        assert!((n1.x_norm - left).abs() < 1e-9);
        assert!((n1.x_norm - (1.0f64.exp() - 1.0)).abs() < 1e-3);
        let zeros = solve(&b, ApproximationKind::ORIGINAL, &vec![0.0; 10], &Driver::zero(), &SolverConfig::default()).unwrap();
        let nz = beta_norms(&zeros, 2.0);
        assert_eq!([nz.x_norm, nz.y_norm, nz.z_norm, nz.zeta_norm, nz.sup_norm], [0.0; 5]);
        let rep = apriori_bound_check(&zeros, &vec![0.0; 10]);
        assert_eq!(rep.ratio, 0.0);
    }

    #[test]
    fn picard_matches_direct_solve() {
        let b = bundle(2000, 20);
        let xi: Vec<f64> = b
            .price(b.kind(ApproximationKind::ORIGINAL).unwrap(), 20)
            .iter()
            .map(|s| (s - 1.0f64).max(0.0))
            .collect();
        let d = linear(b.grid(), 0.5);
        let direct = solve(&b, ApproximationKind::ORIGINAL, &xi, &d, &SolverConfig::default()).unwrap();
        let cfg = SolverConfig {
            mode: SolveMode::Picard { max_iters: 60, tol: 1e-15 },
            ..SolverConfig::default()
        };
        let fixed = picard_solve(&b, ApproximationKind::ORIGINAL, &xi, &d, &cfg).unwrap();
        let gap = direct
            .x
            .iter()
            .zip(&fixed.x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-12, "gap {gap}");
        assert!(fixed.picard.iter().skip(1).all(|s| s.ratio < 1.0));
    }

    #[test]
    fn picard_zero_driver_single_iteration() {
        let b = bundle(300, 5);
        let cfg = SolverConfig {
            mode: SolveMode::Picard { max_iters: 10, tol: 1e-12 },
            ..SolverConfig::default()
        };
        let xi = vec![1.0; 300];
        let sol = picard_solve(&b, ApproximationKind::ORIGINAL, &xi, &Driver::zero(), &cfg).unwrap();
        assert_eq!(sol.picard.len(), 1);
        assert_eq!(sol.picard[0].distance, 0.0);
    }

    #[test]
    fn tower_property_zero_driver() {
        let b = bundle(4000, 10);
        let kp = b.kind(ApproximationKind::ORIGINAL).unwrap();
        let xi: Vec<f64> = b.price(kp, 10).iter().map(|s| (s - 1.0f64).max(0.0)).collect();
        let sol = solve(&b, ApproximationKind::ORIGINAL, &xi, &Driver::zero(), &SolverConfig::default()).unwrap();
        let m = mean(&xi);
        let sd = (xi.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 3999.0).sqrt();
        for k in 0..=10 {
            let d = (mean(sol.x_at(k)) - m).abs();
            assert!(d < 3.0 * sd / 4000f64.sqrt(), "node {k}: {d} vs {}", sd / 4000f64.sqrt());
        }
        assert_eq!(sol.x_at(10), &xi[..]);
    }

    #[test]
    fn rejects_mismatched_terminal() {
        let b = bundle(10, 3);
        let r = solve(&b, ApproximationKind::ORIGINAL, &[1.0; 9], &Driver::zero(), &SolverConfig::default());
        assert!(r.is_err());
        let mut xi = vec![1.0; 10];
        xi[4] = f64::NAN;
        let r = solve(&b, ApproximationKind::ORIGINAL, &xi, &Driver::zero(), &SolverConfig::default());
        assert!(matches!(r, Err(Error::NonFinite { path: 4, .. })));
    }
}
