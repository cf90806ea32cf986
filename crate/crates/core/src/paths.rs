//! Coupled simulation of the original price and its approximations.
//!
//! Every variant in a bundle consumes the same Brownian increments and the
//! same jump list; a variant truncated at `ε` simply ignores the marks with
//! `|z| ≤ ε`. Arrays are stored node-major (`[node][path]`) because the
//! backward solver works one node at a time.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::market::{ApproximationKind, JumpSpec, KindParams, KindTag, MarketModel, Measure};
use crate::quad::{self, ABS_TOL};

const STREAM_W: u64 = 0;
const STREAM_B: u64 = 1;
const STREAM_R: u64 = 2;
const STREAM_TIMES: u64 = 3;
const STREAM_MARKS: u64 = 4;

const TABLE_NODES: usize = 4096;

/// Seed and scheduling knobs for [`simulate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    /// Paths per RNG block. Blocks own independent ChaCha streams, so a run
    /// with fewer paths reproduces a prefix of a larger one.
    #[serde(default = "default_block")]
    pub block_size: usize,
    /// Simulation threshold for the original model under infinite activity.
    #[serde(default = "default_reference_epsilon")]
    pub reference_epsilon: f64,
    /// Largest tolerated fraction of paths with a nonpositive price.
    #[serde(default = "default_max_excluded")]
    pub max_excluded_fraction: f64,
}

fn default_block() -> usize {
    500
}
fn default_reference_epsilon() -> f64 {
    1e-3
}
fn default_max_excluded() -> f64 {
    1e-3
}

impl SimConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            block_size: default_block(),
            reference_epsilon: default_reference_epsilon(),
            max_excluded_fraction: default_max_excluded(),
        }
    }

    fn stream(&self, block: usize, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((block as u64) << 3) | id);
        rng
    }
}

/// Draws kept jump marks by inverse CDF (densities) or categorically (atoms).
#[derive(Clone, Debug)]
pub struct MarkSampler {
    rate: f64,
    table: Table,
}

#[derive(Clone, Debug)]
enum Table {
    Empty,
    Atoms { marks: Vec<f64>, cum: Vec<f64> },
    Density { z: Vec<f64>, cdf: Vec<f64> },
}

impl MarkSampler {
    /// Sampler for the marks with `|z| > eps`.
    pub fn new(jump: &JumpSpec, eps: f64) -> Result<Self> {
        let rate = jump.kept_intensity(eps);
        if !rate.is_finite() {
            return Err(Error::invalid(format!(
                "infinitely many jumps above {eps}; use a positive truncation"
            )));
        }
        if rate <= 0.0 {
            return Ok(Self {
                rate: 0.0,
                table: Table::Empty,
            });
        }
        let table = match jump.measure() {
            Measure::Atoms { atoms } => {
                let mut marks = Vec::new();
                let mut cum = Vec::new();
                let mut acc = 0.0;
                for a in atoms.iter().filter(|a| a.mark.abs() > eps) {
                    acc += a.intensity;
                    marks.push(a.mark);
                    cum.push(acc);
                }
                Table::Atoms { marks, cum }
            }
            _ => density_table(jump, eps),
        };
        Ok(Self { rate, table })
    }

    /// `ν_ε`, the intensity of kept jumps.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn sample_mark<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.table {
            Table::Empty => f64::NAN,
            Table::Atoms { marks, cum } => {
                let u = rng.random::<f64>() * cum[cum.len() - 1];
                let i = cum.partition_point(|&c| c <= u).min(marks.len() - 1);
                marks[i]
            }
            Table::Density { z, cdf } => {
                let u = rng.random::<f64>();
                // first node with cdf >= u, so cell i-1..i has positive mass
                let i = cdf.partition_point(|&c| c < u).clamp(1, cdf.len() - 1);
                let (f0, f1) = (cdf[i - 1], cdf[i]);
                let w = if f1 > f0 { (u - f0) / (f1 - f0) } else { 0.0 };
                z[i - 1] + w * (z[i] - z[i - 1])
            }
        }
    }

    /// Jump times on `[0, horizon]` (sorted) with their marks.
    pub fn sample_path<R: Rng + ?Sized>(
        &self,
        horizon: f64,
        times: &mut R,
        marks: &mut R,
    ) -> Vec<(f64, f64)> {
        if self.rate <= 0.0 {
            return Vec::new();
        }
        let n = Poisson::new(self.rate * horizon)
            .map(|p| p.sample(times) as usize)
            .unwrap_or(0);
        let mut ts: Vec<f64> = (0..n).map(|_| times.random::<f64>() * horizon).collect();
        ts.sort_by(f64::total_cmp);
        ts.into_iter().map(|t| (t, self.sample_mark(marks))).collect()
    }
}

fn density_table(jump: &JumpSpec, eps: f64) -> Table {
    let pieces = jump.pieces(eps, f64::INFINITY);
    let per_piece = (TABLE_NODES / pieces.len().max(1)).max(2);
    let mut z = Vec::with_capacity(TABLE_NODES + 2);
    let mut cdf = Vec::with_capacity(TABLE_NODES + 2);
    let mut acc = 0.0;
    for (a, b) in pieces {
        // Geometric spacing in |z| resolves the singular end of the density.
        let (lo, hi) = (a.abs().min(b.abs()), a.abs().max(b.abs()));
        let geometric = lo > 0.0;
        let node = |i: usize| {
            let u = i as f64 / per_piece as f64;
            let m = if geometric {
                lo * (hi / lo).powf(u)
            } else {
                lo + (hi - lo) * u
            };
            if i == per_piece {
                hi
            } else if i == 0 {
                lo
            } else {
                m
            }
        };
        let mut nodes: Vec<f64> = (0..=per_piece).map(node).collect();
        if b <= 0.0 {
            nodes = nodes.into_iter().rev().map(|x| -x).collect();
        }
        for i in 0..nodes.len() {
            if i > 0 {
                let (x0, x1) = (nodes[i - 1], nodes[i]);
                acc += quad::integrate(&|x| jump.density(x), x0, x1, ABS_TOL / per_piece as f64);
            }
            z.push(nodes[i]);
            cdf.push(acc);
        }
    }
    let total = acc;
    for c in &mut cdf {
        *c /= total;
    }
    Table::Density { z, cdf }
}

/// Simulated increments and prices of one variant.
#[derive(Clone, Debug)]
pub struct KindPaths {
    pub kind: ApproximationKind,
    /// `a - r` at the left node of each step.
    pub excess: Vec<f64>,
    /// Volatility on `W` per step.
    pub w_vol: Vec<f64>,
    /// Volatility on `B` per step.
    pub b_vol: Vec<f64>,
    /// `E[ΔJ²]` per step of the jump martingale increment.
    pub jump_var: Vec<f64>,
    /// Discounted prices, `[node][path]`.
    pub prices: Vec<f64>,
    /// Martingale increment of the jump part (plus any residual Gaussian
    /// standing in for unsimulated jumps), `[step][path]`.
    pub dj: Vec<f64>,
}

/// Coupled trajectories of every requested variant.
#[derive(Clone, Debug)]
pub struct PathBundle {
    grid: TimeGrid,
    n_paths: usize,
    excluded: usize,
    discount: f64,
    dw: Vec<f64>,
    db: Vec<f64>,
    jumps: Vec<Vec<(f64, f64)>>,
    kinds: Vec<KindPaths>,
}

impl PathBundle {
    /// Assembles a bundle from precomputed increments (e.g. an enumerated
    /// tree). `dw`, `db` are `[step][path]`.
    pub fn from_parts(
        grid: TimeGrid,
        n_paths: usize,
        discount: f64,
        dw: Vec<f64>,
        db: Vec<f64>,
        kinds: Vec<KindPaths>,
    ) -> Result<Self> {
        let n = grid.n_steps();
        if dw.len() != n * n_paths || db.len() != n * n_paths {
            return Err(Error::invalid("increment arrays do not match the grid"));
        }
        for k in &kinds {
            if k.prices.len() != (n + 1) * n_paths
                || k.dj.len() != n * n_paths
                || [&k.excess, &k.w_vol, &k.b_vol, &k.jump_var]
                    .iter()
                    .any(|v| v.len() != n)
            {
                return Err(Error::invalid(format!("arrays of {} do not match the grid", k.kind)));
            }
        }
        Ok(Self {
            grid,
            n_paths,
            excluded: 0,
            discount,
            dw,
            db,
            jumps: vec![Vec::new(); n_paths],
            kinds,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    /// Paths dropped because some variant's price became nonpositive.
    pub fn excluded(&self) -> usize {
        self.excluded
    }

    /// `exp(-∫₀ᵀ r)`.
    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn dw(&self, step: usize) -> &[f64] {
        &self.dw[step * self.n_paths..(step + 1) * self.n_paths]
    }

    pub fn db(&self, step: usize) -> &[f64] {
        &self.db[step * self.n_paths..(step + 1) * self.n_paths]
    }

    pub fn jumps(&self, path: usize) -> &[(f64, f64)] {
        &self.jumps[path]
    }

    pub fn mean_jump_count(&self) -> f64 {
        self.jumps.iter().map(|j| j.len() as f64).sum::<f64>() / self.n_paths as f64
    }

    pub fn kinds(&self) -> impl Iterator<Item = ApproximationKind> + '_ {
        self.kinds.iter().map(|k| k.kind)
    }

    pub fn kind(&self, kind: ApproximationKind) -> Result<&KindPaths> {
        self.kinds
            .iter()
            .find(|k| k.kind.same_as(&kind))
            .ok_or_else(|| Error::MissingKind(kind.to_string()))
    }

    pub fn price<'a>(&self, kind: &'a KindPaths, node: usize) -> &'a [f64] {
        &kind.prices[node * self.n_paths..(node + 1) * self.n_paths]
    }

    pub fn dj<'a>(&self, kind: &'a KindPaths, step: usize) -> &'a [f64] {
        &kind.dj[step * self.n_paths..(step + 1) * self.n_paths]
    }
}

struct Block {
    n: usize,
    dw: Vec<f64>,
    db: Vec<f64>,
    jumps: Vec<Vec<(f64, f64)>>,
    prices: Vec<Vec<f64>>,
    dj: Vec<Vec<f64>>,
    keep: Vec<bool>,
}

struct KindPlan {
    params: KindParams,
    gamma: Vec<f64>,
    residual_vol: Vec<f64>,
    paths: KindPaths,
}

/// Simulates all `kinds` on common random numbers.
///
/// Each step uses the multiplicative Euler update
/// `S_{k+1} = S_k (1 + (a-r)Δt + σ_W ΔW + σ_B ΔB + ΔJ)`, where `ΔJ` is the
/// compensated sum of kept jumps `γ̃ g(z)`.
pub fn simulate(
    model: &MarketModel,
    kinds: &[ApproximationKind],
    grid: &TimeGrid,
    n_paths: usize,
    config: &SimConfig,
) -> Result<PathBundle> {
    if n_paths == 0 {
        return Err(Error::invalid("n_paths must be at least 1"));
    }
    if kinds.is_empty() {
        return Err(Error::invalid("no approximation kinds requested"));
    }
    if config.block_size == 0 {
        return Err(Error::invalid("block_size must be positive"));
    }
    if (grid.horizon() - model.horizon).abs() > 1e-12 * model.horizon {
        return Err(Error::invalid("grid horizon differs from the model horizon"));
    }
    let n = grid.n_steps();
    let dt = grid.dt();
    let mut plans = Vec::with_capacity(kinds.len());
    for (i, &kind) in kinds.iter().enumerate() {
        if kinds[..i].iter().any(|k| k.same_as(&kind)) {
            continue;
        }
        let params = KindParams::resolve(model, kind, config.reference_epsilon)?;
        let t = |k: usize| grid.node(k);
        let gamma: Vec<f64> = (0..n).map(|k| model.gamma_tilde(t(k))).collect();
        let residual_vol: Vec<f64> = (0..n).map(|k| params.residual_vol(model, t(k))).collect();
        let jump_var = (0..n)
            .map(|k| {
                let g = gamma[k];
                g * g * (params.residual_var + params.tail) * dt
            })
            .collect();
        plans.push(KindPlan {
            gamma,
            residual_vol,
            paths: KindPaths {
                kind,
                excess: (0..n).map(|k| model.excess(t(k))).collect(),
                w_vol: (0..n).map(|k| params.w_vol(model, t(k))).collect(),
                b_vol: (0..n).map(|k| params.b_vol(model, t(k))).collect(),
                jump_var,
                prices: Vec::new(),
                dj: Vec::new(),
            },
            params,
        });
    }
    let min_threshold = plans
        .iter()
        .map(|p| p.params.threshold)
        .fold(f64::INFINITY, f64::min);
    let sampler = MarkSampler::new(&model.jump, min_threshold)?;
    let need_b = plans.iter().any(|p| p.params.b_var > 0.0);
    let need_r = plans.iter().any(|p| p.params.residual_var > 0.0);

    let n_blocks = n_paths.div_ceil(config.block_size);
    let blocks: Vec<Block> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let size = config.block_size.min(n_paths - b * config.block_size);
            simulate_block(model, grid, &plans, &sampler, config, b, size, need_b, need_r)
        })
        .collect();

    let kept: usize = blocks.iter().map(|b| b.keep.iter().filter(|&&k| k).count()).sum();
    let excluded = n_paths - kept;
    if excluded as f64 > config.max_excluded_fraction * n_paths as f64 || kept == 0 {
        return Err(Error::TooManyExclusions {
            excluded,
            total: n_paths,
        });
    }

    // Transpose the path-major blocks into node-major arrays.
    let mut dw = vec![0.0; n * kept];
    let mut db = vec![0.0; n * kept];
    let mut jumps = Vec::with_capacity(kept);
    for plan in &mut plans {
        plan.paths.prices = vec![0.0; (n + 1) * kept];
        plan.paths.dj = vec![0.0; n * kept];
    }
    let mut p = 0;
    for block in blocks {
        for i in 0..block.n {
            if !block.keep[i] {
                continue;
            }
            for k in 0..n {
                dw[k * kept + p] = block.dw[i * n + k];
                db[k * kept + p] = block.db[i * n + k];
            }
            for (plan, (prices, dj)) in plans.iter_mut().zip(block.prices.iter().zip(&block.dj)) {
                for k in 0..=n {
                    plan.paths.prices[k * kept + p] = prices[i * (n + 1) + k];
                }
                for k in 0..n {
                    plan.paths.dj[k * kept + p] = dj[i * n + k];
                }
            }
            p += 1;
        }
        jumps.extend(
            block
                .jumps
                .into_iter()
                .zip(block.keep)
                .filter_map(|(j, k)| k.then_some(j)),
        );
    }

    Ok(PathBundle {
        grid: *grid,
        n_paths: kept,
        excluded,
        discount: model.discount_factor(),
        dw,
        db,
        jumps,
        kinds: plans.into_iter().map(|p| p.paths).collect(),
    })
}

#[allow(clippy::too_many_arguments)]
fn simulate_block(
    model: &MarketModel,
    grid: &TimeGrid,
    plans: &[KindPlan],
    sampler: &MarkSampler,
    config: &SimConfig,
    block: usize,
    size: usize,
    need_b: bool,
    need_r: bool,
) -> Block {
    let n = grid.n_steps();
    let sqrt_dt = grid.dt().sqrt();
    let dt = grid.dt();
    let mut rng_w = config.stream(block, STREAM_W);
    let mut rng_b = config.stream(block, STREAM_B);
    let mut rng_r = config.stream(block, STREAM_R);
    let mut rng_t = config.stream(block, STREAM_TIMES);
    let mut rng_m = config.stream(block, STREAM_MARKS);

    let mut out = Block {
        n: size,
        dw: vec![0.0; size * n],
        db: vec![0.0; size * n],
        jumps: Vec::with_capacity(size),
        prices: plans.iter().map(|_| vec![0.0; size * (n + 1)]).collect(),
        dj: plans.iter().map(|_| vec![0.0; size * n]).collect(),
        keep: vec![true; size],
    };
    let mut dr = vec![0.0; n];
    let mut gsum = vec![0.0; n];
    for i in 0..size {
        let w = &mut out.dw[i * n..(i + 1) * n];
        for x in w.iter_mut() {
            *x = sqrt_dt * rng_w.sample::<f64, _>(StandardNormal);
        }
        if need_b {
            for x in out.db[i * n..(i + 1) * n].iter_mut() {
                *x = sqrt_dt * rng_b.sample::<f64, _>(StandardNormal);
            }
        }
        if need_r {
            for x in dr.iter_mut() {
                *x = sqrt_dt * rng_r.sample::<f64, _>(StandardNormal);
            }
        }
        let jumps = sampler.sample_path(grid.horizon(), &mut rng_t, &mut rng_m);

        for (j, plan) in plans.iter().enumerate() {
            let kp = &plan.paths;
            gsum.iter_mut().for_each(|g| *g = 0.0);
            for &(t, z) in &jumps {
                if z.abs() > plan.params.threshold {
                    gsum[grid.step_of(t)] += model.jump.g(z);
                }
            }
            let prices = &mut out.prices[j][i * (n + 1)..(i + 1) * (n + 1)];
            let dj = &mut out.dj[j][i * n..(i + 1) * n];
            let mut s = model.s0;
            prices[0] = s;
            for k in 0..n {
                let jump = plan.gamma[k] * (gsum[k] - plan.params.compensator * dt)
                    + plan.residual_vol[k] * dr[k];
                dj[k] = jump;
                let incr = kp.excess[k] * dt
                    + kp.w_vol[k] * out.dw[i * n + k]
                    + kp.b_vol[k] * out.db[i * n + k]
                    + jump;
                s *= 1.0 + incr;
                prices[k + 1] = s;
                if !(s > 0.0 && s.is_finite()) {
                    out.keep[i] = false;
                }
            }
        }
        out.jumps.push(jumps);
    }
    out
}

/// Payoff functionals of the undiscounted terminal price.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "payoff", rename_all = "snake_case", deny_unknown_fields)]
pub enum Payoff {
    Identity,
    Constant { value: f64 },
    Call { strike: f64 },
    Put { strike: f64 },
    Digital { strike: f64, payout: f64 },
}

impl Payoff {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Payoff::Identity => s,
            Payoff::Constant { value } => value,
            Payoff::Call { strike } => (s - strike).max(0.0),
            Payoff::Put { strike } => (strike - s).max(0.0),
            Payoff::Digital { strike, payout } => {
                if s > strike {
                    payout
                } else {
                    0.0
                }
            }
        }
    }
}

/// Discounted claim `ξ̃ = D · payoff(S̃(T) / D)` per path, `D = exp(-∫r)`.
pub fn claim_payoff(bundle: &PathBundle, kind: ApproximationKind, payoff: &Payoff) -> Result<Vec<f64>> {
    let kp = bundle.kind(kind)?;
    let d = bundle.discount();
    let n = bundle.grid().n_steps();
    bundle
        .price(kp, n)
        .iter()
        .enumerate()
        .map(|(p, &s)| {
            let v = d * payoff.eval(s / d);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite {
                    node: n,
                    path: p,
                    what: "claim payoff",
                })
            }
        })
        .collect()
}

const MAGIC: &[u8; 4] = b"RHPB";
const DUMP_VERSION: u32 = 1;

fn tag_code(tag: KindTag) -> u8 {
    match tag {
        KindTag::Original => 0,
        KindTag::TruncateRescaleW => 1,
        KindTag::TruncateAddB => 2,
        KindTag::TruncateOnly => 3,
        KindTag::VarianceMatchedW => 4,
    }
}

fn tag_from_code(c: u8) -> Result<KindTag> {
    Ok(match c {
        0 => KindTag::Original,
        1 => KindTag::TruncateRescaleW,
        2 => KindTag::TruncateAddB,
        3 => KindTag::TruncateOnly,
        4 => KindTag::VarianceMatchedW,
        _ => return Err(Error::Dump(format!("unknown kind code {c}"))),
    })
}

impl PathBundle {
    /// Binary dump: versioned header, then little-endian `f64` arrays laid
    /// out row-major `[path][step]`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.grid.n_steps();
        let np = self.n_paths;
        w.write_all(MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&(np as u64).to_le_bytes())?;
        w.write_all(&(n as u64).to_le_bytes())?;
        w.write_all(&(self.excluded as u64).to_le_bytes())?;
        w.write_all(&self.grid.horizon().to_le_bytes())?;
        w.write_all(&self.discount.to_le_bytes())?;
        w.write_all(&(self.kinds.len() as u32).to_le_bytes())?;
        for k in &self.kinds {
            w.write_all(&[tag_code(k.kind.tag)])?;
            w.write_all(&k.kind.epsilon.to_le_bytes())?;
        }
        let mut put = |v: f64| w.write_all(&v.to_le_bytes());
        let mut put_rows = |data: &[f64], cols: usize| -> std::io::Result<()> {
            for p in 0..np {
                for c in 0..cols {
                    put(data[c * np + p])?;
                }
            }
            Ok(())
        };
        put_rows(&self.dw, n)?;
        put_rows(&self.db, n)?;
        for k in &self.kinds {
            put_rows(&k.prices, n + 1)?;
            put_rows(&k.dj, n)?;
        }
        for k in &self.kinds {
            for v in [&k.excess, &k.w_vol, &k.b_vol, &k.jump_var] {
                for &x in v.iter() {
                    w.write_all(&x.to_le_bytes())?;
                }
            }
        }
        for path in &self.jumps {
            w.write_all(&(path.len() as u64).to_le_bytes())?;
            for &(t, z) in path {
                w.write_all(&t.to_le_bytes())?;
                w.write_all(&z.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Dump("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != DUMP_VERSION {
            return Err(Error::Dump(format!("unsupported version {version}")));
        }
        let np = read_u64(&mut r)? as usize;
        let n = read_u64(&mut r)? as usize;
        let excluded = read_u64(&mut r)? as usize;
        let horizon = read_f64(&mut r)?;
        let discount = read_f64(&mut r)?;
        let n_kinds = read_u32(&mut r)? as usize;
        let grid = TimeGrid::new(horizon, n).map_err(|e| Error::Dump(e.to_string()))?;
        let mut kinds = Vec::with_capacity(n_kinds);
        for _ in 0..n_kinds {
            let mut c = [0u8; 1];
            r.read_exact(&mut c)?;
            let tag = tag_from_code(c[0])?;
            let epsilon = read_f64(&mut r)?;
            kinds.push(ApproximationKind { tag, epsilon });
        }
        let mut get_rows = |cols: usize| -> Result<Vec<f64>> {
            let mut out = vec![0.0; cols * np];
            for p in 0..np {
                for c in 0..cols {
                    out[c * np + p] = read_f64(&mut r)?;
                }
            }
            Ok(out)
        };
        let dw = get_rows(n)?;
        let db = get_rows(n)?;
        let mut arrays = Vec::with_capacity(n_kinds);
        for _ in 0..n_kinds {
            let prices = get_rows(n + 1)?;
            let dj = get_rows(n)?;
            arrays.push((prices, dj));
        }
        let mut out_kinds = Vec::with_capacity(n_kinds);
        for (kind, (prices, dj)) in kinds.into_iter().zip(arrays) {
            let mut per_step = || -> Result<Vec<f64>> { (0..n).map(|_| read_f64(&mut r)).collect() };
            out_kinds.push(KindPaths {
                kind,
                excess: per_step()?,
                w_vol: per_step()?,
                b_vol: per_step()?,
                jump_var: per_step()?,
                prices,
                dj,
            });
        }
        let mut jumps = Vec::with_capacity(np);
        for _ in 0..np {
            let m = read_u64(&mut r)? as usize;
            let mut path = Vec::with_capacity(m.min(1 << 20));
            for _ in 0..m {
                let t = read_f64(&mut r)?;
                let z = read_f64(&mut r)?;
                path.push((t, z));
            }
            jumps.push(path);
        }
        Ok(Self {
            grid,
            n_paths: np,
            excluded,
            discount,
            dw,
            db,
            jumps,
            kinds: out_kinds,
        })
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| Error::Dump(e.to_string()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::Dump(e.to_string()))?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::Dump(e.to_string()))?;
    Ok(f64::from_le_bytes(b))
}
