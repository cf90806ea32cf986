//! Jump measure, coefficients and the structural quantities of the price
//! model: `G²(ε)`, `κ`, `h`, the mean-variance trade-off `K`, and the
//! per-variant parameters used by the simulator and the hedging drivers.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quad::{self, ABS_TOL};

/// Deterministic function of time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeFunction {
    Constant { value: f64 },
    Linear { start: f64, slope: f64 },
    /// `base + height · exp(-((t - center) / width)²)`
    Bump {
        base: f64,
        height: f64,
        center: f64,
        width: f64,
    },
}

impl TimeFunction {
    pub fn constant(value: f64) -> Self {
        TimeFunction::Constant { value }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeFunction::Constant { value } => value,
            TimeFunction::Linear { start, slope } => start + slope * t,
            TimeFunction::Bump {
                base,
                height,
                center,
                width,
            } => {
                let u = (t - center) / width;
                base + height * (-u * u).exp()
            }
        }
    }

    fn validate(&self, name: &str, horizon: f64) -> Result<()> {
        if let TimeFunction::Bump { width, .. } = *self {
            if !(width > 0.0) {
                return Err(Error::invalid(format!("{name}: bump width must be positive")));
            }
        }
        // Evaluated densely enough to catch non-finite parameters.
        for i in 0..=256 {
            let t = horizon * i as f64 / 256.0;
            if !self.eval(t).is_finite() {
                return Err(Error::invalid(format!("{name}({t}) is not finite")));
            }
        }
        Ok(())
    }
}

/// The factor `g` in `γ(t, z) = g(z) γ̃(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarkFactor {
    Identity,
    Scaled { factor: f64 },
    /// `e^z - 1`, the relative jump of a log-price mark.
    ExpMinusOne,
}

impl MarkFactor {
    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            MarkFactor::Identity => z,
            MarkFactor::Scaled { factor } => factor * z,
            MarkFactor::ExpMinusOne => z.exp_m1(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub mark: f64,
    pub intensity: f64,
}

/// Registry of Lévy measures. Densities live on a compact support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Measure {
    /// `scale · |z|^{-1-alpha}` on `[z_min, z_max]`.
    PowerLaw {
        scale: f64,
        alpha: f64,
        z_min: f64,
        z_max: f64,
    },
    /// `scale · e^{-decay |z|} |z|^{-1-alpha}` on `[z_min, z_max]`.
    TemperedPowerLaw {
        scale: f64,
        alpha: f64,
        decay: f64,
        z_min: f64,
        z_max: f64,
    },
    Atoms { atoms: Vec<Atom> },
}

impl Measure {
    fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Measure::PowerLaw { z_min, z_max, .. } | Measure::TemperedPowerLaw { z_min, z_max, .. } => {
                Some((z_min, z_max))
            }
            Measure::Atoms { .. } => None,
        }
    }

    fn density(&self, z: f64) -> f64 {
        let a = z.abs();
        match *self {
            Measure::PowerLaw {
                scale,
                alpha,
                z_min,
                z_max,
            } => {
                if z == 0.0 || z < z_min || z > z_max {
                    0.0
                } else {
                    scale * a.powf(-1.0 - alpha)
                }
            }
            Measure::TemperedPowerLaw {
                scale,
                alpha,
                decay,
                z_min,
                z_max,
            } => {
                if z == 0.0 || z < z_min || z > z_max {
                    0.0
                } else {
                    scale * (-decay * a).exp() * a.powf(-1.0 - alpha)
                }
            }
            Measure::Atoms { .. } => 0.0,
        }
    }
}

/// A Lévy measure `ℓ` together with the mark factor `g`.
///
/// Kept jumps are those with `|z| > ε`; the small part is `|z| ≤ ε`.
#[derive(Clone, Debug)]
pub struct JumpSpec {
    measure: Measure,
    g: MarkFactor,
    total_g2: f64,
}

impl JumpSpec {
    pub fn new(measure: Measure, g: MarkFactor) -> Result<Self> {
        if let MarkFactor::Scaled { factor } = g {
            if !factor.is_finite() {
                return Err(Error::InvalidMeasure("mark factor must be finite".into()));
            }
        }
        match &measure {
            Measure::PowerLaw {
                scale,
                alpha,
                z_min,
                z_max,
            } => validate_density(*scale, *alpha, 0.0, *z_min, *z_max)?,
            Measure::TemperedPowerLaw {
                scale,
                alpha,
                decay,
                z_min,
                z_max,
            } => validate_density(*scale, *alpha, *decay, *z_min, *z_max)?,
            Measure::Atoms { atoms } => {
                for a in atoms {
                    if !a.mark.is_finite() || a.mark == 0.0 {
                        return Err(Error::InvalidMeasure(format!(
                            "atom marks must be finite and nonzero, got {}",
                            a.mark
                        )));
                    }
                    if !(a.intensity.is_finite() && a.intensity > 0.0) {
                        return Err(Error::InvalidMeasure(format!(
                            "atom intensity must be positive, got {}",
                            a.intensity
                        )));
                    }
                }
            }
        }
        let mut spec = Self {
            measure,
            g,
            total_g2: 0.0,
        };
        let z2 = spec.band_integral(0.0, f64::INFINITY, |z| z * z);
        let g2 = spec.band_integral(0.0, f64::INFINITY, |z| {
            let v = g.eval(z);
            v * v
        });
        if !z2.is_finite() || !g2.is_finite() {
            return Err(Error::InvalidMeasure("second moment is not finite".into()));
        }
        spec.total_g2 = g2;
        Ok(spec)
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    pub fn mark_factor(&self) -> MarkFactor {
        self.g
    }

    pub fn g(&self, z: f64) -> f64 {
        self.g.eval(z)
    }

    pub fn density(&self, z: f64) -> f64 {
        self.measure.density(z)
    }

    /// `∫ g² ℓ` over the whole support.
    pub fn total_g2(&self) -> f64 {
        self.total_g2
    }

    /// `G²(ε) = ∫_{|z| ≤ ε} g² ℓ`. A negative level is an empty domain.
    pub fn small_jump_variance(&self, eps: f64) -> f64 {
        self.split_g2(eps).0
    }

    /// `∫_{|z| > ε} g² ℓ`.
    pub fn kept_g2(&self, eps: f64) -> f64 {
        self.split_g2(eps).1
    }

    /// `(G²(ε), ∫_{|z|>ε} g²ℓ)`, split so the two parts add up to
    /// [`total_g2`](Self::total_g2) exactly in floating point.
    pub fn split_g2(&self, eps: f64) -> (f64, f64) {
        let total = self.total_g2;
        if !(eps > 0.0) {
            return (0.0, total);
        }
        let raw = self.band_integral(0.0, eps, |z| {
            let v = self.g.eval(z);
            v * v
        });
        let small = raw.clamp(0.0, total);
        // Whichever subtraction is exact (Sterbenz) determines the other part.
        if small >= 0.5 * total {
            (small, total - small)
        } else {
            let large = total - small;
            (total - large, large)
        }
    }

    /// Intensity `ν_ε = ℓ(|z| > ε)`; infinite for infinite activity at ε = 0.
    pub fn kept_intensity(&self, eps: f64) -> f64 {
        let eps = eps.max(0.0);
        if eps == 0.0 && self.touches_origin() {
            return f64::INFINITY;
        }
        self.band_integral_open(eps, |_| 1.0)
    }

    /// `∫_{|z|>ε} g ℓ`, the compensator of the kept jumps per unit `γ̃`.
    pub fn kept_g1(&self, eps: f64) -> f64 {
        let eps = eps.max(0.0);
        if eps == 0.0 && self.touches_origin() {
            return f64::NAN;
        }
        self.band_integral_open(eps, |z| self.g.eval(z))
    }

    pub fn is_finite_activity(&self) -> bool {
        !self.touches_origin()
    }

    /// Range of `g` over kept marks, `None` when nothing is kept.
    pub fn kept_g_range(&self, eps: f64) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut push = |z: f64| {
            let v = self.g.eval(z);
            lo = lo.min(v);
            hi = hi.max(v);
        };
        match &self.measure {
            Measure::Atoms { atoms } => {
                for a in atoms.iter().filter(|a| a.mark.abs() > eps) {
                    push(a.mark);
                }
            }
            _ => {
                // g is monotone for every registered factor, so the piece
                // endpoints carry the extremes.
                for (a, b) in self.pieces(eps, f64::INFINITY) {
                    if b > a {
                        push(a);
                        push(b);
                    }
                }
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    fn touches_origin(&self) -> bool {
        match self.measure.support() {
            Some((lo, hi)) => lo <= 0.0 && hi >= 0.0,
            None => false,
        }
    }

    /// Intervals of the support where `lo ≤ |z| ≤ hi`.
    pub(crate) fn pieces(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let Some((z_min, z_max)) = self.measure.support() else {
            return Vec::new();
        };
        let mut out = Vec::with_capacity(2);
        let (na, nb) = (z_min.max(-hi), z_max.min(-lo));
        if nb > na {
            out.push((na, nb));
        }
        let (pa, pb) = (z_min.max(lo), z_max.min(hi));
        if pb > pa {
            out.push((pa, pb));
        }
        out
    }

    /// `∫_{lo ≤ |z| ≤ hi} f ℓ` (atoms use `lo < |z| ≤ hi`).
    fn band_integral(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        match &self.measure {
            Measure::Atoms { atoms } => atoms
                .iter()
                .filter(|a| a.mark.abs() > lo && a.mark.abs() <= hi)
                .map(|a| f(a.mark) * a.intensity)
                .sum(),
            m => self
                .pieces(lo, hi)
                .into_iter()
                .map(|(a, b)| {
                    let g = |z: f64| f(z) * m.density(z);
                    if a == 0.0 {
                        quad::integrate_from_origin(&g, b, ABS_TOL)
                    } else if b == 0.0 {
                        quad::integrate_from_origin(&|z| g(-z), -a, ABS_TOL)
                    } else {
                        quad::integrate(&g, a, b, ABS_TOL)
                    }
                })
                .sum(),
        }
    }

    fn band_integral_open(&self, eps: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.band_integral(eps, f64::INFINITY, f)
    }
}

fn validate_density(scale: f64, alpha: f64, decay: f64, z_min: f64, z_max: f64) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidMeasure(m));
    if !(scale.is_finite() && scale > 0.0) {
        return bad(format!("density scale must be positive, got {scale}"));
    }
    if !alpha.is_finite() {
        return bad("density exponent must be finite".into());
    }
    if !(decay.is_finite() && decay >= 0.0) {
        return bad(format!("decay must be nonnegative, got {decay}"));
    }
    if !(z_min.is_finite() && z_max.is_finite() && z_min < z_max) {
        return bad(format!("support [{z_min}, {z_max}] is empty or unbounded"));
    }
    if z_min <= 0.0 && z_max >= 0.0 && alpha >= 2.0 {
        return bad(format!(
            "|z|^(-1-{alpha}) has no finite second moment near the origin"
        ));
    }
    Ok(())
}

/// Drift, volatility, short rate and jump scale as functions of time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    pub a: TimeFunction,
    pub b: TimeFunction,
    pub r: TimeFunction,
    pub gamma_tilde: TimeFunction,
}

impl CoefficientSpec {
    pub fn constant(a: f64, b: f64, r: f64, gamma_tilde: f64) -> Self {
        Self {
            a: TimeFunction::constant(a),
            b: TimeFunction::constant(b),
            r: TimeFunction::constant(r),
            gamma_tilde: TimeFunction::constant(gamma_tilde),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MarketModel {
    pub jump: JumpSpec,
    pub coeffs: CoefficientSpec,
    pub horizon: f64,
    pub s0: f64,
}

impl MarketModel {
    pub fn new(jump: JumpSpec, coeffs: CoefficientSpec, horizon: f64, s0: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
        }
        if !(s0.is_finite() && s0 > 0.0) {
            return Err(Error::invalid(format!("s0 must be positive, got {s0}")));
        }
        coeffs.a.validate("a", horizon)?;
        coeffs.b.validate("b", horizon)?;
        coeffs.r.validate("r", horizon)?;
        coeffs.gamma_tilde.validate("gamma_tilde", horizon)?;
        Ok(Self {
            jump,
            coeffs,
            horizon,
            s0,
        })
    }

    pub fn excess(&self, t: f64) -> f64 {
        self.coeffs.a.eval(t) - self.coeffs.r.eval(t)
    }

    pub fn b(&self, t: f64) -> f64 {
        self.coeffs.b.eval(t)
    }

    pub fn gamma_tilde(&self, t: f64) -> f64 {
        self.coeffs.gamma_tilde.eval(t)
    }

    /// `κ(t) = b² + γ̃² ∫g²ℓ`.
    pub fn kappa(&self, t: f64) -> f64 {
        let b = self.b(t);
        let gt = self.gamma_tilde(t);
        b * b + gt * gt * self.jump.total_g2()
    }

    /// `h(t) = (a - r) / κ`.
    pub fn h(&self, t: f64) -> Result<f64> {
        let k = self.kappa(t);
        if !(k > 0.0) {
            return Err(Error::DegenerateModel(format!("kappa({t}) = {k}")));
        }
        Ok(self.excess(t) / k)
    }

    /// `exp(-∫₀ᵀ r)`.
    pub fn discount_factor(&self) -> f64 {
        let r = &self.coeffs.r;
        (-quad::integrate(&|t| r.eval(t), 0.0, self.horizon, 1e-13)).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindTag {
    Original,
    /// Small jumps replaced by a volatility bump on `W`.
    TruncateRescaleW,
    /// Small jumps replaced by an independent Brownian motion `B`.
    TruncateAddB,
    /// Small jumps dropped without compensation.
    TruncateOnly,
    /// `W` volatility chosen so the total diffusive variance matches.
    VarianceMatchedW,
}

impl KindTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            KindTag::Original => "original",
            KindTag::TruncateRescaleW => "truncate_rescale_w",
            KindTag::TruncateAddB => "truncate_add_b",
            KindTag::TruncateOnly => "truncate_only",
            KindTag::VarianceMatchedW => "variance_matched_w",
        }
    }
}

impl fmt::Display for KindTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A price model variant: the original dynamics or a truncation at `ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximationKind {
    pub tag: KindTag,
    #[serde(default)]
    pub epsilon: f64,
}

impl ApproximationKind {
    pub const ORIGINAL: ApproximationKind = ApproximationKind {
        tag: KindTag::Original,
        epsilon: 0.0,
    };

    pub fn new(tag: KindTag, epsilon: f64) -> Result<Self> {
        match tag {
            KindTag::Original if epsilon != 0.0 => {
                Err(Error::invalid("the original model has no truncation level"))
            }
            KindTag::Original => Ok(Self::ORIGINAL),
            _ if !(epsilon.is_finite() && epsilon > 0.0) => Err(Error::invalid(format!(
                "{tag} needs a positive truncation level, got {epsilon}"
            ))),
            _ => Ok(Self { tag, epsilon }),
        }
    }

    /// Bitwise identity (used as a lookup key).
    pub fn same_as(&self, other: &ApproximationKind) -> bool {
        self.tag == other.tag && self.epsilon.to_bits() == other.epsilon.to_bits()
    }

    /// Index `ρ` of the approximation when it is one of the two analysed ones.
    pub fn rho(&self) -> Option<u8> {
        match self.tag {
            KindTag::TruncateRescaleW => Some(0),
            KindTag::TruncateAddB => Some(1),
            _ => None,
        }
    }
}

impl fmt::Display for ApproximationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            KindTag::Original => write!(f, "original"),
            tag => write!(f, "{tag}@{}", self.epsilon),
        }
    }
}

/// How the `W` volatility of a variant is built from `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
enum WVol {
    Plain,
    /// `b + G γ̃`
    Shifted(f64),
    /// `±√(b² + G²γ̃²)`, sign of `b`
    Matched(f64),
}

/// Resolved per-variant parameters.
///
/// Every variant is described by the same handful of numbers so that the
/// simulator and the drivers can treat them uniformly. Jumps with
/// `|z| > threshold` are simulated; the Gaussian streams carry the rest.
/// For an infinite-activity original model the jumps below the reference
/// threshold are represented by a separate Gaussian residual stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KindParams {
    pub kind: ApproximationKind,
    pub threshold: f64,
    /// `G²(ε)` of the variant (0 for the original).
    pub small_var: f64,
    /// Variance coefficient on `B` per unit `γ̃²`.
    pub b_var: f64,
    /// Variance coefficient on the residual stream per unit `γ̃²`.
    pub residual_var: f64,
    /// `∫_{|z|>threshold} g²ℓ`.
    pub tail: f64,
    /// `∫_{|z|>threshold} g ℓ`.
    pub compensator: f64,
    /// `ℓ(|z| > threshold)`.
    pub intensity: f64,
    w: WVol,
}

impl KindParams {
    /// `reference_epsilon` is the simulation threshold for the original
    /// model when the measure has infinite activity (ignored otherwise).
    pub fn resolve(model: &MarketModel, kind: ApproximationKind, reference_epsilon: f64) -> Result<Self> {
        let jump = &model.jump;
        let (threshold, small_var) = match kind.tag {
            KindTag::Original => {
                let thr = if jump.is_finite_activity() {
                    0.0
                } else if reference_epsilon > 0.0 && reference_epsilon.is_finite() {
                    reference_epsilon
                } else {
                    return Err(Error::invalid(
                        "infinite-activity measure needs a positive reference epsilon",
                    ));
                };
                (thr, 0.0)
            }
            _ => (kind.epsilon, jump.small_jump_variance(kind.epsilon)),
        };
        let (below, tail) = jump.split_g2(threshold);
        let (b_var, residual_var, w) = match kind.tag {
            KindTag::Original => (0.0, below, WVol::Plain),
            KindTag::TruncateAddB => (small_var, 0.0, WVol::Plain),
            KindTag::TruncateRescaleW => (0.0, 0.0, WVol::Shifted(small_var.sqrt())),
            KindTag::TruncateOnly => (0.0, 0.0, WVol::Plain),
            KindTag::VarianceMatchedW => (0.0, 0.0, WVol::Matched(small_var)),
        };
        let intensity = jump.kept_intensity(threshold);
        if !intensity.is_finite() {
            return Err(Error::invalid(format!("{kind}: infinitely many jumps above {threshold}")));
        }
        Ok(Self {
            kind,
            threshold,
            small_var,
            b_var,
            residual_var,
            tail,
            compensator: jump.kept_g1(threshold),
            intensity,
            w,
        })
    }

    /// Volatility on `W`.
    pub fn w_vol(&self, model: &MarketModel, t: f64) -> f64 {
        let b = model.b(t);
        match self.w {
            WVol::Plain => b,
            WVol::Shifted(g) => b + g * model.gamma_tilde(t),
            WVol::Matched(g2) => {
                let gt = model.gamma_tilde(t);
                let v = (b * b + g2 * gt * gt).sqrt();
                if b < 0.0 {
                    -v
                } else {
                    v
                }
            }
        }
    }

    /// `G̃` with `(b + G̃γ̃)² = b² + G²γ̃²`, for the variance-matched variant.
    pub fn matched_g(&self, model: &MarketModel, t: f64) -> Option<f64> {
        match self.w {
            WVol::Matched(_) => {
                let gt = model.gamma_tilde(t);
                (gt != 0.0).then(|| (self.w_vol(model, t) - model.b(t)) / gt)
            }
            _ => None,
        }
    }

    /// Volatility on `B`.
    pub fn b_vol(&self, model: &MarketModel, t: f64) -> f64 {
        self.b_var.sqrt() * model.gamma_tilde(t)
    }

    /// Volatility on the residual stream.
    pub fn residual_vol(&self, model: &MarketModel, t: f64) -> f64 {
        self.residual_var.sqrt() * model.gamma_tilde(t)
    }

    /// Instantaneous second moment of the variant's martingale part.
    pub fn kappa(&self, model: &MarketModel, t: f64) -> f64 {
        let w = self.w_vol(model, t);
        let gt = model.gamma_tilde(t);
        w * w + gt * gt * (self.b_var + self.residual_var + self.tail)
    }

    pub fn h(&self, model: &MarketModel, t: f64) -> Result<f64> {
        let k = self.kappa(model, t);
        if !(k > 0.0) {
            return Err(Error::DegenerateModel(format!("{}: kappa({t}) = {k}", self.kind)));
        }
        Ok(model.excess(t) / k)
    }
}

/// `K(t) = ∫₀ᵗ (a-r)²/κ ds` on the grid, with the variant's own `κ`.
pub fn mvt_process(model: &MarketModel, params: &KindParams, grid: &TimeGrid) -> Result<Vec<f64>> {
    let rates = grid
        .nodes()
        .into_iter()
        .map(|t| {
            let k = params.kappa(model, t);
            if !(k > 0.0) {
                return Err(Error::DegenerateModel(format!(
                    "{}: MVT denominator {k} at t = {t}",
                    params.kind
                )));
            }
            let e = model.excess(t);
            Ok(e * e / k)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(quad::cumulative_trapezoid(&rates, grid.dt()))
}

/// Thresholds beyond which structure diagnostics become warnings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StructureLimits {
    pub max_lipschitz: f64,
    pub max_mvt: f64,
}

impl Default for StructureLimits {
    fn default() -> Self {
        Self {
            max_lipschitz: 10.0,
            max_mvt: 100.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureDiagnostics {
    pub kind: String,
    pub kappa: Vec<f64>,
    pub h: Vec<f64>,
    /// `α S̃ = h`; the number of shares per unit of wealth is `h / S̃`.
    pub alpha_scale: Vec<f64>,
    pub mvt: Vec<f64>,
    pub mvt_sup: f64,
    /// `inf (1 + h γ̃ g(z))` over grid times and kept marks.
    pub mmm_margin: f64,
    /// `sup |a - r| / √κ`.
    pub lipschitz_c: f64,
    pub warnings: Vec<String>,
}

impl StructureDiagnostics {
    pub fn trusted(&self) -> bool {
        self.warnings.is_empty()
    }
}

pub fn check_structure(
    model: &MarketModel,
    params: &KindParams,
    grid: &TimeGrid,
    limits: &StructureLimits,
) -> Result<StructureDiagnostics> {
    let nodes = grid.nodes();
    let mut kappa = Vec::with_capacity(nodes.len());
    let mut h = Vec::with_capacity(nodes.len());
    let mut lipschitz_c: f64 = 0.0;
    let mut mmm_margin = f64::INFINITY;
    let g_range = model.jump.kept_g_range(params.threshold);
    for &t in &nodes {
        let k = params.kappa(model, t);
        if !(k > 0.0) {
            return Err(Error::DegenerateModel(format!(
                "{}: kappa({t}) = {k}",
                params.kind
            )));
        }
        let ht = model.excess(t) / k;
        lipschitz_c = lipschitz_c.max(model.excess(t).abs() / k.sqrt());
        if let Some((lo, hi)) = g_range {
            let s = ht * model.gamma_tilde(t);
            mmm_margin = mmm_margin.min(1.0 + (s * lo).min(s * hi));
        }
        kappa.push(k);
        h.push(ht);
    }
    if g_range.is_none() {
        mmm_margin = 1.0;
    }
    let mvt = mvt_process(model, params, grid)?;
    let mvt_sup = mvt.last().copied().unwrap_or(0.0);

    let mut warnings = Vec::new();
    if !(mmm_margin > 0.0) {
        warnings.push(format!(
            "{}: minimal martingale density is not positive (margin {mmm_margin:.4})",
            params.kind
        ));
    }
    if !(mvt_sup.is_finite() && mvt_sup <= limits.max_mvt) {
        warnings.push(format!(
            "{}: mean-variance trade-off {mvt_sup:.4} exceeds {}",
            params.kind, limits.max_mvt
        ));
    }
    if !(lipschitz_c <= limits.max_lipschitz) {
        warnings.push(format!(
            "{}: driver Lipschitz constant {lipschitz_c:.4} exceeds {}",
            params.kind, limits.max_lipschitz
        ));
    }
    Ok(StructureDiagnostics {
        kind: params.kind.to_string(),
        alpha_scale: h.clone(),
        kappa,
        h,
        mvt,
        mvt_sup,
        mmm_margin,
        lipschitz_c,
        warnings,
    })
}
