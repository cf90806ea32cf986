//! Adaptive quadrature on finite intervals.
//!
//! Each panel is integrated with the tanh-sinh rule from the `quadrature`
//! crate; panels whose error estimate exceeds their share of the budget are
//! bisected. Pieces that start at the origin, where the `|z|^{-1-α}`
//! densities blow up, go through [`integrate_from_origin`].

/// Absolute tolerance used for every moment of the jump measure.
pub const ABS_TOL: f64 = 1e-10;

const MAX_DEPTH: u32 = 24;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    adapt(f, a, b, tol, 0)
}

/// Integrates `f` over `[0, len]` after the substitution `z = u^4`, which
/// flattens `|z|^{-1-α}`-type singularities at the origin enough for the
/// error estimate of the rule to be trusted.
pub fn integrate_from_origin<F: Fn(f64) -> f64>(f: &F, len: f64, tol: f64) -> f64 {
    if !(len > 0.0) {
        return 0.0;
    }
    let g = |u: f64| {
        let u2 = u * u;
        let u3 = u2 * u;
        f(u2 * u2) * 4.0 * u3
    };
    adapt(&g, 0.0, len.powf(0.25), tol, 0)
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let out = quadrature::integrate(f, a, b, tol);
    if out.error_estimate <= tol || depth >= MAX_DEPTH {
        return out.integral;
    }
    let mid = 0.5 * (a + b);
    adapt(f, a, mid, 0.5 * tol, depth + 1) + adapt(f, mid, b, 0.5 * tol, depth + 1)
}

/// Composite trapezoid rule for samples on a uniform grid with spacing `dt`,
/// returning the running integral at every node (first entry zero).
pub fn cumulative_trapezoid(values: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * (w[0] + w[1]) * dt;
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(&|x: f64| 3.0 * x * x, 0.0, 2.0, 1e-12);
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let v = integrate(&|x: f64| x.powf(-0.5), 0.0, 1.0, 1e-10);
        assert!((v - 2.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn empty_interval() {
        assert_eq!(integrate(&|_| 1.0, 1.0, 1.0, 1e-10), 0.0);
        assert_eq!(integrate(&|_| 1.0, 2.0, 1.0, 1e-10), 0.0);
    }

    #[test]
    fn trapezoid_linear() {
        let c = cumulative_trapezoid(&[0.0, 1.0, 2.0], 0.5);
        assert_eq!(c, vec![0.0, 0.25, 1.0]);
    }
}
