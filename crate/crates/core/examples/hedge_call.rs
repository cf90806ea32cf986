//! Locally risk-minimizing and mean-variance hedges of a call in the
//! original market and in an approximation that swaps the small jumps for
//! an independent Brownian motion.

use robust_hedge::prelude::*;

fn main() -> Result<()> {
    let jump = JumpSpec::new(
        Measure::PowerLaw { scale: 1.0, alpha: 0.5, z_min: -1.0, z_max: 1.0 },
        MarkFactor::Identity,
    )?;
    let model = MarketModel::new(jump, CoefficientSpec::constant(0.03, 0.2, 0.01, 0.3), 1.0, 1.0)?;
    let grid = TimeGrid::new(1.0, 50)?;
    let kinds = [ApproximationKind::ORIGINAL, ApproximationKind::new(KindTag::TruncateAddB, 0.05)?];
    let bundle = simulate(&model, &kinds, &grid, 20_000, &SimConfig::new(7))?;
    let claim = ContingentClaim::call(1.0);
    let solver = SolverConfig { basis: BasisSpec::linear_spline(8), ..SolverConfig::default() };

    for kind in kinds {
        let h = hedge(&bundle, kind, &claim, &solver)?;
        let np = h.n_paths();
        let n = grid.n_steps();
        let v0 = h.value_at_zero();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!("== {kind}");
        println!("V(0) = {v0:.6}, π(0) = {:.4}, h = {:.4}", h.pi[0], h.coefficients.h[0]);
        println!(
            "E[φ(T)] = {:.2e}, E[cost(T)] = {:.4e}, max |orthogonality residual| = {:.2e}",
            mean(&h.phi[n * np..]),
            mean(&h.cost[n * np..]),
            h.orth_residual.iter().map(|r| r.abs()).fold(0.0, f64::max)
        );
        let none = shortfall(&bundle, kind, &h.terminal, v0, None)?;
        let lrm = shortfall(&bundle, kind, &h.terminal, v0, Some(&h.pi))?;
        let mvh = shortfall(&bundle, kind, &h.terminal, v0, Some(&h.upsilon))?;
        println!("E[shortfall²]: unhedged {none:.4e}, π {lrm:.4e}, Υ {mvh:.4e}");
    }
    Ok(())
}
