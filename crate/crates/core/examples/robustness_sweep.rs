//! Truncation sweep on a stable-like power-law market: distances between the
//! original hedge and its small-jump approximations, fitted rates and bounds.

use robust_hedge::prelude::*;

fn main() -> Result<()> {
    let jump = JumpSpec::new(
        Measure::PowerLaw { scale: 1.0, alpha: 0.5, z_min: -1.0, z_max: 1.0 },
        MarkFactor::Identity,
    )?;
    let model = MarketModel::new(jump, CoefficientSpec::constant(0.03, 0.2, 0.01, 0.3), 1.0, 1.0)?;
    let args: Vec<String> = std::env::args().collect();
    let n_paths = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let knots: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(8);
    for tag in [KindTag::TruncateAddB, KindTag::TruncateRescaleW] {
        let sweep = EpsilonSweep {
            model: model.clone(),
            claim: ContingentClaim::call(1.0),
            tag,
            epsilons: vec![0.4, 0.2, 0.1, 0.05, 0.025],
            grid: TimeGrid::new(1.0, 50)?,
            n_paths,
            sim: SimConfig::new(2024),
            solver: SolverConfig {
                basis: BasisSpec::linear_spline(knots),
                ..SolverConfig::default()
            },
            limits: StructureLimits::default(),
            fit: FitOptions::default(),
            stability_check: true,
        };
        let t = std::time::Instant::now();
        let report = run_sweep(&sweep)?;
        println!("== {tag} ({:.1?}, {} excluded)", t.elapsed(), report.excluded);
        println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "eps", "G2", "claim", "v", "pi", "phi", "cost", "upsilon", "zeta");
        for r in &report.rows {
            println!(
                "{:>6} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e}",
                r.epsilon, r.g2, r.claim_dist, r.v_dist, r.pi_dist, r.phi_dist, r.cost_dist, r.upsilon_dist, r.zeta_norm
            );
        }
        for s in &report.slopes {
            println!("slope {:<13} vs claim {:?}  vs claim+G² {:?}", s.column, s.slope_vs_claim, s.slope_vs_rate);
        }
        for c in &report.certificates {
            println!(
                "bound {:<13} {:<16} C={:.3e} C'={:.3e} holds={} drift={:?}",
                c.quantity, c.bound, c.c, c.c_prime, c.holds, c.drift
            );
        }
        println!("mvh {:?}", report.mvh);
        println!("zeta {:?}", report.zeta);
        println!("violations {:?}", report.monotone_violations);
        println!("warnings {:?}", report.warnings);
        println!("flags {:?} -> {}", report.flags, report.flags.all());
    }
    Ok(())
}
