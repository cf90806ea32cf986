//! Small-jump variance of a few jump measures and the structural quantities
//! (κ, h, mean-variance trade-off) of each approximation.

use robust_hedge::prelude::*;

fn main() -> Result<()> {
    let measures = [
        ("power law, α = 0.5", Measure::PowerLaw { scale: 1.0, alpha: 0.5, z_min: -1.0, z_max: 1.0 }),
        ("power law, α = 1.5", Measure::PowerLaw { scale: 1.0, alpha: 1.5, z_min: -1.0, z_max: 1.0 }),
        (
            "tempered, α = 0.8",
            Measure::TemperedPowerLaw { scale: 1.0, alpha: 0.8, decay: 3.0, z_min: -1.0, z_max: 2.0 },
        ),
        (
            "atoms",
            Measure::Atoms {
                atoms: vec![Atom { mark: -0.2, intensity: 2.0 }, Atom { mark: 0.05, intensity: 10.0 }],
            },
        ),
    ];
    let levels = [0.4, 0.2, 0.1, 0.05, 0.025, 0.0125];

    print!("{:<20}", "G²(ε)");
    for e in levels {
        print!(" {e:>10}");
    }
    println!(" {:>10}", "total");
    for (name, m) in &measures {
        let j = JumpSpec::new(m.clone(), MarkFactor::Identity)?;
        print!("{name:<20}");
        for e in levels {
            print!(" {:>10.3e}", j.small_jump_variance(e));
        }
        println!(" {:>10.3e}", j.total_g2());
    }

    let jump = JumpSpec::new(measures[0].1.clone(), MarkFactor::Identity)?;
    let model = MarketModel::new(jump, CoefficientSpec::constant(0.03, 0.2, 0.01, 0.3), 1.0, 1.0)?;
    let grid = TimeGrid::new(1.0, 10)?;
    println!("\nκ(0) = {:.6}, h(0) = {:.6}", model.kappa(0.0), model.h(0.0)?);
    let kinds = [
        ApproximationKind::ORIGINAL,
        ApproximationKind::new(KindTag::TruncateAddB, 0.1)?,
        ApproximationKind::new(KindTag::TruncateRescaleW, 0.1)?,
        ApproximationKind::new(KindTag::TruncateOnly, 0.1)?,
    ];
    for kind in kinds {
        let params = KindParams::resolve(&model, kind, SimConfig::new(0).reference_epsilon)?;
        let d = check_structure(&model, &params, &grid, &StructureLimits::default())?;
        let k_t = mvt_process(&model, &params, &grid)?;
        println!(
            "{:<26} κ = {:.6}  h = {:.6}  K(T) = {:.3e}  margin = {:.4}  C = {:.4}  trusted = {}",
            kind.to_string(),
            d.kappa[0],
            d.h[0],
            k_t.last().unwrap(),
            d.mmm_margin,
            d.lipschitz_c,
            d.trusted()
        );
    }
    Ok(())
}
