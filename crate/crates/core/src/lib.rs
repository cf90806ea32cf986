//! Quadratic hedging in jump-diffusion markets via backward SDEs with jumps.
//!
//! The crate simulates a price driven by a Brownian motion and a Poisson
//! random measure together with approximations in which the small jumps are
//! truncated and replaced by extra Brownian noise, solves the hedging BSDEJs
//! by least-squares Monte Carlo, extracts the locally risk-minimizing and
//! mean-variance strategies, and measures how fast the approximations
//! converge as the truncation level shrinks.
//!
//! ```no_run
//! use robust_hedge::prelude::*;
//!
//! let jump = JumpSpec::new(
//!     Measure::Atoms { atoms: vec![Atom { mark: 0.5, intensity: 1.0 }] },
//!     MarkFactor::Identity,
//! )?;
//! let model = MarketModel::new(jump, CoefficientSpec::constant(0.03, 0.2, 0.01, 0.3), 1.0, 1.0)?;
//! let grid = TimeGrid::new(1.0, 50)?;
//! let bundle = simulate(&model, &[ApproximationKind::ORIGINAL], &grid, 10_000, &SimConfig::new(7))?;
//! let claim = ContingentClaim::call(1.0);
//! let hedge = hedge(&bundle, ApproximationKind::ORIGINAL, &claim, &SolverConfig::default())?;
//! println!("V(0) = {}", hedge.value_at_zero());
//! # Ok::<(), robust_hedge::Error>(())
//! ```

pub mod bsdej;
pub mod config;
pub mod error;
pub mod grid;
pub mod hedging;
pub mod market;
pub mod output;
pub mod paths;
pub mod quad;
pub mod regression;
pub mod robustness;
pub mod runner;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::bsdej::{
        apriori_bound_check, beta_norms, picard_solve, solve, BasisFamily, BasisSpec, BetaNorms, BetaRule,
        BsdejSolution, Driver, DriverInput, RegressionState, SolveMode, SolverConfig,
    };
    pub use crate::error::{Error, Result};
    pub use crate::grid::TimeGrid;
    pub use crate::hedging::{
        extract_phi, extract_pi, fs_driver, hedge, mean_variance_wealth, shortfall,
        ContingentClaim, HedgeCoefficients, HedgeResult, Payoff,
    };
    pub use crate::market::{
        check_structure, mvt_process, ApproximationKind, Atom, CoefficientSpec, JumpSpec,
        KindParams, KindTag, MarkFactor, MarketModel, Measure, StructureDiagnostics,
        StructureLimits, TimeFunction,
    };
    pub use crate::paths::{claim_payoff, simulate, MarkSampler, PathBundle, SimConfig};
    pub use crate::robustness::{
        bound_certificate, run_sweep, zeta_vanishing_check, EpsilonSweep, FitOptions,
        RobustnessReport,
    };
}
