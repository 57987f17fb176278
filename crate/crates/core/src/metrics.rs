//! Coverage-curve assembly and area spectral efficiency.

use crate::coverage::{coverage_curve_cellular, coverage_curve_d2d, QuadratureSpec};
use crate::equivalence::mode_probability;
use crate::model::{Mode, NetworkConfig};
use crate::{Error, Result};

/// Which engine produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Analytic,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Analytic => "analytic",
            Method::MonteCarlo => "montecarlo",
        }
    }
}

/// Ordered (threshold, coverage probability) samples for one mode and one
/// method, with Wilson half-widths for Monte Carlo curves (zeros otherwise).
#[derive(Debug, Clone)]
pub struct CoverageCurve {
    pub mode: Mode,
    pub method: Method,
    pub thresholds_db: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
}

impl CoverageCurve {
    pub fn new(
        mode: Mode,
        method: Method,
        thresholds_db: Vec<f64>,
        probabilities: Vec<f64>,
        ci_halfwidth: Vec<f64>,
    ) -> Result<Self> {
        if thresholds_db.len() != probabilities.len() || thresholds_db.len() != ci_halfwidth.len() {
            return Err(Error::Argument("curve arrays must share a length".into()));
        }
        if thresholds_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument("thresholds must be strictly increasing".into()));
        }
        for &p in &probabilities {
            if !(-1e-9..=1.0 + 1e-9).contains(&p) {
                return Err(Error::Argument(format!("probability {p} outside [0,1]")));
            }
        }
        let mut curve = CoverageCurve {
            mode,
            method,
            thresholds_db,
            probabilities,
            ci_halfwidth,
        };
        // Monotonicity within slack: quadrature noise for analytic curves,
        // twice the Wilson width for Monte Carlo ones.
        let mut running = f64::INFINITY;
        for i in 0..curve.probabilities.len() {
            let slack = match method {
                Method::Analytic => 1e-4,
                Method::MonteCarlo => 2.0 * curve.ci_halfwidth[i].max(1e-12),
            };
            if curve.probabilities[i] > running + slack {
                return Err(Error::Argument(format!(
                    "coverage rises beyond slack at index {i}"
                )));
            }
            running = curve.probabilities[i].min(running);
            curve.probabilities[i] = curve.probabilities[i].clamp(0.0, 1.0);
        }
        Ok(curve)
    }

    /// Linear interpolation of coverage at a dB threshold inside the grid.
    pub fn probability_at_db(&self, t_db: f64) -> Option<f64> {
        let ts = &self.thresholds_db;
        if t_db < ts[0] - 1e-9 || t_db > ts[ts.len() - 1] + 1e-9 {
            return None;
        }
        match ts.binary_search_by(|x| x.partial_cmp(&t_db).unwrap()) {
            Ok(i) => Some(self.probabilities[i]),
            Err(i) => {
                if i == 0 {
                    return Some(self.probabilities[0]);
                }
                if i >= ts.len() {
                    return Some(self.probabilities[ts.len() - 1]);
                }
                let w = (t_db - ts[i - 1]) / (ts[i] - ts[i - 1]);
                Some(self.probabilities[i - 1] * (1.0 - w) + self.probabilities[i] * w)
            }
        }
    }
}

/// ASE of one mode plus a bound on the truncated tail beyond the grid.
#[derive(Debug, Clone, Copy)]
pub struct AseEstimate {
    /// bps/Hz/km².
    pub value: f64,
    /// Bound on the contribution beyond the last grid threshold, obtained by
    /// log-linear extrapolation of the coverage tail.
    pub tail_bound: f64,
}

/// Per-mode ASE in bps/Hz/km² plus their sum.
#[derive(Debug, Clone, Copy)]
pub struct AseResult {
    pub ase_cellular: f64,
    pub ase_d2d: f64,
    pub ase_sum: f64,
    pub gamma0_db: f64,
    pub lambda_cellular_km2: f64,
    pub lambda_d2d_km2: f64,
}

impl AseResult {
    pub fn new(
        ase_cellular: f64,
        ase_d2d: f64,
        gamma0_db: f64,
        lambda_cellular_km2: f64,
        lambda_d2d_km2: f64,
    ) -> Self {
        AseResult {
            ase_cellular,
            ase_d2d,
            ase_sum: ase_cellular + ase_d2d,
            gamma0_db,
            lambda_cellular_km2,
            lambda_d2d_km2,
        }
    }
}

/// Density of simultaneously active links per km²: the BS density for the
/// cellular tier (one scheduled uplink per cell), the active-transmitter
/// density for the D2D tier.
pub fn link_density(mode: Mode, cfg: &NetworkConfig) -> Result<f64> {
    match mode {
        Mode::Cellular => {
            cfg.validate()?;
            Ok(cfg.lambda_b)
        }
        Mode::D2d => {
            let split = mode_probability(cfg)?;
            Ok(cfg.d2d_tx_activity * (split.lambda_d * 1e6))
        }
    }
}

/// ASE from a coverage curve via the tail-integral form
/// `λ [log2(1+γ0) P(γ0) + (1/ln2) ∫_{γ0}^∞ P(x)/(1+x) dx]`,
/// integrated on the curve's dB grid with a log-linear extrapolated tail.
pub fn ase_from_coverage(
    curve: &CoverageCurve,
    lambda_per_km2: f64,
    gamma0_linear: f64,
) -> Result<AseEstimate> {
    if !(lambda_per_km2 >= 0.0) || !(gamma0_linear > 0.0) {
        return Err(Error::Argument("densities and gamma0 must be positive".into()));
    }
    let g0_db = 10.0 * gamma0_linear.log10();
    let ts = &curve.thresholds_db;
    let last_db = ts[ts.len() - 1];
    if g0_db < ts[0] - 1e-9 || g0_db >= last_db {
        return Err(Error::Argument(format!(
            "gamma0 = {g0_db} dB outside the curve grid [{}, {}]",
            ts[0], last_db
        )));
    }
    let p_g0 = curve.probability_at_db(g0_db).unwrap();

    // ∫ P(x)/(1+x) dx in the dB domain: dx = ln10/10 · x d(dB).
    let ln10_over_10 = std::f64::consts::LN_10 / 10.0;
    let f = |t_db: f64, p: f64| {
        let x = 10f64.powf(t_db / 10.0);
        p * x / (1.0 + x) * ln10_over_10
    };
    let mut integral = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (i, &t_db) in ts.iter().enumerate() {
        if t_db < g0_db - 1e-12 {
            continue;
        }
        if prev.is_none() && t_db > g0_db + 1e-12 {
            // Partial cell from gamma0 to the first grid point above it.
            let fa = f(g0_db, p_g0);
            let fb = f(t_db, curve.probabilities[i]);
            integral += 0.5 * (fa + fb) * (t_db - g0_db);
            prev = Some((t_db, curve.probabilities[i]));
            continue;
        }
        if let Some((pt, pp)) = prev {
            integral += 0.5 * (f(pt, pp) + f(t_db, curve.probabilities[i])) * (t_db - pt);
        }
        prev = Some((t_db, curve.probabilities[i]));
    }

    // Tail beyond the grid, bounded by log-linear extrapolation of P.
    let p_end = curve.probabilities[ts.len() - 1];
    let tail_bound = if p_end <= 0.0 {
        0.0
    } else {
        // Slope of ln P over the last decaying points.
        let mut slope: f64 = -0.1;
        for i in (1..ts.len()).rev() {
            let (p1, p0) = (curve.probabilities[i], curve.probabilities[i - 1]);
            if p1 > 0.0 && p0 > p1 {
                slope = (p1.ln() - p0.ln()) / (ts[i] - ts[i - 1]);
                break;
            }
        }
        if slope >= -1e-6 {
            return Err(Error::Law(format!(
                "coverage tail not decaying (ln-slope {slope}); extend the grid"
            )));
        }
        // ∫_{end}^∞ P_extrap · ln10/10 d(dB), with x/(1+x) <= 1.
        p_end * ln10_over_10 / (-slope)
    };

    Ok(AseEstimate {
        value: lambda_per_km2 * (gamma0_linear.ln_1p() / std::f64::consts::LN_2 * p_g0
            + integral / std::f64::consts::LN_2),
        tail_bound: lambda_per_km2 * tail_bound / std::f64::consts::LN_2,
    })
}

/// The 1-dB threshold grid used for ASE integration.
pub fn ase_grid_db() -> Vec<f64> {
    (-20..=60).map(f64::from).collect()
}

/// Analytic coverage curve of one mode on a dB grid.
pub fn analytic_coverage_curve(
    mode: Mode,
    thresholds_db: &[f64],
    cfg: &NetworkConfig,
    spec: &QuadratureSpec,
) -> Result<CoverageCurve> {
    let ps = match mode {
        Mode::Cellular => coverage_curve_cellular(thresholds_db, cfg, spec)?,
        Mode::D2d => coverage_curve_d2d(thresholds_db, cfg, spec)?,
    };
    let n = ps.len();
    CoverageCurve::new(mode, Method::Analytic, thresholds_db.to_vec(), ps, vec![0.0; n])
}

/// Per-mode and sum ASE from the analytic engine at one working threshold.
pub fn analytic_ase(cfg: &NetworkConfig, gamma0_db: f64, spec: &QuadratureSpec) -> Result<AseResult> {
    let grid = ase_grid_db();
    let gamma0 = 10f64.powf(gamma0_db / 10.0);
    let cell = analytic_coverage_curve(Mode::Cellular, &grid, cfg, spec)?;
    let d2d = analytic_coverage_curve(Mode::D2d, &grid, cfg, spec)?;
    let lc = link_density(Mode::Cellular, cfg)?;
    let ld = link_density(Mode::D2d, cfg)?;
    let a_c = ase_from_coverage(&cell, lc, gamma0)?;
    let a_d = ase_from_coverage(&d2d, ld, gamma0)?;
    Ok(AseResult::new(a_c.value, a_d.value, gamma0_db, lc, ld))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (-20..=60).map(f64::from).collect()
    }

    fn curve_from(p: impl Fn(f64) -> f64) -> CoverageCurve {
        let ts = grid();
        let ps: Vec<f64> = ts.iter().map(|&t| p(t)).collect();
        let ci = vec![0.0; ts.len()];
        CoverageCurve::new(Mode::Cellular, Method::Analytic, ts, ps, ci).unwrap()
    }

    #[test]
    fn zero_coverage_zero_ase() {
        let c = curve_from(|_| 0.0);
        let a = ase_from_coverage(&c, 5.0, 1.0).unwrap();
        assert_eq!(a.value, 0.0);
        assert_eq!(a.tail_bound, 0.0);
    }

    #[test]
    fn step_curve_matches_deterministic_sinr() {
        // SINR deterministically 10^3 (30 dB): ASE = λ log2(1 + 1000).
        let x_db = 30.0;
        let c = curve_from(|t| if t < x_db { 1.0 } else { 0.0 });
        let a = ase_from_coverage(&c, 5.0, 1.0).unwrap();
        let want = 5.0 * (1f64 + 1000.0).log2();
        // The 1 dB trapezoid grid smears the step over one cell.
        assert!(
            (a.value - want).abs() / want < 0.025,
            "{} vs {want}",
            a.value
        );
    }

    #[test]
    fn monotone_in_curve() {
        let lo = curve_from(|t| (1.0 - (t + 20.0) / 80.0).clamp(0.0, 1.0) * 0.5);
        let hi = curve_from(|t| (1.0 - (t + 20.0) / 80.0).clamp(0.0, 1.0) * 0.9);
        let a_lo = ase_from_coverage(&lo, 5.0, 1.0).unwrap();
        let a_hi = ase_from_coverage(&hi, 5.0, 1.0).unwrap();
        assert!(a_hi.value > a_lo.value);
    }

    #[test]
    fn additivity_exact() {
        let r = AseResult::new(3.25, 4.75, 0.0, 5.0, 30.0);
        assert_eq!(r.ase_sum, 3.25 + 4.75);
    }

    #[test]
    fn link_densities() {
        let cfg = NetworkConfig::default();
        assert_eq!(link_density(Mode::Cellular, &cfg).unwrap(), 5.0);
        // q -> 1 starves the D2D tier.
        let mut c = cfg.clone();
        c.beta_dbm = -400.0;
        assert!(link_density(Mode::D2d, &c).unwrap() < 1e-6);
        // Default split.
        let split = mode_probability(&cfg).unwrap();
        let want = 0.5 * (1.0 - split.q) * 300.0;
        assert!((link_density(Mode::D2d, &cfg).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn curve_validation() {
        let ts = vec![-10.0, 0.0, 10.0];
        // Rising analytic curve beyond slack rejected.
        assert!(CoverageCurve::new(
            Mode::Cellular,
            Method::Analytic,
            ts.clone(),
            vec![0.5, 0.8, 0.2],
            vec![0.0; 3]
        )
        .is_err());
        // MC slack admits small rises.
        assert!(CoverageCurve::new(
            Mode::Cellular,
            Method::MonteCarlo,
            ts.clone(),
            vec![0.5, 0.51, 0.2],
            vec![0.02; 3]
        )
        .is_ok());
        // Non-increasing thresholds rejected.
        assert!(CoverageCurve::new(
            Mode::Cellular,
            Method::Analytic,
            vec![0.0, 0.0, 1.0],
            vec![0.5, 0.4, 0.3],
            vec![0.0; 3]
        )
        .is_err());
    }

    #[test]
    fn interpolation() {
        let c = curve_from(|t| (1.0 - (t + 20.0) / 80.0).clamp(0.0, 1.0));
        let p = c.probability_at_db(0.5).unwrap();
        assert!((p - (1.0 - 20.5 / 80.0)).abs() < 1e-12);
        assert!(c.probability_at_db(100.0).is_none());
    }

    #[test]
    fn gamma0_outside_grid_rejected() {
        let c = curve_from(|_| 0.5);
        assert!(ase_from_coverage(&c, 5.0, 10f64.powf(7.0)).is_err());
    }
}
