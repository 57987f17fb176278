//! Built-in cross-engine validation criteria.
//!
//! Each criterion pins one published claim (or one numerical contract) to a
//! measurable statement with an explicit tolerance, comparing the closed-form
//! engine against the Monte Carlo engine or against independent oracles. The
//! `acceptance` integration test and the `validate` CLI subcommand both run
//! through this module.

use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::coverage::{
    coverage_cellular, coverage_curve_cellular, coverage_curve_d2d, invert_ccdf_grid,
    CharacteristicFn, QuadratureSpec,
};
use crate::equivalence::{
    d2d_distance_law, mode_probability, serving_distance_law, cu_mean_tx_power,
};
use crate::metrics::{analytic_ase, AseResult};
use crate::model::{Mode, NetworkConfig};
use crate::oscint;
use crate::sim::{mode_split_campaign, pair_distance_campaign, run_campaign_with, CampaignOptions, CampaignResult};
use crate::special::normal_cdf;
use crate::{Error, Result};

/// Identifiers of the built-in criteria, in run order.
pub const CRITERIA: [&str; 9] = [
    "AC-1", "AC-2", "AC-3", "AC-4", "AC-5", "AC-6", "AC-7", "AC-8", "AC-9",
];

/// Outcome of one criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: &'static str,
    pub description: &'static str,
    /// Pass iff `measured` relates to `threshold` under `comparison` (and any
    /// extra conditions noted in `details` hold).
    pub measured: f64,
    pub threshold: f64,
    pub comparison: &'static str,
    pub pass: bool,
    pub details: String,
    pub runtime: Duration,
    pub runtime_budget: Option<Duration>,
}

impl CriterionResult {
    pub fn runtime_ok(&self) -> bool {
        self.runtime_budget.map_or(true, |b| self.runtime <= b)
    }
}

/// One-sample Kolmogorov-Smirnov statistics against a reference CDF.
/// Returns (D⁺, D⁻) with D⁺ = sup(F_emp - F) and D⁻ = sup(F - F_emp).
pub fn ks_statistics(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d_plus = 0.0f64;
    let mut d_minus = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d_plus = d_plus.max((i + 1) as f64 / n - f);
        d_minus = d_minus.max(f - i as f64 / n);
    }
    (d_plus, d_minus)
}

fn ac3_grid() -> Vec<f64> {
    (0..16).map(|i| -10.0 + 2.0 * i as f64).collect()
}

fn lambda_u_sweep() -> Vec<f64> {
    vec![50.0, 100.0, 150.0, 200.0, 250.0, 300.0]
}

/// Lazily shared heavy artifacts.
struct Ctx<'a> {
    cfg: &'a NetworkConfig,
    seed: u64,
    campaign: Option<CampaignResult>,
    ase_sweep: Option<Vec<(f64, AseResult)>>,
}

impl<'a> Ctx<'a> {
    fn campaign(&mut self) -> Result<&CampaignResult> {
        if self.campaign.is_none() {
            let opts = CampaignOptions {
                thresholds_db: ac3_grid(),
                ..CampaignOptions::default()
            };
            self.campaign = Some(run_campaign_with(self.cfg, self.seed, 10_000, &opts)?);
        }
        Ok(self.campaign.as_ref().unwrap())
    }

    fn ase_sweep(&mut self) -> Result<&[(f64, AseResult)]> {
        if self.ase_sweep.is_none() {
            let spec = QuadratureSpec::default();
            let mut out = Vec::new();
            for lu in lambda_u_sweep() {
                let mut c = self.cfg.clone();
                c.lambda_u = lu;
                out.push((lu, analytic_ase(&c, 0.0, &spec)?));
            }
            self.ase_sweep = Some(out);
        }
        Ok(self.ase_sweep.as_ref().unwrap())
    }
}

fn finish(
    id: &'static str,
    description: &'static str,
    measured: f64,
    threshold: f64,
    comparison: &'static str,
    extra_ok: bool,
    details: String,
    start: Instant,
    budget: Option<Duration>,
) -> CriterionResult {
    let metric_ok = match comparison {
        "<=" => measured <= threshold,
        ">=" => measured >= threshold,
        _ => false,
    };
    let runtime = start.elapsed();
    let runtime_ok = budget.map_or(true, |b| runtime <= b);
    CriterionResult {
        id,
        description,
        measured,
        threshold,
        comparison,
        pass: metric_ok && extra_ok && runtime_ok,
        details,
        runtime,
        runtime_budget: budget,
    }
}

fn ac1(ctx: &mut Ctx) -> Result<CriterionResult> {
    let start = Instant::now();
    let mc = mode_split_campaign(ctx.cfg, ctx.seed ^ 0xAC01, 100_000)?;
    let q = mode_probability(ctx.cfg)?.q;
    let gap = (mc.q_hat - q).abs();
    Ok(finish(
        "AC-1",
        "closed-form cellular-mode probability vs simulated UE fraction",
        gap,
        0.01,
        "<=",
        true,
        format!("q_closed_form={q} q_mc={} n_ues={}", mc.q_hat, mc.n_ues),
        start,
        Some(Duration::from_secs(10)),
    ))
}

fn ac2(ctx: &mut Ctx) -> Result<CriterionResult> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for (i, p0) in (-90..=-60).step_by(5).enumerate() {
        let mut c = ctx.cfg.clone();
        c.p0_dbm = p0 as f64;
        let analytic = cu_mean_tx_power(&c)?;
        let mc = mode_split_campaign(&c, ctx.seed ^ (0xAC02 + i as u64), 20_000)?;
        let rel = (analytic - mc.mean_cu_power_mw.mean).abs() / analytic;
        worst = worst.max(rel);
        rows.push(format!("p0={p0}dBm analytic={analytic} mc={}", mc.mean_cu_power_mw.mean));
    }
    Ok(finish(
        "AC-2",
        "mean cellular transmit power, analytic vs Monte Carlo, across the P0 sweep",
        worst,
        0.05,
        "<=",
        true,
        rows.join("; "),
        start,
        Some(Duration::from_secs(120)),
    ))
}

fn ac3(ctx: &mut Ctx) -> Result<CriterionResult> {
    let start = Instant::now();
    let grid = ac3_grid();
    let analytic = coverage_curve_cellular(&grid, ctx.cfg, &QuadratureSpec::default())?;
    let camp = ctx.campaign()?;
    let mc = camp
        .curves
        .iter()
        .find(|c| c.mode == Mode::Cellular)
        .ok_or_else(|| Error::Law("campaign produced no cellular curve".into()))?;
    let mut worst = 0.0f64;
    for (a, m) in analytic.iter().zip(&mc.probabilities) {
        worst = worst.max((a - m).abs());
    }
    Ok(finish(
        "AC-3",
        "cellular coverage, analytic vs Monte Carlo, max absolute gap on the threshold grid",
        worst,
        0.05,
        "<=",
        true,
        format!(
            "analytic={analytic:?} mc={:?} n_samples={}",
            mc.probabilities,
            camp.n_realizations - camp.skipped_cellular
        ),
        start,
        Some(Duration::from_secs(900)),
    ))
}

fn ac4(ctx: &mut Ctx) -> Result<CriterionResult> {
    let start = Instant::now();
    let grid = ac3_grid();
    let analytic = coverage_curve_d2d(&grid, ctx.cfg, &QuadratureSpec::default())?;
    let camp = ctx.campaign()?;
    let mc = camp
        .curves
        .iter()
        .find(|c| c.mode == Mode::D2d)
        .ok_or_else(|| Error::Law("campaign produced no d2d curve".into()))?;
    let mut worst_below = f64::NEG_INFINITY;
    let mut strictly_above = 0usize;
    for (a, m) in analytic.iter().zip(&mc.probabilities) {
        worst_below = worst_below.max(m - a);
        if a > m {
            strictly_above += 1;
        }
    }
    let frac_above = strictly_above as f64 / grid.len() as f64;
    Ok(finish(
        "AC-4",
        "analytic D2D coverage bounds Monte Carlo from above (within 0.02) and exceeds it at half the grid",
        worst_below,
        0.02,
        "<=",
        frac_above >= 0.5,
        format!("analytic={analytic:?} mc={:?} frac_strictly_above={frac_above}", mc.probabilities),
        start,
        None,
    ))
}

fn ac5(ctx: &mut Ctx) -> Result<CriterionResult> {
    let start = Instant::now();
    let sweep = ctx.ase_sweep()?;
    let mut min_step = f64::INFINITY;
    let mut rows = Vec::new();
    for w in sweep.windows(2) {
        min_step = min_step.min(w[1].1.ase_sum - w[0].1.ase_sum);
    }
    for (lu, a) in sweep {
        rows.push(format!("lambda_u={lu} sum={}", a.ase_sum));
    }
    Ok(finish(
        "AC-5",
        "sum ASE strictly increasing in the UE density sweep",
        min_step,
        0.0,
        ">=",
        min_step > 0.0,
        rows.join("; "),
        start,
        None,
    ))
}

fn ac6(ctx: &mut Ctx) -> Result<CriterionResult> {
    let start = Instant::now();
    let sweep = ctx.ase_sweep()?.to_vec();
    let at_100 = sweep
        .iter()
        .find(|(lu, _)| (*lu - 100.0).abs() < 1e-9)
        .ok_or_else(|| Error::Law("sweep lacks the 100 UEs/km2 point".into()))?;
    let ratio = {
        let (c, d) = (at_100.1.ase_cellular, at_100.1.ase_d2d);
        c.max(d) / c.min(d).max(1e-12)
    };
    let min_cell = sweep
        .iter()
        .filter(|(lu, _)| *lu <= 250.0)
        .map(|(_, a)| a.ase_cellular)
        .fold(f64::INFINITY, f64::min);
    Ok(finish(
        "AC-6",
        "comparable per-tier ASE at 100 UEs/km2 (factor <= 2) with cellular ASE above 5 bps/Hz/km2",
        ratio,
        2.0,
        "<=",
        min_cell > 5.0,
        format!(
            "ase_cellular@100={} ase_d2d@100={} min_cellular_ase={min_cell}",
            at_100.1.ase_cellular, at_100.1.ase_d2d
        ),
        start,
        None,
    ))
}

fn ac7(ctx: &mut Ctx) -> Result<CriterionResult> {
    let start = Instant::now();
    let spec = QuadratureSpec::default();
    let betas: Vec<f64> = (0..21).map(|i| -85.0 + 2.0 * i as f64).collect();
    let mut cov = Vec::with_capacity(betas.len());
    for &b in &betas {
        let mut c = ctx.cfg.clone();
        c.beta_dbm = b;
        cov.push(coverage_cellular(1.0, &c, &spec)?);
    }
    let (argmax, &max) = cov
        .iter()
        .enumerate()
        .max_by(|(_, x), (_, y)| x.partial_cmp(y).unwrap())
        .unwrap();
    let interior = argmax != 0 && argmax != cov.len() - 1;
    let margin = max - cov[0].max(cov[cov.len() - 1]);
    Ok(finish(
        "AC-7",
        "cellular coverage at 0 dB attains an interior maximum over the mode-threshold sweep",
        margin,
        0.01,
        ">=",
        interior,
        format!("beta_at_max={} coverage={cov:?}", betas[argmax]),
        start,
        None,
    ))
}

fn ac8(_ctx: &mut Ctx) -> Result<CriterionResult> {
    let start = Instant::now();
    let spec = QuadratureSpec::default();
    let mut worst = 0.0f64;
    let mut notes = Vec::new();

    // Threshold grid; the point-mass case drops points adjacent to its jump.
    let grid: Vec<f64> = (0..41)
        .map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 40.0))
        .collect();

    // Point mass: 1/SINR = 1 surely.
    let cf = CharacteristicFn::from_parts(|_| Complex64::new(1.0, 0.0), 1.0, 1.0, Mode::Cellular);
    let ts: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|t| (t.log10()).abs() > 0.05)
        .collect();
    let got = invert_ccdf_grid(&cf, &ts, &spec)?;
    for (t, p) in ts.iter().zip(&got) {
        let want = if *t < 1.0 { 1.0 } else { 0.0 };
        worst = worst.max((p - want).abs());
    }
    notes.push(format!("point_mass_max_err={worst}"));

    // Exponential 1/SINR with unit mean.
    let cf = CharacteristicFn::from_parts(
        |w| Complex64::new(1.0, w).inv(),
        0.0,
        1.0,
        Mode::Cellular,
    );
    let got = invert_ccdf_grid(&cf, &grid, &spec)?;
    let mut e_err = 0.0f64;
    for (t, p) in grid.iter().zip(&got) {
        let want = 1.0 - (-1.0 / t).exp();
        e_err = e_err.max((p - want).abs());
    }
    worst = worst.max(e_err);
    notes.push(format!("exponential_max_err={e_err}"));

    // Lognormal 1/SINR (unit ln-scale), cf by numerical oscillatory
    // integration of the density.
    let pdf = |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            (-(x.ln()) * (x.ln()) / 2.0).exp() / (x * (2.0 * std::f64::consts::PI).sqrt())
        }
    };
    let cf = CharacteristicFn::from_parts(
        move |w| {
            if w == 0.0 {
                return Complex64::new(1.0, 0.0);
            }
            oscint::integrate_oscillatory(
                |x| Complex64::new(pdf(x), 0.0),
                -w,
                1e-4,
                (6.0f64).exp(),
                1e-9,
                100_000,
            )
            .expect("lognormal cf quadrature")
        },
        0.0,
        1.0,
        Mode::Cellular,
    );
    let got = invert_ccdf_grid(&cf, &grid, &spec)?;
    let mut l_err = 0.0f64;
    for (t, p) in grid.iter().zip(&got) {
        let want = normal_cdf(-(t.ln()));
        l_err = l_err.max((p - want).abs());
    }
    worst = worst.max(l_err);
    notes.push(format!("lognormal_max_err={l_err}"));

    Ok(finish(
        "AC-8",
        "characteristic-function inversion against known CDFs (point mass, exponential, lognormal)",
        worst,
        1e-3,
        "<=",
        true,
        notes.join("; "),
        start,
        None,
    ))
}

fn ac9(ctx: &mut Ctx) -> Result<CriterionResult> {
    let start = Instant::now();
    // Law normalization contracts.
    let serving = serving_distance_law(ctx.cfg)?;
    serving.validate()?;
    let d2d = d2d_distance_law(ctx.cfg)?;
    d2d.validate()?;

    // Serving-distance law vs transformed empirical serving distances.
    let mc = mode_split_campaign(ctx.cfg, ctx.seed ^ 0xAC09, 100_000)?;
    let mut samples = mc.serving_equiv;
    let n_serving = samples.len();
    let (dp, dm) = ks_statistics(&mut samples, |r| serving.cdf(r));
    let ks2 = dp.max(dm);

    // Pair-distance law stochastically dominated by the empirical law:
    // the mixture CDF must not fall below the empirical CDF by more than the
    // one-sided tolerance anywhere.
    let mut pairs = pair_distance_campaign(ctx.cfg, ctx.seed ^ 0xAC99, 40_000)?;
    let n_pairs = pairs.len();
    let (d_violation, _) = ks_statistics(&mut pairs, |r| d2d.cdf(r));
    let one_sided_ok = d_violation <= 0.02;

    Ok(finish(
        "AC-9",
        "distance-law contracts: normalization, serving-law KS, pair-law dominance direction",
        ks2,
        0.01,
        "<=",
        one_sided_ok,
        format!(
            "serving_ks={ks2} (n={n_serving}) pair_one_sided_violation={d_violation} (n={n_pairs}, tol 0.02)"
        ),
        start,
        None,
    ))
}

/// Run one criterion by id.
pub fn run_one(id: &str, cfg: &NetworkConfig, seed: u64) -> Result<CriterionResult> {
    let mut ctx = Ctx {
        cfg,
        seed,
        campaign: None,
        ase_sweep: None,
    };
    match id {
        "AC-1" => ac1(&mut ctx),
        "AC-2" => ac2(&mut ctx),
        "AC-3" => ac3(&mut ctx),
        "AC-4" => ac4(&mut ctx),
        "AC-5" => ac5(&mut ctx),
        "AC-6" => ac6(&mut ctx),
        "AC-7" => ac7(&mut ctx),
        "AC-8" => ac8(&mut ctx),
        "AC-9" => ac9(&mut ctx),
        other => Err(Error::Argument(format!("unknown criterion id {other}"))),
    }
}

/// Run every criterion, sharing the heavy Monte Carlo campaign and ASE sweep.
pub fn run_all(cfg: &NetworkConfig, seed: u64) -> Result<Vec<CriterionResult>> {
    let mut ctx = Ctx {
        cfg,
        seed,
        campaign: None,
        ase_sweep: None,
    };
    let runners: [(fn(&mut Ctx) -> Result<CriterionResult>,); 9] = [
        (ac1,),
        (ac2,),
        (ac3,),
        (ac4,),
        (ac5,),
        (ac6,),
        (ac7,),
        (ac8,),
        (ac9,),
    ];
    let mut out = Vec::with_capacity(runners.len());
    for (f,) in runners {
        out.push(f(&mut ctx)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_statistics_on_uniform() {
        // Exact uniform quantiles give the minimal possible deviation 1/(2n).
        let n = 1000;
        let mut xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let (dp, dm) = ks_statistics(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!(dp <= 0.5 / n as f64 + 1e-12);
        assert!(dm <= 0.5 / n as f64 + 1e-12);
        // A shifted sample violates one side only.
        let mut xs: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) / n as f64) * 0.9).collect();
        let (dp, dm) = ks_statistics(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!(dp > 0.09 && dm <= 0.06, "dp={dp} dm={dm}");
    }

    #[test]
    fn unknown_criterion_rejected() {
        let cfg = NetworkConfig::default();
        assert!(run_one("AC-42", &cfg, 1).is_err());
    }
}
