//! Seeded, parallel measurement campaigns over independent realizations.

use rayon::prelude::*;

use super::hashing::mix64;
use super::{
    assign_modes, default_window, measure_sinr, sample_deployment_asymmetric,
    schedule_and_pair_scoped, D2dRole, PairScope,
};
use crate::metrics::{ase_from_coverage, link_density, AseResult, CoverageCurve, Method};
use crate::model::{cu_tx_power_mw_derived, Mode, NetworkConfig};
use crate::sim::hashing::{link_normal, TAG_UE_UE};
use crate::{Error, Result};

/// Window geometry and measurement grid of a campaign.
#[derive(Debug, Clone)]
pub struct CampaignOptions {
    /// Measurement-region radius, m.
    pub guard: f64,
    /// Simulation window radius, m; `None` picks guard + 5 mean inter-site
    /// distances.
    pub window: Option<f64>,
    /// SINR threshold grid, dB, strictly increasing.
    pub thresholds_db: Vec<f64>,
    /// Working threshold for the ASE summary, dB.
    pub gamma0_db: f64,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        CampaignOptions {
            guard: 300.0,
            window: None,
            thresholds_db: (-20..=60).map(f64::from).collect(),
            gamma0_db: 0.0,
        }
    }
}

/// Sample mean with a normal-theory confidence half-width.
#[derive(Debug, Clone, Copy)]
pub struct MeanEstimate {
    pub mean: f64,
    pub ci_halfwidth: f64,
    pub n: u64,
}

/// Empirical cellular-mode fraction.
#[derive(Debug, Clone, Copy)]
pub struct ModeSplitEstimate {
    pub q_hat: f64,
    pub ci_halfwidth: f64,
    pub n_ues: u64,
}

/// Aggregates of one coverage campaign.
#[derive(Debug, Clone)]
pub struct CampaignResult {
    /// Monte Carlo coverage curves; cellular first, D2D second when present.
    pub curves: Vec<CoverageCurve>,
    pub mode_split: ModeSplitEstimate,
    pub mean_cu_power_mw: MeanEstimate,
    /// Active D2D transmitters per km² in the guard region.
    pub d2d_tx_density_km2: MeanEstimate,
    /// ASE assembled from the Monte Carlo curves at `gamma0_db`.
    pub ase: Option<AseResult>,
    pub n_realizations: usize,
    pub skipped_cellular: usize,
    pub skipped_d2d: usize,
    pub window: f64,
    pub guard: f64,
    pub master_seed: u64,
    pub warnings: Vec<String>,
}

const Z95: f64 = 1.959963984540054;

fn wilson_halfwidth(k: f64, n: f64) -> f64 {
    if n <= 0.0 {
        return f64::NAN;
    }
    let p = k / n;
    let z2 = Z95 * Z95;
    Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

fn realization_seed(master: u64, k: usize) -> u64 {
    mix64(master ^ mix64(k as u64 ^ 0x00C0_FFEE_0000_0000))
}

struct RealizationOut {
    cell_sinr: Option<f64>,
    d2d_sinr: Option<f64>,
    n_ue_guard: u64,
    n_cell_guard: u64,
    n_tx_guard: u64,
    cu_power_sum: f64,
}

/// Run `n` independent realizations at the default window geometry.
pub fn run_campaign(cfg: &NetworkConfig, master_seed: u64, n: usize) -> Result<CampaignResult> {
    run_campaign_with(cfg, master_seed, n, &CampaignOptions::default())
}

/// Run `n` independent realizations. Results are a pure function of
/// (cfg, master_seed, n, opts) at any thread count.
pub fn run_campaign_with(
    cfg: &NetworkConfig,
    master_seed: u64,
    n: usize,
    opts: &CampaignOptions,
) -> Result<CampaignResult> {
    if n == 0 {
        return Err(Error::Argument("campaign needs at least one realization".into()));
    }
    if opts.thresholds_db.windows(2).any(|w| w[1] <= w[0]) || opts.thresholds_db.is_empty() {
        return Err(Error::Argument("threshold grid must be strictly increasing".into()));
    }
    cfg.validate()?;
    let window = match opts.window {
        Some(w) => w,
        None => default_window(cfg, opts.guard)?,
    };
    let guard = opts.guard;

    let runs: Vec<Result<RealizationOut>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let seed = realization_seed(master_seed, k);
            let dep = sample_deployment_asymmetric(cfg, seed, window, window, guard)?;
            let dep = assign_modes(dep, cfg)?;
            let dep = schedule_and_pair_scoped(dep, cfg, seed, PairScope::TypicalOnly)?;
            let samples = measure_sinr(&dep, cfg)?;
            let d = cfg.derived()?;
            let mut out = RealizationOut {
                cell_sinr: None,
                d2d_sinr: None,
                n_ue_guard: 0,
                n_cell_guard: 0,
                n_tx_guard: 0,
                cu_power_sum: 0.0,
            };
            for s in samples {
                match s.mode {
                    Mode::Cellular => out.cell_sinr = Some(s.sinr),
                    Mode::D2d => out.d2d_sinr = Some(s.sinr),
                }
            }
            for i in 0..dep.ue.len() {
                if dep.ue[i].norm() > guard {
                    continue;
                }
                out.n_ue_guard += 1;
                if dep.modes[i] == Mode::Cellular {
                    out.n_cell_guard += 1;
                    let link = dep.serving[i].unwrap();
                    out.cu_power_sum += cu_tx_power_mw_derived(link.equiv, cfg, &d);
                }
                if dep.roles[i] == D2dRole::Tx {
                    out.n_tx_guard += 1;
                }
            }
            Ok(out)
        })
        .collect();

    let mut cell_sinrs = Vec::new();
    let mut d2d_sinrs = Vec::new();
    let (mut n_ue, mut n_cell, mut n_tx) = (0u64, 0u64, 0u64);
    let mut power_sum = 0.0;
    let mut per_real_power_means = Vec::new();
    let (mut skipped_cell, mut skipped_d2d) = (0usize, 0usize);
    for r in runs {
        let r = r?;
        match r.cell_sinr {
            Some(s) => cell_sinrs.push(s),
            None => skipped_cell += 1,
        }
        match r.d2d_sinr {
            Some(s) => d2d_sinrs.push(s),
            None => skipped_d2d += 1,
        }
        n_ue += r.n_ue_guard;
        n_cell += r.n_cell_guard;
        n_tx += r.n_tx_guard;
        power_sum += r.cu_power_sum;
        if r.n_cell_guard > 0 {
            per_real_power_means.push(r.cu_power_sum / r.n_cell_guard as f64);
        }
    }

    let mk_curve = |mode: Mode, sinrs: &[f64]| -> Result<Option<CoverageCurve>> {
        if sinrs.is_empty() {
            return Ok(None);
        }
        let n = sinrs.len() as f64;
        let mut ps = Vec::with_capacity(opts.thresholds_db.len());
        let mut cis = Vec::with_capacity(opts.thresholds_db.len());
        for &tdb in &opts.thresholds_db {
            let t = 10f64.powf(tdb / 10.0);
            let k = sinrs.iter().filter(|&&s| s > t).count() as f64;
            ps.push(k / n);
            cis.push(wilson_halfwidth(k, n));
        }
        CoverageCurve::new(mode, Method::MonteCarlo, opts.thresholds_db.clone(), ps, cis)
            .map(Some)
    };

    let mut curves = Vec::new();
    if let Some(c) = mk_curve(Mode::Cellular, &cell_sinrs)? {
        curves.push(c);
    }
    if let Some(c) = mk_curve(Mode::D2d, &d2d_sinrs)? {
        curves.push(c);
    }

    let gamma0 = 10f64.powf(opts.gamma0_db / 10.0);
    let ase = {
        let cell = curves.iter().find(|c| c.mode == Mode::Cellular);
        let d2d = curves.iter().find(|c| c.mode == Mode::D2d);
        match (cell, d2d) {
            (Some(cc), Some(dc)) => {
                let lc = link_density(Mode::Cellular, cfg)?;
                let ld = link_density(Mode::D2d, cfg)?;
                match (
                    ase_from_coverage(cc, lc, gamma0),
                    ase_from_coverage(dc, ld, gamma0),
                ) {
                    (Ok(a), Ok(b)) => Some(AseResult::new(a.value, b.value, opts.gamma0_db, lc, ld)),
                    _ => None,
                }
            }
            _ => None,
        }
    };

    let power_mean = if n_cell > 0 {
        power_sum / n_cell as f64
    } else {
        f64::NAN
    };
    let power_ci = if per_real_power_means.len() > 1 {
        let m = per_real_power_means.iter().sum::<f64>() / per_real_power_means.len() as f64;
        let var = per_real_power_means
            .iter()
            .map(|x| (x - m) * (x - m))
            .sum::<f64>()
            / (per_real_power_means.len() - 1) as f64;
        Z95 * (var / per_real_power_means.len() as f64).sqrt()
    } else {
        f64::NAN
    };

    let area_km2 = std::f64::consts::PI * guard * guard * 1e-6 * n as f64;
    let tx_density = n_tx as f64 / area_km2;
    let tx_density_ci = Z95 * (n_tx as f64).sqrt() / area_km2;

    Ok(CampaignResult {
        curves,
        mode_split: ModeSplitEstimate {
            q_hat: n_cell as f64 / n_ue as f64,
            ci_halfwidth: wilson_halfwidth(n_cell as f64, n_ue as f64),
            n_ues: n_ue,
        },
        mean_cu_power_mw: MeanEstimate {
            mean: power_mean,
            ci_halfwidth: power_ci,
            n: n_cell,
        },
        d2d_tx_density_km2: MeanEstimate {
            mean: tx_density,
            ci_halfwidth: tx_density_ci,
            n: n_tx,
        },
        ase,
        n_realizations: n,
        skipped_cellular: skipped_cell,
        skipped_d2d: skipped_d2d,
        window,
        guard,
        master_seed,
        warnings: cfg.warnings(),
    })
}

/// Mode-assignment-only campaign output.
#[derive(Debug, Clone)]
pub struct ModeCampaignResult {
    pub q_hat: f64,
    pub ci_halfwidth: f64,
    pub n_ues: u64,
    /// Serving equivalent distances of every measured cellular UE.
    pub serving_equiv: Vec<f64>,
    pub mean_cu_power_mw: MeanEstimate,
}

/// Estimate the cellular-mode fraction (and serving-distance/power samples)
/// from at least `target_ues` UEs. UEs are sampled only where they are
/// measured; BSs extend far enough that no achievable association is lost.
pub fn mode_split_campaign(
    cfg: &NetworkConfig,
    master_seed: u64,
    target_ues: u64,
) -> Result<ModeCampaignResult> {
    cfg.validate()?;
    let d = cfg.derived()?;
    let n_real = 8usize;
    let guard = (target_ues as f64 / (n_real as f64 * std::f64::consts::PI * d.lambda_u_m2))
        .sqrt()
        .max(200.0);
    let margin = super::rss_candidate_radius(cfg).min(2e5);
    let bs_window = guard + margin + 1.0 / d.lambda_b_m2.sqrt();

    let outs: Vec<Result<(u64, u64, Vec<f64>, f64)>> = (0..n_real)
        .into_par_iter()
        .map(|k| {
            let seed = realization_seed(master_seed, k ^ 0x3_0000);
            let dep = sample_deployment_asymmetric(cfg, seed, bs_window, guard, guard)?;
            let dep = assign_modes(dep, cfg)?;
            let mut equivs = Vec::new();
            let mut power = 0.0;
            let mut n_cell = 0u64;
            for i in 0..dep.ue.len() {
                if let Some(link) = dep.serving[i] {
                    equivs.push(link.equiv);
                    power += cu_tx_power_mw_derived(link.equiv, cfg, &d);
                    n_cell += 1;
                }
            }
            Ok((dep.ue.len() as u64, n_cell, equivs, power))
        })
        .collect();

    let (mut n_ue, mut n_cell) = (0u64, 0u64);
    let mut equiv = Vec::new();
    let mut power_sum = 0.0;
    let mut per_real = Vec::new();
    for o in outs {
        let (nu, nc, eq, pw) = o?;
        n_ue += nu;
        n_cell += nc;
        equiv.extend(eq);
        power_sum += pw;
        if nc > 0 {
            per_real.push(pw / nc as f64);
        }
    }
    let mean = power_sum / n_cell.max(1) as f64;
    let ci = if per_real.len() > 1 {
        let m = per_real.iter().sum::<f64>() / per_real.len() as f64;
        let var =
            per_real.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (per_real.len() - 1) as f64;
        Z95 * (var / per_real.len() as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(ModeCampaignResult {
        q_hat: n_cell as f64 / n_ue as f64,
        ci_halfwidth: wilson_halfwidth(n_cell as f64, n_ue as f64),
        n_ues: n_ue,
        serving_equiv: equiv,
        mean_cu_power_mw: MeanEstimate {
            mean,
            ci_halfwidth: ci,
            n: n_cell,
        },
    })
}

/// Transformed (equivalent) distances from guard-region D2D receivers to
/// their strongest transmitter, across as many realizations as needed to
/// collect `target_pairs` samples.
pub fn pair_distance_campaign(
    cfg: &NetworkConfig,
    master_seed: u64,
    target_pairs: usize,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let d = cfg.derived()?;
    let split = crate::equivalence::mode_probability(cfg)?;
    let guard = 600.0;
    let search_margin = 800.0;
    let ue_window = guard + search_margin;
    let bs_window = ue_window + super::rss_candidate_radius(cfg).min(2e5);
    let rx_density = (1.0 - cfg.d2d_tx_activity).max(1e-12) * split.lambda_d;
    let per_real = std::f64::consts::PI * guard * guard * rx_density;
    let n_real = ((target_pairs as f64 / per_real.max(1e-9)).ceil() as usize).clamp(1, 100_000);

    let outs: Vec<Result<Vec<f64>>> = (0..n_real)
        .into_par_iter()
        .map(|k| {
            let seed = realization_seed(master_seed, k ^ 0x7_0000);
            let dep = sample_deployment_asymmetric(cfg, seed, bs_window, ue_window, guard)?;
            let dep = assign_modes(dep, cfg)?;
            let dep = schedule_and_pair_scoped(dep, cfg, seed, PairScope::TypicalOnly)?;
            let mut dists = Vec::new();
            for i in 0..dep.ue.len() {
                if dep.roles[i] != D2dRole::Rx || dep.ue[i].norm() > guard {
                    continue;
                }
                if let Some(tx) = super::pair_receiver(&dep, cfg, &d, i) {
                    let r = dep.ue[i].dist(dep.ue[tx as usize]).max(1e-3);
                    let z = link_normal(
                        dep.seed,
                        TAG_UE_UE,
                        dep.ue_ids[i] as u64,
                        dep.ue_ids[tx as usize] as u64,
                    );
                    let h = 10f64.powf(cfg.sigma_d_db * z / 10.0);
                    dists.push(h.powf(-1.0 / cfg.alpha_d) * r);
                }
            }
            Ok(dists)
        })
        .collect();

    let mut all = Vec::new();
    for o in outs {
        all.extend(o?);
    }
    Ok(all)
}
