//! Seeded Monte Carlo stochastic-geometry simulator.
//!
//! A realization samples BS and UE Poisson processes on a finite disk, labels
//! every UE's mode by comparing its strongest downlink received power against
//! the threshold, schedules one uplink transmitter per cell, splits D2D UEs
//! into transmitters and receivers, pairs receivers to their strongest
//! transmitter, and measures SINR at the typical cellular BS and the typical
//! D2D receiver. Everything is a pure function of (config, seed), so
//! campaigns parallelize over realizations without losing reproducibility.

pub mod hashing;

mod campaign;

pub use campaign::{
    mode_split_campaign, pair_distance_campaign, run_campaign, run_campaign_with, CampaignOptions,
    CampaignResult, MeanEstimate, ModeCampaignResult, ModeSplitEstimate,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::model::{cu_tx_power_mw_derived, Derived, Mode, NetworkConfig};
use crate::{Error, Result};
use hashing::{keyed_index, keyed_uniform, link_normal, mix64, TAG_ROLE, TAG_SCHED, TAG_UE_BS, TAG_UE_UE};

/// Planar position, meters, measurement center at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn dist(self, o: Point) -> f64 {
        ((self.x - o.x).powi(2) + (self.y - o.y).powi(2)).sqrt()
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }
}

/// Role of a UE in the D2D tier for the current slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum D2dRole {
    NonD2d,
    Tx,
    Rx,
}

/// A cellular UE's association outcome.
#[derive(Debug, Clone, Copy)]
pub struct ServingLink {
    pub bs: u32,
    pub dist: f64,
    /// Linear shadowing gain of the serving link.
    pub shadow: f64,
    /// Equivalent distance H^{-1/alpha} R.
    pub equiv: f64,
    pub rss_mw: f64,
}

/// One sampled network realization with its per-stage annotations.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub seed: u64,
    pub window: f64,
    pub guard: f64,
    pub bs: Vec<Point>,
    pub ue: Vec<Point>,
    /// Stable ids keying shadowing; survive window restriction.
    pub bs_ids: Vec<u32>,
    pub ue_ids: Vec<u32>,
    pub modes: Vec<Mode>,
    pub serving: Vec<Option<ServingLink>>,
    /// Scheduled uplink transmitter per BS.
    pub scheduled: Vec<Option<u32>>,
    pub roles: Vec<D2dRole>,
    /// Strongest-transmitter pairing per receiver UE.
    pub pairs: Vec<Option<u32>>,
}

impl Deployment {
    /// Assemble a deployment from explicit points (tests, scenario tools).
    pub fn from_parts(bs: Vec<Point>, ue: Vec<Point>, seed: u64, window: f64, guard: f64) -> Self {
        let bs_ids = (0..bs.len() as u32).collect();
        let ue_ids = (0..ue.len() as u32).collect();
        Deployment {
            seed,
            window,
            guard,
            bs,
            ue,
            bs_ids,
            ue_ids,
            modes: Vec::new(),
            serving: Vec::new(),
            scheduled: Vec::new(),
            roles: Vec::new(),
            pairs: Vec::new(),
        }
    }

    /// Restriction to a smaller window. Point ids are preserved, so link
    /// shadowing is unchanged on the surviving points; stage annotations are
    /// dropped and must be recomputed.
    pub fn restricted(&self, window: f64) -> Deployment {
        let keep = |pts: &[Point], ids: &[u32]| -> (Vec<Point>, Vec<u32>) {
            pts.iter()
                .zip(ids)
                .filter(|(p, _)| p.norm() <= window)
                .map(|(p, i)| (*p, *i))
                .unzip()
        };
        let (bs, bs_ids) = keep(&self.bs, &self.bs_ids);
        let (ue, ue_ids) = keep(&self.ue, &self.ue_ids);
        Deployment {
            seed: self.seed,
            window,
            guard: self.guard,
            bs,
            ue,
            bs_ids,
            ue_ids,
            modes: Vec::new(),
            serving: Vec::new(),
            scheduled: Vec::new(),
            roles: Vec::new(),
            pairs: Vec::new(),
        }
    }
}

/// SINR measured at one typical receiver, with its power breakdown.
#[derive(Debug, Clone, Copy)]
pub struct SinrSample {
    pub mode: Mode,
    /// Linear ratio signal / (I_c + I_d + noise).
    pub sinr: f64,
    /// Serving (cellular) or pair (D2D) equivalent distance, m.
    pub serving_equiv: f64,
    pub signal_mw: f64,
    pub i_cellular_mw: f64,
    pub i_d2d_mw: f64,
    pub noise_mw: f64,
}

/// Default simulation window for a guard radius: far-field interference
/// beyond five mean inter-site distances is negligible at the exponents this
/// model admits.
pub fn default_window(cfg: &NetworkConfig, guard: f64) -> Result<f64> {
    let d = cfg.derived()?;
    Ok(guard + 5.0 / d.lambda_b_m2.sqrt())
}

fn sample_disk(rng: &mut ChaCha8Rng, lambda_m2: f64, radius: f64) -> Vec<Point> {
    let mean = lambda_m2 * std::f64::consts::PI * radius * radius;
    let n = if mean <= 0.0 {
        0
    } else {
        rand_distr::Distribution::sample(&rand_distr::Poisson::new(mean).unwrap(), rng) as usize
    };
    (0..n)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            let th = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
            Point {
                x: r * th.cos(),
                y: r * th.sin(),
            }
        })
        .collect()
}

/// Sample BS and UE Poisson processes on a disk of radius `window`.
pub fn sample_deployment(
    cfg: &NetworkConfig,
    seed: u64,
    window: f64,
    guard: f64,
) -> Result<Deployment> {
    sample_deployment_asymmetric(cfg, seed, window, window, guard)
}

/// Same, with a reduced UE window (measurement-only campaigns sample UEs just
/// where they are read off).
pub(crate) fn sample_deployment_asymmetric(
    cfg: &NetworkConfig,
    seed: u64,
    bs_window: f64,
    ue_window: f64,
    guard: f64,
) -> Result<Deployment> {
    let d = cfg.derived()?;
    if !(guard > 0.0 && bs_window.is_finite()) || ue_window > bs_window {
        return Err(Error::Argument(format!(
            "bad windows: bs {bs_window}, ue {ue_window}, guard {guard}"
        )));
    }
    // One mean inter-site distance of interference margin, capped so sparse
    // configurations stay usable (there is little to truncate then anyway).
    let margin = (1.0 / d.lambda_b_m2.sqrt()).min(10.0 * guard);
    if bs_window < guard + margin {
        return Err(Error::Argument(format!(
            "window {bs_window} too small for guard {guard}: needs an interference margin of {margin}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ 0xDE_A1));
    let bs = sample_disk(&mut rng, d.lambda_b_m2, bs_window);
    let ue = sample_disk(&mut rng, d.lambda_u_m2, ue_window);
    let mut dep = Deployment::from_parts(bs, ue, seed, bs_window, guard);
    dep.window = bs_window;
    Ok(dep)
}

/// Spatial hash over BS points for candidate queries.
struct Grid {
    cell: f64,
    map: std::collections::HashMap<(i32, i32), Vec<u32>>,
}

impl Grid {
    fn build(points: &[Point], cell: f64) -> Grid {
        let mut map: std::collections::HashMap<(i32, i32), Vec<u32>> =
            std::collections::HashMap::new();
        for (i, p) in points.iter().enumerate() {
            let key = ((p.x / cell).floor() as i32, (p.y / cell).floor() as i32);
            map.entry(key).or_default().push(i as u32);
        }
        Grid { cell, map }
    }

    fn candidates<'a>(&'a self, p: Point) -> impl Iterator<Item = u32> + 'a {
        let cx = (p.x / self.cell).floor() as i32;
        let cy = (p.y / self.cell).floor() as i32;
        (-1..=1).flat_map(move |dx| {
            (-1..=1).flat_map(move |dy| {
                self.map
                    .get(&(cx + dx, cy + dy))
                    .map(|v| v.iter().copied())
                    .into_iter()
                    .flatten()
            })
        })
    }
}

/// Distance beyond which no BS can beat the threshold even with a +5.5 sigma
/// shadowing excursion.
fn rss_candidate_radius(cfg: &NetworkConfig) -> f64 {
    let margin_db = cfg.p_b_dbm - cfg.a_b_db + 5.5 * cfg.sigma_b_db - cfg.beta_dbm;
    10f64.powf(margin_db / (10.0 * cfg.alpha_b))
}

fn shadow_linear(sigma_db: f64, z: f64) -> f64 {
    10f64.powf(sigma_db * z / 10.0)
}

fn strongest_bs(
    dep: &Deployment,
    d: &Derived,
    cfg: &NetworkConfig,
    grid: &Grid,
    ue_idx: usize,
) -> Option<ServingLink> {
    let p = dep.ue[ue_idx];
    let ue_id = dep.ue_ids[ue_idx] as u64;
    let mut best: Option<ServingLink> = None;
    for bi in grid.candidates(p) {
        let bp = dep.bs[bi as usize];
        let r = p.dist(bp).max(1e-3);
        let z = link_normal(dep.seed, TAG_UE_BS, ue_id, dep.bs_ids[bi as usize] as u64);
        let h = shadow_linear(cfg.sigma_b_db, z);
        let rss = d.p_b_mw * d.a_b * h * r.powf(-cfg.alpha_b);
        if best.map_or(true, |b| rss > b.rss_mw) {
            best = Some(ServingLink {
                bs: bi,
                dist: r,
                shadow: h,
                equiv: h.powf(-1.0 / cfg.alpha_b) * r,
                rss_mw: rss,
            });
        }
    }
    best
}

/// Label every UE with its mode and, when cellular, the serving link of the
/// strongest BS.
pub fn assign_modes(mut dep: Deployment, cfg: &NetworkConfig) -> Result<Deployment> {
    let d = cfg.derived()?;
    let cell = rss_candidate_radius(cfg).min(2.0 * dep.window).max(1.0);
    let grid = Grid::build(&dep.bs, cell);
    let labels: Vec<(Mode, Option<ServingLink>)> = (0..dep.ue.len())
        .into_par_iter()
        .map(|i| match strongest_bs(&dep, &d, cfg, &grid, i) {
            Some(link) if link.rss_mw > d.beta_mw => (Mode::Cellular, Some(link)),
            _ => (Mode::D2d, None),
        })
        .collect();
    dep.modes = labels.iter().map(|(m, _)| *m).collect();
    dep.serving = labels.into_iter().map(|(_, s)| s).collect();
    Ok(dep)
}

/// Re-check every mode label against the rule (post-hoc invariant).
pub fn check_mode_labels(dep: &Deployment, cfg: &NetworkConfig) -> Result<()> {
    let d = cfg.derived()?;
    let cell = rss_candidate_radius(cfg).min(2.0 * dep.window).max(1.0);
    let grid = Grid::build(&dep.bs, cell);
    for i in 0..dep.ue.len() {
        let best = strongest_bs(dep, &d, cfg, &grid, i);
        let max_rss = best.map_or(0.0, |b| b.rss_mw);
        let want = if max_rss > d.beta_mw {
            Mode::Cellular
        } else {
            Mode::D2d
        };
        if dep.modes[i] != want {
            return Err(Error::Law(format!(
                "mode label of UE {i} inconsistent with the threshold rule"
            )));
        }
        if want == Mode::Cellular {
            let s = dep.serving[i].ok_or_else(|| Error::Law(format!("UE {i} lacks serving link")))?;
            if s.rss_mw <= d.beta_mw {
                return Err(Error::Law(format!("UE {i} serving RSS below threshold")));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum PairScope {
    All,
    TypicalOnly,
}

/// Draw D2D roles, schedule one associated uplink transmitter per cell, and
/// pair receivers to their strongest transmitter. Role and scheduling draws
/// are keyed by stable ids, so restricting a deployment re-derives identical
/// choices on the surviving points.
pub fn schedule_and_pair(dep: Deployment, cfg: &NetworkConfig, seed: u64) -> Result<Deployment> {
    schedule_and_pair_scoped(dep, cfg, seed, PairScope::All)
}

pub(crate) fn schedule_and_pair_scoped(
    mut dep: Deployment,
    cfg: &NetworkConfig,
    seed: u64,
    scope: PairScope,
) -> Result<Deployment> {
    if dep.modes.len() != dep.ue.len() {
        return Err(Error::Argument("modes not assigned".into()));
    }
    let d = cfg.derived()?;
    dep.roles = (0..dep.ue.len())
        .map(|i| {
            if dep.modes[i] != Mode::D2d {
                D2dRole::NonD2d
            } else if keyed_uniform(seed, TAG_ROLE, dep.ue_ids[i] as u64) < cfg.d2d_tx_activity {
                D2dRole::Tx
            } else {
                D2dRole::Rx
            }
        })
        .collect();

    let mut associated: Vec<Vec<u32>> = vec![Vec::new(); dep.bs.len()];
    for (i, s) in dep.serving.iter().enumerate() {
        if let Some(link) = s {
            associated[link.bs as usize].push(i as u32);
        }
    }
    dep.scheduled = associated
        .iter()
        .enumerate()
        .map(|(b, list)| {
            if list.is_empty() {
                None
            } else {
                Some(list[keyed_index(seed, TAG_SCHED, dep.bs_ids[b] as u64, list.len())])
            }
        })
        .collect();

    dep.pairs = vec![None; dep.ue.len()];
    match scope {
        PairScope::All => {
            let pairs: Vec<Option<u32>> = (0..dep.ue.len())
                .into_par_iter()
                .map(|i| {
                    if dep.roles[i] == D2dRole::Rx {
                        pair_receiver(&dep, cfg, &d, i)
                    } else {
                        None
                    }
                })
                .collect();
            dep.pairs = pairs;
        }
        PairScope::TypicalOnly => {
            if let Some(rx) = typical_node(&dep, |i| dep.roles[i] == D2dRole::Rx) {
                dep.pairs[rx] = pair_receiver(&dep, cfg, &d, rx);
            }
        }
    }
    Ok(dep)
}

/// Strongest D2D transmitter (by received power with shadowing) for one
/// receiver; `None` when the window holds no transmitter.
pub(crate) fn pair_receiver(
    dep: &Deployment,
    cfg: &NetworkConfig,
    d: &Derived,
    rx: usize,
) -> Option<u32> {
    let p = dep.ue[rx];
    let rx_id = dep.ue_ids[rx] as u64;
    let mut best: Option<(u32, f64)> = None;
    for (j, &role) in dep.roles.iter().enumerate() {
        if role != D2dRole::Tx {
            continue;
        }
        let r = p.dist(dep.ue[j]).max(1e-3);
        let z = link_normal(dep.seed, TAG_UE_UE, rx_id, dep.ue_ids[j] as u64);
        let h = shadow_linear(cfg.sigma_d_db, z);
        let rss = d.p_d_mw * d.a_d * h * r.powf(-cfg.alpha_d);
        if best.map_or(true, |(_, b)| rss > b) {
            best = Some((j as u32, rss));
        }
    }
    best.map(|(j, _)| j)
}

/// Nearest-to-center UE within the guard region satisfying `pred`.
fn typical_node(dep: &Deployment, pred: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..dep.ue.len() {
        if !pred(i) {
            continue;
        }
        let r = dep.ue[i].norm();
        if r <= dep.guard && best.map_or(true, |(_, b)| r < b) {
            best = Some((i, r));
        }
    }
    best.map(|(i, _)| i)
}

fn cu_power(dep: &Deployment, cfg: &NetworkConfig, d: &Derived, i: usize) -> Option<f64> {
    dep.serving[i].map(|s| cu_tx_power_mw_derived(s.equiv, cfg, d))
}

/// Measure SINR at the typical receiver.
///
/// The typical UE is the guard-region UE nearest the measurement center,
/// chosen before looking at any mark: selecting "the nearest cellular UE"
/// or "the nearest receiver" instead would thin the process by a
/// geometry-dependent mark and visibly bias the serving-distance law (the
/// cellular thinning clusters around BSs). The center UE's own mode and role
/// then decide which sample, if any, this realization contributes.
pub fn measure_sinr(dep: &Deployment, cfg: &NetworkConfig) -> Result<Vec<SinrSample>> {
    if dep.roles.len() != dep.ue.len() || dep.scheduled.len() != dep.bs.len() {
        return Err(Error::Argument("deployment not scheduled".into()));
    }
    let d = cfg.derived()?;
    let mut out = Vec::with_capacity(1);
    let center = typical_node(dep, |_| true);

    if let Some(cu) = center.filter(|&i| dep.modes[i] == Mode::Cellular) {
        let s = dep.serving[cu].expect("cellular UE has serving link");
        let rx_bs = s.bs as usize;
        let rx_point = dep.bs[rx_bs];
        let rx_bs_id = dep.bs_ids[rx_bs] as u64;
        let p_c = cu_power(dep, cfg, &d, cu).unwrap();
        let signal = p_c * d.a_b * s.shadow * s.dist.powf(-cfg.alpha_b);
        let mut i_c = 0.0;
        for (b, sch) in dep.scheduled.iter().enumerate() {
            if b == rx_bs {
                continue; // in-cell orthogonality; the typical CU holds this block
            }
            if let Some(j) = *sch {
                let j = j as usize;
                let pj = cu_power(dep, cfg, &d, j).unwrap();
                let r = dep.ue[j].dist(rx_point).max(1e-3);
                let z = link_normal(dep.seed, TAG_UE_BS, dep.ue_ids[j] as u64, rx_bs_id);
                i_c += pj * d.a_b * shadow_linear(cfg.sigma_b_db, z) * r.powf(-cfg.alpha_b);
            }
        }
        let mut i_d = 0.0;
        for (j, &role) in dep.roles.iter().enumerate() {
            if role != D2dRole::Tx {
                continue;
            }
            let r = dep.ue[j].dist(rx_point).max(1e-3);
            let z = link_normal(dep.seed, TAG_UE_BS, dep.ue_ids[j] as u64, rx_bs_id);
            i_d += d.p_d_mw * d.a_b * shadow_linear(cfg.sigma_b_db, z) * r.powf(-cfg.alpha_b);
        }
        out.push(SinrSample {
            mode: Mode::Cellular,
            sinr: signal / (i_c + i_d + d.noise_bs_mw),
            serving_equiv: s.equiv,
            signal_mw: signal,
            i_cellular_mw: i_c,
            i_d2d_mw: i_d,
            noise_mw: d.noise_bs_mw,
        });
    }

    if let Some(rx) = typical_node(dep, |i| dep.roles[i] == D2dRole::Rx) {
        let pair = match dep.pairs.get(rx).copied().flatten() {
            Some(tx) => Some(tx),
            None => pair_receiver(dep, cfg, &d, rx),
        };
        if let Some(tx) = pair {
            let tx = tx as usize;
            let rx_point = dep.ue[rx];
            let rx_id = dep.ue_ids[rx] as u64;
            let r0 = rx_point.dist(dep.ue[tx]).max(1e-3);
            let z0 = link_normal(dep.seed, TAG_UE_UE, rx_id, dep.ue_ids[tx] as u64);
            let h0 = shadow_linear(cfg.sigma_d_db, z0);
            let signal = d.p_d_mw * d.a_d * h0 * r0.powf(-cfg.alpha_d);
            let mut i_d = 0.0;
            for (j, &role) in dep.roles.iter().enumerate() {
                if role != D2dRole::Tx || j == tx {
                    continue;
                }
                let r = rx_point.dist(dep.ue[j]).max(1e-3);
                let z = link_normal(dep.seed, TAG_UE_UE, rx_id, dep.ue_ids[j] as u64);
                i_d += d.p_d_mw * d.a_d * shadow_linear(cfg.sigma_d_db, z) * r.powf(-cfg.alpha_d);
            }
            let mut i_c = 0.0;
            for sch in dep.scheduled.iter() {
                if let Some(j) = *sch {
                    let j = j as usize;
                    let pj = cu_power(dep, cfg, &d, j).unwrap();
                    let r = rx_point.dist(dep.ue[j]).max(1e-3);
                    let z = link_normal(dep.seed, TAG_UE_UE, rx_id, dep.ue_ids[j] as u64);
                    i_c += pj * d.a_d * shadow_linear(cfg.sigma_d_db, z) * r.powf(-cfg.alpha_d);
                }
            }
            out.push(SinrSample {
                mode: Mode::D2d,
                sinr: signal / (i_c + i_d + d.noise_ue_mw),
                serving_equiv: h0.powf(-1.0 / cfg.alpha_d) * r0,
                signal_mw: signal,
                i_cellular_mw: i_c,
                i_d2d_mw: i_d,
                noise_mw: d.noise_ue_mw,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NetworkConfig {
        NetworkConfig::default()
    }

    #[test]
    fn deterministic_deployments() {
        let c = cfg();
        let w = default_window(&c, 300.0).unwrap();
        let a = sample_deployment(&c, 99, w, 300.0).unwrap();
        let b = sample_deployment(&c, 99, w, 300.0).unwrap();
        assert_eq!(a.bs.len(), b.bs.len());
        assert_eq!(a.ue.len(), b.ue.len());
        for (p, q) in a.bs.iter().zip(&b.bs) {
            assert_eq!(p, q);
        }
        let c2 = sample_deployment(&c, 100, w, 300.0).unwrap();
        assert!(a.bs.len() != c2.bs.len() || a.bs[0] != c2.bs[0]);
    }

    #[test]
    fn poisson_counts_match_density() {
        let c = cfg();
        let w = 2000.0;
        let mut total = 0usize;
        let n = 400;
        for s in 0..n {
            total += sample_deployment(&c, s, w, 300.0).unwrap().bs.len();
        }
        let mean = total as f64 / n as f64;
        let expect = 5e-6 * std::f64::consts::PI * w * w;
        let tol = 4.0 * (expect / n as f64).sqrt();
        assert!((mean - expect).abs() < tol, "{mean} vs {expect} ± {tol}");
    }

    #[test]
    fn vanishing_density_empty() {
        let mut c = cfg();
        c.lambda_b = 1e-30;
        c.lambda_u = 1e-30;
        let dep = sample_deployment(&c, 1, 5e5, 300.0).unwrap();
        assert!(dep.bs.is_empty() && dep.ue.is_empty());
    }

    #[test]
    fn window_too_small_rejected() {
        let c = cfg();
        assert!(sample_deployment(&c, 1, 310.0, 300.0).is_err());
    }

    #[test]
    fn mode_extremes() {
        let c = cfg();
        let w = default_window(&c, 300.0).unwrap();
        let dep = sample_deployment(&c, 7, w, 300.0).unwrap();
        let mut hi = cfg();
        hi.beta_dbm = 200.0;
        let d = assign_modes(dep.clone(), &hi).unwrap();
        assert!(d.modes.iter().all(|m| *m == Mode::D2d));
        let mut lo = cfg();
        lo.beta_dbm = -400.0;
        let d = assign_modes(dep, &lo).unwrap();
        assert!(d.modes.iter().all(|m| *m == Mode::Cellular));
        check_mode_labels(&d, &lo).unwrap();
    }

    #[test]
    fn mode_labels_consistent() {
        let c = cfg();
        let w = default_window(&c, 300.0).unwrap();
        let dep = assign_modes(sample_deployment(&c, 3, w, 300.0).unwrap(), &c).unwrap();
        check_mode_labels(&dep, &c).unwrap();
    }

    #[test]
    fn roles_follow_fair_coin() {
        let c = cfg();
        let w = default_window(&c, 300.0).unwrap();
        let mut tx = 0u64;
        let mut d2d = 0u64;
        for s in 0..30 {
            let dep = assign_modes(sample_deployment(&c, s, w, 300.0).unwrap(), &c).unwrap();
            let dep = schedule_and_pair_scoped(dep, &c, s, PairScope::TypicalOnly).unwrap();
            for r in &dep.roles {
                match r {
                    D2dRole::Tx => {
                        tx += 1;
                        d2d += 1;
                    }
                    D2dRole::Rx => d2d += 1,
                    D2dRole::NonD2d => {}
                }
            }
        }
        let frac = tx as f64 / d2d as f64;
        let sigma = 0.5 / (d2d as f64).sqrt();
        assert!((frac - 0.5).abs() < 4.0 * sigma, "tx fraction {frac} over {d2d}");
    }

    #[test]
    fn single_bs_single_cu_scheduled() {
        let c = cfg();
        let bs = vec![Point { x: 0.0, y: 0.0 }];
        let ue = vec![Point { x: 30.0, y: 0.0 }];
        let dep = Deployment::from_parts(bs, ue, 5, 2000.0, 500.0);
        let mut lo = c.clone();
        lo.beta_dbm = -400.0;
        let dep = assign_modes(dep, &lo).unwrap();
        let dep = schedule_and_pair(dep, &lo, 5).unwrap();
        assert_eq!(dep.scheduled[0], Some(0));
    }

    #[test]
    fn interference_free_sinr_is_snr() {
        let mut c = cfg();
        c.beta_dbm = -400.0; // single UE goes cellular
        let bs = vec![Point { x: 0.0, y: 0.0 }];
        let ue = vec![Point { x: 50.0, y: 10.0 }];
        let dep = Deployment::from_parts(bs, ue, 11, 2000.0, 500.0);
        let dep = assign_modes(dep, &c).unwrap();
        let dep = schedule_and_pair(dep, &c, 11).unwrap();
        let samples = measure_sinr(&dep, &c).unwrap();
        assert_eq!(samples.len(), 1);
        let s = samples[0];
        assert_eq!(s.i_cellular_mw, 0.0);
        assert_eq!(s.i_d2d_mw, 0.0);
        assert!((s.sinr - s.signal_mw / s.noise_mw).abs() / s.sinr < 1e-12);
    }

    #[test]
    fn sinr_breakdown_identity() {
        let c = cfg();
        let w = default_window(&c, 300.0).unwrap();
        let dep = assign_modes(sample_deployment(&c, 17, w, 300.0).unwrap(), &c).unwrap();
        let dep = schedule_and_pair_scoped(dep, &c, 17, PairScope::TypicalOnly).unwrap();
        for s in measure_sinr(&dep, &c).unwrap() {
            let recomputed = s.signal_mw / (s.i_cellular_mw + s.i_d2d_mw + s.noise_mw);
            assert!((s.sinr - recomputed).abs() / recomputed < 1e-12);
            assert!(s.signal_mw >= 0.0 && s.i_cellular_mw >= 0.0 && s.i_d2d_mw >= 0.0);
        }
    }

    #[test]
    fn all_tx_activity_drops_d2d_measurement() {
        let mut c = cfg();
        c.d2d_tx_activity = 1.0;
        let w = default_window(&c, 300.0).unwrap();
        let dep = assign_modes(sample_deployment(&c, 23, w, 300.0).unwrap(), &c).unwrap();
        let dep = schedule_and_pair_scoped(dep, &c, 23, PairScope::TypicalOnly).unwrap();
        let samples = measure_sinr(&dep, &c).unwrap();
        assert!(samples.iter().all(|s| s.mode == Mode::Cellular));
    }
}
