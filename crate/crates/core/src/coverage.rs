//! Conditional characteristic functions of 1/SINR and their inversion into
//! coverage probability, for the typical cellular uplink and the typical D2D
//! link.
//!
//! Every Poisson interference factor reduces, after the substitution
//! `u = distance^{-alpha}`, to the universal tail integral
//! [`crate::special::FractionalTail`]; the conditional characteristic
//! function is then a product of closed-ish forms with at most one remaining
//! expectation over the interferer's own serving distance. Inversion writes
//! `Pr[1/SINR < 1/T]` as an oscillatory integral with two explicit complex
//! carriers (the kernel's and the noise factor's), so one Chebyshev panel
//! sweep of the slow part serves every threshold in a grid.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::equivalence::{mode_probability, serving_distance_law, DistanceLaw};
use crate::model::{CellularExclusion, Derived, Mode, NetworkConfig};
use crate::oscint::PanelFit;
use crate::quad;
use crate::special::FractionalTail;
use crate::{Error, Result};

/// Tolerances and truncation controls for the inversion quadratures.
#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    /// Relative tolerance of the inner (characteristic-function) quadratures.
    pub rel_tol: f64,
    /// Absolute tolerance of an inverted probability.
    pub abs_tol: f64,
    /// Hard cap on the frequency-truncation bound.
    pub omega_max: f64,
    /// Cap on adaptive subdivisions (panels) per integral.
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-7,
            abs_tol: 1e-5,
            omega_max: 1e6,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureSpec {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.omega_max > 0.0) {
            return Err(Error::Argument(
                "quadrature tolerances and omega_max must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Conditional characteristic function of 1/SINR at a typical receiver,
/// `eval(ω) = E[exp(-iω/SINR) | r0]`, split as a slow factor times the exact
/// noise carrier `exp(-iω·noise_phase_rate)`.
#[derive(Clone)]
pub struct CharacteristicFn {
    slow: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
    /// Linear phase rate of the noise factor: noise power over conditional
    /// signal power.
    pub noise_phase_rate: f64,
    /// Conditioning: serving equivalent distance, m.
    pub r0: f64,
    pub mode: Mode,
}

impl std::fmt::Debug for CharacteristicFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CharacteristicFn")
            .field("noise_phase_rate", &self.noise_phase_rate)
            .field("r0", &self.r0)
            .field("mode", &self.mode)
            .finish()
    }
}

impl CharacteristicFn {
    /// Assemble from a slow factor and a linear noise-phase rate. Negative
    /// frequencies evaluate by conjugate symmetry (1/SINR is real).
    pub fn from_parts(
        slow: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        noise_phase_rate: f64,
        r0: f64,
        mode: Mode,
    ) -> Self {
        CharacteristicFn {
            slow: Arc::new(slow),
            noise_phase_rate,
            r0,
            mode,
        }
    }

    pub fn eval(&self, omega: f64) -> Complex64 {
        if omega < 0.0 {
            return self.eval(-omega).conj();
        }
        (self.slow)(omega) * Complex64::from_polar(1.0, -omega * self.noise_phase_rate)
    }

    fn slow_eval(&self, omega: f64) -> Complex64 {
        (self.slow)(omega)
    }
}

/// Shared pieces of the cellular-uplink characteristic function.
struct CellularCtx {
    cfg: NetworkConfig,
    d: Derived,
    law: DistanceLaw,
    tail_b: Arc<FractionalTail>,
    /// 2π λ_B c_B / α_B.
    coef_cell: f64,
    /// 2π λ_tu c_B / α_B with λ_tu the active-transmitter density.
    coef_d2d: f64,
    m_b: f64,
    /// E_r[r^{α_B ε m_b}] for the no-exclusion closed form.
    moment_no_excl: f64,
}

impl CellularCtx {
    fn new(cfg: &NetworkConfig) -> Result<Self> {
        let d = cfg.derived()?;
        let split = mode_probability(cfg)?;
        let law = serving_distance_law(cfg)?;
        let m_b = 2.0 / cfg.alpha_b;
        let tail_b = Arc::new(FractionalTail::new(m_b)?);
        let lambda_tu = cfg.d2d_tx_activity * split.lambda_d;
        let p = cfg.alpha_b * cfg.epsilon * m_b;
        let moment_no_excl = quad::integrate(
            |r: f64| law.pdf(r) * r.powf(p),
            0.0,
            d.t,
            1e-10,
            1e-13,
            2000,
            &[],
        )?
        .value;
        Ok(CellularCtx {
            coef_cell: 2.0 * std::f64::consts::PI * d.lambda_b_m2 * d.c_b / cfg.alpha_b,
            coef_d2d: 2.0 * std::f64::consts::PI * lambda_tu * d.c_b / cfg.alpha_b,
            cfg: cfg.clone(),
            d,
            law,
            tail_b,
            m_b,
            moment_no_excl,
        })
    }

    /// Conditional signal power at the BS for serving equivalent distance r0:
    /// `P0 A_B^{1-eps} r0^{alpha(eps-1)}`.
    fn signal_mw(&self, r0: f64) -> f64 {
        self.d.p0_mw
            * self.d.a_b.powf(1.0 - self.cfg.epsilon)
            * r0.powf(self.cfg.alpha_b * (self.cfg.epsilon - 1.0))
    }

    fn charfn(self: &Arc<Self>, r0: f64, rel_tol: f64) -> Result<CharacteristicFn> {
        if !(r0 > 0.0 && r0 <= self.d.t * (1.0 + 1e-12)) {
            return Err(Error::Argument(format!(
                "serving equivalent distance must lie in (0, t = {}], got {r0}",
                self.d.t
            )));
        }
        let ctx = self.clone();
        let noise_rate = ctx.d.noise_bs_mw / ctx.signal_mw(r0);
        let alpha = ctx.cfg.alpha_b;
        let eps = ctx.cfg.epsilon;
        let m = ctx.m_b;
        let nu_scale = r0.powf(alpha * (1.0 - eps));
        let theta_scale =
            ctx.d.a_b.powf(eps) * ctx.d.p_d_mw * r0.powf(alpha * (1.0 - eps)) / ctx.d.p0_mw;
        let t = ctx.d.t;
        let excl = ctx.cfg.cellular_exclusion;
        let slow = move |omega: f64| -> Complex64 {
            if omega == 0.0 {
                return Complex64::new(1.0, 0.0);
            }
            let nu = omega * nu_scale;
            // Cellular interferers, each carrying its own serving-distance
            // power law.
            let expo_cell = match excl {
                CellularExclusion::None => {
                    -ctx.coef_cell
                        * nu.powf(m)
                        * ctx.moment_no_excl
                        * ctx.tail_b.at_infinity()
                }
                _ => {
                    let excl_r = match excl {
                        CellularExclusion::DiskRadius => t,
                        CellularExclusion::ServingDistance => r0,
                        CellularExclusion::None => unreachable!(),
                    };
                    let u_cap = excl_r.powf(-alpha);
                    let inner = quad::integrate(
                        |r: f64| {
                            if r <= 0.0 {
                                return Complex64::new(0.0, 0.0);
                            }
                            let s = nu * r.powf(alpha * eps);
                            ctx.law.pdf(r) * s.powf(m) * ctx.tail_b.eval(s * u_cap)
                        },
                        0.0,
                        t,
                        rel_tol,
                        1e-14,
                        600,
                        &[],
                    )
                    .map(|r| r.value)
                    .unwrap_or(Complex64::new(f64::NAN, f64::NAN));
                    -ctx.coef_cell * inner
                }
            };
            // D2D transmitters seen through the UE-to-BS law, outside the
            // cellular disk.
            let theta = omega * theta_scale;
            let expo_d2d =
                -ctx.coef_d2d * theta.powf(m) * ctx.tail_b.eval(theta * t.powf(-alpha));
            (expo_cell + expo_d2d).exp()
        };
        Ok(CharacteristicFn::from_parts(slow, noise_rate, r0, Mode::Cellular))
    }
}

/// Shared pieces of the D2D-link characteristic function.
struct D2dCtx {
    d: Derived,
    alpha_d: f64,
    m_d: f64,
    /// Tail integral of the D2D-interference factor; follows the UE-to-UE
    /// exponent unless the literal published alpha_b form is configured.
    tail_id: Arc<FractionalTail>,
    alpha_id: f64,
    m_id: f64,
    /// Complex constant of the cellular-interference factor (integral from 0).
    coef_cell: Complex64,
    /// 2π λ_tu c_D / alpha_id.
    coef_d2d: f64,
    /// ν scale: P0 A_B^{-eps} / P_d.
    nu_cell_scale: f64,
}

impl D2dCtx {
    fn new(cfg: &NetworkConfig) -> Result<Self> {
        let d = cfg.derived()?;
        let split = mode_probability(cfg)?;
        let law = serving_distance_law(cfg)?;
        let alpha_d = cfg.alpha_d;
        let m_d = 2.0 / alpha_d;
        let tail_d = Arc::new(FractionalTail::new(m_d)?);
        let (alpha_id, m_id, tail_id) = if cfg.d2d_interference_uses_alpha_b {
            let m = 2.0 / cfg.alpha_b;
            (cfg.alpha_b, m, Arc::new(FractionalTail::new(m)?))
        } else {
            (alpha_d, m_d, tail_d.clone())
        };
        // Interfering cellular UEs at a D2D receiver propagate UE-to-UE; the
        // pair-gain constants cancel against the signal normalization and the
        // integral runs from zero, leaving a closed form around the moment
        // E_r[r^{alpha_b eps m_d}].
        let p = cfg.alpha_b * cfg.epsilon * m_d;
        let moment = quad::integrate(
            |r: f64| law.pdf(r) * r.powf(p),
            0.0,
            d.t,
            1e-10,
            1e-13,
            2000,
            &[],
        )?
        .value;
        let coef_cell = tail_d.at_infinity()
            * (2.0 * std::f64::consts::PI * d.lambda_b_m2 * d.c_d / alpha_d)
            * moment;
        let lambda_tu = cfg.d2d_tx_activity * split.lambda_d;
        Ok(D2dCtx {
            nu_cell_scale: d.p0_mw * d.a_b.powf(-cfg.epsilon) / d.p_d_mw,
            coef_cell,
            coef_d2d: 2.0 * std::f64::consts::PI * lambda_tu * d.c_d / alpha_id,
            d,
            alpha_d,
            m_d,
            tail_id,
            alpha_id,
            m_id,
        })
    }

    /// Conditional signal power at the D2D receiver: `P_d A_D r0^{-alpha_d}`.
    fn signal_mw(&self, r0: f64) -> f64 {
        self.d.p_d_mw * self.d.a_d * r0.powf(-self.alpha_d)
    }

    fn charfn(self: &Arc<Self>, r0: f64) -> Result<CharacteristicFn> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::Argument(format!(
                "pair equivalent distance must be positive, got {r0}"
            )));
        }
        let ctx = self.clone();
        let noise_rate = ctx.d.noise_ue_mw / ctx.signal_mw(r0);
        let nu_scale = ctx.nu_cell_scale * r0.powf(ctx.alpha_d);
        let s_dd_scale = r0.powf(ctx.alpha_d);
        let excl_pow = r0.powf(-ctx.alpha_id);
        let slow = move |omega: f64| -> Complex64 {
            if omega == 0.0 {
                return Complex64::new(1.0, 0.0);
            }
            let expo_cell = -ctx.coef_cell * (omega * nu_scale).powf(ctx.m_d);
            let s = omega * s_dd_scale;
            let expo_d2d =
                -ctx.coef_d2d * s.powf(ctx.m_id) * ctx.tail_id.eval(s * excl_pow);
            (expo_cell + expo_d2d).exp()
        };
        Ok(CharacteristicFn::from_parts(slow, noise_rate, r0, Mode::D2d))
    }
}

/// Characteristic function of 1/SINR for the typical cellular uplink,
/// conditioned on the serving equivalent distance `r0 ∈ (0, t]`.
pub fn cellular_charfn(r0: f64, cfg: &NetworkConfig) -> Result<CharacteristicFn> {
    let ctx = Arc::new(CellularCtx::new(cfg)?);
    ctx.charfn(r0, QuadratureSpec::default().rel_tol)
}

/// Characteristic function of 1/SINR for the typical D2D link, conditioned
/// on the pair equivalent distance `r0 > 0`.
pub fn d2d_charfn(r0: f64, cfg: &NetworkConfig) -> Result<CharacteristicFn> {
    let ctx = Arc::new(D2dCtx::new(cfg)?);
    ctx.charfn(r0)
}

/// Frequency plan for inverting one conditional characteristic function over
/// any number of thresholds: a fixed head rule near zero plus Chebyshev panel
/// fits of the slow part, reusable against both kernel carriers.
struct InversionPlan {
    b: f64,
    head: Vec<(f64, f64, Complex64)>,
    panels: Vec<PanelFit>,
    w_max: f64,
    /// |slow(w_max) - atom|: the decaying part left at truncation.
    residual_end: f64,
    abs_tol: f64,
    /// Cesàro-averaged cf over the last frequency window: the mass of an
    /// atom at 1/SINR = 0. The principal-value inversion recovers
    /// P[1/SINR < x] - p0/2, so this adds back the half-atom; the atom's
    /// own frequency tail integrates to zero against the real part.
    zero_atom: f64,
}

// GK15 nodes/weights on [0,1] for the head interval (no endpoint nodes).
fn gk15_unit_nodes() -> Vec<(f64, f64)> {
    const XGK: [f64; 8] = [
        0.991455371120813,
        0.949107912342759,
        0.864864423359769,
        0.741531185599394,
        0.586087235467691,
        0.405845151377397,
        0.207784955007898,
        0.0,
    ];
    const WGK: [f64; 8] = [
        0.022935322010529,
        0.063092092629979,
        0.104790010322250,
        0.140653259715525,
        0.169004726639267,
        0.190350578064785,
        0.204432940075298,
        0.209482141084728,
    ];
    let mut out = Vec::with_capacity(15);
    for j in 0..8 {
        let x = XGK[j];
        let w = WGK[j] * 0.5;
        if j == 7 {
            out.push((0.5, w));
        } else {
            out.push((0.5 * (1.0 - x), w));
            out.push((0.5 * (1.0 + x), w));
        }
    }
    out
}

impl InversionPlan {
    fn build(cf: &CharacteristicFn, spec: &QuadratureSpec, c_max: f64) -> Result<Self> {
        spec.validate()?;
        let b = cf.noise_phase_rate;
        // Truncation: first decade where the slow envelope is safely small.
        let mut w_max = spec.omega_max;
        let mut w = 1.0;
        while w <= spec.omega_max {
            if cf.slow_eval(w).norm() < spec.abs_tol / 10.0 {
                w_max = w;
                break;
            }
            w *= 10.0;
        }
        let w_lo = (0.02 / c_max.max(1e-9)).min(0.5).min(w_max / 8.0);
        let head: Vec<(f64, f64, Complex64)> = gk15_unit_nodes()
            .into_iter()
            .map(|(x, wgt)| {
                let om = x * w_lo;
                (om, wgt * w_lo, cf.slow_eval(om))
            })
            .collect();

        // Geometric panels of the slow kernel factor s1 = slow/(2πiω),
        // refined where the degree-12 fit cannot follow it.
        let mut edges = vec![w_lo];
        let mut e = w_lo;
        while e < w_max {
            e = (e * 1.35).min(w_max);
            edges.push(e);
        }
        let mut s1 = |om: f64| {
            cf.slow_eval(om) / Complex64::new(0.0, 2.0 * std::f64::consts::PI * om)
        };
        let mut panels: Vec<PanelFit> = edges
            .windows(2)
            .map(|w| PanelFit::build(&mut s1, w[0], w[1]))
            .collect();
        let budget = (spec.abs_tol * 0.25).max(1e-12);
        loop {
            let err: f64 = panels.iter().map(|p| p.fit_error_bound()).sum();
            if err <= budget || panels.len() >= spec.max_subdivisions {
                if err > budget {
                    return Err(Error::QuadratureConvergence {
                        requested: budget,
                        achieved: err,
                    });
                }
                break;
            }
            let (worst, _) = panels
                .iter()
                .enumerate()
                .max_by(|(_, x), (_, y)| {
                    x.fit_error_bound().partial_cmp(&y.fit_error_bound()).unwrap()
                })
                .unwrap();
            let PanelFit { a, b: pb, .. } = panels[worst];
            let mid = 0.5 * (a + pb);
            panels[worst] = PanelFit::build(&mut s1, a, mid);
            panels.push(PanelFit::build(&mut s1, mid, pb));
        }
        let atom_avg = {
            let k = 48;
            let mut avg = Complex64::new(0.0, 0.0);
            for j in 0..k {
                let om = w_max * (0.75 + 0.25 * (j as f64 + 0.5) / k as f64);
                avg += cf.eval(om);
            }
            avg /= k as f64;
            if avg.norm() < 0.02 {
                Complex64::new(0.0, 0.0)
            } else {
                avg
            }
        };
        let end = cf.eval(w_max);
        Ok(InversionPlan {
            b,
            head,
            panels,
            w_max,
            residual_end: (end - atom_avg).norm(),
            abs_tol: spec.abs_tol,
            zero_atom: atom_avg.re.clamp(0.0, 1.0),
        })
    }

    /// `Pr[1/SINR < 1/T]` for one threshold.
    fn ccdf(&self, t_lin: f64) -> Result<f64> {
        if !(t_lin > 0.0 && t_lin.is_finite()) {
            return Err(Error::Argument(format!("threshold must be positive, got {t_lin}")));
        }
        let c1 = 1.0 / t_lin - self.b;
        let c2 = -self.b;
        let mut acc = 0.0;
        for &(om, wgt, slow) in &self.head {
            let bracket = Complex64::from_polar(1.0, c1 * om) - Complex64::from_polar(1.0, c2 * om);
            let g = bracket * slow / Complex64::new(0.0, 2.0 * std::f64::consts::PI * om);
            acc += wgt * g.re;
        }
        for p in &self.panels {
            acc += (p.integrate_with_carrier(c1) - p.integrate_with_carrier(c2)).re;
        }
        let p = 2.0 * acc + 0.5 * self.zero_atom;

        // Truncation residual. The zero-atom component only ever meets the
        // kernel's own carrier (its contribution against the constant term
        // has no real part); the decaying remainder meets both carriers.
        let scale = 1.0 / (2.0 * std::f64::consts::PI * self.w_max);
        let res_s1 = self.residual_end * scale;
        let decay_bound = 0.25 * self.residual_end;
        let mut tail = 2.0 * self.zero_atom * scale * t_lin.min(1e12);
        for c in [c1, c2] {
            tail += (2.0 * res_s1 / c.abs().max(1e-12)).min(decay_bound);
        }
        if 2.0 * tail > self.abs_tol.max(2e-4) {
            return Err(Error::Truncation {
                tail: 2.0 * tail,
                budget: self.abs_tol.max(2e-4),
            });
        }

        let excursion = (-p).max(p - 1.0).max(0.0);
        if excursion > 1e-3 {
            return Err(Error::ProbabilityExcursion {
                excursion,
                context: format!("inversion at threshold {t_lin}"),
            });
        }
        Ok(p.clamp(0.0, 1.0))
    }
}

/// `Pr[SINR > T] = Pr[1/SINR < 1/T]` for one conditional characteristic
/// function and one linear threshold.
pub fn invert_ccdf(cf: &CharacteristicFn, t_lin: f64, spec: &QuadratureSpec) -> Result<f64> {
    invert_ccdf_grid(cf, &[t_lin], spec).map(|v| v[0])
}

/// Same, for a grid of thresholds sharing one frequency plan.
pub fn invert_ccdf_grid(
    cf: &CharacteristicFn,
    ts_lin: &[f64],
    spec: &QuadratureSpec,
) -> Result<Vec<f64>> {
    if ts_lin.is_empty() {
        return Ok(Vec::new());
    }
    let mut c_max = 1e-6f64;
    for &t in ts_lin {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Argument(format!("threshold must be positive, got {t}")));
        }
        c_max = c_max
            .max((1.0 / t - cf.noise_phase_rate).abs())
            .max(cf.noise_phase_rate);
    }
    let plan = InversionPlan::build(cf, spec, c_max)?;
    ts_lin.iter().map(|&t| plan.ccdf(t)).collect()
}

fn db_to_lin_grid(thresholds_db: &[f64]) -> Vec<f64> {
    thresholds_db.iter().map(|d| 10f64.powf(d / 10.0)).collect()
}

/// Coverage probability of the typical cellular uplink at one linear SINR
/// threshold: the serving-distance expectation of the inverted conditional
/// law.
pub fn coverage_cellular(t_lin: f64, cfg: &NetworkConfig, spec: &QuadratureSpec) -> Result<f64> {
    coverage_cellular_grid(&[t_lin], cfg, spec).map(|v| v[0])
}

/// Cellular coverage on a dB threshold grid.
pub fn coverage_curve_cellular(
    thresholds_db: &[f64],
    cfg: &NetworkConfig,
    spec: &QuadratureSpec,
) -> Result<Vec<f64>> {
    coverage_cellular_grid(&db_to_lin_grid(thresholds_db), cfg, spec)
}

fn coverage_cellular_grid(
    ts_lin: &[f64],
    cfg: &NetworkConfig,
    spec: &QuadratureSpec,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if ts_lin.is_empty() {
        return Ok(Vec::new());
    }
    let ctx = Arc::new(CellularCtx::new(cfg)?);
    let law = serving_distance_law(cfg)?;
    // Below this quantile the signal diverges (eps < 1) and coverage is 1;
    // the omitted mass is added back as a certain covered region.
    let (r0_lo, lo_mass) = if cfg.epsilon < 0.999 {
        let r = law.quantile(2e-5);
        (r, law.cdf(r))
    } else {
        (0.0, 0.0)
    };
    let mut c_max = 1e-6f64;
    for &t in ts_lin {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Argument(format!("threshold must be positive, got {t}")));
        }
        c_max = c_max.max(1.0 / t);
    }
    let integrand = |r0: f64| -> Vec<f64> {
        let w = law.pdf(r0);
        if w <= 0.0 {
            return vec![0.0; ts_lin.len()];
        }
        let cf = ctx.charfn(r0, spec.rel_tol).expect("r0 within support");
        let plan = InversionPlan::build(&cf, spec, c_max + cf.noise_phase_rate)
            .expect("inversion plan for in-range conditioning");
        ts_lin
            .iter()
            .map(|&t| plan.ccdf(t).map(|p| p * w).unwrap_or(f64::NAN))
            .collect()
    };
    let quadr = integrate_vec_parallel(&integrand, r0_lo, ctx.d.t, 1e-4, 1e-4, 200)?;
    let mut out = quadr;
    for v in &mut out {
        if !v.is_finite() {
            return Err(Error::Law("coverage integrand failed".into()));
        }
        *v = (*v + lo_mass).clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Coverage probability of the typical D2D link at one linear threshold.
pub fn coverage_d2d(t_lin: f64, cfg: &NetworkConfig, spec: &QuadratureSpec) -> Result<f64> {
    coverage_d2d_grid(&[t_lin], cfg, spec, None).map(|v| v[0])
}

/// D2D coverage on a dB threshold grid.
pub fn coverage_curve_d2d(
    thresholds_db: &[f64],
    cfg: &NetworkConfig,
    spec: &QuadratureSpec,
) -> Result<Vec<f64>> {
    coverage_d2d_grid(&db_to_lin_grid(thresholds_db), cfg, spec, None)
}

/// D2D coverage with a caller-provided pair-distance law (avoids rebuilding
/// the law across sweeps).
pub fn coverage_curve_d2d_with_law(
    thresholds_db: &[f64],
    cfg: &NetworkConfig,
    spec: &QuadratureSpec,
    law: &DistanceLaw,
) -> Result<Vec<f64>> {
    coverage_d2d_grid(&db_to_lin_grid(thresholds_db), cfg, spec, Some(law))
}

fn coverage_d2d_grid(
    ts_lin: &[f64],
    cfg: &NetworkConfig,
    spec: &QuadratureSpec,
    law: Option<&DistanceLaw>,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if ts_lin.is_empty() {
        return Ok(Vec::new());
    }
    let built;
    let law = match law {
        Some(l) => l,
        None => {
            built = crate::equivalence::d2d_distance_law(cfg)?;
            &built
        }
    };
    let ctx = Arc::new(D2dCtx::new(cfg)?);
    let r0_lo = law.quantile(2e-5);
    let lo_mass = law.cdf(r0_lo);
    let r0_hi = law.quantile(1.0 - 2e-5);
    let mut c_max = 1e-6f64;
    for &t in ts_lin {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Argument(format!("threshold must be positive, got {t}")));
        }
        c_max = c_max.max(1.0 / t);
    }
    let integrand = |r0: f64| -> Vec<f64> {
        let w = law.pdf(r0);
        if w <= 0.0 {
            return vec![0.0; ts_lin.len()];
        }
        let cf = ctx.charfn(r0).expect("positive r0");
        let plan = InversionPlan::build(&cf, spec, c_max + cf.noise_phase_rate)
            .expect("inversion plan for in-range conditioning");
        ts_lin
            .iter()
            .map(|&t| plan.ccdf(t).map(|p| p * w).unwrap_or(f64::NAN))
            .collect()
    };
    let quadr = integrate_vec_parallel(&integrand, r0_lo, r0_hi, 1e-4, 1e-4, 300)?;
    let mut out = quadr;
    for v in &mut out {
        if !v.is_finite() {
            return Err(Error::Law("coverage integrand failed".into()));
        }
        *v = (*v + lo_mass).clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Adaptive vector-valued quadrature with panel nodes evaluated in parallel.
fn integrate_vec_parallel(
    f: &(dyn Fn(f64) -> Vec<f64> + Sync),
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_subdiv: usize,
) -> Result<Vec<f64>> {
    use crate::quad::QuadValue;
    const XGK: [f64; 8] = [
        0.991455371120813,
        0.949107912342759,
        0.864864423359769,
        0.741531185599394,
        0.586087235467691,
        0.405845151377397,
        0.207784955007898,
        0.0,
    ];
    const WGK: [f64; 8] = [
        0.022935322010529,
        0.063092092629979,
        0.104790010322250,
        0.140653259715525,
        0.169004726639267,
        0.190350578064785,
        0.204432940075298,
        0.209482141084728,
    ];
    const WG: [f64; 4] = [
        0.129484966168870,
        0.279705391489277,
        0.381830050505119,
        0.417959183673469,
    ];
    let panel = |lo: f64, hi: f64| -> (Vec<f64>, f64) {
        let center = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut xs = Vec::with_capacity(15);
        xs.push(center);
        for &x in XGK.iter().take(7) {
            xs.push(center - half * x);
            xs.push(center + half * x);
        }
        let vals: Vec<Vec<f64>> = xs.par_iter().map(|&x| f(x)).collect();
        let mut kron = vals[0].scale(WGK[7]);
        let mut gauss = vals[0].scale(WG[3]);
        for j in 0..7 {
            let mut pair = vals[1 + 2 * j].clone();
            pair.add_assign(&vals[2 + 2 * j]);
            kron.add_assign(&pair.scale(WGK[j]));
            if j % 2 == 1 {
                gauss.add_assign(&pair.scale(WG[j / 2]));
            }
        }
        let kr = kron.scale(half);
        let err = kr.sub(&gauss.scale(half)).norm();
        (kr, (200.0 * err).powf(1.5).min(err.max(1e-300)))
    };
    let mut segs: Vec<(f64, f64, Vec<f64>, f64)> = Vec::new();
    let (v, e) = panel(a, b);
    segs.push((a, b, v, e));
    loop {
        let mut total = segs[0].2.zero_like();
        let mut err = 0.0;
        for s in &segs {
            total.add_assign(&s.2);
            err += s.3;
        }
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok(total);
        }
        if segs.len() >= max_subdiv {
            return Err(Error::QuadratureConvergence {
                requested: abs_tol,
                achieved: err,
            });
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .max_by(|(_, x), (_, y)| x.3.partial_cmp(&y.3).unwrap())
            .unwrap();
        let (lo, hi, _, _) = segs[worst];
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = panel(lo, mid);
        let (v2, e2) = panel(mid, hi);
        segs[worst] = (lo, mid, v1, e1);
        segs.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NetworkConfig {
        NetworkConfig::default()
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn charfn_at_zero_is_one() {
        let cf = cellular_charfn(60.0, &cfg()).unwrap();
        assert!((cf.eval(0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        let cf = d2d_charfn(40.0, &cfg()).unwrap();
        assert!((cf.eval(0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn charfn_conjugate_symmetry_and_modulus() {
        let cf = cellular_charfn(80.0, &cfg()).unwrap();
        for i in 1..=100 {
            let w = i as f64 * 0.37;
            let f = cf.eval(w);
            let g = cf.eval(-w);
            assert!((f.conj() - g).norm() < 1e-12);
            assert!(f.norm() <= 1.0 + 1e-9, "modulus at {w}: {}", f.norm());
        }
    }

    #[test]
    fn charfn_envelope_decays() {
        // Soft check at decade-spaced frequencies.
        let cf = cellular_charfn(60.0, &cfg()).unwrap();
        let mut last = 1.0;
        for w in [1.0, 10.0, 100.0, 1000.0] {
            let m = cf.eval(w).norm();
            if m > last + 1e-6 {
                eprintln!("warning: |cf| envelope rose at {w}: {m} > {last}");
            }
            last = m;
        }
        assert!(cf.eval(1000.0).norm() < 0.5);
    }

    #[test]
    fn noise_limited_charfn_is_pure_phase() {
        // Interferer densities driven to nothing: both interference factors
        // collapse to 1 and only the noise carrier remains.
        let mut c = cfg();
        c.lambda_b = 1e-10;
        c.lambda_u = 1e-12;
        let cf = cellular_charfn(60.0, &c).unwrap();
        let d = c.derived().unwrap();
        let s = d.p0_mw * d.a_b.powf(0.2) * 60f64.powf(3.75 * -0.2);
        let eta_over_s = d.noise_bs_mw / s;
        for w in [0.5, 2.0, 11.0] {
            let want = Complex64::from_polar(1.0, -w * eta_over_s);
            let got = cf.eval(w);
            assert!((got - want).norm() < 1e-9, "w={w}: {got} vs {want}");
        }
    }

    #[test]
    fn invert_point_mass() {
        // 1/SINR fixed at 1/s: cf(w) = exp(-iw/s); P[SINR > T] steps at s.
        let s = 1.0;
        let cf = CharacteristicFn::from_parts(
            |_| Complex64::new(1.0, 0.0),
            1.0 / s,
            1.0,
            Mode::Cellular,
        );
        let sp = spec();
        assert!((invert_ccdf(&cf, 0.657, &sp).unwrap() - 1.0).abs() < 1e-3);
        assert!(invert_ccdf(&cf, 1.52, &sp).unwrap() < 1e-3);
    }

    #[test]
    fn invert_exponential() {
        // 1/SINR ~ Exp(1): cf = 1/(1+iw), P[SINR > T] = 1 - exp(-1/T).
        let cf = CharacteristicFn::from_parts(
            |w| (Complex64::new(1.0, w)).inv(),
            0.0,
            1.0,
            Mode::Cellular,
        );
        let sp = spec();
        for t in [0.05, 0.3, 1.0, 4.0, 30.0] {
            let got = invert_ccdf(&cf, t, &sp).unwrap();
            let want = 1.0 - (-1.0 / t).exp();
            assert!((got - want).abs() < 1e-4, "T={t}: {got} vs {want}");
        }
    }

    #[test]
    fn invert_unit_cf() {
        // Point mass at 0 (infinite SINR): coverage 1 for every threshold.
        let cf =
            CharacteristicFn::from_parts(|_| Complex64::new(1.0, 0.0), 0.0, 1.0, Mode::Cellular);
        let sp = spec();
        for t in [0.01, 1.0, 100.0] {
            assert!((invert_ccdf(&cf, t, &sp).unwrap() - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn invert_monotone_in_threshold() {
        let cf = d2d_charfn(45.0, &cfg()).unwrap();
        let sp = spec();
        let ts: Vec<f64> = (0..50).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 49.0)).collect();
        let ps = invert_ccdf_grid(&cf, &ts, &sp).unwrap();
        for w in ps.windows(2) {
            assert!(w[1] <= w[0] + 1e-4, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn invert_rejects_bad_threshold() {
        let cf =
            CharacteristicFn::from_parts(|_| Complex64::new(1.0, 0.0), 0.0, 1.0, Mode::Cellular);
        assert!(invert_ccdf(&cf, 0.0, &spec()).is_err());
        assert!(invert_ccdf(&cf, -1.0, &spec()).is_err());
    }
}
