//! Closed-form probability laws under the strongest-BS → nearest-BS
//! equivalence transform.
//!
//! Replacing max-received-power association under lognormal shadowing with
//! nearest-neighbor association in a rescaled process (equivalent distance
//! `H^{-1/alpha} R`) turns every association event into a void probability of
//! an intensity-boosted Poisson process. This module exposes the resulting
//! laws: the cellular-mode probability, the serving-distance density of a
//! cellular UE, and the (approximate, second-neighbor) D2D pair-distance law.

use std::sync::Arc;

use crate::model::{cu_tx_power_mw_derived, Derived, NetworkConfig};
use crate::quad;
use crate::{Error, Result};

/// A named probability law over equivalent distances in meters.
#[derive(Clone)]
pub struct DistanceLaw {
    pdf: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    cdf: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Support bounds `[lo, hi]`; `hi` may be finite saturation radius even
    /// for laws with unbounded formal support (mass beyond is < 1e-12).
    pub support: (f64, f64),
}

impl std::fmt::Debug for DistanceLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DistanceLaw")
            .field("support", &self.support)
            .finish()
    }
}

impl DistanceLaw {
    pub fn new(
        pdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        cdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: (f64, f64),
    ) -> Self {
        DistanceLaw {
            pdf: Arc::new(pdf),
            cdf: Arc::new(cdf),
            support,
        }
    }

    pub fn pdf(&self, r: f64) -> f64 {
        (self.pdf)(r)
    }

    pub fn cdf(&self, r: f64) -> f64 {
        (self.cdf)(r)
    }

    /// Distribution-function axioms: pdf >= 0, unit mass by quadrature,
    /// cdf monotone from ~0 to within 1e-6 of 1 on a 10³-point grid.
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.support;
        // Numerically differentiated pdfs carry ~1e-7 noise; the quadrature
        // only needs to certify the 1e-6 mass contract.
        let mass = quad::integrate(|r| self.pdf(r), lo, hi, 2e-7, 1e-9, 4000, &[])?.value;
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::Law(format!("pdf mass {mass} deviates from 1")));
        }
        let end = self.cdf(hi);
        if !(1.0 - 1e-6..=1.0 + 1e-6).contains(&end) {
            return Err(Error::Law(format!("cdf({hi}) = {end}")));
        }
        let mut last = -1e-9;
        for i in 0..=1000 {
            let r = lo + (hi - lo) * i as f64 / 1000.0;
            let c = self.cdf(r);
            if !(-1e-6..=1.0 + 1e-6).contains(&c) {
                return Err(Error::Law(format!("cdf({r}) = {c} outside [0,1]")));
            }
            if c < last - 1e-6 {
                return Err(Error::Law(format!("cdf not monotone at {r}: {c} < {last}")));
            }
            if self.pdf(r) < -1e-12 {
                return Err(Error::Law(format!("pdf({r}) negative")));
            }
            last = c;
        }
        Ok(())
    }

    /// Smallest radius with cdf at least `p` (bisection on the cdf).
    pub fn quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = self.support;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Mode-selection outcome: cellular probability and the two thinned
/// densities, in per-m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSplit {
    /// Probability a UE operates in cellular mode.
    pub q: f64,
    /// Density of cellular-mode UEs, per m².
    pub lambda_c: f64,
    /// Density of D2D-mode UEs, per m².
    pub lambda_d: f64,
}

/// Expected number of transformed points within `eps`:
/// `π λ eps² exp(2 σ_nat² / α²)`.
pub fn intensity_measure(eps: f64, lambda_m2: f64, sigma_nat: f64, alpha: f64) -> Result<f64> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::Argument(format!("eps must be >= 0, got {eps}")));
    }
    Ok(std::f64::consts::PI
        * lambda_m2
        * eps
        * eps
        * (2.0 * sigma_nat * sigma_nat / (alpha * alpha)).exp())
}

/// Probability that a UE's strongest received BS power beats the threshold,
/// with the thinned densities it implies.
pub fn mode_probability(cfg: &NetworkConfig) -> Result<ModeSplit> {
    let d = cfg.derived()?;
    Ok(mode_probability_derived(&d))
}

pub(crate) fn mode_probability_derived(d: &Derived) -> ModeSplit {
    // Void probability of the transformed process on the cellular disk.
    let q = 1.0 - (-std::f64::consts::PI * d.lambda_b_m2 * d.t * d.t * d.c_b).exp();
    ModeSplit {
        q,
        lambda_c: q * d.lambda_u_m2,
        lambda_d: (1.0 - q) * d.lambda_u_m2,
    }
}

/// Serving-distance law of a cellular-mode UE: the nearest-point distance of
/// the intensity-boosted process truncated to the cellular disk `[0, t]`.
pub fn serving_distance_law(cfg: &NetworkConfig) -> Result<DistanceLaw> {
    let d = cfg.derived()?;
    let kappa = std::f64::consts::PI * d.lambda_b_m2 * d.c_b;
    let q = mode_probability_derived(&d).q;
    let t = d.t;
    let pdf = move |r: f64| {
        if !(0.0..=t).contains(&r) {
            0.0
        } else {
            2.0 * kappa * r * (-kappa * r * r).exp() / q
        }
    };
    let cdf = move |r: f64| {
        if r <= 0.0 {
            0.0
        } else if r >= t {
            1.0
        } else {
            (1.0 - (-kappa * r * r).exp()) / q
        }
    };
    Ok(DistanceLaw::new(pdf, cdf, (0.0, t)))
}

/// Mean channel-inversion transmit power of a cellular UE, mW: the
/// expectation of the power law under the serving-distance law.
pub fn cu_mean_tx_power(cfg: &NetworkConfig) -> Result<f64> {
    let d = cfg.derived()?;
    let law = serving_distance_law(cfg)?;
    let r = quad::integrate(
        |r| cu_tx_power_mw_derived(r, cfg, &d) * law.pdf(r),
        0.0,
        d.t,
        1e-8,
        0.0,
        4000,
        &[],
    )?;
    Ok(r.value)
}

/// Fraction of a circle of radius `r_d` (around a D2D transmitter whose
/// strongest BS sits at distance `r1`) that falls inside that BS's cellular
/// disk of radius `t`: `arccos((r_d² + r1² - t²) / (2 r_d r1)) / π`, clamped.
pub fn cellular_overlap_prob(r_d: f64, r1: f64, t: f64) -> Result<f64> {
    if !(r_d > 0.0) || !(r1 > 0.0) {
        return Err(Error::Argument(format!(
            "circle and center distances must be positive, got r_d={r_d}, r1={r1}"
        )));
    }
    if t < 0.0 {
        return Err(Error::Argument(format!("disk radius must be >= 0, got {t}")));
    }
    let arg = ((r_d * r_d + r1 * r1 - t * t) / (2.0 * r_d * r1)).clamp(-1.0, 1.0);
    Ok(arg.acos() / std::f64::consts::PI)
}

/// Everything the D2D pair-distance construction needs, precomputed.
struct D2dLawParams {
    /// π λ_B c_B: transformed BS intensity factor.
    kappa_b: f64,
    /// π λ_tu c_D: transformed D2D-transmitter intensity factor.
    mu_d: f64,
    q: f64,
    t: f64,
    /// Outer integration cut: transformed BS-distance mass beyond is < 1e-9.
    r1_hi: f64,
}

impl D2dLawParams {
    fn new(cfg: &NetworkConfig) -> Result<Self> {
        let d = cfg.derived()?;
        let split = mode_probability_derived(&d);
        let lambda_tu = cfg.d2d_tx_activity * split.lambda_d;
        if lambda_tu <= 0.0 {
            return Err(Error::Config(
                "D2D transmitter density is zero; pair-distance law undefined".into(),
            ));
        }
        let kappa_b = std::f64::consts::PI * d.lambda_b_m2 * d.c_b;
        let mu_d = std::f64::consts::PI * lambda_tu * d.c_d;
        // Solve exp(-kappa_b r²)/(1-q) < 1e-9 for the outer cut.
        let r1_hi = ((1e9 / (1.0 - split.q)).ln() / kappa_b).sqrt().max(d.t * 1.5);
        Ok(D2dLawParams {
            kappa_b,
            mu_d,
            q: split.q,
            t: d.t,
            r1_hi,
        })
    }

    /// Nearest-neighbor CDF of the transformed transmitter process.
    fn f1_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            1.0 - (-self.mu_d * x * x).exp()
        }
    }

    fn f1_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            2.0 * self.mu_d * x * (-self.mu_d * x * x).exp()
        }
    }

    /// Second-neighbor pdf of the transformed transmitter process.
    fn f2_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            2.0 * self.mu_d * self.mu_d * x * x * x * (-self.mu_d * x * x).exp()
        }
    }

    /// Density of the transmitter's own strongest-BS equivalent distance,
    /// conditioned on D2D mode (support [t, ∞)).
    fn r1_pdf(&self, r1: f64) -> f64 {
        if r1 < self.t {
            0.0
        } else {
            2.0 * self.kappa_b * r1 * (-self.kappa_b * r1 * r1).exp() / (1.0 - self.q)
        }
    }

    /// Pr[pair distance < R | r1] under the mixture: nearest neighbor where
    /// the candidate circle avoids the cellular disk, second neighbor on the
    /// overlapping arc fraction.
    fn inner_cdf(&self, r_cap: f64, r1: f64) -> f64 {
        let base = self.f1_cdf(r_cap);
        let lo = (r1 - self.t).max(0.0);
        let hi = r_cap.min(r1 + self.t);
        if hi <= lo {
            return base;
        }
        let corr = quad::integrate(
            |x| {
                let pc = cellular_overlap_prob(x.max(1e-12), r1, self.t).unwrap_or(0.0);
                pc * (self.f2_pdf(x) - self.f1_pdf(x))
            },
            lo,
            hi,
            1e-10,
            1e-13,
            600,
            &[],
        )
        .map(|r| r.value)
        .unwrap_or(0.0);
        base + corr
    }

    /// Unnormalized mixture CDF (the printed form's mass can differ from 1
    /// by a few percent; the public law renormalizes).
    fn raw_cdf(&self, r_cap: f64) -> f64 {
        if r_cap <= 0.0 {
            return 0.0;
        }
        quad::integrate(
            |r1| self.r1_pdf(r1) * self.inner_cdf(r_cap, r1),
            self.t,
            self.r1_hi,
            1e-9,
            1e-12,
            2000,
            &[],
        )
        .map(|r| r.value)
        .unwrap_or(f64::NAN)
    }
}

/// Approximate law of the equivalent distance between a D2D transmitter and
/// its receiver. The mixture combines the nearest-neighbor law (candidate
/// circle clear of the transmitter's cellular disk, or candidate in D2D mode)
/// with the second-neighbor law weighted by the overlap arc fraction; the pdf
/// is the CDF's centered numerical derivative with Richardson refinement.
pub fn d2d_distance_law(cfg: &NetworkConfig) -> Result<DistanceLaw> {
    let p = D2dLawParams::new(cfg)?;
    let r_sat = p.r1_hi + p.t;
    let mass = p.raw_cdf(r_sat);
    if !mass.is_finite() || !(0.8..=1.2).contains(&mass) {
        return Err(Error::Law(format!(
            "d2d pair-distance mixture mass {mass} outside sanity window"
        )));
    }
    let p = Arc::new(p);
    let pc = p.clone();
    let cdf = move |r: f64| {
        if r <= 0.0 {
            0.0
        } else if r >= r_sat {
            1.0
        } else {
            (pc.raw_cdf(r) / mass).clamp(0.0, 1.0)
        }
    };
    let cdf_for_pdf = cdf;
    let pdf = move |r: f64| {
        if r <= 0.0 || r >= r_sat {
            return 0.0;
        }
        // Centered difference with one Richardson step; h per the law's scale.
        let h = (1e-3 * r).max(1e-2);
        let d_h = (cdf_for_pdf(r + h) - cdf_for_pdf(r - h)) / (2.0 * h);
        let h2 = 0.5 * h;
        let d_h2 = (cdf_for_pdf(r + h2) - cdf_for_pdf(r - h2)) / (2.0 * h2);
        ((4.0 * d_h2 - d_h) / 3.0).max(0.0)
    };
    let pc = p.clone();
    let cdf = move |r: f64| {
        if r <= 0.0 {
            0.0
        } else if r >= r_sat {
            1.0
        } else {
            (pc.raw_cdf(r) / mass).clamp(0.0, 1.0)
        }
    };
    let law = DistanceLaw::new(pdf, cdf, (0.0, r_sat));
    // Abort on a broken CDF now rather than poisoning downstream quadratures.
    for i in 0..=40 {
        let r = r_sat * i as f64 / 40.0;
        let c = law.cdf(r);
        if !(0.0..=1.0 + 1e-6).contains(&c) {
            return Err(Error::Law(format!("d2d cdf({r}) = {c}")));
        }
    }
    Ok(law)
}

/// Raw (unnormalized) mass of the printed mixture; exposed for diagnostics
/// and tests.
pub fn d2d_mixture_mass(cfg: &NetworkConfig) -> Result<f64> {
    let p = D2dLawParams::new(cfg)?;
    Ok(p.raw_cdf(p.r1_hi + p.t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn cfg() -> NetworkConfig {
        NetworkConfig::default()
    }

    #[test]
    fn intensity_measure_basics() {
        // No shadowing: plain PPP disk mean.
        let v = intensity_measure(200.0, 5e-6, 0.0, 3.75).unwrap();
        assert!((v - std::f64::consts::PI * 5e-6 * 4e4).abs() < 1e-12);
        assert_eq!(intensity_measure(0.0, 5e-6, 1.0, 3.75).unwrap(), 0.0);
        assert!(intensity_measure(-1.0, 5e-6, 1.0, 3.75).is_err());
    }

    #[test]
    fn intensity_measure_counts_transformed_points() {
        // Empirical mean count of H^{-1/alpha} R <= eps over many PPP draws.
        let lambda = 5e-6;
        let alpha = 3.75;
        let sigma_nat = crate::model::sigma_natural(8.0).unwrap();
        let eps = 200.0;
        let expect = intensity_measure(eps, lambda, sigma_nat, alpha).unwrap();
        let window = 3000.0; // transformed points within 200 m come from well inside
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xA11CE);
        let mut total = 0u64;
        let n_real = 10_000;
        for _ in 0..n_real {
            let mean = lambda * std::f64::consts::PI * window * window;
            let n = rand_distr::Distribution::sample(
                &rand_distr::Poisson::new(mean).unwrap(),
                &mut rng,
            ) as u64;
            for _ in 0..n {
                let r = window * rng.gen::<f64>().sqrt();
                let z: f64 = rand_distr::Distribution::sample(
                    &rand_distr::StandardNormal,
                    &mut rng,
                );
                let h = (sigma_nat * z).exp();
                if h.powf(-1.0 / alpha) * r <= eps {
                    total += 1;
                }
            }
        }
        let got = total as f64 / n_real as f64;
        // 3 sigma of a Poisson mean-expect estimate over n_real draws.
        let tol = 3.0 * (expect / n_real as f64).sqrt();
        assert!((got - expect).abs() < tol, "got {got}, expect {expect} ± {tol}");
    }

    #[test]
    fn mode_probability_limits() {
        let mut c = cfg();
        c.lambda_b = 1e-12;
        assert!(mode_probability(&c).unwrap().q < 1e-9);
        let mut c = cfg();
        c.beta_dbm = -400.0;
        assert!(mode_probability(&c).unwrap().q > 1.0 - 1e-9);
        // Densities split exactly.
        let s = mode_probability(&cfg()).unwrap();
        assert!((s.lambda_c + s.lambda_d - 3e-4).abs() < 1e-18);
        assert!((s.lambda_c - s.q * 3e-4).abs() < 1e-18);
    }

    #[test]
    fn mode_probability_monotonicity() {
        // q nonincreasing in beta; nondecreasing in lambda_b, p_b, sigma_b.
        let mut last = 1.0;
        for beta in [-80.0, -70.0, -60.0, -50.0] {
            let mut c = cfg();
            c.beta_dbm = beta;
            let q = mode_probability(&c).unwrap().q;
            assert!(q <= last + 1e-12);
            last = q;
        }
        let mut last = 0.0;
        for lb in [1.0, 3.0, 5.0, 10.0] {
            let mut c = cfg();
            c.lambda_b = lb;
            let q = mode_probability(&c).unwrap().q;
            assert!(q >= last - 1e-12);
            last = q;
        }
        let mut last = 0.0;
        for pb in [30.0, 40.0, 46.0, 50.0] {
            let mut c = cfg();
            c.p_b_dbm = pb;
            let q = mode_probability(&c).unwrap().q;
            assert!(q >= last - 1e-12);
            last = q;
        }
        let mut last = 0.0;
        for sb in [0.0, 4.0, 8.0, 12.0] {
            let mut c = cfg();
            c.sigma_b_db = sb;
            let q = mode_probability(&c).unwrap().q;
            assert!(q >= last - 1e-12);
            last = q;
        }
    }

    #[test]
    fn serving_law_normalizes_and_reduces_to_rayleigh() {
        let law = serving_distance_law(&cfg()).unwrap();
        law.validate().unwrap();
        // sigma = 0 and beta -> 0 gives the classic nearest-neighbor law.
        let mut c = cfg();
        c.sigma_b_db = 0.0;
        c.beta_dbm = -250.0; // t far beyond any mass, q ~ 1
        let law = serving_distance_law(&c).unwrap();
        let lam = 5e-6;
        for r in [50.0, 200.0, 400.0, 800.0] {
            let want = 2.0 * std::f64::consts::PI * lam * r
                * (-std::f64::consts::PI * lam * r * r).exp();
            let got = law.pdf(r);
            assert!((got - want).abs() / want < 1e-9, "r={r}: {got} vs {want}");
        }
    }

    #[test]
    fn mean_power_limits() {
        // eps -> 0: no compensation, mean power = P0.
        let mut c = cfg();
        c.epsilon = 1e-9;
        let p0 = crate::model::dbm_to_mw(c.p0_dbm).unwrap();
        let m = cu_mean_tx_power(&c).unwrap();
        assert!((m - p0).abs() / p0 < 1e-6, "{m} vs {p0}");
        // Linearity in P0.
        let mut c1 = cfg();
        c1.p0_dbm = -70.0;
        let mut c2 = cfg();
        c2.p0_dbm = -70.0 + 10.0 * 2f64.log10(); // doubled P0
        let m1 = cu_mean_tx_power(&c1).unwrap();
        let m2 = cu_mean_tx_power(&c2).unwrap();
        assert!((m2 - 2.0 * m1).abs() / m2 < 1e-9);
    }

    #[test]
    fn overlap_prob_geometry() {
        // Point on the disk boundary: half the vanishing circle inside.
        let t = 120.0;
        assert!((cellular_overlap_prob(1e-9, t, t).unwrap() - 0.5).abs() < 1e-6);
        // Disjoint geometry.
        assert_eq!(cellular_overlap_prob(10.0, 1000.0, 120.0).unwrap(), 0.0);
        // Right triangle: arccos(0)/pi = 1/2.
        assert!((cellular_overlap_prob(3.0, 4.0, 5.0).unwrap() - 0.5).abs() < 1e-12);
        // Bounds and rejection.
        assert!(cellular_overlap_prob(0.0, 1.0, 1.0).is_err());
        assert!(cellular_overlap_prob(1.0, -1.0, 1.0).is_err());
        for i in 1..40 {
            for j in 1..40 {
                let p = cellular_overlap_prob(i as f64 * 7.0, j as f64 * 9.0, 100.0).unwrap();
                assert!((0.0..=1.0).contains(&p));
            }
        }
    }

    #[test]
    fn d2d_law_axioms() {
        let law = d2d_distance_law(&cfg()).unwrap();
        assert_eq!(law.cdf(0.0), 0.0);
        assert_eq!(law.cdf(law.support.1), 1.0);
        let mut last = 0.0;
        for i in 0..=100 {
            let r = law.support.1 * i as f64 / 100.0;
            let c = law.cdf(r);
            assert!(c >= last - 1e-6, "monotone violation at {r}");
            last = c;
        }
        law.validate().unwrap();
    }

    #[test]
    fn d2d_law_collapses_without_cellular_disk() {
        // beta -> infinity: t -> 0, everyone D2D, plain nearest-neighbor law.
        let mut c = cfg();
        c.beta_dbm = 200.0;
        let d = c.derived().unwrap();
        assert!(d.t < 1e-3);
        let law = d2d_distance_law(&c).unwrap();
        let split = mode_probability(&c).unwrap();
        let mu = std::f64::consts::PI * c.d2d_tx_activity * split.lambda_d * d.c_d;
        for r in [20.0, 60.0, 120.0] {
            let want = 1.0 - (-mu * r * r).exp();
            let got = law.cdf(r);
            assert!((got - want).abs() < 1e-5, "r={r}: {got} vs {want}");
        }
    }

    #[test]
    fn d2d_pdf_matches_direct_mixture_derivative() {
        // Independent route: differentiating the mixture under the integral
        // sign gives pdf(R) = (1-Pc̄(R)) f1(R) + Pc̄(R) f2(R) with Pc̄ the
        // overlap probability averaged over r1. Compare against the
        // numerical-derivative pdf.
        let c = cfg();
        let p = D2dLawParams::new(&c).unwrap();
        let mass = p.raw_cdf(p.r1_hi + p.t);
        let law = d2d_distance_law(&c).unwrap();
        for r in [10.0, 40.0, 80.0, 150.0, 250.0] {
            let direct = quad::integrate(
                |r1| {
                    let pc = cellular_overlap_prob(r, r1, p.t).unwrap();
                    p.r1_pdf(r1) * ((1.0 - pc) * p.f1_pdf(r) + pc * p.f2_pdf(r))
                },
                p.t,
                p.r1_hi,
                1e-10,
                1e-13,
                2000,
                &[],
            )
            .unwrap()
            .value
                / mass;
            let got = law.pdf(r);
            assert!(
                (got - direct).abs() < 2e-5 * direct.max(1e-4),
                "r={r}: numeric {got} vs direct {direct}"
            );
        }
    }

    #[test]
    fn d2d_mixture_mass_near_unity() {
        let mass = d2d_mixture_mass(&cfg()).unwrap();
        assert!((0.9..=1.1).contains(&mass), "mass {mass}");
    }
}
