//! Filon-type integration of `∫ f(ω) e^{icω} dω` for slowly varying `f` and an
//! arbitrary carrier frequency `c`.
//!
//! A panel fits `f` with a degree-12 Chebyshev interpolant once; the carrier
//! is then applied through exact monomial moments `∫ x^k e^{icx} dx`, so one
//! fitted panel serves any number of carriers. This is what makes inverting a
//! characteristic function over a whole threshold grid cost one cf sweep.

use num_complex::Complex64;

use crate::{Error, Result};

pub const N_NODES: usize = 13;
const DEG: usize = N_NODES - 1;

/// Chebyshev-Lobatto nodes on [-1, 1], descending (cos(jπ/12)).
fn lobatto_nodes() -> [f64; N_NODES] {
    let mut x = [0.0; N_NODES];
    for (j, xj) in x.iter_mut().enumerate() {
        *xj = (std::f64::consts::PI * j as f64 / DEG as f64).cos();
    }
    x
}

/// Chebyshev coefficients of the degree-12 interpolant through values at the
/// Lobatto nodes: p(x) = Σ a_k T_k(x).
fn chebyshev_fit(values: &[Complex64; N_NODES]) -> [Complex64; N_NODES] {
    let mut a = [Complex64::new(0.0, 0.0); N_NODES];
    for (k, ak) in a.iter_mut().enumerate() {
        let mut s = Complex64::new(0.0, 0.0);
        for (j, &vj) in values.iter().enumerate() {
            let w = if j == 0 || j == DEG { 0.5 } else { 1.0 };
            s += vj * (w * (std::f64::consts::PI * (j * k) as f64 / DEG as f64).cos());
        }
        let sigma = if k == 0 || k == DEG { 0.5 } else { 1.0 };
        *ak = s * (2.0 * sigma / DEG as f64);
    }
    a
}

/// Monomial coefficients of T_0..T_12 (exact integers, well inside f64).
fn cheb_to_mono_matrix() -> [[f64; N_NODES]; N_NODES] {
    let mut t = [[0.0; N_NODES]; N_NODES];
    t[0][0] = 1.0;
    t[1][1] = 1.0;
    for k in 2..N_NODES {
        for p in 0..N_NODES {
            let shifted = if p == 0 { 0.0 } else { 2.0 * t[k - 1][p - 1] };
            t[k][p] = shifted - t[k - 2][p];
        }
    }
    t
}

/// Moments I_k(c) = ∫_{-1}^{1} x^k e^{icx} dx for k = 0..=12.
///
/// Small |c| uses the Taylor expansion of the exponential (exact parity
/// moments); larger |c| uses the stable forward recurrence
/// I_k = (e^{ic} - (-1)^k e^{-ic})/(ic) - (k/(ic)) I_{k-1}.
pub fn oscillatory_moments(c: f64) -> [Complex64; N_NODES] {
    let mut out = [Complex64::new(0.0, 0.0); N_NODES];
    if c.abs() < 10.0 {
        // I_k = Σ_j (ic)^j / j! · m_{k+j}, with m_n = 2/(n+1) for even n.
        let ic = Complex64::new(0.0, c);
        for (k, o) in out.iter_mut().enumerate() {
            let mut pow = Complex64::new(1.0, 0.0);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..=60 {
                if (k + j) % 2 == 0 {
                    let term = pow * (2.0 / (k + j + 1) as f64);
                    acc += term;
                    if pow.norm() < 1e-19 && j > c.abs() as usize {
                        break;
                    }
                }
                pow *= ic / (j + 1) as f64;
            }
            *o = acc;
        }
    } else {
        let ic = Complex64::new(0.0, c);
        let eic = Complex64::from_polar(1.0, c);
        let emic = Complex64::from_polar(1.0, -c);
        out[0] = (eic - emic) / ic;
        for k in 1..N_NODES {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            out[k] = (eic - emic * sign) / ic - out[k - 1] * (k as f64) / ic;
        }
    }
    out
}

/// One fitted panel of a slowly varying complex function on [a, b].
#[derive(Debug, Clone)]
pub struct PanelFit {
    pub a: f64,
    pub b: f64,
    mono: [Complex64; N_NODES],
    tail: f64,
}

impl PanelFit {
    /// Fit `f` at the 13 mapped Lobatto nodes.
    pub fn build(f: &mut dyn FnMut(f64) -> Complex64, a: f64, b: f64) -> PanelFit {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let xs = lobatto_nodes();
        let mut vals = [Complex64::new(0.0, 0.0); N_NODES];
        for (v, &x) in vals.iter_mut().zip(xs.iter()) {
            *v = f(mid + half * x);
        }
        let cheb = chebyshev_fit(&vals);
        let tail = cheb[DEG - 2].norm() + cheb[DEG - 1].norm() + cheb[DEG].norm();
        let m = cheb_to_mono_matrix();
        let mut mono = [Complex64::new(0.0, 0.0); N_NODES];
        for (k, &ak) in cheb.iter().enumerate() {
            for p in 0..N_NODES {
                if m[k][p] != 0.0 {
                    mono[p] += ak * m[k][p];
                }
            }
        }
        PanelFit { a, b, mono, tail }
    }

    /// `∫_a^b f(ω) e^{icω} dω` from the stored fit.
    pub fn integrate_with_carrier(&self, c: f64) -> Complex64 {
        let mid = 0.5 * (self.a + self.b);
        let half = 0.5 * (self.b - self.a);
        let moments = oscillatory_moments(c * half);
        let mut s = Complex64::new(0.0, 0.0);
        for (bk, ik) in self.mono.iter().zip(moments.iter()) {
            s += bk * ik;
        }
        s * half * Complex64::from_polar(1.0, c * mid)
    }

    /// Conservative bound on the fit truncation error of any carrier integral
    /// over this panel (high-order coefficient mass times panel width).
    pub fn fit_error_bound(&self) -> f64 {
        self.tail * (self.b - self.a)
    }
}

/// Adaptive oscillatory integral `∫_a^b f(ω) e^{icω} dω`, splitting panels
/// until the fit error bound meets `tol`. Intended for well-behaved `f`.
pub fn integrate_oscillatory(
    mut f: impl FnMut(f64) -> Complex64,
    c: f64,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
) -> Result<Complex64> {
    let mut panels = vec![PanelFit::build(&mut f, a, b)];
    loop {
        let err: f64 = panels.iter().map(|p| p.fit_error_bound()).sum();
        if err <= tol {
            break;
        }
        if panels.len() >= max_panels {
            return Err(Error::QuadratureConvergence {
                requested: tol,
                achieved: err,
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|(_, x), (_, y)| x.fit_error_bound().partial_cmp(&y.fit_error_bound()).unwrap())
            .unwrap();
        let PanelFit { a, b, .. } = panels[worst];
        let mid = 0.5 * (a + b);
        panels[worst] = PanelFit::build(&mut f, a, mid);
        panels.push(PanelFit::build(&mut f, mid, b));
    }
    Ok(panels.iter().map(|p| p.integrate_with_carrier(c)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    fn gk_reference(f: impl Fn(f64) -> Complex64 + Copy, c: f64, a: f64, b: f64) -> Complex64 {
        // Brute-force panels of at most a third of a carrier period.
        let period = if c.abs() < 1e-9 { b - a } else { 2.0 * std::f64::consts::PI / c.abs() };
        let n = (((b - a) / period * 3.0).ceil() as usize).clamp(1, 200_000);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let lo = a + (b - a) * i as f64 / n as f64;
            let hi = a + (b - a) * (i + 1) as f64 / n as f64;
            acc += quad::integrate(
                |w| f(w) * Complex64::from_polar(1.0, c * w),
                lo,
                hi,
                1e-13,
                1e-16,
                200,
                &[],
            )
            .unwrap()
            .value;
        }
        acc
    }

    #[test]
    fn moments_match_quadrature() {
        for &c in &[0.0, 0.3, 2.0, 9.9, 10.1, 31.0, 240.0, 1.7e4] {
            let moments = oscillatory_moments(c);
            for k in [0usize, 1, 5, 12] {
                let want = quad::integrate(
                    |x| x.powi(k as i32) * Complex64::from_polar(1.0, c * x),
                    -1.0,
                    1.0,
                    1e-13,
                    1e-16,
                    100_000,
                    &[],
                )
                .unwrap()
                .value;
                let err = (moments[k] - want).norm();
                assert!(err < 2e-11, "c={c} k={k}: {:?} vs {want:?} err={err:e}", moments[k]);
            }
        }
    }

    #[test]
    fn panel_reproduces_smooth_oscillatory_integrals() {
        // f = 1/(1+ω) with carriers spanning slow to very fast.
        let f = |w: f64| Complex64::new(1.0 / (1.0 + w), 0.0);
        for &c in &[0.0, 1.0, 57.0, 4000.0] {
            let mut fm = f;
            let p = PanelFit::build(&mut fm, 1.0, 2.4);
            let got = p.integrate_with_carrier(c);
            let want = gk_reference(f, c, 1.0, 2.4);
            assert!(
                (got - want).norm() < 1e-11,
                "c={c}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn panel_error_bound_flags_wiggles() {
        // A function with embedded oscillation faster than degree 12 can fit.
        let mut f = |w: f64| Complex64::from_polar(1.0, 40.0 * w);
        let p = PanelFit::build(&mut f, 0.0, 2.0);
        assert!(p.fit_error_bound() > 1e-3);
        let mut g = |w: f64| Complex64::new((0.3 * w).cos(), 0.0);
        let p = PanelFit::build(&mut g, 0.0, 2.0);
        assert!(p.fit_error_bound() < 1e-12);
    }

    #[test]
    fn adaptive_oscillatory_handles_embedded_phase() {
        // f itself carries moderate oscillation; carrier adds more.
        let f = |w: f64| Complex64::from_polar((-0.3 * w).exp(), 3.0 * w);
        let got = integrate_oscillatory(f, 25.0, 0.0, 6.0, 1e-10, 4000).unwrap();
        let want = gk_reference(f, 25.0, 0.0, 6.0);
        assert!((got - want).norm() < 1e-8, "got {got}, want {want}");
    }

    #[test]
    fn chebfit_recovers_polynomials() {
        // Values of T_3 at the nodes give back the unit coefficient.
        let xs = lobatto_nodes();
        let mut vals = [Complex64::new(0.0, 0.0); N_NODES];
        for (v, &x) in vals.iter_mut().zip(xs.iter()) {
            let t3 = 4.0 * x * x * x - 3.0 * x;
            *v = Complex64::new(t3, 0.0);
        }
        let a = chebyshev_fit(&vals);
        for (k, ak) in a.iter().enumerate() {
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert!((ak.re - want).abs() < 1e-13 && ak.im.abs() < 1e-13, "k={k}");
        }
    }
}
