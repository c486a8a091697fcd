use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};
use crate::jet::{Jet, MAX_ORDER};

use super::embedding::EmbeddingSpec;
use super::library::mercator_sphere;

pub type UnivariateMap = Arc<dyn Fn(&Jet) -> Jet + Send + Sync>;

/// Meridian `(ρ(u), z(u))` of a surface of revolution, `u` in `interval`.
#[derive(Clone)]
pub struct Profile {
    pub label: String,
    pub rho: UnivariateMap,
    pub z: UnivariateMap,
    pub interval: (f64, f64),
}

impl Profile {
    pub fn new(
        label: impl Into<String>,
        interval: (f64, f64),
        rho: impl Fn(&Jet) -> Jet + Send + Sync + 'static,
        z: impl Fn(&Jet) -> Jet + Send + Sync + 'static,
    ) -> Self {
        Self { label: label.into(), rho: Arc::new(rho), z: Arc::new(z), interval }
    }

    pub fn round() -> Self {
        Self::new("round", (0.0, PI), |u| u.sin(), |u| u.cos())
    }

    /// Ellipsoid of revolution with equatorial radius `a` and polar semi-axis `c`.
    pub fn ellipsoid(a: f64, c: f64) -> Self {
        Self::new(format!("ellipsoid_of_revolution({a}, {c})"), (0.0, PI), move |u| u.sin().scale(a), move |u| u.cos().scale(c))
    }

    /// `(ρ, z, ρ′, z′)` at a point.
    fn first_order(&self, u: f64) -> (f64, f64, f64, f64) {
        let v = Jet::variable(u, 0, 1, 1);
        let (r, z) = ((self.rho)(&v), (self.z)(&v));
        (r.value(), z.value(), r.partial(&[0]), z.partial(&[0]))
    }
}

/// `f′(U)` for a jet `U`, from the Taylor coefficients of `f` at `U.value()`.
fn composed_derivative(f: &UnivariateMap, u: &Jet) -> Jet {
    let order = u.order();
    let v = Jet::variable(u.value(), 0, 1, (order + 1).min(MAX_ORDER));
    let d = f(&v).derivative(0);
    u.compose_taylor(d.coeffs())
}

/// `u(w) = u₀ + (u₁ − u₀)(2/π) atan(eʷ)`, which sends the real line onto the
/// open profile interval and keeps the isothermal integrand bounded near
/// the poles.
#[derive(Clone)]
struct Isothermal {
    profile: Profile,
    tol: f64,
    /// `(w, s(w))` on a uniform table, `s` measured from `w = 0`.
    table: Vec<(f64, f64)>,
    step: f64,
}

/// Beyond this `|w|` the profile point `u₁ − δ` can no longer resolve `δ`
/// in floating point, so `s` is continued linearly: its slope there is
/// `1 + O(e^{−2|w|})` for a profile that meets the axis orthogonally.
const TABLE_HALF_WIDTH: f64 = 12.0;
const TABLE_STEP: f64 = 0.25;

impl Isothermal {
    fn u_of_w(&self, w: f64) -> f64 {
        let (u0, u1) = self.profile.interval;
        u0 + (u1 - u0) * (2.0 / PI) * w.exp().atan()
    }

    fn du_dw(&self, w: f64) -> f64 {
        let (u0, u1) = self.profile.interval;
        (u1 - u0) / (PI * w.cosh())
    }

    /// `ds/dw = √(ρ′² + z′²)/ρ · du/dw`, frozen outside the table.
    fn integrand(&self, w: f64) -> f64 {
        let w = w.clamp(-TABLE_HALF_WIDTH, TABLE_HALF_WIDTH);
        let (rho, _, dr, dz) = self.profile.first_order(self.u_of_w(w));
        (dr * dr + dz * dz).sqrt() / rho * self.du_dw(w)
    }

    fn build(profile: Profile, tol: f64) -> Result<Self> {
        let mut iso = Isothermal { profile, tol, table: Vec::new(), step: TABLE_STEP };
        let count = (2.0 * TABLE_HALF_WIDTH / TABLE_STEP).round() as usize;
        let mid = count / 2;
        let mut table = vec![(0.0, 0.0); count + 1];
        for k in mid + 1..=count {
            let (w0, s0) = table[k - 1];
            let w1 = w0 + TABLE_STEP;
            table[k] = (w1, s0 + iso.integrate(w0, w1));
        }
        for k in (0..mid).rev() {
            let (w1, s1) = table[k + 1];
            let w0 = w1 - TABLE_STEP;
            table[k] = (w0, s1 - iso.integrate(w0, w1));
        }
        if table.windows(2).any(|p| !(p[1].1 > p[0].1)) || !(iso.integrand(TABLE_HALF_WIDTH) > 0.0) {
            return Err(Error::Precondition("isothermal coordinate is not monotone along the profile".into()));
        }
        iso.table = table;
        Ok(iso)
    }

    fn integrate(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = (a.min(b), a.max(b));
        let sign = if b >= a { 1.0 } else { -1.0 };
        let mut total = 0.0;
        // Linear tails.
        for (edge, dir) in [(-TABLE_HALF_WIDTH, -1.0), (TABLE_HALF_WIDTH, 1.0)] {
            let outside = if dir > 0.0 { (hi - lo.max(edge)).max(0.0) } else { (hi.min(edge) - lo).max(0.0) };
            total += outside * self.integrand(edge);
        }
        let (clo, chi) = (lo.max(-TABLE_HALF_WIDTH), hi.min(TABLE_HALF_WIDTH));
        if chi > clo {
            let tol = self.tol * (chi - clo).max(1e-3) / (2.0 * TABLE_HALF_WIDTH);
            total += adaptive_gauss(&|w| self.integrand(w), clo, chi, tol, 0);
        }
        sign * total
    }

    /// `s(w)` directly from `w = 0`, independent of the table.
    fn s_direct(&self, w: f64) -> f64 {
        let panels = (w.abs().min(TABLE_HALF_WIDTH) / TABLE_STEP).ceil().max(1.0) as usize;
        let inner = w.clamp(-TABLE_HALF_WIDTH, TABLE_HALF_WIDTH);
        let h = inner / panels as f64;
        let body: f64 = (0..panels).map(|k| self.integrate(k as f64 * h, (k + 1) as f64 * h)).sum();
        body + self.integrate(inner, w)
    }

    /// Solves `s(w) = t` by Newton steps from the nearest table entry.
    fn invert(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::NonFinite(format!("isothermal coordinate {t}")));
        }
        let (first, last) = (self.table[0], self.table[self.table.len() - 1]);
        if t <= first.1 {
            return Ok(first.0 + (t - first.1) / self.integrand(first.0));
        }
        if t >= last.1 {
            return Ok(last.0 + (t - last.1) / self.integrand(last.0));
        }
        let k = self.table.partition_point(|&(_, s)| s <= t).saturating_sub(1);
        let (w0, s0) = self.table[k];
        let mut w = w0;
        let mut s = s0;
        for _ in 0..50 {
            let dw = (t - s) / self.integrand(w);
            let w_next = (w + dw).clamp(w0 - self.step, w0 + 2.0 * self.step);
            s += self.integrate(w, w_next);
            w = w_next;
            if dw.abs() < 1e-14 * (1.0 + w.abs()) {
                break;
            }
        }
        Ok(w)
    }
}

/// Adaptive Gauss-Legendre by interval halving.
pub(crate) fn adaptive_gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let whole = gauss(f, a, b);
    let m = 0.5 * (a + b);
    let halves = gauss(f, a, m) + gauss(f, m, b);
    if (whole - halves).abs() <= tol.max(1e-15 * halves.abs()) || depth > 24 {
        halves
    } else {
        adaptive_gauss(f, a, m, 0.5 * tol, depth + 1) + adaptive_gauss(f, m, b, 0.5 * tol, depth + 1)
    }
}

fn gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    use std::sync::OnceLock;
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    let rule = RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(10).unwrap()).as_node_weight_pairs().to_vec());
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    h * rule.iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>()
}

/// A surface of revolution reparametrized over Mercator coordinates `(t, φ)`
/// of the round sphere so that the pullback metric is `ρ²(dt² + dφ²)`.
#[derive(Clone)]
pub struct ConformalImmersion {
    pub embedding: EmbeddingSpec,
    /// Largest `max(|g_tt − g_φφ|, |g_tφ|)/g_φφ` over sample points.
    pub conformality_residual: f64,
    /// Largest `|s(u(t)) − t|` over sample points, with `s` recomputed by
    /// direct quadrature.
    pub inversion_residual: f64,
    pub profile: Profile,
}

/// Isothermal reparametrization of a sphere-type surface of revolution.
///
/// `s(u) = ∫ √(ρ′² + z′²)/ρ du` is tabulated by adaptive quadrature to
/// `tol` and inverted; Taylor jets of `u(t)` at each point come from Picard
/// iteration of `u′ = ρ/√(ρ′² + z′²)`.
pub fn conformal_immersion_revolution(profile: Profile, tol: f64) -> Result<ConformalImmersion> {
    let (u0, u1) = profile.interval;
    if !(u1 > u0) {
        return Err(Error::InvalidParams("profile interval must be increasing".into()));
    }
    let ends = [profile.first_order(u0).0, profile.first_order(u1).0];
    if ends.iter().any(|r| r.abs() > 1e-10) {
        return Err(Error::Precondition(format!("profile `{}` is not of sphere type: ρ at the ends is {ends:?}", profile.label)));
    }
    for k in 1..200 {
        let u = u0 + (u1 - u0) * k as f64 / 200.0;
        if !(profile.first_order(u).0 > 0.0) {
            return Err(Error::Precondition(format!("profile ρ is not positive at u = {u}")));
        }
    }
    let iso = Arc::new(Isothermal::build(profile.clone(), tol)?);

    let map_iso = iso.clone();
    let embedding =
        EmbeddingSpec::new(format!("conformal immersion of {}", profile.label), mercator_sphere(), 1.0, move |x: &[Jet]| {
            immersion_map(&map_iso, x)
        });

    let chart = embedding.chart();
    let mut conformality: f64 = 0.0;
    let mut inversion: f64 = 0.0;
    for k in 0..41 {
        let t = -18.0 + 36.0 * k as f64 / 40.0;
        let g = chart.metric_values(&[t, 1.0])?;
        conformality = conformality.max(((g[0] - g[3]).abs().max(g[1].abs())) / g[3]);
        let w = iso.invert(t)?;
        inversion = inversion.max((iso.s_direct(w) - t).abs());
    }
    Ok(ConformalImmersion { embedding, conformality_residual: conformality, inversion_residual: inversion, profile })
}

fn immersion_map(iso: &Isothermal, x: &[Jet]) -> Vec<Jet> {
    let order = x[0].order();
    let t0 = x[0].value();
    let w = iso.invert(t0).unwrap_or(f64::NAN);
    let u0 = iso.u_of_w(w);
    // Picard iteration for u(t0 + δ) as a univariate series.
    let mut u = Jet::constant(u0, 1, order);
    let p = &iso.profile;
    for _ in 0..=order {
        let dr = composed_derivative(&p.rho, &u);
        let dz = composed_derivative(&p.z, &u);
        let speed = (&dr * &dr + &dz * &dz).sqrt();
        let rhs = &(p.rho)(&u) / &speed;
        let mut next = rhs.truncate(order.saturating_sub(1)).integrate_univariate();
        next += u0;
        u = if next.order() < order { pad(&next, order) } else { next.truncate(order) };
    }
    let ut = x[0].compose_taylor(u.coeffs());
    let rho = (p.rho)(&ut);
    vec![&rho * &x[1].cos(), &rho * &x[1].sin(), (p.z)(&ut)]
}

fn pad(j: &Jet, order: usize) -> Jet {
    let mut c = j.coeffs().to_vec();
    c.resize(order + 1, 0.0);
    Jet::from_coeffs(1, order, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::embedding::embed_induced;
    use approx::assert_abs_diff_eq;

    #[test]
    fn round_profile_gives_identity_immersion() {
        let imm = conformal_immersion_revolution(Profile::round(), 1e-10).unwrap();
        assert!(imm.conformality_residual < 1e-10);
        for t in [-3.0, -0.5, 0.0, 1.7] {
            let geo = embed_induced(&imm.embedding, &[t, 0.4]).unwrap();
            assert_abs_diff_eq!(geo.mean_curvature, 1.0, epsilon = 1e-9);
            // Round Mercator metric sech²t.
            let sech2 = 1.0 / t.cosh().powi(2);
            assert_abs_diff_eq!(geo.metric.value(0, 0), sech2, epsilon = 1e-9);
        }
    }

    #[test]
    fn prolate_ellipsoid_is_conformal_with_larger_polar_curvature() {
        let imm = conformal_immersion_revolution(Profile::ellipsoid(1.0, 1.5), 1e-8).unwrap();
        assert!(imm.conformality_residual < 1e-7);
        assert!(imm.inversion_residual < 1e-7);
        let h_eq = embed_induced(&imm.embedding, &[0.0, 1.0]).unwrap().mean_curvature;
        let h_pole = embed_induced(&imm.embedding, &[-12.0, 1.0]).unwrap().mean_curvature;
        assert_abs_diff_eq!(h_eq, 0.5 * (1.0 + 1.0 / 2.25), epsilon = 1e-7);
        assert!(h_pole > h_eq);
        assert_abs_diff_eq!(h_pole, 1.5, epsilon = 1e-6);
    }

    #[test]
    fn non_sphere_profile_rejected() {
        let p = Profile::new("cylinder", (0.0, 1.0), |u| u.lift(1.0), |u| u.clone());
        assert!(conformal_immersion_revolution(p, 1e-8).is_err());
    }
}
