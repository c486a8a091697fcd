//! Radial solutions of `Δu + λ f(u) = 0` on the unit ball with `u = 0` on
//! the boundary, found by shooting on `α = u(0)`, and the classical
//! Pohozaev identity they satisfy.

use crate::error::{Error, Result};
use crate::geometry::library::sphere_volume;
use crate::identities::{IdentityReport, LevelRecord};
use crate::integrate::rule;

/// Radius where the series start hands over to the integrator.
pub const SERIES_RADIUS: f64 = 1e-4;

/// Target for `|u(1)|` in the shooting bisection.
pub const BOUNDARY_TOL: f64 = 1e-10;

const BLOW_UP: f64 = 1e12;
const MAX_STEPS: usize = 200_000;
const MAX_BISECTIONS: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub enum Nonlinearity {
    /// `f(u) = |u|^{p−1} u`.
    Power(f64),
    /// Piecewise linear through the knots `(u_k, f_k)`, extended linearly
    /// beyond the ends.
    Table { u: Vec<f64>, f: Vec<f64> },
}

impl Nonlinearity {
    pub fn linear() -> Self {
        Nonlinearity::Power(1.0)
    }

    pub fn table(u: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if u.len() < 2 || u.len() != f.len() {
            return Err(Error::InvalidParams("a nonlinearity table needs at least two (u, f) pairs of equal length".into()));
        }
        if u.windows(2).any(|w| !(w[0] < w[1])) || u.iter().chain(&f).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("table knots must be finite and strictly increasing".into()));
        }
        let t = Nonlinearity::Table { u, f };
        if t.f(0.0).abs() > 1e-14 {
            return Err(Error::InvalidParams(format!("tabulated f must vanish at 0, got f(0) = {}", t.f(0.0))));
        }
        Ok(t)
    }

    pub fn check(&self) -> Result<()> {
        match self {
            Nonlinearity::Power(p) if !(*p >= 1.0 && p.is_finite()) => {
                Err(Error::InvalidParams(format!("power nonlinearity needs p ≥ 1, got {p}")))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Nonlinearity::Power(p) if *p == 1.0 => "u".into(),
            Nonlinearity::Power(p) => format!("|u|^{}u", p - 1.0),
            Nonlinearity::Table { u, .. } => format!("table[{} knots]", u.len()),
        }
    }

    pub fn f(&self, x: f64) -> f64 {
        match self {
            Nonlinearity::Power(p) => x.abs().powf(p - 1.0) * x,
            Nonlinearity::Table { u, f } => {
                let k = segment(u, x);
                f[k] + (f[k + 1] - f[k]) * (x - u[k]) / (u[k + 1] - u[k])
            }
        }
    }

    /// `F(x) = ∫₀^x f`.
    pub fn primitive(&self, x: f64) -> f64 {
        match self {
            Nonlinearity::Power(p) => x.abs().powf(p + 1.0) / (p + 1.0),
            Nonlinearity::Table { u, .. } => {
                // trapezoids are exact for a piecewise linear f
                let mut pts: Vec<f64> = u.iter().copied().filter(|&k| in_between(k, 0.0, x)).collect();
                if x < 0.0 {
                    pts.reverse();
                }
                pts.insert(0, 0.0);
                pts.push(x);
                pts.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (self.f(w[0]) + self.f(w[1]))).sum()
            }
        }
    }
}

fn in_between(k: f64, a: f64, b: f64) -> bool {
    k > a.min(b) && k < a.max(b)
}

fn segment(u: &[f64], x: f64) -> usize {
    u.partition_point(|&k| k <= x).clamp(1, u.len() - 1) - 1
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-13 }
    }
}

impl OdeOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        Self { rtol, atol: rtol * 1e-2 }
    }
}

/// One accepted step with the data of a quintic Hermite interpolant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Knot {
    pub r: f64,
    pub u: f64,
    pub du: f64,
    pub ddu: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialSolution {
    pub n: usize,
    pub lambda: f64,
    pub f: Nonlinearity,
    pub alpha: f64,
    /// `|u(1)|`.
    pub boundary_residual: f64,
    /// Knots from `r = 0` through the series radius to `r = 1`.
    pub profile: Vec<Knot>,
    pub options: OdeOptions,
}

impl RadialSolution {
    pub fn boundary_slope(&self) -> f64 {
        self.profile.last().map_or(0.0, |k| k.du)
    }

    /// `(u, u′)` at `r ∈ [0, 1]` from the quintic Hermite interpolant.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let k = self.profile.partition_point(|k| k.r <= r).clamp(1, self.profile.len() - 1) - 1;
        hermite(&self.profile[k], &self.profile[k + 1], r)
    }

    /// `ω_{n−1} ∫₀¹ g(r, u, u′) r^{n−1} dr` with Gauss-Legendre on every step.
    pub fn radial_integral(&self, g: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let nodes = rule(6);
        let mut sum = 0.0;
        for w in self.profile.windows(2) {
            let (a, b) = (w[0].r, w[1].r);
            let half = 0.5 * (b - a);
            for &(x, wt) in nodes.iter() {
                let r = a + half * (x + 1.0);
                let (u, du) = hermite(&w[0], &w[1], r);
                sum += half * wt * g(r, u, du) * r.powi(self.n as i32 - 1);
            }
        }
        sphere_volume(self.n - 1) * sum
    }

    pub fn is_decreasing(&self) -> bool {
        self.profile.iter().skip(1).all(|k| k.du <= 0.0)
    }

    /// `(∫ |∇u|², λ ∫ u f(u))` over the ball.
    pub fn energy(&self) -> (f64, f64) {
        let grad = self.radial_integral(|_, _, du| du * du);
        let work = self.lambda * self.radial_integral(|_, u, _| u * self.f.f(u));
        (grad, work)
    }
}

fn hermite(k0: &Knot, k1: &Knot, r: f64) -> (f64, f64) {
    let h = k1.r - k0.r;
    let t = (r - k0.r) / h;
    let (t2, t3, t4, t5) = (t * t, t * t * t, t.powi(4), t.powi(5));
    let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h20 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h21 = 0.5 * (t3 - 2.0 * t4 + t5);
    let d00 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let d10 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let d20 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let d11 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let d21 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    let u = h00 * k0.u + h * h10 * k0.du + h * h * h20 * k0.ddu + h01 * k1.u + h * h11 * k1.du + h * h * h21 * k1.ddu;
    let du = (d00 * k0.u + h * d10 * k0.du + h * h * d20 * k0.ddu - d00 * k1.u + h * d11 * k1.du + h * h * d21 * k1.ddu) / h;
    (u, du)
}

struct Radial<'a> {
    n: f64,
    lambda: f64,
    f: &'a Nonlinearity,
}

impl Radial<'_> {
    fn rhs(&self, r: f64, y: [f64; 2]) -> [f64; 2] {
        [y[1], -(self.n - 1.0) / r * y[1] - self.lambda * self.f.f(y[0])]
    }

    fn knot(&self, r: f64, y: [f64; 2]) -> Knot {
        Knot { r, u: y[0], du: y[1], ddu: self.rhs(r, y)[1] }
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

fn dp45_step(sys: &Radial, r: f64, y: [f64; 2], h: f64) -> ([f64; 2], [f64; 2]) {
    let mut k = [[0.0; 2]; 7];
    for s in 0..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            for i in 0..2 {
                ys[i] += h * A[s][j] * kj[i];
            }
        }
        k[s] = sys.rhs(r + C[s] * h, ys);
    }
    let mut y5 = y;
    let mut err = [0.0; 2];
    for s in 0..7 {
        for i in 0..2 {
            y5[i] += h * B5[s] * k[s][i];
            err[i] += h * (B5[s] - B4[s]) * k[s][i];
        }
    }
    (y5, err)
}

/// Integrates from the series start at `r = SERIES_RADIUS` to `r = 1` with
/// `u(0) = α`, `u′(0) = 0`.
pub fn shoot(n: usize, f: &Nonlinearity, lambda: f64, alpha: f64, opts: OdeOptions) -> Result<Vec<Knot>> {
    let sys = Radial { n: n as f64, lambda, f };
    let fa = f.f(alpha);
    let r0 = SERIES_RADIUS;
    let mut y = [alpha - lambda * fa * r0 * r0 / (2.0 * n as f64), -lambda * fa * r0 / n as f64];
    let mut knots = vec![Knot { r: 0.0, u: alpha, du: 0.0, ddu: -lambda * fa / n as f64 }, sys.knot(r0, y)];
    let mut r = r0;
    let mut h: f64 = 1e-3;
    let mut steps = 0;
    while r < 1.0 {
        steps += 1;
        if steps > MAX_STEPS || h < 1e-14 {
            return Err(Error::BlowUp(r));
        }
        let h_try = h.min(1.0 - r);
        let (y_new, e) = dp45_step(&sys, r, y, h_try);
        if !y_new.iter().all(|v| v.is_finite()) || y_new[0].abs() > BLOW_UP {
            if h_try < 1e-10 {
                return Err(Error::BlowUp(r));
            }
            h = 0.25 * h_try;
            continue;
        }
        let err = (0..2).map(|i| e[i].abs() / (opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs()))).fold(0.0f64, f64::max);
        if err <= 1.0 {
            r = if h_try == 1.0 - r { 1.0 } else { r + h_try };
            y = y_new;
            knots.push(sys.knot(r, y));
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = h_try * factor;
    }
    Ok(knots)
}

/// `Δu + λ f(u) = 0`, `u′(0) = 0`, `u(1) = 0`, by bisection on `α = u(0)`
/// over a bracket where `u(1; α)` changes sign. A bracket end that already
/// meets the boundary tolerance is returned as is, so `α = 0` gives the
/// trivial branch.
pub fn radial_solve(n: usize, f: &Nonlinearity, lambda: f64, bracket: (f64, f64), opts: OdeOptions) -> Result<RadialSolution> {
    check_problem(n, f, lambda)?;
    let end = |alpha: f64| -> Result<(Vec<Knot>, f64)> {
        let knots = shoot(n, f, lambda, alpha, opts)?;
        let u1 = knots.last().expect("non-empty").u;
        Ok((knots, u1))
    };
    let solution = |alpha: f64, profile: Vec<Knot>, u1: f64| RadialSolution {
        n,
        lambda,
        f: f.clone(),
        alpha,
        boundary_residual: u1.abs(),
        profile,
        options: opts,
    };
    let (mut lo, mut hi) = bracket;
    let (p_lo, mut u_lo) = end(lo)?;
    if u_lo.abs() < BOUNDARY_TOL {
        return Ok(solution(lo, p_lo, u_lo));
    }
    let (p_hi, u_hi) = end(hi)?;
    if u_hi.abs() < BOUNDARY_TOL {
        return Ok(solution(hi, p_hi, u_hi));
    }
    if u_lo.signum() == u_hi.signum() {
        return Err(Error::NoSignChange(lo, hi));
    }
    let mut best = (hi, p_hi, u_hi);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let (p, u) = end(mid)?;
        if u.abs() < best.2.abs() {
            best = (mid, p, u);
        }
        if u.abs() < BOUNDARY_TOL || hi - lo <= 4.0 * f64::EPSILON * mid.abs() {
            break;
        }
        if u.signum() == u_lo.signum() {
            lo = mid;
            u_lo = u;
        } else {
            hi = mid;
        }
    }
    Ok(solution(best.0, best.1, best.2))
}

/// First radial Dirichlet eigenpair of `−Δ` for the linear nonlinearity:
/// bisection on `λ` with `u(0) = α` fixed.
pub fn radial_eigenpair(n: usize, alpha: f64, lambda_bracket: (f64, f64), opts: OdeOptions) -> Result<RadialSolution> {
    let f = Nonlinearity::linear();
    let (mut lo, mut hi) = lambda_bracket;
    check_problem(n, &f, lo)?;
    let end = |lambda: f64| -> Result<(Vec<Knot>, f64)> {
        let knots = shoot(n, &f, lambda, alpha, opts)?;
        let u1 = knots.last().expect("non-empty").u;
        Ok((knots, u1))
    };
    let (_, mut u_lo) = end(lo)?;
    let (_, u_hi) = end(hi)?;
    if u_lo.signum() == u_hi.signum() {
        return Err(Error::NoSignChange(lo, hi));
    }
    let mut last = None;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let (p, u) = end(mid)?;
        let done = u.abs() < BOUNDARY_TOL * alpha.abs() || hi - lo <= 4.0 * f64::EPSILON * mid;
        if u.signum() == u_lo.signum() {
            lo = mid;
            u_lo = u;
        } else {
            hi = mid;
        }
        last = Some((mid, p, u));
        if done {
            break;
        }
    }
    let (lambda, profile, u1) = last.expect("at least one bisection");
    Ok(RadialSolution { n, lambda, f, alpha, boundary_residual: u1.abs(), profile, options: opts })
}

fn check_problem(n: usize, f: &Nonlinearity, lambda: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidParams("dimension must be positive".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParams(format!("λ must be positive, got {lambda}")));
    }
    f.check()
}

/// `λ n ∫ F(u) + ((2−n)/2) λ ∫ f(u) u = ½ ∫_∂ (x·ν)(∂_ν u)²` on the unit
/// ball, where `x·ν = 1`.
pub fn pohozaev_check(sol: &RadialSolution, tol: f64) -> IdentityReport {
    let n = sol.n as f64;
    let f = &sol.f;
    let potential = sol.lambda * n * sol.radial_integral(|_, u, _| f.primitive(u));
    let work = sol.lambda * (2.0 - n) / 2.0 * sol.radial_integral(|_, u, _| f.f(u) * u);
    let rhs = 0.5 * sphere_volume(sol.n - 1) * sol.boundary_slope().powi(2);
    let record = LevelRecord { level: 0, lhs: potential + work, rhs, scale: potential.abs() + work.abs() };
    IdentityReport::from_history(&format!("pohozaev[n={}, f={}, λ={}]", sol.n, f.label(), sol.lambda), vec![record], tol, None)
}

/// `n/(p+1) + (2−n)/2`, the coefficient of `λ ∫ u^{p+1}` in the Pohozaev
/// identity for `f(u) = u^p`. Nonpositive values rule out positive
/// solutions; it vanishes at the critical exponent `p = (n+2)/(n−2)`.
pub fn critical_coefficient(n: usize, p: f64) -> f64 {
    let n = n as f64;
    n / (p + 1.0) + (2.0 - n) / 2.0
}

#[cfg(test)]
mod tests;
