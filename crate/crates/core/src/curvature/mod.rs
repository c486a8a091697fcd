//! Curvature of a metric jet.
//!
//! Conventions: `R^a_bcd = ∂_c Γ^a_db − ∂_d Γ^a_cb + Γ^a_ce Γ^e_db − Γ^a_de Γ^e_cb`,
//! `R_abcd = g_ae R^e_bcd`, `Ric_bd = R^a_bad`, `Sc = g^bd Ric_bd`, so the unit
//! round sphere has `R_abcd = g_ac g_bd − g_ad g_bc` and `Sc = n(n−1)`. The
//! Schouten tensor is `P = (Ric − J g)/(n−2)` with `J = Sc/(2(n−1))`; in
//! dimension 2, where that quotient is undefined, `P = (J/2) g`. The
//! Laplacian is `Δ = g^ab ∇_a ∇_b`, whose spectrum is non-positive.
//!
//! Every quantity is a jet: a metric jet of order `K` yields curvature jets
//! of order `K − 2`, so derivatives of curvature come from the same code path.

mod fields;
mod operators;
mod quantities;

use std::sync::OnceLock;

pub use fields::{CurvatureScalar, CurvatureTensor, Divergence, LieDerivative, ScalarKind, TensorKind, TraceOf, Weighted};
pub use operators::{
    christoffel, conformal_killing_residual, cov_divergence, cov_divergence_fd, divergence, divergence_jet, killing_residual,
    lie_metric, lie_metric_covariant, lie_metric_jets, lie_scalar, lie_scalar_fd, norm_sq, trace_free_part, DivergenceMethod,
};
pub use quantities::{
    einstein_tensor, gauss_bonnet_determinant, gauss_bonnet_s2k, lanczos_tensor, q4, ricci_norm_sq, riemann_norm_sq,
    schouten_norm_sq, sigma_k, weyl_norm_sq,
};

use crate::error::{Error, Result};
use crate::geometry::MetricJet;
use crate::jet::{self, Jet};

/// Curvature quantities at one point, as jets.
pub struct CurvatureSuite {
    pub n: usize,
    /// Order of the curvature jets (metric order minus two).
    pub order: usize,
    /// Metric and inverse metric truncated at `order`.
    pub g: Vec<Jet>,
    pub ginv: Vec<Jet>,
    /// `Γ^a_bc` at `(a·n + b)·n + c`, order `order + 1`.
    pub gamma: Vec<Jet>,
    pub ric: Vec<Jet>,
    pub sc: Jet,
    pub j: Jet,
    pub schouten: Vec<Jet>,
    riemann: OnceLock<Vec<Jet>>,
}

impl std::fmt::Debug for CurvatureSuite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CurvatureSuite").field("n", &self.n).field("order", &self.order).field("sc", &self.sc.value()).finish()
    }
}

/// Builds the curvature suite of a metric jet of order at least 2.
pub fn curvature_suite(mj: &MetricJet) -> Result<CurvatureSuite> {
    if mj.order < 2 {
        return Err(Error::Precondition(format!("curvature needs a metric jet of order ≥ 2, got {}", mj.order)));
    }
    let n = mj.dim();
    let order = mj.order - 2;
    let ginv_full = jet::inverse(&mj.g, n);
    let gamma = christoffel(&mj.g, &ginv_full, n);
    let ginv: Vec<Jet> = ginv_full.iter().map(|x| x.truncate(order)).collect();
    let g: Vec<Jet> = mj.g.iter().map(|x| x.truncate(order)).collect();

    let idx = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
    // tr[b] = Γ^a_ab
    let tr: Vec<Jet> = (0..n)
        .map(|b| {
            let mut s = Jet::zero(n, order + 1);
            for a in 0..n {
                s += &gamma[idx(a, a, b)];
            }
            s
        })
        .collect();
    let mut ric = vec![Jet::zero(n, order); n * n];
    for b in 0..n {
        for d in b..n {
            let mut s = tr[b].derivative(d).scale(-1.0);
            for a in 0..n {
                s += &gamma[idx(a, d, b)].derivative(a);
            }
            for e in 0..n {
                s.add_product(&tr[e], &gamma[idx(e, d, b)]);
                for a in 0..n {
                    let prod = &gamma[idx(a, d, e)] * &gamma[idx(e, a, b)];
                    s -= &prod;
                }
            }
            ric[d * n + b] = s.clone();
            ric[b * n + d] = s;
        }
    }
    let mut sc = Jet::zero(n, order);
    for k in 0..n * n {
        sc.add_product(&ginv[k], &ric[k]);
    }
    let j = sc.scale(1.0 / (2.0 * (n as f64 - 1.0)));
    let schouten = if n >= 3 {
        ric.iter().zip(&g).map(|(r, gij)| (r - &(gij * &j)).scale(1.0 / (n as f64 - 2.0))).collect()
    } else {
        g.iter().map(|gij| (gij * &j).scale(0.5)).collect()
    };
    Ok(CurvatureSuite { n, order, g, ginv, gamma, ric, sc, j, schouten, riemann: OnceLock::new() })
}

impl CurvatureSuite {
    pub fn gamma(&self, a: usize, b: usize, c: usize) -> &Jet {
        &self.gamma[(a * self.n + b) * self.n + c]
    }

    /// Fully covariant `R_abcd` at `((a·n + b)·n + c)·n + d`, built on first use.
    pub fn riemann(&self) -> &[Jet] {
        self.riemann.get_or_init(|| {
            let n = self.n;
            let order = self.order;
            let mut up = vec![Jet::zero(n, order); n * n * n * n];
            let at = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in c + 1..n {
                            let mut s = self.gamma(a, d, b).derivative(c) - self.gamma(a, c, b).derivative(d);
                            for e in 0..n {
                                s.add_product(self.gamma(a, c, e), self.gamma(e, d, b));
                                let prod = self.gamma(a, d, e) * self.gamma(e, c, b);
                                s -= &prod;
                            }
                            up[at(a, b, d, c)] = -&s;
                            up[at(a, b, c, d)] = s;
                        }
                    }
                }
            }
            let mut down = vec![Jet::zero(n, order); n * n * n * n];
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in c + 1..n {
                            let mut s = Jet::zero(n, order);
                            for e in 0..n {
                                s.add_product(&self.g[a * n + e], &up[at(e, b, c, d)]);
                            }
                            down[at(a, b, d, c)] = -&s;
                            down[at(a, b, c, d)] = s;
                        }
                    }
                }
            }
            down
        })
    }

    pub fn schouten(&self) -> &[Jet] {
        &self.schouten
    }

    /// Weyl tensor `W = R − P ⊙ g` (Kulkarni-Nomizu product).
    pub fn weyl(&self) -> Vec<Jet> {
        let n = self.n;
        let r = self.riemann();
        let p = &self.schouten;
        let g = &self.g;
        let mut w = Vec::with_capacity(r.len());
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut s = r[((a * n + b) * n + c) * n + d].clone();
                        s -= &(&p[a * n + c] * &g[b * n + d]);
                        s -= &(&p[b * n + d] * &g[a * n + c]);
                        s += &(&p[a * n + d] * &g[b * n + c]);
                        s += &(&p[b * n + c] * &g[a * n + d]);
                        w.push(s);
                    }
                }
            }
        }
        w
    }

    pub fn values(jets: &[Jet]) -> Vec<f64> {
        jets.iter().map(Jet::value).collect()
    }
}

#[cfg(test)]
mod tests;
