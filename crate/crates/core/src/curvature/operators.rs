use crate::error::{Error, Result};
use crate::geometry::{Chart, MetricJet, ScalarField, SymTensorField, VectorField, VectorFieldSpec};
use crate::jet::{self, Jet};
use crate::linalg;

/// `Γ^a_bc` at `(a·n + b)·n + c` from metric jets of order `K`; the result has order `K − 1`.
pub fn christoffel(g: &[Jet], ginv: &[Jet], n: usize) -> Vec<Jet> {
    let order = g[0].order() - 1;
    let dg: Vec<Vec<Jet>> = (0..n).map(|k| g.iter().map(|x| x.derivative(k)).collect()).collect();
    // Γ_dbc = ½(∂_b g_dc + ∂_c g_db − ∂_d g_bc)
    let mut lower = vec![Jet::zero(n, order); n * n * n];
    for d in 0..n {
        for b in 0..n {
            for c in b..n {
                let s = (&dg[b][d * n + c] + &dg[c][d * n + b] - &dg[d][b * n + c]).scale(0.5);
                lower[(d * n + c) * n + b] = s.clone();
                lower[(d * n + b) * n + c] = s;
            }
        }
    }
    let mut gamma = vec![Jet::zero(n, order); n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in b..n {
                let mut s = Jet::zero(n, order);
                for d in 0..n {
                    s.add_product(&ginv[a * n + d], &lower[(d * n + b) * n + c]);
                }
                gamma[(a * n + c) * n + b] = s.clone();
                gamma[(a * n + b) * n + c] = s;
            }
        }
    }
    gamma
}

fn gamma_values(chart: &Chart, p: &[f64]) -> Result<(MetricJet, Vec<f64>, Vec<f64>)> {
    let mj = chart.metric_jet(p, 1)?;
    let n = chart.dim;
    let ginv = jet::inverse(&mj.g, n);
    let gamma = christoffel(&mj.g, &ginv, n);
    let ginv_v = ginv.iter().map(Jet::value).collect();
    Ok((mj, ginv_v, gamma.iter().map(Jet::value).collect()))
}

/// How derivatives of a tensor field are obtained for the divergence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DivergenceMethod {
    /// From the field's first-order jets.
    Analytic,
    /// Fourth-order central differences of pointwise values with this step.
    FiniteDifference(f64),
}

fn divergence_from(n: usize, ginv: &[f64], gamma: &[f64], b: &[f64], db: &[Vec<f64>]) -> Vec<f64> {
    // ∇^a B_ab = g^ac (∂_c B_ab − Γ^d_ca B_db − Γ^d_cb B_ad)
    let gm = |a: usize, b: usize, c: usize| gamma[(a * n + b) * n + c];
    (0..n)
        .map(|bi| {
            let mut s = 0.0;
            for a in 0..n {
                for c in 0..n {
                    let mut cov = db[c][a * n + bi];
                    for d in 0..n {
                        cov -= gm(d, c, a) * b[d * n + bi] + gm(d, c, bi) * b[a * n + d];
                    }
                    s += ginv[a * n + c] * cov;
                }
            }
            s
        })
        .collect()
}

/// Covariant divergence `∇^a B_ab` at `p`, in chart components.
pub fn cov_divergence(b: &dyn SymTensorField, chart: &Chart, p: &[f64], method: DivergenceMethod) -> Result<Vec<f64>> {
    match method {
        DivergenceMethod::Analytic => {
            let n = chart.dim;
            let (_, ginv, gamma) = gamma_values(chart, p)?;
            let bj = b.jet(chart, p, 1)?;
            let vals: Vec<f64> = bj.iter().map(Jet::value).collect();
            let db: Vec<Vec<f64>> = (0..n).map(|c| bj.iter().map(|x| x.partial(&[c])).collect()).collect();
            Ok(divergence_from(n, &ginv, &gamma, &vals, &db))
        }
        DivergenceMethod::FiniteDifference(h) => cov_divergence_fd(b, chart, p, h),
    }
}

/// [`cov_divergence`] with derivatives of `B` by fourth-order central differences.
pub fn cov_divergence_fd(b: &dyn SymTensorField, chart: &Chart, p: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = chart.dim;
    for (k, &(lo, hi)) in chart.domain.iter().enumerate() {
        if p[k] - 2.0 * h <= lo || p[k] + 2.0 * h >= hi {
            return Err(Error::Precondition(format!("stencil at {p:?} leaves the chart domain along axis {k}")));
        }
    }
    let (_, ginv, gamma) = gamma_values(chart, p)?;
    let vals = b.values(chart, p)?;
    let mut db = Vec::with_capacity(n);
    for c in 0..n {
        let at = |s: f64| {
            let mut q = p.to_vec();
            q[c] += s * h;
            b.values(chart, &q)
        };
        let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
        db.push((0..n * n).map(|k| (-p2[k] + 8.0 * p1[k] - 8.0 * m1[k] + m2[k]) / (12.0 * h)).collect());
    }
    Ok(divergence_from(n, &ginv, &gamma, &vals, &db))
}

/// `g^ab v_a v_b` for a covector.
pub fn norm_sq(v: &[f64], ginv: &[f64]) -> f64 {
    let n = v.len();
    linalg::bilinear(ginv, v, v, n)
}

/// `ℒ_X g` by the coordinate formula `X^c ∂_c g_ab + g_cb ∂_a X^c + g_ac ∂_b X^c`, as jets of order `K − 1`
/// from a metric jet of order `K ≥ 1` and a field jet of order `K`.
pub fn lie_metric_jets(x: &[Jet], g: &[Jet], n: usize) -> Vec<Jet> {
    let order = g[0].order().min(x[0].order()) - 1;
    let dx: Vec<Vec<Jet>> = x.iter().map(|c| (0..n).map(|a| c.derivative(a)).collect()).collect();
    let mut out = vec![Jet::zero(n, order); n * n];
    for a in 0..n {
        for b in a..n {
            let mut s = Jet::zero(n, order);
            for c in 0..n {
                s.add_product(&x[c], &g[a * n + b].derivative(c));
                s.add_product(&g[c * n + b], &dx[c][a]);
                s.add_product(&g[a * n + c], &dx[c][b]);
            }
            out[b * n + a] = s.clone();
            out[a * n + b] = s;
        }
    }
    out
}

/// Values of `ℒ_X g` at the point of `mj` (coordinate formula).
pub fn lie_metric(x: &VectorFieldSpec, mj: &MetricJet) -> Vec<f64> {
    let n = mj.dim();
    let xj = x.jets(&mj.point, 1);
    let g: Vec<Jet> = mj.g.iter().map(|c| c.truncate(1)).collect();
    lie_metric_jets(&xj, &g, n).iter().map(Jet::value).collect()
}

/// Values of `2∇_(a X_b) = ∂_a X_b + ∂_b X_a − 2Γ^c_ab X_c`.
pub fn lie_metric_covariant(x: &VectorFieldSpec, mj: &MetricJet) -> Vec<f64> {
    let n = mj.dim();
    let xj = x.jets(&mj.point, 1);
    let g: Vec<Jet> = mj.g.iter().map(|c| c.truncate(1)).collect();
    let ginv = jet::inverse(&g, n);
    let gamma = christoffel(&g, &ginv, n);
    let lowered: Vec<Jet> = (0..n)
        .map(|b| {
            let mut s = Jet::zero(n, 1);
            for c in 0..n {
                s.add_product(&g[b * n + c], &xj[c]);
            }
            s
        })
        .collect();
    let mut out = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let mut v = lowered[b].partial(&[a]) + lowered[a].partial(&[b]);
            for c in 0..n {
                v -= 2.0 * gamma[(c * n + a) * n + b].value() * lowered[c].value();
            }
            out[a * n + b] = v;
        }
    }
    out
}

/// `div X = ∂_a X^a + X^a ∂_a log √det g` as a jet of order `K − 1`.
pub fn divergence_jet(x: &[Jet], g: &[Jet], n: usize) -> Jet {
    let order = g[0].order().min(x[0].order()) - 1;
    let log_vol = jet::determinant(g, n).ln().scale(0.5);
    let mut s = Jet::zero(n, order);
    for a in 0..n {
        s += &x[a].derivative(a);
        s.add_product(&x[a], &log_vol.derivative(a));
    }
    s
}

pub fn divergence(x: &dyn VectorField, chart: &Chart, p: &[f64]) -> Result<f64> {
    let mj = chart.metric_jet(p, 1)?;
    let xj = x.jet(chart, p, 1)?;
    Ok(divergence_jet(&xj, &mj.g, chart.dim).value())
}

fn lie_tensor_norm(x: &VectorFieldSpec, chart: &Chart, p: &[f64], conformal_part: bool) -> Result<(f64, f64)> {
    let n = chart.dim;
    let mj = chart.metric_jet(p, 1)?;
    let xj = x.jets(p, 1);
    let lie = lie_metric_jets(&xj, &mj.g, n);
    let div = divergence_jet(&xj, &mj.g, n).value();
    let g = mj.values();
    let ginv = mj.inverse_values();
    let t: Vec<f64> =
        lie.iter().zip(&g).map(|(l, gij)| l.value() - if conformal_part { 2.0 / n as f64 * div * gij } else { 0.0 }).collect();
    Ok((linalg::inner(&t, &t, &ginv, n).max(0.0).sqrt(), div))
}

/// `sup |ℒ_X g − (2/n)(div X) g|_g` over the sample points.
pub fn conformal_killing_residual(x: &VectorFieldSpec, chart: &Chart, samples: &[Vec<f64>]) -> Result<f64> {
    samples.iter().try_fold(0.0f64, |m, p| Ok(m.max(lie_tensor_norm(x, chart, p, true)?.0)))
}

/// `sup |ℒ_X g|_g` over the sample points; zero exactly for Killing fields.
pub fn killing_residual(x: &VectorFieldSpec, chart: &Chart, samples: &[Vec<f64>]) -> Result<f64> {
    samples.iter().try_fold(0.0f64, |m, p| Ok(m.max(lie_tensor_norm(x, chart, p, false)?.0)))
}

/// `X^a ∂_a V` at `p`, with `∂V` from the field's first-order jet.
pub fn lie_scalar(x: &dyn VectorField, v: &dyn ScalarField, chart: &Chart, p: &[f64]) -> Result<f64> {
    let vj = v.jet(chart, p, 1)?;
    let xv = x.values(chart, p)?;
    Ok(xv.iter().enumerate().map(|(a, xa)| xa * vj.partial(&[a])).sum())
}

/// `X^a ∂_a V` with `∂V` by fourth-order central differences of values.
pub fn lie_scalar_fd(x: &dyn VectorField, v: &dyn ScalarField, chart: &Chart, p: &[f64], h: f64) -> Result<f64> {
    let xv = x.values(chart, p)?;
    let mut s = 0.0;
    for (a, xa) in xv.iter().enumerate() {
        let at = |t: f64| {
            let mut q = p.to_vec();
            q[a] += t * h;
            v.value(chart, &q)
        };
        let d = (-at(2.0)? + 8.0 * at(1.0)? - 8.0 * at(-1.0)? + at(-2.0)?) / (12.0 * h);
        s += xa * d;
    }
    Ok(s)
}

/// `B° = B − (1/n) g tr_g B`.
pub fn trace_free_part(b: &[f64], g: &[f64]) -> Vec<f64> {
    let n = (g.len() as f64).sqrt().round() as usize;
    let ginv = linalg::inverse(g, n).expect("metric is invertible");
    linalg::trace_free(b, g, &ginv, n)
}
