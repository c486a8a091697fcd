use crate::error::{Error, Result};
use crate::jet::Jet;

use super::CurvatureSuite;

/// `M^a_b = g^ac T_cb`.
fn mixed(t: &[Jet], ginv: &[Jet], n: usize) -> Vec<Jet> {
    let order = t[0].order().min(ginv[0].order());
    let mut m = vec![Jet::zero(n, order); n * n];
    for a in 0..n {
        for b in 0..n {
            let mut s = Jet::zero(n, order);
            for c in 0..n {
                s.add_product(&ginv[a * n + c], &t[c * n + b]);
            }
            m[a * n + b] = s;
        }
    }
    m
}

/// `T_ab T^ab` for a symmetric 2-tensor.
pub(crate) fn sym_norm_sq(t: &[Jet], ginv: &[Jet], n: usize) -> Jet {
    let m = mixed(t, ginv, n);
    let mut s = Jet::zero(n, m[0].order());
    for a in 0..n {
        for b in 0..n {
            s.add_product(&m[a * n + b], &m[b * n + a]);
        }
    }
    s
}

/// Raises index `pos` of a 4-tensor.
fn raise4(t: &[Jet], ginv: &[Jet], n: usize, pos: usize) -> Vec<Jet> {
    let order = t[0].order().min(ginv[0].order());
    let stride = n.pow(3 - pos as u32);
    let mut out = vec![Jet::zero(n, order); t.len()];
    for (flat, slot) in out.iter_mut().enumerate() {
        let i = (flat / stride) % n;
        let base = flat - i * stride;
        let mut s = Jet::zero(n, order);
        for e in 0..n {
            s.add_product(&ginv[i * n + e], &t[base + e * stride]);
        }
        *slot = s;
    }
    out
}

/// `V_ab = T_a^{cde} T_bcde` for a 4-tensor `T`.
fn quartic_contraction(t: &[Jet], ginv: &[Jet], n: usize) -> Vec<Jet> {
    let mut up = t.to_vec();
    for pos in 1..4 {
        up = raise4(&up, ginv, n, pos);
    }
    let block = n * n * n;
    let order = up[0].order();
    let mut v = vec![Jet::zero(n, order); n * n];
    for a in 0..n {
        for b in a..n {
            let mut s = Jet::zero(n, order);
            for k in 0..block {
                s.add_product(&up[a * block + k], &t[b * block + k]);
            }
            v[b * n + a] = s.clone();
            v[a * n + b] = s;
        }
    }
    v
}

fn trace(t: &[Jet], ginv: &[Jet], n: usize) -> Jet {
    let mut s = Jet::zero(n, t[0].order().min(ginv[0].order()));
    for k in 0..n * n {
        s.add_product(&ginv[k], &t[k]);
    }
    s
}

pub fn ricci_norm_sq(s: &CurvatureSuite) -> Jet {
    sym_norm_sq(&s.ric, &s.ginv, s.n)
}

pub fn schouten_norm_sq(s: &CurvatureSuite) -> Jet {
    sym_norm_sq(s.schouten(), &s.ginv, s.n)
}

/// `R_abcd R^abcd`.
pub fn riemann_norm_sq(s: &CurvatureSuite) -> Jet {
    trace(&quartic_contraction(s.riemann(), &s.ginv, s.n), &s.ginv, s.n)
}

/// `W_abcd W^abcd`; identically zero in dimension below 4.
pub fn weyl_norm_sq(s: &CurvatureSuite) -> Jet {
    let w = s.weyl();
    trace(&quartic_contraction(&w, &s.ginv, s.n), &s.ginv, s.n)
}

/// Elementary symmetric functions of the eigenvalues of `g^{-1}P`:
/// `σ₁ = J`, `σ₂ = ½(J² − |P|²)`.
pub fn sigma_k(s: &CurvatureSuite, k: usize) -> Result<Jet> {
    let p = s.schouten();
    match k {
        1 => Ok(s.j.clone()),
        2 => Ok((&s.j * &s.j - sym_norm_sq(p, &s.ginv, s.n)).scale(0.5)),
        _ => Err(Error::InvalidParams(format!("sigma_k supports k ∈ {{1, 2}}, got {k}"))),
    }
}

/// Gauss-Bonnet curvature `S^(2k)`, normalized so that `S^(2) = Sc`;
/// `S^(4) = Sc² − 4|Ric|² + |Riem|²`.
pub fn gauss_bonnet_s2k(s: &CurvatureSuite, k: usize) -> Result<Jet> {
    if 2 * k > s.n {
        return Err(Error::Precondition(format!("S^(2k) needs 2k ≤ n, got k = {k}, n = {}", s.n)));
    }
    match k {
        1 => Ok(s.sc.clone()),
        2 => Ok(&s.sc * &s.sc - ricci_norm_sq(s).scale(4.0) + riemann_norm_sq(s)),
        _ => Err(Error::InvalidParams(format!("S^(2k) supports k ∈ {{1, 2}}, got {k}"))),
    }
}

/// `R_ab^cd` values at `((a·n + b)·n + c)·n + d`.
fn riemann_mixed_values(s: &CurvatureSuite) -> Vec<f64> {
    let n = s.n;
    let r: Vec<f64> = s.riemann().iter().map(Jet::value).collect();
    let ginv: Vec<f64> = s.ginv.iter().map(Jet::value).collect();
    let mut out = vec![0.0; n.pow(4)];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut acc = 0.0;
                    for e in 0..n {
                        for f in 0..n {
                            acc += r[((a * n + b) * n + e) * n + f] * ginv[e * n + c] * ginv[f * n + d];
                        }
                    }
                    out[((a * n + b) * n + c) * n + d] = acc;
                }
            }
        }
    }
    out
}

fn permutations(m: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut perms = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; m], &mut perms);
    perms
        .into_iter()
        .map(|p| {
            let mut inversions = 0;
            for i in 0..m {
                for j in i + 1..m {
                    if p[i] > p[j] {
                        inversions += 1;
                    }
                }
            }
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            (p, sign)
        })
        .collect()
}

/// Value of `S^(2k)` from the generalized Kronecker delta written as a sum
/// over permutations: `2^{-k} Σ_I Σ_σ sgn σ Π_m R_{I(2m)I(2m+1)}^{I(σ(2m))I(σ(2m+1))}`
/// over index tuples `I` with distinct entries.
pub fn gauss_bonnet_determinant(s: &CurvatureSuite, k: usize) -> Result<f64> {
    if 2 * k > s.n || k == 0 || k > 2 {
        return Err(Error::Precondition(format!("determinant expansion needs k ∈ {{1, 2}}, 2k ≤ n (k = {k})")));
    }
    let n = s.n;
    let rm = riemann_mixed_values(s);
    let r = |a: usize, b: usize, c: usize, d: usize| rm[((a * n + b) * n + c) * n + d];
    let m = 2 * k;
    let perms = permutations(m);
    let mut total = 0.0;
    let mut idx = vec![0usize; m];
    loop {
        let distinct = (0..m).all(|i| (i + 1..m).all(|j| idx[i] != idx[j]));
        if distinct {
            for (p, sign) in &perms {
                let mut term = *sign;
                for pair in 0..k {
                    let (a, b) = (idx[2 * pair], idx[2 * pair + 1]);
                    let (c, d) = (idx[p[2 * pair]], idx[p[2 * pair + 1]]);
                    term *= r(a, b, c, d);
                }
                total += term;
            }
        }
        let mut pos = 0;
        loop {
            if pos == m {
                return Ok(total / 2f64.powi(k as i32));
            }
            idx[pos] += 1;
            if idx[pos] < n {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// `Q₄ = (n/2) J² − 2|P|² − ΔJ`; needs curvature jets of order ≥ 2.
pub fn q4(s: &CurvatureSuite) -> Result<Jet> {
    let n = s.n;
    if s.order < 2 {
        return Err(Error::Precondition("Q4 needs a metric jet of order ≥ 4".into()));
    }
    let p = s.schouten();
    let order = s.order - 2;
    let dj: Vec<Jet> = (0..n).map(|c| s.j.derivative(c)).collect();
    let mut lap = Jet::zero(n, order);
    for a in 0..n {
        for b in 0..n {
            let mut hess = dj[a].derivative(b);
            for (c, djc) in dj.iter().enumerate() {
                hess -= &(s.gamma(c, a, b) * djc);
            }
            lap.add_product(&s.ginv[a * n + b], &hess);
        }
    }
    let quad = (&s.j * &s.j).scale(n as f64 / 2.0) - sym_norm_sq(p, &s.ginv, n).scale(2.0);
    Ok(quad - lap)
}

/// `P − J g`.
pub fn einstein_tensor(s: &CurvatureSuite) -> Vec<Jet> {
    s.schouten().iter().zip(&s.g).map(|(pij, gij)| pij - &(gij * &s.j)).collect()
}

/// Lanczos tensor `H_ab = 2(Sc R_ab − 2 R_ac R^c_b − 2 R_acbd R^cd + R_a^cde R_bcde) − ½ S^(4) g_ab`,
/// which is minus the metric gradient of `∫ S^(4) dv`.
pub fn lanczos_tensor(s: &CurvatureSuite) -> Vec<Jet> {
    let n = s.n;
    let order = s.order;
    let riem = s.riemann();
    let ric = &s.ric;
    let ric_mixed = mixed(ric, &s.ginv, n);
    // R^cd
    let mut ric_up = vec![Jet::zero(n, order); n * n];
    for c in 0..n {
        for d in 0..n {
            let mut acc = Jet::zero(n, order);
            for e in 0..n {
                acc.add_product(&ric_mixed[c * n + e], &s.ginv[e * n + d]);
            }
            ric_up[c * n + d] = acc;
        }
    }
    let v = quartic_contraction(riem, &s.ginv, n);
    let s4 = &s.sc * &s.sc - sym_norm_sq(ric, &s.ginv, n).scale(4.0) + trace(&v, &s.ginv, n);
    let mut h = vec![Jet::zero(n, order); n * n];
    for a in 0..n {
        for b in a..n {
            let mut acc = &s.sc * &ric[a * n + b];
            for c in 0..n {
                let t = (&ric[a * n + c] * &ric_mixed[c * n + b]).scale(2.0);
                acc -= &t;
                for d in 0..n {
                    let t = (&riem[((a * n + c) * n + b) * n + d] * &ric_up[c * n + d]).scale(2.0);
                    acc -= &t;
                }
            }
            acc += &v[a * n + b];
            let entry = acc.scale(2.0) - (&s.g[a * n + b] * &s4).scale(0.5);
            h[b * n + a] = entry.clone();
            h[a * n + b] = entry;
        }
    }
    h
}
