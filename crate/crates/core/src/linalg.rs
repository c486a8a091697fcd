//! Small dense helpers on row-major `n×n` matrices of `f64`.

/// Cholesky factor test: true when `m` is symmetric positive definite.
pub fn is_positive_definite(m: &[f64], n: usize) -> bool {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return false;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    true
}

/// Inverse by Gauss-Jordan with partial pivoting. Returns `None` when singular.
pub fn inverse(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut a = m.to_vec();
    let mut inv = identity(n);
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))?;
        if a[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
                inv.swap(pivot * n + k, col * n + k);
            }
        }
        let p = 1.0 / a[col * n + col];
        for k in 0..n {
            a[col * n + k] *= p;
            inv[col * n + k] *= p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * n + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                a[row * n + k] -= f * a[col * n + k];
                inv[row * n + k] -= f * inv[col * n + k];
            }
        }
    }
    Some(inv)
}

pub fn determinant(m: &[f64], n: usize) -> f64 {
    let mut a = m.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs())).unwrap_or(col);
        if a[pivot * n + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        det *= a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
        }
    }
    det
}

pub fn identity(n: usize) -> Vec<f64> {
    (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect()
}

/// `A^{ab} = ginv^{ac} ginv^{bd} T_cd`.
pub fn raise_both(t: &[f64], ginv: &[f64], n: usize) -> Vec<f64> {
    let mut half = vec![0.0; n * n];
    for a in 0..n {
        for d in 0..n {
            half[a * n + d] = (0..n).map(|c| ginv[a * n + c] * t[c * n + d]).sum();
        }
    }
    let mut out = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            out[a * n + b] = (0..n).map(|d| half[a * n + d] * ginv[d * n + b]).sum();
        }
    }
    out
}

/// Full contraction `S_ab T_cd g^ac g^bd`.
pub fn inner(s: &[f64], t: &[f64], ginv: &[f64], n: usize) -> f64 {
    let up = raise_both(t, ginv, n);
    s.iter().zip(&up).map(|(a, b)| a * b).sum()
}

pub fn trace(t: &[f64], ginv: &[f64], n: usize) -> f64 {
    (0..n * n).map(|k| ginv[k] * t[k]).sum()
}

/// Trace-free part `T − (1/n) tr_g(T) g`.
pub fn trace_free(t: &[f64], g: &[f64], ginv: &[f64], n: usize) -> Vec<f64> {
    let tr = trace(t, ginv, n);
    t.iter().zip(g).map(|(a, b)| a - tr * b / n as f64).collect()
}

/// `T(X, Y)` for a bilinear form `t`.
pub fn bilinear(t: &[f64], x: &[f64], y: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for a in 0..n {
        for b in 0..n {
            s += t[a * n + b] * x[a] * y[b];
        }
    }
    s
}

pub fn mat_vec(m: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|a| (0..n).map(|b| m[a * n + b] * v[b]).sum()).collect()
}
