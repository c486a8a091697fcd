//! Truncated multivariate Taylor series.
//!
//! A [`Jet`] holds the Taylor coefficients of a function of `vars`
//! variables about a base point, up to a total degree `order`. Arithmetic
//! on jets is exact truncated-series arithmetic, so composing analytic
//! expressions on jets yields every partial derivative of the result up to
//! `order` without any finite differencing.
//!
//! Coefficients are stored in graded order (all degree-0 monomials, then
//! degree 1, ...). Because of that, the coefficients of a lower-order
//! truncation are a prefix of the full coefficient vector, which lets a
//! single monomial table per variable count serve every order.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

/// Largest number of variables a jet may depend on.
pub const MAX_VARS: usize = 6;
/// Largest truncation order.
pub const MAX_ORDER: usize = 7;

type Exponents = [u8; MAX_VARS];

struct Basis {
    exps: Vec<Exponents>,
    /// Number of monomials of total degree <= d.
    count_upto: Vec<usize>,
    /// (i, j, k) with monomial_i * monomial_j = monomial_k, sorted by degree of k.
    products: Vec<(u16, u16, u16)>,
    /// Number of product triples whose output has degree <= d.
    products_upto: Vec<usize>,
    /// Per variable: (src, dst, factor), sorted by degree of src.
    derivs: Vec<Vec<(u16, u16, f64)>>,
    derivs_upto: Vec<Vec<usize>>,
}

fn monomials(vars: usize) -> Vec<Exponents> {
    let mut out = Vec::new();
    for d in 0..=MAX_ORDER {
        let mut cur = [0u8; MAX_VARS];
        fill_degree(vars, 0, d, &mut cur, &mut out);
    }
    out
}

fn fill_degree(vars: usize, slot: usize, remaining: usize, cur: &mut Exponents, out: &mut Vec<Exponents>) {
    if vars == 0 {
        if remaining == 0 {
            out.push(*cur);
        }
        return;
    }
    if slot == vars - 1 {
        cur[slot] = remaining as u8;
        out.push(*cur);
        cur[slot] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        cur[slot] = e as u8;
        fill_degree(vars, slot + 1, remaining - e, cur, out);
    }
    cur[slot] = 0;
}

impl Basis {
    fn build(vars: usize) -> Self {
        let exps = monomials(vars);
        let degree: Vec<u8> = exps.iter().map(|e| e.iter().sum()).collect();
        let mut count_upto = vec![0; MAX_ORDER + 1];
        for d in 0..=MAX_ORDER {
            count_upto[d] = degree.iter().filter(|&&x| x as usize <= d).count();
        }
        let index: std::collections::HashMap<Exponents, usize> = exps.iter().enumerate().map(|(i, e)| (*e, i)).collect();

        let mut products = Vec::new();
        for (i, ei) in exps.iter().enumerate() {
            for (j, ej) in exps.iter().enumerate() {
                if degree[i] as usize + degree[j] as usize > MAX_ORDER {
                    continue;
                }
                let mut ek = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    ek[v] = ei[v] + ej[v];
                }
                products.push((i as u16, j as u16, index[&ek] as u16));
            }
        }
        products.sort_by_key(|&(_, _, k)| (degree[k as usize], k));
        let mut products_upto = vec![0; MAX_ORDER + 1];
        for d in 0..=MAX_ORDER {
            products_upto[d] = products.iter().filter(|t| degree[t.2 as usize] as usize <= d).count();
        }

        let mut derivs = Vec::with_capacity(vars);
        let mut derivs_upto = Vec::with_capacity(vars);
        for v in 0..vars {
            let mut table = Vec::new();
            for (src, e) in exps.iter().enumerate() {
                if e[v] == 0 {
                    continue;
                }
                let mut lowered = *e;
                lowered[v] -= 1;
                table.push((src as u16, index[&lowered] as u16, e[v] as f64));
            }
            table.sort_by_key(|&(s, _, _)| (degree[s as usize], s));
            let upto: Vec<usize> =
                (0..=MAX_ORDER).map(|d| table.iter().filter(|t| degree[t.0 as usize] as usize <= d).count()).collect();
            derivs.push(table);
            derivs_upto.push(upto);
        }

        Self { exps, count_upto, products, products_upto, derivs, derivs_upto }
    }

    fn index_of(&self, exps: &Exponents) -> Option<usize> {
        self.exps.iter().position(|e| e == exps)
    }
}

fn basis(vars: usize) -> &'static Basis {
    static BASES: [OnceLock<Basis>; MAX_VARS + 1] = [const { OnceLock::new() }; MAX_VARS + 1];
    assert!(vars <= MAX_VARS, "jets support at most {MAX_VARS} variables");
    BASES[vars].get_or_init(|| Basis::build(vars))
}

/// Number of Taylor coefficients of a jet in `vars` variables truncated at `order`.
pub fn coefficient_count(vars: usize, order: usize) -> usize {
    basis(vars).count_upto[order]
}

/// Truncated Taylor series in up to [`MAX_VARS`] variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    vars: u8,
    order: u8,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, vars: usize, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut coeffs = vec![0.0; coefficient_count(vars, order)];
        coeffs[0] = value;
        Self { vars: vars as u8, order: order as u8, coeffs }
    }

    pub fn zero(vars: usize, order: usize) -> Self {
        Self::constant(0.0, vars, order)
    }

    /// The coordinate function `x_index` expanded about `value`.
    pub fn variable(value: f64, index: usize, vars: usize, order: usize) -> Self {
        assert!(index < vars);
        let mut j = Self::constant(value, vars, order);
        if order >= 1 {
            // Degree-one monomials follow the constant, in variable order.
            j.coeffs[1 + index] = 1.0;
        }
        j
    }

    /// Coordinate jets for every variable at `point`.
    pub fn variables(point: &[f64], order: usize) -> Vec<Jet> {
        let n = point.len();
        point.iter().enumerate().map(|(i, &p)| Jet::variable(p, i, n, order)).collect()
    }

    /// A constant with the same shape as `self`.
    pub fn lift(&self, value: f64) -> Self {
        Self::constant(value, self.vars(), self.order())
    }

    pub fn vars(&self) -> usize {
        self.vars as usize
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn from_coeffs(vars: usize, order: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), coefficient_count(vars, order));
        Self { vars: vars as u8, order: order as u8, coeffs }
    }

    /// Taylor coefficient of the monomial with the given exponents.
    pub fn coeff(&self, exps: &[usize]) -> f64 {
        let mut e = [0u8; MAX_VARS];
        for (slot, &x) in e.iter_mut().zip(exps) {
            *slot = x as u8;
        }
        let deg: usize = exps.iter().sum();
        if deg > self.order() {
            return 0.0;
        }
        basis(self.vars()).index_of(&e).map_or(0.0, |i| self.coeffs[i])
    }

    /// Value at the base point of the mixed partial derivative along the
    /// listed variables (with repetition), e.g. `[0, 0, 1]` for f_xxy.
    pub fn partial(&self, along: &[usize]) -> f64 {
        let mut exps = vec![0usize; self.vars()];
        for &v in along {
            exps[v] += 1;
        }
        let factorial: f64 = exps.iter().map(|&e| (1..=e).product::<usize>() as f64).product();
        self.coeff(&exps) * factorial
    }

    pub fn gradient(&self) -> Vec<f64> {
        (0..self.vars()).map(|v| if self.order() >= 1 { self.coeffs[1 + v] } else { 0.0 }).collect()
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let len = coefficient_count(self.vars(), order);
        Jet { vars: self.vars, order: order as u8, coeffs: self.coeffs[..len].to_vec() }
    }

    /// Partial derivative along `var`; the result has order one less.
    pub fn derivative(&self, var: usize) -> Jet {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        let b = basis(self.vars());
        let out_order = self.order() - 1;
        let mut coeffs = vec![0.0; b.count_upto[out_order]];
        let table = &b.derivs[var][..b.derivs_upto[var][self.order()]];
        for &(src, dst, f) in table {
            coeffs[dst as usize] += f * self.coeffs[src as usize];
        }
        Jet { vars: self.vars, order: out_order as u8, coeffs }
    }

    /// Apply a univariate function given its derivatives at the base value:
    /// `derivs[k]` is f^(k)(self.value()).
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let k_max = self.order();
        debug_assert!(derivs.len() > k_max);
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        // Horner in delta with Taylor coefficients f^(k)/k!.
        let mut fact = 1.0;
        let mut taylor = Vec::with_capacity(k_max + 1);
        for (k, d) in derivs.iter().take(k_max + 1).enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            taylor.push(d / fact);
        }
        let mut acc = self.lift(taylor[k_max]);
        for k in (0..k_max).rev() {
            acc = &acc * &delta;
            acc.coeffs[0] += taylor[k];
        }
        acc
    }

    /// Compose with a univariate Taylor polynomial given directly by its
    /// coefficients about `self.value()`.
    pub fn compose_taylor(&self, taylor: &[f64]) -> Jet {
        let k_max = self.order().min(taylor.len().saturating_sub(1));
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut acc = self.lift(taylor[k_max]);
        for k in (0..k_max).rev() {
            acc = &acc * &delta;
            acc.coeffs[0] += taylor[k];
        }
        acc
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let mut d = Vec::with_capacity(self.order() + 1);
        let mut v = 1.0 / a;
        for k in 0..=self.order() {
            d.push(v);
            v *= -((k + 1) as f64) / a;
        }
        self.compose(&d)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.order() + 1])
    }

    pub fn ln(&self) -> Jet {
        let a = self.value();
        let mut d = vec![a.ln()];
        let mut v = 1.0 / a;
        for k in 1..=self.order() {
            d.push(v);
            v *= -(k as f64) / a;
        }
        self.compose(&d)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        self.compose(&(0..=self.order()).map(|k| cycle[k % 4]).collect::<Vec<_>>())
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        self.compose(&(0..=self.order()).map(|k| cycle[k % 4]).collect::<Vec<_>>())
    }

    pub fn tanh(&self) -> Jet {
        // tanh' = 1 - tanh^2; derivatives follow from the polynomial recursion in T.
        let t = self.value().tanh();
        let mut poly = vec![0.0, 1.0];
        let mut d = Vec::with_capacity(self.order() + 1);
        for _ in 0..=self.order() {
            d.push(poly.iter().rev().fold(0.0, |acc, c| acc * t + c));
            // d/dx p(T) = p'(T)(1 - T^2)
            let mut next = vec![0.0; poly.len() + 1];
            for (i, c) in poly.iter().enumerate().skip(1) {
                let dc = c * i as f64;
                next[i - 1] += dc;
                next[i + 1] -= dc;
            }
            poly = next;
        }
        self.compose(&d)
    }

    pub fn powf(&self, r: f64) -> Jet {
        let a = self.value();
        let mut d = Vec::with_capacity(self.order() + 1);
        let mut coef = 1.0;
        for k in 0..=self.order() {
            d.push(coef * a.powf(r - k as f64));
            coef *= r - k as f64;
        }
        self.compose(&d)
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn powi(&self, n: u32) -> Jet {
        let mut acc = self.lift(1.0);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { vars: self.vars, order: self.order, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// `self += a * b`, truncated to the lowest order involved.
    pub fn add_product(&mut self, a: &Jet, b: &Jet) {
        let order = self.order().min(a.order()).min(b.order());
        if order < self.order() {
            *self = self.truncate(order);
        }
        let vars = self.vars();
        mul_into(&mut self.coeffs, a, b, vars, order);
    }

    /// Univariate antiderivative in variable 0 vanishing at the base point,
    /// raising the order by one. Only meaningful for single-variable jets.
    pub fn integrate_univariate(&self) -> Jet {
        assert_eq!(self.vars(), 1);
        let order = (self.order() + 1).min(MAX_ORDER);
        let mut coeffs = vec![0.0; order + 1];
        for k in 0..order {
            coeffs[k + 1] = self.coeffs[k] / (k + 1) as f64;
        }
        Jet::from_coeffs(1, order, coeffs)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

fn mul_into(out: &mut [f64], a: &Jet, b: &Jet, vars: usize, order: usize) {
    let basis = basis(vars);
    let triples = &basis.products[..basis.products_upto[order]];
    let (ac, bc) = (&a.coeffs, &b.coeffs);
    for &(i, j, k) in triples {
        out[k as usize] += ac[i as usize] * bc[j as usize];
    }
}

fn check_shape(a: &Jet, b: &Jet) {
    debug_assert_eq!(a.vars, b.vars, "jets over different variable counts");
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &'a Jet) -> Jet {
        check_shape(self, rhs);
        let order = self.order().min(rhs.order());
        let mut coeffs = vec![0.0; coefficient_count(self.vars(), order)];
        mul_into(&mut coeffs, self, rhs, self.vars(), order);
        Jet { vars: self.vars, order: order as u8, coeffs }
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &'a Jet) -> Jet {
        check_shape(self, rhs);
        let order = self.order().min(rhs.order());
        let len = coefficient_count(self.vars(), order);
        let coeffs = self.coeffs[..len].iter().zip(&rhs.coeffs[..len]).map(|(a, b)| a + b).collect();
        Jet { vars: self.vars, order: order as u8, coeffs }
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &'a Jet) -> Jet {
        check_shape(self, rhs);
        let order = self.order().min(rhs.order());
        let len = coefficient_count(self.vars(), order);
        let coeffs = self.coeffs[..len].iter().zip(&rhs.coeffs[..len]).map(|(a, b)| a - b).collect();
        Jet { vars: self.vars, order: order as u8, coeffs }
    }
}

impl<'a> Div<&'a Jet> for &'a Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &'a Jet) -> Jet {
        self * &rhs.recip()
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &'a Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<Jet> for &'a Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                self.$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += rhs;
        out
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        self + (-rhs)
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        self + (-rhs)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Div<f64> for &Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self.scale(1.0 / rhs)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self * (1.0 / rhs)
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        rhs + self
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        check_shape(self, rhs);
        if rhs.order() < self.order() {
            *self = self.truncate(rhs.order());
        }
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self += &rhs;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        check_shape(self, rhs);
        if rhs.order() < self.order() {
            *self = self.truncate(rhs.order());
        }
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self -= &rhs;
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, rhs: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
    }
}

impl AddAssign<f64> for Jet {
    fn add_assign(&mut self, rhs: f64) {
        self.coeffs[0] += rhs;
    }
}

/// Inverse of a symmetric positive-definite matrix of jets (row-major, n×n)
/// by Gauss-Jordan elimination on the jet algebra.
pub fn inverse(m: &[Jet], n: usize) -> Vec<Jet> {
    assert_eq!(m.len(), n * n);
    let vars = m[0].vars();
    let order = m.iter().map(Jet::order).min().unwrap_or(0);
    let mut a: Vec<Jet> = m.iter().map(|x| x.truncate(order)).collect();
    let mut inv: Vec<Jet> = (0..n * n).map(|k| Jet::constant(if k / n == k % n { 1.0 } else { 0.0 }, vars, order)).collect();
    for col in 0..n {
        let pivot = a[col * n + col].recip();
        for k in 0..n {
            a[col * n + k] = &a[col * n + k] * &pivot;
            inv[col * n + k] = &inv[col * n + k] * &pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row * n + col].clone();
            if factor.max_abs() == 0.0 {
                continue;
            }
            for k in 0..n {
                let da = &factor * &a[col * n + k];
                a[row * n + k] -= &da;
                let di = &factor * &inv[col * n + k];
                inv[row * n + k] -= &di;
            }
        }
    }
    inv
}

/// Determinant of an n×n jet matrix (row-major) by elimination with partial
/// pivoting on values. A column whose remaining values all vanish is
/// expanded by cofactors instead, so jets that vanish only at the base
/// point keep their higher coefficients.
pub fn determinant(m: &[Jet], n: usize) -> Jet {
    let order = m.iter().map(Jet::order).min().unwrap_or(0);
    let mut a: Vec<Jet> = m.iter().map(|x| x.truncate(order)).collect();
    let mut det = a[0].lift(1.0);
    for col in 0..n {
        let best = (col..n).max_by(|&i, &j| a[i * n + col].value().abs().total_cmp(&a[j * n + col].value().abs())).unwrap_or(col);
        if a[best * n + col].value() == 0.0 {
            let rest: Vec<Jet> =
                (col..n).flat_map(|r| (col..n).map(move |c| (r, c))).map(|(r, c)| a[r * n + c].clone()).collect();
            return &det * &laplace(&rest, n - col);
        }
        if best != col {
            for k in 0..n {
                a.swap(best * n + k, col * n + k);
            }
            det = -&det;
        }
        let pivot = a[col * n + col].clone();
        det = &det * &pivot;
        let pinv = pivot.recip();
        for row in col + 1..n {
            let factor = &a[row * n + col] * &pinv;
            for k in col..n {
                let d = &factor * &a[col * n + k];
                a[row * n + k] -= &d;
            }
        }
    }
    det
}

fn laplace(a: &[Jet], n: usize) -> Jet {
    if n == 1 {
        return a[0].clone();
    }
    let mut total = a[0].lift(0.0);
    for col in 0..n {
        if a[col].max_abs() == 0.0 {
            continue;
        }
        let minor: Vec<Jet> = (1..n)
            .flat_map(|r| (0..n).filter(move |&c| c != col).map(move |c| (r, c)))
            .map(|(r, c)| a[r * n + c].clone())
            .collect();
        let term = &a[col] * &determinant(&minor, n - 1);
        if col % 2 == 0 {
            total += &term;
        } else {
            total -= &term;
        }
    }
    total
}
