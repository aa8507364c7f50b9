//! Truncated Laurent series over F_{q^s}((pi)) and matrices of them: the twisted
//! Frobenius F(A) = varpi^{-1} A^phi varpi, the quotient solver, the normal form of
//! matrices in X~, and the determinant valuation law.
//!
//! Precision is pessimistic. A series known mod pi^P stays honest through every
//! operation, and comparisons only look at coefficients both sides actually know.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::ffield::Field;
use crate::twistring::RingParams;

/// Precision standing in for "exact".
const EXACT: i64 = i64::MAX / 4;

/// Coefficient field F_{q^s} together with q = p^qe, so phi is x -> x^q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesField {
    field: Arc<Field>,
    qe: u32,
}

impl SeriesField {
    pub fn new(p: u32, qe: u32, s: u32) -> Result<Arc<SeriesField>> {
        if qe == 0 || s == 0 {
            return Err(Error::WrongParameters(format!("q = {p}^{qe}, s = {s}")));
        }
        Ok(Arc::new(SeriesField { field: Field::get(p, qe * s)?, qe }))
    }
    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }
    pub fn qe(&self) -> u32 {
        self.qe
    }
    pub fn s(&self) -> u32 {
        self.field.k() / self.qe
    }
    pub fn q(&self) -> u64 {
        (self.field.p() as u64).pow(self.qe)
    }
    pub fn phi(&self, x: u32) -> u32 {
        self.field.frob_p(x, self.qe as i64)
    }
    /// phi^{-1} as x -> x^{q^{s-1}}.
    pub fn phi_inv(&self, x: u32) -> u32 {
        self.field.frob_p(x, (self.qe * (self.s() - 1)) as i64)
    }
    pub fn is_rational(&self, x: u32) -> bool {
        self.field.in_subfield(x, self.qe)
    }
}

/// sum_{k >= val} c_k pi^k, known mod pi^prec.
/// The leading stored coefficient is nonzero; the zero series has val == prec.
#[derive(Clone)]
pub struct LaurentSeries {
    ctx: Arc<SeriesField>,
    val: i64,
    coeffs: Vec<u32>,
    prec: i64,
}

impl fmt::Debug for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let k = self.val + i as i64;
            let c = self.ctx.field.fmt_elem(c);
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})pi")?,
                _ => write!(f, "({c})pi^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(pi^{})", self.prec)
    }
}

impl LaurentSeries {
    pub fn zero(ctx: &Arc<SeriesField>, prec: i64) -> LaurentSeries {
        LaurentSeries { ctx: ctx.clone(), val: prec, coeffs: Vec::new(), prec }
    }
    pub fn one(ctx: &Arc<SeriesField>, prec: i64) -> LaurentSeries {
        LaurentSeries::constant(ctx, 1, prec)
    }
    pub fn constant(ctx: &Arc<SeriesField>, c: u32, prec: i64) -> LaurentSeries {
        LaurentSeries::from_coeffs(ctx, 0, &[c], prec)
    }
    /// pi^k, known mod pi^prec.
    pub fn pi_pow(ctx: &Arc<SeriesField>, k: i64, prec: i64) -> LaurentSeries {
        LaurentSeries::from_coeffs(ctx, k, &[1], prec)
    }
    /// sum_i c[i] pi^{start+i}; coefficients at or beyond prec are dropped.
    pub fn from_coeffs(ctx: &Arc<SeriesField>, start: i64, c: &[u32], prec: i64) -> LaurentSeries {
        let keep = (prec - start).clamp(0, c.len() as i64) as usize;
        let mut s = LaurentSeries { ctx: ctx.clone(), val: start.min(prec), coeffs: c[..keep].to_vec(), prec };
        s.normalize();
        s
    }

    /// Leading zeros move into the valuation; trailing zeros are implicit.
    fn normalize(&mut self) {
        let lead = self.coeffs.iter().position(|&c| c != 0).unwrap_or(self.coeffs.len());
        self.coeffs.drain(..lead);
        self.val += lead as i64;
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.val = self.prec;
        }
    }

    pub fn ctx(&self) -> &Arc<SeriesField> {
        &self.ctx
    }
    pub fn precision(&self) -> i64 {
        self.prec
    }
    /// None when the series vanishes to its precision.
    pub fn valuation(&self) -> Option<i64> {
        (!self.coeffs.is_empty()).then_some(self.val)
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    /// Coefficient of pi^k, None when k is beyond the precision.
    pub fn coeff(&self, k: i64) -> Option<u32> {
        if k >= self.prec {
            None
        } else if k < self.val {
            Some(0)
        } else {
            Some(self.coeffs.get((k - self.val) as usize).copied().unwrap_or(0))
        }
    }
    pub fn truncate(&self, prec: i64) -> LaurentSeries {
        if prec >= self.prec {
            return self.clone();
        }
        let keep = (prec - self.val).max(0) as usize;
        let mut s = LaurentSeries {
            ctx: self.ctx.clone(),
            val: self.val.min(prec),
            coeffs: self.coeffs[..keep.min(self.coeffs.len())].to_vec(),
            prec,
        };
        s.normalize();
        s
    }

    fn combine(&self, o: &LaurentSeries, f: impl Fn(u32, u32) -> u32) -> LaurentSeries {
        let prec = self.prec.min(o.prec);
        let lo = self.val.min(o.val).min(prec);
        let end = (self.val + self.coeffs.len() as i64).max(o.val + o.coeffs.len() as i64).min(prec);
        let c: Vec<u32> = (lo..end)
            .map(|k| f(self.coeff(k).unwrap_or(0), o.coeff(k).unwrap_or(0)))
            .collect();
        LaurentSeries::from_coeffs(&self.ctx, lo, &c, prec)
    }
    pub fn add(&self, o: &LaurentSeries) -> LaurentSeries {
        let f = &self.ctx.field;
        self.combine(o, |a, b| f.add(a, b))
    }
    pub fn sub(&self, o: &LaurentSeries) -> LaurentSeries {
        let f = &self.ctx.field;
        self.combine(o, |a, b| f.sub(a, b))
    }
    pub fn neg(&self) -> LaurentSeries {
        let f = &self.ctx.field;
        let c: Vec<u32> = self.coeffs.iter().map(|&x| f.neg(x)).collect();
        LaurentSeries { ctx: self.ctx.clone(), val: self.val, coeffs: c, prec: self.prec }
    }
    pub fn mul(&self, o: &LaurentSeries) -> LaurentSeries {
        let f = &self.ctx.field;
        let prec = (self.val + o.prec).min(o.val + self.prec);
        let val = self.val + o.val;
        let full = (self.coeffs.len() + o.coeffs.len()).saturating_sub(1) as i64;
        let len = (prec - val).clamp(0, full) as usize;
        let mut c = vec![0u32; len];
        for (i, &a) in self.coeffs.iter().enumerate().take(len) {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.coeffs.iter().enumerate().take(len.saturating_sub(i)) {
                if b != 0 {
                    c[i + j] = f.add(c[i + j], f.mul(a, b));
                }
            }
        }
        LaurentSeries::from_coeffs(&self.ctx, val, &c, prec)
    }
    /// Multiplication by pi^k.
    pub fn shift(&self, k: i64) -> LaurentSeries {
        LaurentSeries { ctx: self.ctx.clone(), val: self.val + k, coeffs: self.coeffs.clone(), prec: self.prec + k }
    }
    fn map(&self, g: impl Fn(u32) -> u32) -> LaurentSeries {
        let c: Vec<u32> = self.coeffs.iter().map(|&x| g(x)).collect();
        LaurentSeries { ctx: self.ctx.clone(), val: self.val, coeffs: c, prec: self.prec }
    }
    /// phi^j coefficientwise, j >= 0.
    pub fn phi_pow(&self, j: u32) -> LaurentSeries {
        let e = (self.ctx.qe * j) as i64;
        let f = &self.ctx.field;
        self.map(|x| f.frob_p(x, e))
    }
    pub fn phi(&self) -> LaurentSeries {
        self.map(|x| self.ctx.phi(x))
    }
    pub fn phi_inv(&self) -> LaurentSeries {
        self.map(|x| self.ctx.phi_inv(x))
    }
    /// Multiplicative inverse; the result is known to the same relative precision.
    pub fn inv(&self) -> Result<LaurentSeries> {
        let Some(v) = self.valuation() else {
            return Err(Error::PrecisionLoss(format!("inverting {self}")));
        };
        let f = &self.ctx.field;
        if self.prec >= EXACT / 2 && self.coeffs.len() > 1 {
            return Err(Error::PrecisionLoss(format!("exact inverse of {self} needs a precision")));
        }
        let r = (self.prec - v).min(EXACT / 2 - v) as usize;
        let r = if self.coeffs.len() == 1 { 1 } else { r };
        let u0 = f.inv(self.coeffs[0]).ok_or(Error::NotAUnit)?;
        let mut out = vec![0u32; r];
        out[0] = u0;
        for k in 1..r {
            let mut acc = 0;
            for i in 1..=k.min(self.coeffs.len() - 1) {
                acc = f.add(acc, f.mul(self.coeffs[i], out[k - i]));
            }
            out[k] = f.neg(f.mul(acc, u0));
        }
        Ok(LaurentSeries::from_coeffs(&self.ctx, -v, &out, -v + (self.prec - v).min(EXACT / 2)))
    }
    /// Agreement on every coefficient both sides know.
    pub fn agrees(&self, o: &LaurentSeries) -> bool {
        let prec = self.prec.min(o.prec);
        self.sub(o).truncate(prec).is_zero()
    }
    /// All known coefficients lie in F_q.
    pub fn is_rational(&self) -> bool {
        self.coeffs.iter().all(|&x| self.ctx.is_rational(x))
    }
}

/// n x n matrix of Laurent series; each entry carries its own precision.
#[derive(Clone, Debug)]
pub struct LaurentMatrix {
    ctx: Arc<SeriesField>,
    n: usize,
    e: Vec<LaurentSeries>,
}

impl LaurentMatrix {
    pub fn from_fn(ctx: &Arc<SeriesField>, n: usize, mut f: impl FnMut(usize, usize) -> LaurentSeries) -> LaurentMatrix {
        let mut e = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                e.push(f(i, j));
            }
        }
        LaurentMatrix { ctx: ctx.clone(), n, e }
    }
    pub fn identity(ctx: &Arc<SeriesField>, n: usize, prec: i64) -> LaurentMatrix {
        LaurentMatrix::from_fn(ctx, n, |i, j| {
            if i == j {
                LaurentSeries::one(ctx, prec)
            } else {
                LaurentSeries::zero(ctx, prec)
            }
        })
    }
    pub fn ctx(&self) -> &Arc<SeriesField> {
        &self.ctx
    }
    pub fn size(&self) -> usize {
        self.n
    }
    pub fn get(&self, i: usize, j: usize) -> &LaurentSeries {
        &self.e[i * self.n + j]
    }
    pub fn set(&mut self, i: usize, j: usize, v: LaurentSeries) {
        self.e[i * self.n + j] = v;
    }
    /// Minimum entry precision.
    pub fn precision(&self) -> i64 {
        self.e.iter().map(|s| s.precision()).min().unwrap_or(i64::MAX)
    }
    pub fn add(&self, o: &LaurentMatrix) -> LaurentMatrix {
        LaurentMatrix::from_fn(&self.ctx, self.n, |i, j| self.get(i, j).add(o.get(i, j)))
    }
    pub fn sub(&self, o: &LaurentMatrix) -> LaurentMatrix {
        LaurentMatrix::from_fn(&self.ctx, self.n, |i, j| self.get(i, j).sub(o.get(i, j)))
    }
    pub fn mul(&self, o: &LaurentMatrix) -> LaurentMatrix {
        let n = self.n;
        LaurentMatrix::from_fn(&self.ctx, n, |i, j| {
            let mut acc = self.get(i, 0).mul(o.get(0, j));
            for k in 1..n {
                acc = acc.add(&self.get(i, k).mul(o.get(k, j)));
            }
            acc
        })
    }
    /// A^phi.
    pub fn phi(&self) -> LaurentMatrix {
        LaurentMatrix::from_fn(&self.ctx, self.n, |i, j| self.get(i, j).phi())
    }
    pub fn agrees(&self, o: &LaurentMatrix) -> bool {
        self.n == o.n && self.e.iter().zip(&o.e).all(|(a, b)| a.agrees(b))
    }
    pub fn is_zero(&self) -> bool {
        self.e.iter().all(|s| s.is_zero())
    }
    /// Leibniz expansion, so no division ever touches the precision.
    pub fn det(&self) -> LaurentSeries {
        let n = self.n;
        let mut total = LaurentSeries::zero(&self.ctx, EXACT);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign_odd = false;
        // Heap's algorithm, tracking parity through the swaps
        let mut c = vec![0usize; n];
        let mut term = |perm: &[usize], odd: bool| {
            let mut t = LaurentSeries::one(&self.ctx, EXACT);
            for (i, &j) in perm.iter().enumerate() {
                t = t.mul(self.get(i, j));
            }
            total = if odd { total.sub(&t) } else { total.add(&t) };
        };
        term(&perm, sign_odd);
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                sign_odd = !sign_odd;
                term(&perm, sign_odd);
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        total
    }
    /// Unipotent upper triangular to the known precision.
    pub fn is_unipotent_upper(&self) -> bool {
        let one = LaurentSeries::one(&self.ctx, EXACT);
        (0..self.n).all(|i| {
            self.get(i, i).agrees(&one) && (0..i).all(|j| self.get(i, j).is_zero())
        })
    }
}

/// Ones on the superdiagonal and pi in the bottom-left corner.
pub fn varpi(ctx: &Arc<SeriesField>, n: usize, prec: i64) -> LaurentMatrix {
    LaurentMatrix::from_fn(ctx, n, |i, j| {
        if j == i + 1 {
            LaurentSeries::one(ctx, prec)
        } else if i == n - 1 && j == 0 {
            LaurentSeries::pi_pow(ctx, 1, prec)
        } else {
            LaurentSeries::zero(ctx, prec)
        }
    })
}

/// F(A) = varpi^{-1} A^phi varpi through the entry formula: the first row is
/// (phi(a_nn), pi^{-1}phi(a_n1), ..., pi^{-1}phi(a_{n,n-1})), row i >= 2 is
/// (pi phi(a_{i-1,n}), phi(a_{i-1,1}), ..., phi(a_{i-1,n-1})).
pub fn frob_f(a: &LaurentMatrix) -> Result<LaurentMatrix> {
    if a.precision() < 2 {
        return Err(Error::PrecisionLoss(format!("F needs precision >= 2, have {}", a.precision())));
    }
    let n = a.n;
    Ok(LaurentMatrix::from_fn(&a.ctx, n, |i, j| match (i, j) {
        (0, 0) => a.get(n - 1, n - 1).phi(),
        (0, j) => a.get(n - 1, j - 1).phi().shift(-1),
        (i, 0) => a.get(i - 1, n - 1).phi().shift(1),
        (i, j) => a.get(i - 1, j - 1).phi(),
    }))
}

/// The unknowns and equations of F(B)g = hB. Equation `B(i, j)` (0-based, 1 <= i < j < n)
/// reads phi(b_{i-1,j-1}) = b_{ij} + sum_{i<k<=j} h_{ik} b_{kj}; equation `C(j)` reads
/// c_j = b_{0j} + sum_{0<k<=j} h_{0k} b_{kj}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuotientEquation {
    B(usize, usize),
    C(usize),
}

/// The recursive order: diagonal by diagonal, each diagonal from the bottom right up,
/// then the first-row unknowns.
pub fn recursive_order(n: usize) -> Vec<QuotientEquation> {
    let mut out = Vec::new();
    for d in 1..n.saturating_sub(1) {
        for j in (d + 1..n).rev() {
            if j - d >= 1 {
                out.push(QuotientEquation::B(j - d, j));
            }
        }
    }
    out.extend((1..n).map(QuotientEquation::C));
    out
}

#[derive(Clone, Debug)]
pub struct QuotientSolution {
    /// b_{i,n} = 0 for i < n
    pub b: LaurentMatrix,
    /// identity off the first row
    pub g: LaurentMatrix,
    /// Precision to which F(B)g - hB was checked to vanish.
    pub residual_precision: i64,
}

/// Solves F(B)g = hB processing the equations in `order`, sweeping repeatedly and
/// solving each equation once its inputs are known.
pub fn solve_quotient_ordered(h: &LaurentMatrix, order: &[QuotientEquation]) -> Result<(LaurentMatrix, LaurentMatrix)> {
    if !h.is_unipotent_upper() {
        return Err(Error::WrongParameters("h is not unipotent upper triangular".into()));
    }
    let n = h.n;
    let ctx = h.ctx.clone();
    let prec = h.precision();
    let mut b = LaurentMatrix::identity(&ctx, n, prec);
    let mut g = LaurentMatrix::identity(&ctx, n, prec);
    // known[i][j] for the strictly upper part of B; the last column is fixed at zero
    let mut known = vec![vec![true; n]; n];
    for i in 0..n {
        for j in i + 1..n.saturating_sub(1) {
            known[i][j] = false;
        }
    }
    let mut pending: Vec<QuotientEquation> = order.to_vec();
    let expected = n.saturating_sub(1) * n.saturating_sub(2) / 2 + n.saturating_sub(1);
    if pending.len() != expected {
        return Err(Error::WrongParameters(format!("{} equations given, {} needed", pending.len(), expected)));
    }
    // sum_{i<k<=j} h_ik b_kj plus b_ij
    let rhs = |b: &LaurentMatrix, i: usize, j: usize| {
        let mut acc = b.get(i, j).clone();
        for k in i + 1..=j {
            acc = acc.add(&h.get(i, k).mul(b.get(k, j)));
        }
        acc
    };
    while !pending.is_empty() {
        let before = pending.len();
        let mut rest = Vec::new();
        for eq in pending {
            let (i, j) = match eq {
                QuotientEquation::B(i, j) => (i, j),
                QuotientEquation::C(j) => (0, j),
            };
            if !(i..=j).all(|k| known[k][j]) {
                rest.push(eq);
                continue;
            }
            let v = rhs(&b, i, j);
            match eq {
                QuotientEquation::B(i, j) => {
                    if i == 0 || j >= n || known[i - 1][j - 1] {
                        return Err(Error::WrongParameters(format!("equation {eq:?} is not valid")));
                    }
                    b.set(i - 1, j - 1, v.phi_inv());
                    known[i - 1][j - 1] = true;
                }
                QuotientEquation::C(_) => g.set(0, j, v),
            }
        }
        if rest.len() == before {
            return Err(Error::WrongParameters(format!("equations {rest:?} cannot be solved")));
        }
        pending = rest;
    }
    Ok((b, g))
}

/// The unique (B, g) with F(B)g = hB, B in U ∩ F^{-1}(U) and g in U ∩ F(U^-).
/// Solved in the recursive order and again in the reversed order; the two must agree.
pub fn solve_quotient(h: &LaurentMatrix) -> Result<QuotientSolution> {
    if h.precision() < 2 {
        return Err(Error::PrecisionLoss(format!("solver needs precision >= 2, have {}", h.precision())));
    }
    let order = recursive_order(h.n);
    let (b, g) = solve_quotient_ordered(h, &order)?;
    let reversed: Vec<_> = order.iter().rev().copied().collect();
    let (b2, g2) = solve_quotient_ordered(h, &reversed)?;
    if !b.agrees(&b2) || !g.agrees(&g2) {
        return Err(Error::IdentityFails { s: 0, lhs: format!("{b:?}"), rhs: format!("{b2:?}") });
    }
    let res = frob_f(&b)?.mul(&g).sub(&h.mul(&b));
    if !res.is_zero() {
        return Err(Error::IdentityFails { s: 0, lhs: format!("{res:?}"), rhs: "0".into() });
    }
    Ok(QuotientSolution { residual_precision: res.precision(), b, g })
}

/// Matrix with first row (a_0, ..., a_{n-1}); row i holds phi^i(a_{j-i}) on and above
/// the diagonal and pi phi^i(a_{n+j-i}) below it.
pub fn form_matrix(a: &[LaurentSeries]) -> Result<LaurentMatrix> {
    let n = a.len();
    let Some(first) = a.first() else {
        return Err(Error::WrongParameters("no coefficients".into()));
    };
    Ok(LaurentMatrix::from_fn(first.ctx(), n, |i, j| {
        if j >= i {
            a[j - i].phi_pow(i as u32)
        } else {
            a[n + j - i].phi_pow(i as u32).shift(1)
        }
    }))
}

/// The coefficients (a_0, ..., a_{n-1}) when A has the twisted circulant shape and
/// det A is in K^x; None otherwise.
pub fn xtilde_form(a: &LaurentMatrix) -> Result<Option<Vec<LaurentSeries>>> {
    let coeffs: Vec<LaurentSeries> = (0..a.n).map(|j| a.get(0, j).clone()).collect();
    if !form_matrix(&coeffs)?.agrees(a) {
        return Ok(None);
    }
    let det = a.det();
    if det.is_zero() {
        return Err(Error::PrecisionLoss(format!("determinant vanishes to precision {}", det.precision())));
    }
    Ok(det.is_rational().then_some(coeffs))
}

/// min_j (n v_j + j): the valuation of det of the form matrix. The candidates are
/// distinct mod n, so one term dominates.
pub fn det_valuation(a: &[LaurentSeries]) -> Result<i64> {
    let n = a.len() as i64;
    let known = a.iter().enumerate().filter_map(|(j, s)| s.valuation().map(|v| n * v + j as i64)).min();
    let Some(best) = known else {
        return Err(Error::AllZero);
    };
    // a coefficient that vanishes to precision P contributes at least n P + j
    for (j, s) in a.iter().enumerate() {
        if s.is_zero() && n * s.precision() + (j as i64) < best {
            return Err(Error::PrecisionLoss(format!("a_{j} is only known mod pi^{}", s.precision())));
        }
    }
    Ok(best)
}

/// Valuation of the determinant computed by expansion.
pub fn det_valuation_direct(a: &[LaurentSeries]) -> Result<i64> {
    if a.iter().all(|s| s.is_zero()) {
        return Err(Error::AllZero);
    }
    let det = form_matrix(a)?.det();
    det.valuation().ok_or_else(|| Error::PrecisionLoss(format!("determinant vanishes mod pi^{}", det.precision())))
}

/// Level-h reduction: a_0 mod pi^h, a_j mod pi^{h-1}, laid out as the ring coefficients
/// a_{nt+j} = (pi^t-coefficient of a_j) used by `matmodel::iota`.
pub fn reduce_to_ring(params: &RingParams, a: &[LaurentSeries]) -> Result<Vec<u32>> {
    let n = params.n() as usize;
    let h = params.h() as i64;
    if a.len() != n {
        return Err(Error::ParameterMismatch(format!("{} coefficients for n = {n}", a.len())));
    }
    if a[0].ctx().field() != params.field() || a[0].ctx().qe() != params.qe() {
        return Err(Error::ParameterMismatch("series field differs from the ring field".into()));
    }
    let top = params.top();
    let mut out = vec![0u32; top + 1];
    for (j, s) in a.iter().enumerate() {
        let keep = if j == 0 { h } else { h - 1 };
        for t in 0..keep {
            let c = s.coeff(t).ok_or_else(|| Error::PrecisionLoss(format!("a_{j} mod pi^{}", t + 1)))?;
            if s.valuation().is_some_and(|v| v < 0) {
                return Err(Error::WrongParameters(format!("a_{j} is not integral")));
            }
            out[n * t as usize + j] = c;
        }
    }
    Ok(out)
}

/// X~^{(0)}_h membership of the form matrix: a_0 a unit and the level-h determinant
/// rational.
pub fn in_xtilde_zero_h(a: &[LaurentSeries], h: i64) -> Result<bool> {
    if a[0].coeff(0).unwrap_or(0) == 0 {
        return Ok(false);
    }
    let cut: Vec<LaurentSeries> =
        a.iter().enumerate().map(|(j, s)| s.truncate(if j == 0 { h } else { h - 1 })).collect();
    let det = form_matrix(&cut)?.det().truncate(h);
    if det.precision() < h {
        return Err(Error::PrecisionLoss(format!("determinant known mod pi^{}", det.precision())));
    }
    Ok(det.is_rational())
}

/// Random series with valuation at least `min_val`, known mod pi^prec.
pub fn random_series<R: Rng>(ctx: &Arc<SeriesField>, rng: &mut R, min_val: i64, prec: i64) -> LaurentSeries {
    let size = ctx.field().size();
    let c: Vec<u32> = (min_val..prec).map(|_| rng.gen_range(0..size)).collect();
    LaurentSeries::from_coeffs(ctx, min_val, &c, prec)
}

/// Random unipotent upper triangular matrix with integral entries.
pub fn random_unipotent<R: Rng>(ctx: &Arc<SeriesField>, rng: &mut R, n: usize, prec: i64) -> LaurentMatrix {
    LaurentMatrix::from_fn(ctx, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Less => random_series(ctx, rng, 0, prec),
        std::cmp::Ordering::Equal => LaurentSeries::one(ctx, prec),
        std::cmp::Ordering::Greater => LaurentSeries::zero(ctx, prec),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matmodel::in_xh_raw;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx(p: u32, qe: u32, s: u32) -> Arc<SeriesField> {
        SeriesField::new(p, qe, s).unwrap()
    }

    /// varpi^{-1}: ones on the subdiagonal and pi^{-1} in the top-right corner.
    fn varpi_inv(c: &Arc<SeriesField>, n: usize, prec: i64) -> LaurentMatrix {
        LaurentMatrix::from_fn(c, n, |i, j| {
            if i == j + 1 {
                LaurentSeries::one(c, prec)
            } else if i == 0 && j == n - 1 {
                LaurentSeries::pi_pow(c, -1, prec)
            } else {
                LaurentSeries::zero(c, prec)
            }
        })
    }

    fn random_matrix(c: &Arc<SeriesField>, rng: &mut ChaCha8Rng, n: usize, prec: i64) -> LaurentMatrix {
        LaurentMatrix::from_fn(c, n, |_, _| random_series(c, rng, 0, prec))
    }

    #[test]
    fn series_arithmetic() {
        let c = ctx(2, 1, 3);
        let x = LaurentSeries::from_coeffs(&c, -1, &[1, 0, 3], 4);
        assert_eq!(x.valuation(), Some(-1));
        let y = x.inv().unwrap();
        assert_eq!(y.valuation(), Some(1));
        assert_eq!(y.precision(), 1 + 5);
        let one = x.mul(&y);
        assert!(one.agrees(&LaurentSeries::one(&c, 10)));
        assert_eq!(one.precision(), 5);
        assert!(x.sub(&x).is_zero());
        assert_eq!(x.sub(&x).precision(), 4);
        assert_eq!(x.shift(2).valuation(), Some(1));
        assert!(x.phi().phi_inv().agrees(&x));
        assert_eq!(x.coeff(5), None);
        assert_eq!(x.coeff(-3), Some(0));
        assert!(LaurentSeries::zero(&c, 3).inv().is_err());
    }

    #[test]
    fn varpi_is_inverted() {
        let c = ctx(2, 1, 2);
        for n in 1..=4 {
            let w = varpi(&c, n, 8);
            let prod = w.mul(&varpi_inv(&c, n, 8));
            assert!(prod.agrees(&LaurentMatrix::identity(&c, n, 8)), "n={n}");
        }
    }

    #[test]
    fn explicit_formula_matches_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (p, qe, s) in [(2, 1, 4), (3, 1, 2), (2, 2, 3)] {
            let c = ctx(p, qe, s);
            for n in 1..=4 {
                let a = random_matrix(&c, &mut rng, n, 6);
                let direct = varpi_inv(&c, n, 8).mul(&a.phi()).mul(&varpi(&c, n, 8));
                let f = frob_f(&a).unwrap();
                assert!(f.agrees(&direct), "n={n}");
                assert!(f.precision() >= 5);
            }
        }
    }

    #[test]
    fn frob_examples() {
        let c = ctx(2, 1, 4);
        let id = LaurentMatrix::identity(&c, 3, 4);
        assert!(frob_f(&id).unwrap().agrees(&id));
        // diag(a, phi a, phi^2 a) goes to diag(phi^3 a, phi a, phi^2 a)
        let a = LaurentSeries::constant(&c, 7, 4);
        let d = LaurentMatrix::from_fn(&c, 3, |i, j| {
            if i == j {
                a.phi_pow(i as u32)
            } else {
                LaurentSeries::zero(&c, 4)
            }
        });
        let f = frob_f(&d).unwrap();
        let expect = [a.phi_pow(3), a.phi(), a.phi_pow(2)];
        for (i, e) in expect.iter().enumerate() {
            assert!(f.get(i, i).agrees(e));
        }
        // top-right entry is pi^{-1} phi(a_{n,n-1})
        let mut m = LaurentMatrix::identity(&c, 3, 4);
        m.set(2, 1, LaurentSeries::constant(&c, 5, 4));
        let f = frob_f(&m).unwrap();
        assert!(f.get(0, 2).agrees(&LaurentSeries::from_coeffs(&c, -1, &[c.phi(5)], 3)));
        let low = LaurentMatrix::identity(&c, 2, 1);
        assert!(matches!(frob_f(&low), Err(Error::PrecisionLoss(_))));
    }

    #[test]
    fn recursive_order_is_one_pass() {
        assert_eq!(
            recursive_order(4),
            vec![
                QuotientEquation::B(2, 3),
                QuotientEquation::B(1, 2),
                QuotientEquation::B(1, 3),
                QuotientEquation::C(1),
                QuotientEquation::C(2),
                QuotientEquation::C(3),
            ]
        );
        assert_eq!(recursive_order(2), vec![QuotientEquation::C(1)]);
    }

    #[test]
    fn quotient_identity() {
        let c = ctx(2, 1, 4);
        let id = LaurentMatrix::identity(&c, 3, 6);
        let sol = solve_quotient(&id).unwrap();
        assert!(sol.b.agrees(&id) && sol.g.agrees(&id));
    }

    #[test]
    fn quotient_two_by_two() {
        // B = 1 and c_2 = a_12
        let c = ctx(2, 1, 4);
        let mut h = LaurentMatrix::identity(&c, 2, 6);
        let a12 = LaurentSeries::from_coeffs(&c, 0, &[3, 9], 6);
        h.set(0, 1, a12.clone());
        let sol = solve_quotient(&h).unwrap();
        assert!(sol.b.agrees(&LaurentMatrix::identity(&c, 2, 6)));
        assert!(sol.g.get(0, 1).agrees(&a12));
    }

    #[test]
    fn quotient_random_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (p, qe, s) in [(2, 1, 4), (2, 1, 6), (3, 1, 2), (2, 2, 2)] {
            let c = ctx(p, qe, s);
            for n in 1..=4 {
                for _ in 0..10 {
                    let h = random_unipotent(&c, &mut rng, n, 6);
                    let sol = solve_quotient(&h).unwrap();
                    assert!(sol.residual_precision >= 5);
                    for i in 0..n {
                        for j in 0..n {
                            if i < n - 1 && j == n - 1 {
                                assert!(sol.b.get(i, j).is_zero());
                            }
                            if i > 0 && i != j {
                                assert!(sol.g.get(i, j).is_zero());
                            }
                        }
                    }
                    assert!(sol.b.is_unipotent_upper() && sol.g.is_unipotent_upper());
                    // F(B) is again unipotent upper triangular
                    assert!(frob_f(&sol.b).unwrap().is_unipotent_upper());
                }
            }
        }
    }

    #[test]
    fn quotient_rejects_bad_input() {
        let c = ctx(2, 1, 2);
        let mut h = LaurentMatrix::identity(&c, 3, 6);
        h.set(2, 0, LaurentSeries::one(&c, 6));
        assert!(solve_quotient(&h).is_err());
        let h = LaurentMatrix::identity(&c, 3, 6);
        assert!(solve_quotient_ordered(&h, &[QuotientEquation::C(1)]).is_err());
    }

    #[test]
    fn level_one_points_are_units_of_fqn() {
        // diag(a, phi a, ...) lies in X~ exactly for a in F_{q^n}^x
        for (p, qe, n, s) in [(2u32, 1u32, 2usize, 4u32), (2, 1, 3, 6), (3, 1, 2, 2)] {
            let c = ctx(p, qe, s);
            let mut hits = 0;
            for x in 1..c.field().size() {
                let a = LaurentSeries::constant(&c, x, 4);
                let mut coeffs = vec![a];
                coeffs.extend((1..n).map(|_| LaurentSeries::zero(&c, 4)));
                let m = form_matrix(&coeffs).unwrap();
                if let Some(back) = xtilde_form(&m).unwrap() {
                    assert!(back[0].agrees(&coeffs[0]));
                    assert!(c.field().in_subfield(x, qe * n as u32));
                    hits += 1;
                }
            }
            assert_eq!(hits, c.q().pow(n as u32) - 1);
        }
    }

    #[test]
    fn xtilde_examples() {
        let c = ctx(2, 1, 4);
        let id = LaurentMatrix::identity(&c, 3, 5);
        let back = xtilde_form(&id).unwrap().unwrap();
        assert!(back[0].agrees(&LaurentSeries::one(&c, 5)));
        assert!(back[1].is_zero() && back[2].is_zero());
        let mut bad = id.clone();
        bad.set(1, 2, LaurentSeries::one(&c, 5));
        assert!(xtilde_form(&bad).unwrap().is_none());
        let zero = LaurentMatrix::from_fn(&c, 2, |_, _| LaurentSeries::zero(&c, 3));
        assert!(matches!(xtilde_form(&zero), Err(Error::PrecisionLoss(_))));
    }

    #[test]
    fn det_valuation_examples() {
        let c = ctx(2, 1, 2);
        let unit = LaurentSeries::one(&c, 5);
        let z = LaurentSeries::zero(&c, 5);
        assert_eq!(det_valuation(&[unit.clone(), z.clone(), z.clone()]).unwrap(), 0);
        assert_eq!(det_valuation(&[z.clone(), unit.clone(), z.clone()]).unwrap(), 1);
        assert_eq!(det_valuation_direct(&[z.clone(), unit.clone(), z.clone()]).unwrap(), 1);
        assert_eq!(det_valuation(&[z.clone(), z.clone()]), Err(Error::AllZero));
        // a_0 unknown beyond pi^0 cannot be ruled out against n v_1 + 1 = 4
        let vague = LaurentSeries::zero(&c, 0);
        let deep = LaurentSeries::pi_pow(&c, 2, 5);
        assert!(matches!(det_valuation(&[vague, deep]), Err(Error::PrecisionLoss(_))));
    }

    #[test]
    fn det_valuation_small_grid() {
        // n = 2 with window 3 and n = 3 with window 2, all coefficients in F_4
        let c = ctx(2, 1, 2);
        for (n, w) in [(2usize, 3i64), (3, 2)] {
            let per = 4u32.pow(w as u32);
            let total = per.pow(n as u32);
            for code in 0..total {
                let mut r = code;
                let a: Vec<LaurentSeries> = (0..n)
                    .map(|_| {
                        let mut digits = Vec::new();
                        let mut x = r % per;
                        r /= per;
                        for _ in 0..w {
                            digits.push(x % 4);
                            x /= 4;
                        }
                        LaurentSeries::from_coeffs(&c, 0, &digits, w)
                    })
                    .collect();
                match det_valuation(&a) {
                    Ok(v) => assert_eq!(det_valuation_direct(&a).unwrap(), v),
                    Err(e) => {
                        assert_eq!(e, Error::AllZero);
                        assert_eq!(code, 0);
                    }
                }
            }
        }
    }

    #[test]
    fn agrees_with_truncated_determinant() {
        // every a_0 unit mod pi^h and a_1 mod pi^{h-1}, n = 2, q = 2
        for (s, h) in [(4u32, 2u32), (2, 3)] {
            let c = ctx(2, 1, s);
            let size = c.field().size();
            let params = RingParams::new(c.field().clone(), 1, 2, h).unwrap();
            let (w0, w1) = (h as usize, h as usize - 1);
            let (mut yes, mut no) = (0, 0);
            for code in 0..size.pow((w0 + w1) as u32) {
                let digits: Vec<u32> = (0..w0 + w1).map(|i| code / size.pow(i as u32) % size).collect();
                if digits[0] == 0 {
                    continue;
                }
                let a = vec![
                    LaurentSeries::from_coeffs(&c, 0, &digits[..w0], h as i64 + 1),
                    LaurentSeries::from_coeffs(&c, 0, &digits[w0..], h as i64 + 1),
                ];
                let ring = reduce_to_ring(&params, &a).unwrap();
                let got = in_xtilde_zero_h(&a, h as i64).unwrap();
                assert_eq!(got, in_xh_raw(&params, &ring), "{digits:?}");
                if got {
                    yes += 1;
                } else {
                    no += 1;
                }
            }
            println!("s={s} h={h}: {yes} in, {no} out");
            assert!(yes > 0, "h={h}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = ctx(2, 1, 3);
        let params = RingParams::new(c.field().clone(), 1, 3, 2).unwrap();
        for _ in 0..300 {
            let mut a: Vec<LaurentSeries> = (0..3).map(|_| random_series(&c, &mut rng, 0, 3)).collect();
            if a[0].coeff(0) == Some(0) {
                a[0] = a[0].add(&LaurentSeries::one(&c, 3));
            }
            let ring = reduce_to_ring(&params, &a).unwrap();
            assert_eq!(in_xtilde_zero_h(&a, 2).unwrap(), in_xh_raw(&params, &ring));
        }
    }
}
