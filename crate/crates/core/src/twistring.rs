//! Twisted truncated rings A<tau>/(tau^{n(h-1)+1}) with tau a = a^q tau, their unit
//! groups, the groups G^{n,q}, and the subgroups used to build representations.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ffield::Field;

/// Parameters of R_{h,n,q} over a coefficient field F_{p^K}, with q = p^qe and qe | K.
pub struct RingParams {
    field: Arc<Field>,
    qe: u32,
    n: u32,
    h: u32,
    /// frob[i][x] = x^{q^i} for i below the period K/qe
    frob: Vec<Vec<u32>>,
}

impl fmt::Debug for RingParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R(n={}, h={}, q={}^{}, over {:?})", self.n, self.h, self.field.p(), self.qe, self.field)
    }
}

impl PartialEq for RingParams {
    fn eq(&self, o: &Self) -> bool {
        self.field.id() == o.field.id() && self.qe == o.qe && self.n == o.n && self.h == o.h
    }
}
impl Eq for RingParams {}

impl RingParams {
    pub fn new(field: Arc<Field>, qe: u32, n: u32, h: u32) -> Result<Arc<RingParams>> {
        if qe == 0 || !field.k().is_multiple_of(qe) {
            return Err(Error::WrongParameters(format!("F_q with q = {}^{} is not inside {:?}", field.p(), qe, field)));
        }
        if n == 0 || h < 2 {
            return Err(Error::WrongParameters(format!("need n >= 1 and h >= 2, got n={n}, h={h}")));
        }
        let period = field.k() / qe;
        let frob = (0..period)
            .map(|i| field.elems().map(|x| field.frob_p(x, (i * qe) as i64)).collect())
            .collect();
        Ok(Arc::new(RingParams { field, qe, n, h, frob }))
    }

    /// Ring over F_{q^{n s}}, built from the prime p.
    pub fn over(p: u32, qe: u32, n: u32, h: u32, s: u32) -> Result<Arc<RingParams>> {
        RingParams::new(Field::get(p, qe * n * s)?, qe, n, h)
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }
    pub fn qe(&self) -> u32 {
        self.qe
    }
    pub fn q(&self) -> u64 {
        (self.field.p() as u64).pow(self.qe)
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn h(&self) -> u32 {
        self.h
    }
    /// Highest tau-degree n(h-1).
    pub fn top(&self) -> usize {
        (self.n * (self.h - 1)) as usize
    }
    /// Number of coefficients a_0..a_top.
    pub fn len(&self) -> usize {
        self.top() + 1
    }
    /// Degree over F_p of the field of rational points F_{q^n}.
    pub fn rational_degree(&self) -> u32 {
        self.qe * self.n
    }
    /// Same ring shape over a different coefficient field.
    pub fn with_field(&self, field: Arc<Field>) -> Result<Arc<RingParams>> {
        RingParams::new(field, self.qe, self.n, self.h)
    }

    /// x^{q^i}, i any integer.
    #[inline]
    pub fn frob_q(&self, x: u32, i: i64) -> u32 {
        let per = self.frob.len() as i64;
        self.frob[i.rem_euclid(per) as usize][x as usize]
    }

    #[inline]
    pub fn frob_table(&self, i: i64) -> &[u32] {
        let per = self.frob.len() as i64;
        &self.frob[i.rem_euclid(per) as usize]
    }

    /// c_k = sum_{i+j=k} a_i b_j^{q^i}.
    pub fn mul_into(&self, a: &[u32], b: &[u32], out: &mut [u32]) {
        let f = &self.field;
        let len = self.len();
        for (k, o) in out.iter_mut().enumerate().take(len) {
            let mut acc = 0;
            for i in 0..=k {
                let ai = a[i];
                if ai == 0 {
                    continue;
                }
                let bj = b[k - i];
                if bj == 0 {
                    continue;
                }
                acc = f.add(acc, f.mul(ai, self.frob_q(bj, i as i64)));
            }
            *o = acc;
        }
    }

    pub fn mul_raw(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        let mut out = vec![0; self.len()];
        self.mul_into(a, b, &mut out);
        out
    }

    /// Two-sided inverse by back-substitution: c_k = -a_0^{-1} sum_{i=1..k} a_i c_{k-i}^{q^i}.
    pub fn inv_raw(&self, a: &[u32]) -> Option<Vec<u32>> {
        let f = &self.field;
        let i0 = f.inv(a[0])?;
        let mut c = vec![0u32; self.len()];
        c[0] = i0;
        for k in 1..self.len() {
            let mut acc = 0;
            for i in 1..=k {
                if a[i] != 0 && c[k - i] != 0 {
                    acc = f.add(acc, f.mul(a[i], self.frob_q(c[k - i], i as i64)));
                }
            }
            c[k] = f.neg(f.mul(i0, acc));
        }
        Some(c)
    }

    /// Coefficientwise x -> x^{q^e}.
    pub fn frob_raw(&self, a: &[u32], e: i64) -> Vec<u32> {
        let t = self.frob_table(e);
        a.iter().map(|&x| t[x as usize]).collect()
    }

    /// F_{q^d}(g) g^{-1}.
    pub fn lang_raw(&self, g: &[u32], d: u32) -> Option<Vec<u32>> {
        let gi = self.inv_raw(g)?;
        Some(self.mul_raw(&self.frob_raw(g, d as i64), &gi))
    }

    fn check_code(&self, a: &[u32]) -> Result<()> {
        if a.len() != self.len() {
            return Err(Error::WrongParameters(format!("expected {} coefficients, got {}", self.len(), a.len())));
        }
        if let Some(&x) = a.iter().find(|&&x| x >= self.field.size()) {
            return Err(Error::WrongParameters(format!("code {x} outside {:?}", self.field)));
        }
        Ok(())
    }
}

fn same_params(a: &Arc<RingParams>, b: &Arc<RingParams>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::ParameterMismatch(format!("{a:?} vs {b:?}")))
    }
}

/// a_0 + a_1 tau + ... + a_{n(h-1)} tau^{n(h-1)}.
#[derive(Clone)]
pub struct TwistedElem {
    params: Arc<RingParams>,
    a: Vec<u32>,
}

impl PartialEq for TwistedElem {
    fn eq(&self, o: &Self) -> bool {
        *self.params == *o.params && self.a == o.a
    }
}
impl Eq for TwistedElem {}

impl fmt::Debug for TwistedElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl TwistedElem {
    pub fn new(params: &Arc<RingParams>, a: Vec<u32>) -> Result<TwistedElem> {
        params.check_code(&a)?;
        Ok(TwistedElem { params: params.clone(), a })
    }

    /// 1 + sum_{j>=1} a_j tau^j from the list a_1..a_top.
    pub fn principal(params: &Arc<RingParams>, tail: &[u32]) -> Result<TwistedElem> {
        let mut a = Vec::with_capacity(params.len());
        a.push(1);
        a.extend_from_slice(tail);
        TwistedElem::new(params, a)
    }

    pub fn one(params: &Arc<RingParams>) -> TwistedElem {
        let mut a = vec![0; params.len()];
        a[0] = 1;
        TwistedElem { params: params.clone(), a }
    }

    pub fn params(&self) -> &Arc<RingParams> {
        &self.params
    }
    pub fn coeffs(&self) -> &[u32] {
        &self.a
    }
    pub fn coeff(&self, j: usize) -> u32 {
        self.a[j]
    }

    pub fn is_unit(&self) -> bool {
        self.a[0] != 0
    }
    /// Member of U^{n,q}_h.
    pub fn is_principal(&self) -> bool {
        self.a[0] == 1
    }
    pub fn is_one(&self) -> bool {
        self.a[0] == 1 && self.a[1..].iter().all(|&x| x == 0)
    }

    pub fn mul(&self, o: &TwistedElem) -> Result<TwistedElem> {
        same_params(&self.params, &o.params)?;
        Ok(TwistedElem { params: self.params.clone(), a: self.params.mul_raw(&self.a, &o.a) })
    }

    pub fn inv(&self) -> Result<TwistedElem> {
        let a = self.params.inv_raw(&self.a).ok_or(Error::NotAUnit)?;
        Ok(TwistedElem { params: self.params.clone(), a })
    }

    /// Coefficientwise q^e power.
    pub fn frob(&self, e: i64) -> TwistedElem {
        TwistedElem { params: self.params.clone(), a: self.params.frob_raw(&self.a, e) }
    }

    /// L_{q^d}(g) = F_{q^d}(g) g^{-1}.
    pub fn lang(&self, d: u32) -> Result<TwistedElem> {
        let a = self.params.lang_raw(&self.a, d).ok_or(Error::NotAUnit)?;
        Ok(TwistedElem { params: self.params.clone(), a })
    }

    /// g x g^{-1}.
    pub fn conj_by(&self, g: &TwistedElem) -> Result<TwistedElem> {
        g.mul(self)?.mul(&g.inv()?)
    }

    /// Whether all coefficients lie in F_{q^d}.
    pub fn is_rational(&self, d: u32) -> bool {
        let t = self.params.frob_table(d as i64);
        self.a.iter().all(|&x| t[x as usize] == x)
    }

    pub fn label(&self) -> String {
        let f = &self.params.field;
        let parts: Vec<String> = self.a.iter().map(|&x| f.fmt_elem(x)).collect();
        format!("[{}]", parts.join(", "))
    }
}

/// Element 1 + a_1 e_1 + ... + a_n e_n of G^{n,q}; a[0] is always 1.
#[derive(Clone)]
pub struct GnqElem {
    params: Arc<RingParams>,
    a: Vec<u32>,
}

impl PartialEq for GnqElem {
    fn eq(&self, o: &Self) -> bool {
        *self.params == *o.params && self.a == o.a
    }
}
impl Eq for GnqElem {}

impl fmt::Debug for GnqElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fl = &self.params.field;
        let parts: Vec<String> = self.a[1..].iter().map(|&x| fl.fmt_elem(x)).collect();
        write!(f, "G[{}]", parts.join(", "))
    }
}

/// Group law of G^{n,q} on coefficient vectors a_0 = 1, a_1..a_n.
pub fn gnq_mul_raw(params: &RingParams, a: &[u32], b: &[u32], out: &mut [u32]) {
    let f = params.field();
    let n = params.n() as usize;
    out[0] = 1;
    for k in 1..n {
        out[k] = f.add(a[k], b[k]);
    }
    let mut top = f.add(a[n], b[n]);
    for i in 1..n {
        if a[i] != 0 && b[n - i] != 0 {
            top = f.add(top, f.mul(a[i], params.frob_q(b[n - i], i as i64)));
        }
    }
    out[n] = top;
}

/// Inverse in G^{n,q}: c_k = -a_k for k < n, c_n = -a_n + sum_{i+j=n} a_i a_j^{q^i}.
pub fn gnq_inv_raw(params: &RingParams, a: &[u32]) -> Vec<u32> {
    let f = params.field();
    let n = params.n() as usize;
    let mut c = vec![0u32; n + 1];
    c[0] = 1;
    for k in 1..n {
        c[k] = f.neg(a[k]);
    }
    let mut top = f.neg(a[n]);
    for i in 1..n {
        if a[i] != 0 && a[n - i] != 0 {
            top = f.add(top, f.mul(a[i], params.frob_q(a[n - i], i as i64)));
        }
    }
    c[n] = top;
    c
}

impl GnqElem {
    /// The params carry n, q and the coefficient field; their h is ignored.
    pub fn new(params: &Arc<RingParams>, tail: &[u32]) -> Result<GnqElem> {
        if tail.len() != params.n() as usize {
            return Err(Error::WrongParameters(format!("G^{{n,q}} needs {} coordinates", params.n())));
        }
        let mut a = vec![1];
        a.extend_from_slice(tail);
        if a.iter().any(|&x| x >= params.field().size()) {
            return Err(Error::WrongParameters("coordinate outside the coefficient field".into()));
        }
        Ok(GnqElem { params: params.clone(), a })
    }

    pub fn one(params: &Arc<RingParams>) -> GnqElem {
        let mut a = vec![0; params.n() as usize + 1];
        a[0] = 1;
        GnqElem { params: params.clone(), a }
    }

    pub fn params(&self) -> &Arc<RingParams> {
        &self.params
    }
    /// a_0 = 1, a_1, ..., a_n.
    pub fn coeffs(&self) -> &[u32] {
        &self.a
    }

    pub fn mul(&self, o: &GnqElem) -> Result<GnqElem> {
        same_params(&self.params, &o.params)?;
        let mut out = vec![0; self.a.len()];
        gnq_mul_raw(&self.params, &self.a, &o.a, &mut out);
        Ok(GnqElem { params: self.params.clone(), a: out })
    }

    pub fn inv(&self) -> GnqElem {
        GnqElem { params: self.params.clone(), a: gnq_inv_raw(&self.params, &self.a) }
    }

    pub fn frob(&self, e: i64) -> GnqElem {
        GnqElem { params: self.params.clone(), a: self.params.frob_raw(&self.a, e) }
    }

    pub fn lang(&self, d: u32) -> GnqElem {
        let g = self.frob(d as i64);
        g.mul(&self.inv()).expect("same params")
    }
}

/// The subgroups of U^{n,q}_h(F_{q^n}) and G^{n,q}(F_{q^n}) that appear in the constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubgroupKind {
    Full,
    /// coordinates a_j with n | j
    Center,
    /// a_j = 0 for j <= n/2 with m not dividing j
    H(u32),
    /// H_m together with a_{n/2} in F_{q^{n/2}}
    Gamma(u32),
    /// a_1 = ... = a_{j-1} = 0
    Filtration(u32),
}

impl fmt::Display for SubgroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubgroupKind::Full => write!(f, "full"),
            SubgroupKind::Center => write!(f, "center"),
            SubgroupKind::H(m) => write!(f, "H_{m}"),
            SubgroupKind::Gamma(m) => write!(f, "Gamma_{m}"),
            SubgroupKind::Filtration(j) => write!(f, "U^{j}"),
        }
    }
}

/// A subgroup given by per-coordinate conditions on the principal part a_1..a_top.
/// The same description serves U^{n,q}_h and G^{n,q} (for the latter top = n).
#[derive(Clone, Debug)]
pub struct SubgroupSpec {
    pub kind: SubgroupKind,
    n: u32,
    top: usize,
    qe: u32,
}

/// Allowed values of one coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordDomain {
    Zero,
    All,
    /// the subfield F_{p^d}
    Sub(u32),
}

impl SubgroupSpec {
    /// Subgroup of U^{n,q}_h; the H and Gamma families need h = 2.
    pub fn for_ring(params: &RingParams, kind: SubgroupKind) -> Result<SubgroupSpec> {
        Self::make(kind, params.n(), params.top(), params.qe(), params.h())
    }

    /// Subgroup of G^{n,q}.
    pub fn for_gnq(params: &RingParams, kind: SubgroupKind) -> Result<SubgroupSpec> {
        Self::make(kind, params.n(), params.n() as usize, params.qe(), 2)
    }

    fn make(kind: SubgroupKind, n: u32, top: usize, qe: u32, h: u32) -> Result<SubgroupSpec> {
        match kind {
            SubgroupKind::H(m) | SubgroupKind::Gamma(m) => {
                if m == 0 || !n.is_multiple_of(m) {
                    return Err(Error::WrongParameters(format!("m={m} does not divide n={n}")));
                }
                if h != 2 {
                    return Err(Error::UnsupportedLevel(h));
                }
                if matches!(kind, SubgroupKind::Gamma(_)) && !n.is_multiple_of(2) {
                    return Err(Error::WrongParameters("Gamma_m needs n even".into()));
                }
            }
            SubgroupKind::Filtration(j) if j == 0 => {
                return Err(Error::WrongParameters("filtration index starts at 1".into()));
            }
            _ => {}
        }
        Ok(SubgroupSpec { kind, n, top, qe })
    }

    /// Domain of coordinate a_j, 1 <= j <= top.
    pub fn domain(&self, j: usize) -> CoordDomain {
        let n = self.n as usize;
        match self.kind {
            SubgroupKind::Full => CoordDomain::All,
            SubgroupKind::Center => {
                if j.is_multiple_of(n) {
                    CoordDomain::All
                } else {
                    CoordDomain::Zero
                }
            }
            SubgroupKind::H(m) => {
                if 2 * j <= n && !j.is_multiple_of(m as usize) {
                    CoordDomain::Zero
                } else {
                    CoordDomain::All
                }
            }
            SubgroupKind::Gamma(m) => {
                if 2 * j == n && !j.is_multiple_of(m as usize) {
                    CoordDomain::Sub(self.qe * self.n / 2)
                } else if 2 * j <= n && !j.is_multiple_of(m as usize) {
                    CoordDomain::Zero
                } else {
                    CoordDomain::All
                }
            }
            SubgroupKind::Filtration(i) => {
                if j < i as usize {
                    CoordDomain::Zero
                } else {
                    CoordDomain::All
                }
            }
        }
    }

    pub fn top(&self) -> usize {
        self.top
    }

    /// Membership test on a full coefficient vector a_0..a_top with a_0 = 1.
    pub fn contains(&self, field: &Field, a: &[u32]) -> bool {
        if a[0] != 1 {
            return false;
        }
        (1..=self.top).all(|j| match self.domain(j) {
            CoordDomain::Zero => a[j] == 0,
            CoordDomain::All => true,
            CoordDomain::Sub(d) => field.in_subfield(a[j], d),
        })
    }

    /// Per-coordinate value lists inside the field of rational points.
    pub fn coord_values(&self, field: &Field, rational_degree: u32) -> Vec<Vec<u32>> {
        (1..=self.top)
            .map(|j| match self.domain(j) {
                CoordDomain::Zero => vec![0],
                CoordDomain::All => field.subfield_elems(rational_degree),
                CoordDomain::Sub(d) => field.subfield_elems(d),
            })
            .collect()
    }
}

fn check_nested(small: &RingParams, big: &RingParams, m: u32) -> Result<()> {
    let ok = small.field().id() == big.field().id()
        && small.qe() == big.qe() * m
        && big.n() == m * small.n()
        && small.h() == big.h();
    if ok {
        Ok(())
    } else {
        Err(Error::ParameterMismatch(format!("{small:?} does not sit inside {big:?} with m={m}")))
    }
}

/// U^{n_1,q_1} -> U^{n,q}: b_i tau^i goes to b_i tau^{m i}, q_1 = q^m, n = m n_1.
pub fn embed_sub(x: &TwistedElem, big: &Arc<RingParams>) -> Result<TwistedElem> {
    let small = x.params();
    if !small.qe().is_multiple_of(big.qe()) {
        return Err(Error::ParameterMismatch("q_1 is not a power of q".into()));
    }
    let m = small.qe() / big.qe();
    check_nested(small, big, m)?;
    let mut a = vec![0; big.len()];
    for (i, &b) in x.coeffs().iter().enumerate() {
        a[i * m as usize] = b;
    }
    TwistedElem::new(big, a)
}

/// G^{n_1,q_1} -> G^{n,q}: b_i e_i goes to b_i e_{m i}.
pub fn embed_sub_gnq(x: &GnqElem, big: &Arc<RingParams>) -> Result<GnqElem> {
    let small = x.params();
    if !small.qe().is_multiple_of(big.qe()) {
        return Err(Error::ParameterMismatch("q_1 is not a power of q".into()));
    }
    let m = small.qe() / big.qe();
    check_nested(small, big, m)?;
    let mut tail = vec![0; big.n() as usize];
    for (i, &b) in x.coeffs().iter().enumerate().skip(1) {
        tail[i * m as usize - 1] = b;
    }
    GnqElem::new(big, &tail)
}

/// Parameters of the small ring U^{n/m, q^m} sharing the coefficient field.
pub fn small_params(big: &RingParams, m: u32) -> Result<Arc<RingParams>> {
    if m == 0 || !big.n().is_multiple_of(m) {
        return Err(Error::WrongParameters(format!("m={m} does not divide n={}", big.n())));
    }
    RingParams::new(big.field().clone(), big.qe() * m, big.n() / m, big.h())
}

/// nu_m on H_m: keeps the coordinates a_{m i} as b_i and discards the rest.
pub fn nu_m(x: &TwistedElem, m: u32) -> Result<TwistedElem> {
    let p = x.params();
    let spec = SubgroupSpec::for_ring(p, SubgroupKind::H(m))?;
    if !spec.contains(p.field(), x.coeffs()) {
        return Err(Error::NotInSubgroup(format!("H_{m}")));
    }
    let sp = small_params(p, m)?;
    let a = (0..sp.len()).map(|i| x.coeff(i * m as usize)).collect();
    TwistedElem::new(&sp, a)
}

/// nu'_m on H'_m inside G^{n,q}.
pub fn nu_m_gnq(x: &GnqElem, m: u32) -> Result<GnqElem> {
    let p = x.params();
    let spec = SubgroupSpec::for_gnq(p, SubgroupKind::H(m))?;
    if !spec.contains(p.field(), x.coeffs()) {
        return Err(Error::NotInSubgroup(format!("H'_{m}")));
    }
    let sp = small_params(p, m)?;
    let tail: Vec<u32> = (1..=sp.n() as usize).map(|i| x.coeffs()[i * m as usize]).collect();
    GnqElem::new(&sp, &tail)
}

/// Iterates over all principal coefficient vectors (a_0 = 1) whose coordinates range
/// over the given value lists, in mixed-radix order with a_1 varying fastest.
pub fn for_each_tuple(values: &[Vec<u32>], mut f: impl FnMut(&[u32])) {
    let mut idx = vec![0usize; values.len()];
    let mut cur: Vec<u32> = std::iter::once(1).chain(values.iter().map(|v| v[0])).collect();
    if values.iter().any(|v| v.is_empty()) {
        return;
    }
    loop {
        f(&cur);
        let mut j = 0;
        loop {
            if j == values.len() {
                return;
            }
            idx[j] += 1;
            if idx[j] < values[j].len() {
                cur[j + 1] = values[j][idx[j]];
                break;
            }
            idx[j] = 0;
            cur[j + 1] = values[j][0];
            j += 1;
        }
    }
}

/// The left action of gamma = 1 + c_1 pi + ... + c_{h-1} pi^{h-1} (c_t in F_{q^n}) on X_h:
/// left-multiply iota'_h(x) by diag(gamma, phi(gamma), ...) and pull the product back.
pub fn star_action(gamma: &[u32], x: &TwistedElem) -> Result<TwistedElem> {
    let params = x.params();
    let n = params.n() as usize;
    let h = params.h() as usize;
    if gamma.len() != h || gamma[0] != 1 {
        return Err(Error::WrongParameters(format!("gamma must be a principal unit mod pi^{h}")));
    }
    let rd = params.rational_degree();
    if gamma.iter().any(|&c| !params.field().in_subfield(c, rd)) {
        return Err(Error::ParameterMismatch("gamma must have coefficients in F_{q^n}".into()));
    }
    if !crate::matmodel::in_xh(x) {
        return Err(Error::NotInXh);
    }
    let prod = crate::matmodel::diag_lift(params, gamma).mul(&crate::matmodel::iota_prime(x));
    // row 0 carries sum_t a_{nt+c} pi^t in column c
    let mut a = vec![0; params.len()];
    for (k, slot) in a.iter_mut().enumerate() {
        *slot = prod.entry(0, k % n).c[k / n];
    }
    let y = TwistedElem::new(params, a)?;
    if crate::matmodel::iota_prime(&y) != prod {
        return Err(Error::WrongParameters("product left the image of iota'".into()));
    }
    Ok(y)
}

/// Coordinate form of the same action: (gamma * x)_k = sum_t c_t x_{k-nt}.
pub fn star_action_raw(params: &RingParams, gamma: &[u32], a: &[u32], out: &mut [u32]) {
    let f = params.field();
    let n = params.n() as usize;
    for k in 0..params.len() {
        let mut acc = a[k];
        for t in 1..gamma.len() {
            if n * t > k {
                break;
            }
            let c = gamma[t];
            if c != 0 {
                acc = f.add(acc, f.mul(c, a[k - n * t]));
            }
        }
        out[k] = acc;
    }
}

/// Number of tuples described by the value lists.
pub fn tuple_count(values: &[Vec<u32>]) -> u128 {
    values.iter().map(|v| v.len() as u128).product()
}

/// Like `for_each_tuple`, restricted to the mixed-radix index range [start, end).
pub fn for_each_tuple_range(values: &[Vec<u32>], start: u64, end: u64, mut f: impl FnMut(u64, &[u32])) {
    if start >= end {
        return;
    }
    let mut idx = vec![0usize; values.len()];
    let mut rest = start;
    for (j, v) in values.iter().enumerate() {
        idx[j] = (rest % v.len() as u64) as usize;
        rest /= v.len() as u64;
    }
    let mut cur: Vec<u32> = std::iter::once(1).chain(values.iter().zip(&idx).map(|(v, &i)| v[i])).collect();
    let mut pos = start;
    loop {
        f(pos, &cur);
        pos += 1;
        if pos == end {
            return;
        }
        let mut j = 0;
        loop {
            idx[j] += 1;
            if idx[j] < values[j].len() {
                cur[j + 1] = values[j][idx[j]];
                break;
            }
            idx[j] = 0;
            cur[j + 1] = values[j][0];
            j += 1;
        }
    }
}

/// Contiguous shard boundaries of [0, total).
pub fn shard_ranges(total: u64, shards: usize) -> Vec<(u64, u64)> {
    let shards = shards.max(1) as u64;
    (0..shards).map(|i| (total * i / shards, total * (i + 1) / shards)).filter(|(a, b)| a < b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f4() -> Arc<Field> {
        Field::get(2, 2).unwrap()
    }

    #[test]
    fn square_of_one_plus_omega_tau() {
        let p = RingParams::new(f4(), 1, 2, 2).unwrap();
        let w = p.field().generator();
        let x = TwistedElem::principal(&p, &[w, 0]).unwrap();
        // omega * omega^2 = 1 and the tau coefficient is 2 omega = 0
        assert_eq!(x.mul(&x).unwrap().coeffs(), &[1, 0, 1]);
    }

    #[test]
    fn central_inverse_and_identity() {
        let p = RingParams::over(3, 1, 2, 2, 1).unwrap();
        let f = p.field().clone();
        for a in f.elems() {
            let z = TwistedElem::principal(&p, &[0, a]).unwrap();
            assert_eq!(z.inv().unwrap().coeffs(), &[1, 0, f.neg(a)]);
            assert_eq!(z.mul(&TwistedElem::one(&p)).unwrap(), z);
        }
        let bad = TwistedElem::new(&p, vec![0, 1, 0]).unwrap();
        assert_eq!(bad.inv(), Err(Error::NotAUnit));
    }

    #[test]
    fn inverse_and_associativity_exhaustive_small() {
        let p = RingParams::over(2, 1, 2, 3, 1).unwrap();
        let vals = SubgroupSpec::for_ring(&p, SubgroupKind::Full).unwrap().coord_values(p.field(), 2);
        let mut all = Vec::new();
        for_each_tuple(&vals, |a| all.push(a.to_vec()));
        assert_eq!(all.len(), 256);
        for a in &all {
            let ai = p.inv_raw(a).unwrap();
            assert_eq!(p.mul_raw(a, &ai), TwistedElem::one(&p).coeffs());
            assert_eq!(p.mul_raw(&ai, a), TwistedElem::one(&p).coeffs());
        }
        for a in all.iter().step_by(7) {
            for b in all.iter().step_by(5) {
                for c in all.iter().step_by(11) {
                    let l = p.mul_raw(&p.mul_raw(a, b), c);
                    let r = p.mul_raw(a, &p.mul_raw(b, c));
                    assert_eq!(l, r);
                }
            }
        }
    }

    #[test]
    fn gnq_cross_term_and_center() {
        let p = RingParams::over(2, 1, 3, 2, 1).unwrap();
        let f = p.field().clone();
        let (a, b) = (f.generator(), f.exp(3));
        let x = GnqElem::new(&p, &[a, 0, 0]).unwrap();
        let y = GnqElem::new(&p, &[0, b, 0]).unwrap();
        let want = f.mul(a, f.frob_p(b, 1));
        assert_eq!(x.mul(&y).unwrap().coeffs(), &[1, a, b, want]);
        let z = GnqElem::new(&p, &[0, 0, f.exp(5)]).unwrap();
        assert_eq!(z.mul(&x).unwrap(), x.mul(&z).unwrap());
        assert_eq!(x.mul(&x.inv()).unwrap(), GnqElem::one(&p));
    }

    #[test]
    fn lang_is_trivial_on_rational_points() {
        let p = RingParams::over(2, 1, 2, 2, 2).unwrap();
        let f = p.field().clone();
        for a in f.subfield_elems(2) {
            for b in f.subfield_elems(2) {
                let g = TwistedElem::principal(&p, &[a, b]).unwrap();
                assert!(g.lang(2).unwrap().is_one());
            }
        }
        assert!(TwistedElem::one(&p).lang(2).unwrap().is_one());
    }

    #[test]
    fn nu_and_embed_round_trip() {
        let p = RingParams::over(2, 1, 2, 2, 1).unwrap();
        let f = p.field().clone();
        let x = TwistedElem::principal(&p, &[0, f.generator()]).unwrap();
        let y = nu_m(&x, 2).unwrap();
        assert_eq!(y.params().n(), 1);
        assert_eq!(y.params().qe(), 2);
        assert_eq!(embed_sub(&y, &p).unwrap(), x);
        let bad = TwistedElem::principal(&p, &[1, 0]).unwrap();
        assert!(matches!(nu_m(&bad, 2), Err(Error::NotInSubgroup(_))));
        let other = RingParams::over(3, 1, 2, 2, 1).unwrap();
        assert!(matches!(
            x.mul(&TwistedElem::one(&other)),
            Err(Error::ParameterMismatch(_))
        ));
    }

    #[test]
    fn ranged_enumeration_matches_full() {
        let vals = vec![vec![0, 1, 2], vec![5], vec![7, 8]];
        let mut full = Vec::new();
        for_each_tuple(&vals, |a| full.push(a.to_vec()));
        assert_eq!(full.len() as u128, tuple_count(&vals));
        let mut parts = Vec::new();
        for (a, b) in shard_ranges(6, 4) {
            for_each_tuple_range(&vals, a, b, |i, t| parts.push((i, t.to_vec())));
        }
        let idx: Vec<u64> = parts.iter().map(|p| p.0).collect();
        assert_eq!(idx, (0..6).collect::<Vec<_>>());
        assert_eq!(parts.into_iter().map(|p| p.1).collect::<Vec<_>>(), full);
    }

    #[test]
    fn star_action_matches_closed_formula_and_commutes() {
        let p = RingParams::over(2, 1, 2, 3, 2).unwrap();
        let f = p.field().clone();
        let rat = f.subfield_elems(2);
        let all = SubgroupSpec::for_ring(&p, SubgroupKind::Full).unwrap().coord_values(&f, 4);
        let mut xs = Vec::new();
        for_each_tuple(&all, |a| {
            if crate::matmodel::in_xh_raw(&p, a) {
                xs.push(a.to_vec());
            }
        });
        let rvals = SubgroupSpec::for_ring(&p, SubgroupKind::Full).unwrap().coord_values(&f, 2);
        let mut us = Vec::new();
        for_each_tuple(&rvals, |a| us.push(a.to_vec()));
        for (ix, a) in xs.iter().enumerate().step_by(37) {
            let x = TwistedElem::new(&p, a.clone()).unwrap();
            for &lam in &rat {
                for &mu in &rat {
                    let gamma = [1, lam, mu];
                    let y = star_action(&gamma, &x).unwrap();
                    let (a1, a2, a3, a4) = (a[1], a[2], a[3], a[4]);
                    let want = vec![
                        1,
                        a1,
                        f.add(lam, a2),
                        f.add(a3, f.mul(lam, a1)),
                        f.add(f.add(mu, a4), f.mul(lam, a2)),
                    ];
                    assert_eq!(y.coeffs(), &want[..]);
                    let mut raw = vec![0; 5];
                    star_action_raw(&p, &gamma, a, &mut raw);
                    assert_eq!(raw, want);
                    let u = TwistedElem::new(&p, us[(ix * 7 + lam as usize) % us.len()].clone()).unwrap();
                    let lhs = y.mul(&u).unwrap();
                    let rhs = star_action(&gamma, &x.mul(&u).unwrap()).unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
        let outside = TwistedElem::principal(&p, &[0, f.exp(1), 0, 0]).unwrap();
        if !crate::matmodel::in_xh(&outside) {
            assert_eq!(star_action(&[1, 0, 0], &outside), Err(Error::NotInXh));
        }
    }

    #[test]
    fn gamma_needs_even_n() {
        let p = RingParams::over(2, 1, 3, 2, 1).unwrap();
        assert!(SubgroupSpec::for_ring(&p, SubgroupKind::Gamma(3)).is_err());
        let p2 = RingParams::over(2, 1, 2, 2, 1).unwrap();
        let g = SubgroupSpec::for_ring(&p2, SubgroupKind::Gamma(2)).unwrap();
        assert_eq!(g.domain(1), CoordDomain::Sub(1));
        assert_eq!(g.domain(2), CoordDomain::All);
    }
}
