//! Finite fields F_{p^k} in Conway-polynomial towers.
//!
//! Elements are stored as integer codes `c_0 + c_1 p + ... + c_{k-1} p^{k-1}` of their
//! coefficient vector in the power basis of a root of the Conway polynomial. Code order
//! is therefore lexicographic order on coefficient vectors read from the top degree down.
//! Multiplication goes through log/antilog tables of the Conway root, which is primitive.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Largest field built by default.
pub const MAX_FIELD_SIZE: u64 = 1 << 16;

const NONE: u32 = u32::MAX;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn divisors(n: u32) -> Vec<u32> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

// Dense polynomials over F_p, lowest degree first.

fn poly_mulmod(a: &[u32], b: &[u32], f: &[u32], p: u32) -> Vec<u32> {
    let k = f.len() - 1;
    let mut prod = vec![0u64; 2 * k];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] += x as u64 * y as u64;
        }
    }
    let p64 = p as u64;
    let mut prod: Vec<u64> = prod.into_iter().map(|c| c % p64).collect();
    for d in (k..2 * k).rev() {
        let c = prod[d];
        if c == 0 {
            continue;
        }
        // x^d = x^{d-k} * x^k and x^k = -sum f_i x^i
        for i in 0..k {
            prod[d - k + i] = (prod[d - k + i] + (p64 - c) * f[i] as u64) % p64;
        }
        prod[d] = 0;
    }
    prod.truncate(k);
    prod.into_iter().map(|c| c as u32).collect()
}

fn poly_powmod_x(e: u64, f: &[u32], p: u32) -> Vec<u32> {
    let k = f.len() - 1;
    let mut result = vec![0u32; k];
    result[0] = 1;
    let mut base = vec![0u32; k];
    if k == 1 {
        base[0] = (p - f[0]) % p;
    } else {
        base[1] = 1;
    }
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mulmod(&result, &base, f, p);
        }
        base = poly_mulmod(&base, &base, f, p);
        e >>= 1;
    }
    result
}

fn poly_is_one(a: &[u32]) -> bool {
    a[0] == 1 && a[1..].iter().all(|&c| c == 0)
}

/// Evaluates `g` at `y` modulo `f`.
fn poly_compose_mod(g: &[u32], y: &[u32], f: &[u32], p: u32) -> Vec<u32> {
    let k = f.len() - 1;
    let mut acc = vec![0u32; k];
    for &c in g.iter().rev() {
        acc = poly_mulmod(&acc, y, f, p);
        acc[0] = (acc[0] + c) % p;
    }
    acc
}

fn conway_cache() -> &'static Mutex<HashMap<(u32, u32), Vec<u32>>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u32), Vec<u32>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The Conway polynomial C_{p,k}, monic, coefficients lowest degree first.
///
/// Found by search: the least primitive polynomial in Conway's order (the word
/// (a_1,...,a_k) of x^k - a_1 x^{k-1} + a_2 x^{k-2} - ...) that is compatible with
/// C_{p,d} for every proper divisor d of k.
pub fn conway_polynomial(p: u32, k: u32) -> Result<Vec<u32>> {
    if !is_prime(p as u64) {
        return Err(Error::NonPrime(p as u64));
    }
    let size = (p as u128).pow(k);
    if size > MAX_FIELD_SIZE as u128 {
        return Err(Error::SizeLimitExceeded {
            what: format!("F_{p}^{k}"),
            needed: size,
            limit: MAX_FIELD_SIZE as u128,
        });
    }
    if let Some(f) = conway_cache().lock().unwrap().get(&(p, k)) {
        return Ok(f.clone());
    }
    let subs: Vec<(u32, Vec<u32>)> = divisors(k)
        .into_iter()
        .filter(|&d| d < k)
        .map(|d| conway_polynomial(p, d).map(|c| (d, c)))
        .collect::<Result<_>>()?;
    let order = (p as u64).pow(k) - 1;
    let factors = prime_factors(order);
    let ku = k as usize;
    let mut found = None;
    'word: for w in 0..(p as u64).pow(k) {
        // digits of w, most significant first, are a_1..a_k
        let mut alpha = vec![0u32; ku];
        let mut t = w;
        for i in (0..ku).rev() {
            alpha[i] = (t % p as u64) as u32;
            t /= p as u64;
        }
        if alpha[ku - 1] == 0 {
            continue;
        }
        let mut f = vec![0u32; ku + 1];
        f[ku] = 1;
        for i in 1..=ku {
            let a = alpha[i - 1];
            f[ku - i] = if i % 2 == 0 { a } else { (p - a) % p };
        }
        if !poly_is_one(&pad(poly_powmod_x(order, &f, p), ku)) {
            continue;
        }
        for &r in &factors {
            if poly_is_one(&pad(poly_powmod_x(order / r, &f, p), ku)) {
                continue 'word;
            }
        }
        for (d, cd) in &subs {
            let e = order / ((p as u64).pow(*d) - 1);
            let y = poly_powmod_x(e, &f, p);
            if poly_compose_mod(cd, &y, &f, p).iter().any(|&c| c != 0) {
                continue 'word;
            }
        }
        found = Some(f);
        break;
    }
    let f = found.expect("a Conway polynomial always exists");
    conway_cache().lock().unwrap().insert((p, k), f.clone());
    Ok(f)
}

fn pad(mut v: Vec<u32>, k: usize) -> Vec<u32> {
    v.resize(k.max(1), 0);
    if k == 1 {
        v.truncate(1);
    }
    v
}

/// F_{p^k} with log tables relative to the Conway root.
pub struct Field {
    p: u32,
    k: u32,
    size: u32,
    modulus: Vec<u32>,
    /// antilog table of length 2(size-1) so products of logs need no reduction
    exp: Vec<u32>,
    log: Vec<u32>,
    /// zech[i] = log(1 + g^i), NONE when 1 + g^i = 0 (odd p only)
    zech: Vec<u32>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{}", self.p, self.k)
    }
}

impl PartialEq for Field {
    fn eq(&self, o: &Self) -> bool {
        self.p == o.p && self.k == o.k
    }
}
impl Eq for Field {}

fn field_cache() -> &'static Mutex<HashMap<(u32, u32), Arc<Field>>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u32), Arc<Field>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Field {
    /// Shared, cached instance of F_{p^k}.
    pub fn get(p: u32, k: u32) -> Result<Arc<Field>> {
        if k == 0 {
            return Err(Error::WrongParameters("field degree must be positive".into()));
        }
        if let Some(f) = field_cache().lock().unwrap().get(&(p, k)) {
            return Ok(f.clone());
        }
        let f = Arc::new(Field::build(p, k)?);
        field_cache().lock().unwrap().insert((p, k), f.clone());
        Ok(f)
    }

    fn build(p: u32, k: u32) -> Result<Field> {
        let modulus = conway_polynomial(p, k)?;
        let size = p.pow(k);
        let n = (size - 1) as usize;
        let ku = k as usize;
        let mut exp = vec![0u32; 2 * n.max(1)];
        let mut log = vec![NONE; size as usize];
        let mut cur = vec![0u32; ku];
        cur[0] = 1;
        for i in 0..n {
            let code = encode(&cur, p);
            exp[i] = code;
            exp[i + n] = code;
            log[code as usize] = i as u32;
            // multiply by the root x
            let top = cur[ku - 1];
            for j in (1..ku).rev() {
                cur[j] = cur[j - 1];
            }
            cur[0] = 0;
            if ku == 1 {
                cur[0] = (top * ((p - modulus[0]) % p)) % p;
            } else {
                for j in 0..ku {
                    cur[j] = (cur[j] + top * ((p - modulus[j]) % p)) % p;
                }
            }
        }
        let mut field = Field { p, k, size, modulus, exp, log, zech: Vec::new() };
        if p != 2 {
            let mut zech = vec![NONE; n];
            for (i, z) in zech.iter_mut().enumerate() {
                let x = field.exp[i];
                let c0 = x % p;
                let y = x - c0 + (c0 + 1) % p;
                *z = field.log[y as usize];
            }
            field.zech = zech;
        }
        Ok(field)
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn size(&self) -> u32 {
        self.size
    }
    pub fn id(&self) -> FieldId {
        FieldId { p: self.p, k: self.k }
    }
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }
    /// Order of the multiplicative group.
    pub fn units(&self) -> u32 {
        self.size - 1
    }
    /// The Conway root, a generator of the unit group.
    pub fn generator(&self) -> u32 {
        self.exp[1 % self.units() as usize]
    }

    pub fn coeffs(&self, x: u32) -> Vec<u32> {
        decode(x, self.p, self.k)
    }
    pub fn from_coeffs(&self, c: &[u32]) -> u32 {
        assert!(c.len() <= self.k as usize);
        encode(c, self.p)
    }
    /// Image of an integer under Z -> F_p.
    pub fn from_int(&self, n: i64) -> u32 {
        n.rem_euclid(self.p as i64) as u32
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        if self.p == 2 {
            return a ^ b;
        }
        if a == 0 {
            return b;
        }
        if b == 0 {
            return a;
        }
        let n = self.units();
        let la = self.log[a as usize];
        let lb = self.log[b as usize];
        let d = if lb >= la { lb - la } else { lb + n - la };
        let z = self.zech[d as usize];
        if z == NONE {
            0
        } else {
            self.exp[(la + z) as usize]
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if self.p == 2 || a == 0 {
            return a;
        }
        let n = self.units();
        self.exp[(self.log[a as usize] + n / 2) as usize]
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
    }

    pub fn inv(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return None;
        }
        let n = self.units();
        Some(self.exp[((n - self.log[a as usize]) % n) as usize])
    }

    pub fn div(&self, a: u32, b: u32) -> Option<u32> {
        self.inv(b).map(|ib| self.mul(a, ib))
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let n = self.units() as u64;
        self.exp[((self.log[a as usize] as u64 * (e % n)) % n) as usize]
    }

    /// x^{p^j} for any integer j.
    #[inline]
    pub fn frob_p(&self, x: u32, j: i64) -> u32 {
        if x == 0 {
            return 0;
        }
        let n = self.units() as u64;
        let j = j.rem_euclid(self.k as i64) as u32;
        let e = (self.p as u64).pow(j) % n.max(1);
        self.exp[((self.log[x as usize] as u64 * e) % n.max(1)) as usize]
    }

    /// Discrete log with respect to the generator.
    pub fn log(&self, x: u32) -> Option<u32> {
        (x != 0).then(|| self.log[x as usize])
    }

    pub fn exp(&self, e: u64) -> u32 {
        self.exp[(e % self.units() as u64) as usize]
    }

    /// Whether x lies in the subfield F_{p^d}.
    pub fn in_subfield(&self, x: u32, d: u32) -> bool {
        self.frob_p(x, d as i64) == x
    }

    /// Elements of the subfield F_{p^d} in the code order of F_{p^d} itself.
    pub fn subfield_elems(&self, d: u32) -> Vec<u32> {
        assert!(self.k.is_multiple_of(d), "F_{}^{} is not inside F_{}^{}", self.p, d, self.p, self.k);
        let sub = Field::get(self.p, d).expect("subfield of a valid field");
        (0..sub.size()).map(|c| embed_code(&sub, self, c)).collect()
    }

    pub fn elems(&self) -> std::ops::Range<u32> {
        0..self.size
    }

    /// Tr from F_{p^a} to F_{p^d} of an element of F_{p^a}.
    pub fn trace(&self, x: u32, a: u32, d: u32) -> u32 {
        debug_assert!(a.is_multiple_of(d) && self.k.is_multiple_of(a));
        let mut acc = 0;
        let mut y = x;
        for _ in 0..a / d {
            acc = self.add(acc, y);
            y = self.frob_p(y, d as i64);
        }
        acc
    }

    /// Nm from F_{p^a} to F_{p^d} of an element of F_{p^a}.
    pub fn norm(&self, x: u32, a: u32, d: u32) -> u32 {
        debug_assert!(a.is_multiple_of(d) && self.k.is_multiple_of(a));
        if x == 0 {
            return 0;
        }
        let n = self.units() as u64;
        let pd = (self.p as u64).pow(d);
        let pa = (self.p as u64).pow(a);
        let e = ((pa - 1) / (pd - 1)) % n;
        self.exp[((self.log[x as usize] as u64 * e) % n) as usize]
    }

    /// Tr to F_p, as an integer in 0..p.
    pub fn abs_trace(&self, x: u32, a: u32) -> u32 {
        self.trace(x, a, 1)
    }

    /// Image of x under the Conway-compatible embedding into `sup`.
    pub fn embed_in(&self, sup: &Field, x: u32) -> Result<u32> {
        if sup.p != self.p || !sup.k.is_multiple_of(self.k) {
            return Err(Error::NotASubfield { p: self.p, sub: self.k, sup: sup.k });
        }
        Ok(embed_code(self, sup, x))
    }

    /// Preimage in `self` of an element of `sup`, when it lies in the subfield.
    pub fn restrict_from(&self, sup: &Field, x: u32) -> Option<u32> {
        if sup.p != self.p || !sup.k.is_multiple_of(self.k) {
            return None;
        }
        restrict_code(self, sup, x)
    }

    pub fn fmt_elem(&self, x: u32) -> String {
        let c = self.coeffs(x);
        let terms: Vec<String> = c
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &ci)| ci != 0)
            .map(|(i, &ci)| match (i, ci) {
                (0, _) => ci.to_string(),
                (1, 1) => "w".to_string(),
                (1, _) => format!("{ci}w"),
                (_, 1) => format!("w^{i}"),
                _ => format!("{ci}w^{i}"),
            })
            .collect();
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join("+")
        }
    }
}

fn encode(c: &[u32], p: u32) -> u32 {
    c.iter().rev().fold(0, |acc, &ci| acc * p + ci)
}

fn decode(mut x: u32, p: u32, k: u32) -> Vec<u32> {
    (0..k)
        .map(|_| {
            let c = x % p;
            x /= p;
            c
        })
        .collect()
}

/// Conway compatibility makes g_d = g_D^{(p^D-1)/(p^d-1)}, so codes move through logs.
fn embed_code(sub: &Field, sup: &Field, c: u32) -> u32 {
    if c == 0 {
        return 0;
    }
    let e = sup.units() / sub.units();
    sup.exp[((sub.log[c as usize] as u64 * e as u64) % sup.units() as u64) as usize]
}

fn restrict_code(sub: &Field, sup: &Field, c: u32) -> Option<u32> {
    if c == 0 {
        return Some(0);
    }
    let e = sup.units() / sub.units();
    let l = sup.log[c as usize];
    l.is_multiple_of(e).then(|| sub.exp[(l / e) as usize])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct FieldId {
    pub p: u32,
    pub k: u32,
}

impl FieldId {
    pub fn new(p: u32, k: u32) -> Result<FieldId> {
        if !is_prime(p as u64) {
            return Err(Error::NonPrime(p as u64));
        }
        if k == 0 {
            return Err(Error::WrongParameters("k must be at least 1".into()));
        }
        Ok(FieldId { p, k })
    }
    pub fn size(&self) -> u64 {
        (self.p as u64).pow(self.k)
    }
}

impl fmt::Display for FieldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.size())
    }
}

/// An element of one field of a tower.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FqElem {
    pub field: FieldId,
    pub code: u32,
}

impl FqElem {
    pub fn coeffs(&self) -> Vec<u32> {
        decode(self.code, self.field.p, self.field.k)
    }
}

/// A divisor-closed set of extension degrees of F_p with compatible embeddings,
/// and a declared ground field F_q, q = p^ground.
#[derive(Debug, Clone)]
pub struct FieldTower {
    p: u32,
    ground: u32,
    fields: BTreeMap<u32, Arc<Field>>,
}

impl FieldTower {
    /// Builds the tower; the degree set is closed under divisors, but its lcm must be present.
    pub fn build(p: u32, degrees: &[u32]) -> Result<FieldTower> {
        if !is_prime(p as u64) {
            return Err(Error::NonPrime(p as u64));
        }
        if degrees.is_empty() || degrees.contains(&0) {
            return Err(Error::WrongParameters("degrees must be positive".into()));
        }
        let l = degrees.iter().fold(1u64, |acc, &d| lcm(acc, d as u64));
        if !degrees.iter().any(|&d| d as u64 == l) {
            let mut ds = degrees.to_vec();
            ds.sort_unstable();
            return Err(Error::DegreeSetNotDivisorClosed(ds));
        }
        let closed: BTreeSet<u32> = degrees.iter().flat_map(|&d| divisors(d)).collect();
        let mut fields = BTreeMap::new();
        for d in closed {
            fields.insert(d, Field::get(p, d)?);
        }
        Ok(FieldTower { p, ground: 1, fields })
    }

    /// Declares F_{p^ground} as the ground field used by [`FieldTower::frobenius`].
    pub fn with_ground(mut self, ground: u32) -> Result<FieldTower> {
        if !self.fields.contains_key(&ground) {
            return Err(Error::NotASubfield { p: self.p, sub: ground, sup: self.top_degree() });
        }
        self.ground = ground;
        Ok(self)
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn ground(&self) -> u32 {
        self.ground
    }
    pub fn degrees(&self) -> Vec<u32> {
        self.fields.keys().copied().collect()
    }
    pub fn top_degree(&self) -> u32 {
        *self.fields.keys().next_back().unwrap()
    }
    pub fn top(&self) -> Arc<Field> {
        self.fields.values().next_back().unwrap().clone()
    }
    pub fn field(&self, d: u32) -> Result<Arc<Field>> {
        self.fields
            .get(&d)
            .cloned()
            .ok_or(Error::NotASubfield { p: self.p, sub: d, sup: self.top_degree() })
    }

    fn field_of(&self, x: &FqElem) -> Result<Arc<Field>> {
        if x.field.p != self.p {
            return Err(Error::NotASubfield { p: x.field.p, sub: x.field.k, sup: self.top_degree() });
        }
        self.field(x.field.k)
    }

    pub fn elem(&self, d: u32, coeffs: &[u32]) -> Result<FqElem> {
        let f = self.field(d)?;
        if coeffs.len() > d as usize || coeffs.iter().any(|&c| c >= self.p) {
            return Err(Error::WrongParameters(format!("bad coefficients {coeffs:?}")));
        }
        Ok(FqElem { field: f.id(), code: f.from_coeffs(coeffs) })
    }

    pub fn embed(&self, x: &FqElem, to: u32) -> Result<FqElem> {
        let sub = self.field_of(x)?;
        let sup = self.field(to)?;
        if !to.is_multiple_of(sub.k()) {
            return Err(Error::NotASubfield { p: self.p, sub: sub.k(), sup: to });
        }
        Ok(FqElem { field: sup.id(), code: embed_code(&sub, &sup, x.code) })
    }

    /// Equality after embedding both into the top field.
    pub fn same(&self, x: &FqElem, y: &FqElem) -> Result<bool> {
        let t = self.top_degree();
        Ok(self.embed(x, t)?.code == self.embed(y, t)?.code)
    }

    pub fn add(&self, x: &FqElem, y: &FqElem) -> Result<FqElem> {
        self.binop(x, y, |f, a, b| f.add(a, b))
    }
    pub fn mul(&self, x: &FqElem, y: &FqElem) -> Result<FqElem> {
        self.binop(x, y, |f, a, b| f.mul(a, b))
    }

    fn binop(&self, x: &FqElem, y: &FqElem, op: impl Fn(&Field, u32, u32) -> u32) -> Result<FqElem> {
        let d = lcm(x.field.k as u64, y.field.k as u64) as u32;
        let f = self.field(d)?;
        let a = self.embed(x, d)?.code;
        let b = self.embed(y, d)?.code;
        Ok(FqElem { field: f.id(), code: op(&f, a, b) })
    }

    /// x^{q^i} with q the ground field size; negative i gives inverse Frobenius.
    pub fn frobenius(&self, x: &FqElem, i: i64) -> Result<FqElem> {
        let f = self.field_of(x)?;
        Ok(FqElem { field: x.field, code: f.frob_p(x.code, self.ground as i64 * i) })
    }

    pub fn trace_to(&self, x: &FqElem, sub: FieldId) -> Result<FqElem> {
        self.down(x, sub, |f, c, a, d| f.trace(c, a, d))
    }

    pub fn norm_to(&self, x: &FqElem, sub: FieldId) -> Result<FqElem> {
        self.down(x, sub, |f, c, a, d| f.norm(c, a, d))
    }

    fn down(&self, x: &FqElem, sub: FieldId, op: impl Fn(&Field, u32, u32, u32) -> u32) -> Result<FqElem> {
        let f = self.field_of(x)?;
        let a = f.k();
        if sub.p != self.p || a % sub.k != 0 || !self.fields.contains_key(&sub.k) {
            return Err(Error::NotASubfield { p: sub.p, sub: sub.k, sup: a });
        }
        let s = self.field(sub.k)?;
        let v = op(&f, x.code, a, sub.k);
        let code = restrict_code(&s, &f, v).expect("trace and norm land in the subfield");
        Ok(FqElem { field: sub, code })
    }

    pub fn enumerate(&self, field: FieldId) -> Result<Vec<FqElem>> {
        let f = self.field(field.k)?;
        if field.p != self.p {
            return Err(Error::NotASubfield { p: field.p, sub: field.k, sup: self.top_degree() });
        }
        Ok((0..f.size()).map(|code| FqElem { field, code }).collect())
    }
}
