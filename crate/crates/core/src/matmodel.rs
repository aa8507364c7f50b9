//! Truncated matrix rings M_h(A), the embeddings iota_h / iota'_h, truncated
//! determinants, the point sets X_h and Y_h, and the reduced norms.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ffield::Field;
use crate::twistring::{
    for_each_tuple_range, shard_ranges, tuple_count, GnqElem, RingParams, SubgroupKind, SubgroupSpec, TwistedElem,
};

/// Element of A[pi]/(pi^r).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncPoly {
    pub c: Vec<u32>,
}

impl TruncPoly {
    pub fn zero(r: usize) -> TruncPoly {
        TruncPoly { c: vec![0; r] }
    }
    pub fn one(r: usize) -> TruncPoly {
        let mut c = vec![0; r];
        c[0] = 1;
        TruncPoly { c }
    }
    pub fn precision(&self) -> usize {
        self.c.len()
    }
    pub fn is_unit(&self) -> bool {
        self.c[0] != 0
    }
    pub fn add(&self, f: &Field, o: &TruncPoly) -> TruncPoly {
        TruncPoly { c: self.c.iter().zip(&o.c).map(|(&a, &b)| f.add(a, b)).collect() }
    }
    pub fn sub(&self, f: &Field, o: &TruncPoly) -> TruncPoly {
        TruncPoly { c: self.c.iter().zip(&o.c).map(|(&a, &b)| f.sub(a, b)).collect() }
    }
    pub fn mul(&self, f: &Field, o: &TruncPoly) -> TruncPoly {
        let r = self.c.len().min(o.c.len());
        let mut c = vec![0; r];
        for (i, &a) in self.c.iter().enumerate().take(r) {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate().take(r - i) {
                if b != 0 {
                    c[i + j] = f.add(c[i + j], f.mul(a, b));
                }
            }
        }
        TruncPoly { c }
    }
    /// Coefficientwise p^j power.
    pub fn frob_p(&self, f: &Field, j: i64) -> TruncPoly {
        TruncPoly { c: self.c.iter().map(|&x| f.frob_p(x, j)).collect() }
    }
    /// Whether every coefficient lies in F_{p^d}.
    pub fn in_subring(&self, f: &Field, d: u32) -> bool {
        self.c.iter().all(|&x| f.in_subfield(x, d))
    }
}

/// Square matrix of truncated polynomials, entries all kept to precision r.
/// With `h` set it models M_h: entries above the diagonal are only defined mod pi^{h-1},
/// so their pi^{h-1} coefficient is kept at zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MhMatrix {
    field: Arc<Field>,
    n: usize,
    r: usize,
    mh: bool,
    e: Vec<TruncPoly>,
}

impl MhMatrix {
    pub fn zero(field: &Arc<Field>, n: usize, h: usize) -> MhMatrix {
        MhMatrix { field: field.clone(), n, r: h, mh: true, e: vec![TruncPoly::zero(h); n * n] }
    }

    /// Plain matrix over A[pi]/(pi^r) without the M_h shape.
    pub fn full_zero(field: &Arc<Field>, n: usize, r: usize) -> MhMatrix {
        MhMatrix { field: field.clone(), n, r, mh: false, e: vec![TruncPoly::zero(r); n * n] }
    }

    pub fn identity(field: &Arc<Field>, n: usize, h: usize) -> MhMatrix {
        let mut m = MhMatrix::zero(field, n, h);
        for i in 0..n {
            m.e[i * n + i] = TruncPoly::one(h);
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }
    pub fn entry(&self, i: usize, j: usize) -> &TruncPoly {
        &self.e[i * self.n + j]
    }
    pub fn set(&mut self, i: usize, j: usize, v: TruncPoly) {
        assert_eq!(v.precision(), self.r);
        self.e[i * self.n + j] = v;
        self.mask();
    }

    fn mask(&mut self) {
        if !self.mh || self.r == 0 {
            return;
        }
        for i in 0..self.n {
            for j in i + 1..self.n {
                self.e[i * self.n + j].c[self.r - 1] = 0;
            }
        }
    }

    /// Whether the entries satisfy the M_h shape (below-diagonal entries divisible by pi).
    pub fn has_mh_shape(&self) -> bool {
        (0..self.n).all(|i| {
            (0..self.n).all(|j| {
                let c = &self.entry(i, j).c;
                (i <= j || c[0] == 0) && (i >= j || c[self.r - 1] == 0)
            })
        })
    }

    pub fn add(&self, o: &MhMatrix) -> MhMatrix {
        let f = &self.field;
        let e = self.e.iter().zip(&o.e).map(|(a, b)| a.add(f, b)).collect();
        MhMatrix { e, ..self.clone() }
    }

    pub fn mul(&self, o: &MhMatrix) -> MhMatrix {
        let n = self.n;
        let f = &self.field;
        let mut out = MhMatrix { e: vec![TruncPoly::zero(self.r); n * n], ..self.clone() };
        for i in 0..n {
            for j in 0..n {
                let mut acc = TruncPoly::zero(self.r);
                for k in 0..n {
                    acc = acc.add(f, &self.entry(i, k).mul(f, o.entry(k, j)));
                }
                out.e[i * n + j] = acc;
            }
        }
        out.mask();
        out
    }

    /// Alternating-sum determinant over all n! permutations, modulo pi^r.
    pub fn det(&self) -> TruncPoly {
        let n = self.n;
        let f = &self.field;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut acc = TruncPoly::zero(self.r);
        permutations(&mut perm, 0, false, &mut |p, odd| {
            let mut t = TruncPoly::one(self.r);
            for (i, &j) in p.iter().enumerate() {
                t = t.mul(f, self.entry(i, j));
                if t.c.iter().all(|&x| x == 0) {
                    return;
                }
            }
            acc = if odd { acc.sub(f, &t) } else { acc.add(f, &t) };
        });
        acc
    }
}

fn permutations(p: &mut Vec<usize>, k: usize, odd: bool, f: &mut impl FnMut(&[usize], bool)) {
    if k == p.len() {
        f(p, odd);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, odd ^ (i != k), f);
        p.swap(k, i);
    }
}

/// The matrix of iota_h(a_0, ..., a_{n(h-1)}), by the entry formula: row i, column c holds
/// sum_t a_{nt+c-i}^{q^i} pi^t for c >= i and sum_t a_{nt+n+c-i}^{q^i} pi^{t+1} for c < i.
pub fn iota(params: &RingParams, a: &[u32]) -> MhMatrix {
    let n = params.n() as usize;
    let h = params.h() as usize;
    let top = params.top();
    let mut m = MhMatrix::zero(params.field(), n, h);
    for i in 0..n {
        for c in 0..n {
            let mut poly = TruncPoly::zero(h);
            for (t, slot) in poly.c.iter_mut().enumerate() {
                let idx = if c >= i {
                    Some(n * t + c - i)
                } else if t >= 1 {
                    Some(n * (t - 1) + n + c - i)
                } else {
                    None
                };
                if let Some(j) = idx {
                    if j <= top {
                        *slot = params.frob_q(a[j], i as i64);
                    }
                }
            }
            m.e[i * n + c] = poly;
        }
    }
    m.mask();
    m
}

pub fn iota_prime(g: &TwistedElem) -> MhMatrix {
    iota(g.params(), g.coeffs())
}

/// diag(a, a^q, ..., a^{q^{n-1}}) for a scalar a.
fn tilde(params: &RingParams, a: u32) -> MhMatrix {
    let n = params.n() as usize;
    let h = params.h() as usize;
    let mut m = MhMatrix::zero(params.field(), n, h);
    for i in 0..n {
        let mut p = TruncPoly::zero(h);
        p.c[0] = params.frob_q(a, i as i64);
        m.e[i * n + i] = p;
    }
    m
}

/// The uniformizer matrix: ones on the superdiagonal and pi in the bottom-left corner.
pub fn varpi(params: &RingParams) -> MhMatrix {
    let n = params.n() as usize;
    let h = params.h() as usize;
    let mut m = MhMatrix::zero(params.field(), n, h);
    for i in 0..n - 1 {
        m.e[i * n + i + 1] = TruncPoly::one(h);
    }
    let mut corner = TruncPoly::zero(h);
    if h > 1 {
        corner.c[1] = 1;
    }
    if n == 1 {
        m.e[0] = corner;
    } else {
        m.e[(n - 1) * n] = corner;
    }
    m.mask();
    m
}

/// iota_h via the sum of a~_j varpi^j.
pub fn iota_via_varpi(params: &RingParams, a: &[u32]) -> MhMatrix {
    let n = params.n() as usize;
    let h = params.h() as usize;
    let w = varpi(params);
    let mut pw = MhMatrix::identity(params.field(), n, h);
    let mut acc = MhMatrix::zero(params.field(), n, h);
    for &aj in a.iter().take(params.len()) {
        acc = acc.add(&tilde(params, aj).mul(&pw));
        pw = pw.mul(&w);
    }
    acc
}

/// diag(gamma, phi(gamma), ...) for gamma in F_{q^n}[pi]/(pi^h).
pub fn diag_lift(params: &RingParams, gamma: &[u32]) -> MhMatrix {
    let n = params.n() as usize;
    let h = params.h() as usize;
    let mut m = MhMatrix::zero(params.field(), n, h);
    for i in 0..n {
        let c = gamma.iter().map(|&x| params.frob_q(x, i as i64)).collect();
        m.e[i * n + i] = TruncPoly { c };
    }
    m
}

pub fn det_trunc(m: &MhMatrix) -> TruncPoly {
    m.det()
}

/// det iota'_h(g) has all coefficients in F_q.
pub fn in_xh(g: &TwistedElem) -> bool {
    in_xh_raw(g.params(), g.coeffs())
}

pub fn in_xh_raw(params: &RingParams, a: &[u32]) -> bool {
    iota(params, a).det().in_subring(params.field(), params.qe())
}

/// The two explicit conditions cutting out X_3 for n = 2 (a_0 = 1).
pub fn in_x3_closed(params: &RingParams, a: &[u32]) -> bool {
    let f = params.field();
    let qe = params.qe();
    let fq = |x: u32| params.frob_q(x, 1);
    let (a1, a2, a3, a4) = (a[1], a[2], a[3], a[4]);
    let e1 = f.sub(f.add(fq(a2), a2), f.mul(a1, fq(a1)));
    if !f.in_subfield(e1, qe) {
        return false;
    }
    let mut e2 = f.add(fq(a4), a4);
    e2 = f.add(e2, f.mul(a2, fq(a2)));
    e2 = f.sub(e2, f.mul(a1, fq(a3)));
    e2 = f.sub(e2, f.mul(a3, fq(a1)));
    f.in_subfield(e2, qe)
}

/// Y_3 = {b_2 = 0, b_4 = -b_3 b_1^q} (n = 2, h = 3).
pub fn in_y3_closed(params: &RingParams, b: &[u32]) -> bool {
    let f = params.field();
    b[2] == 0 && b[4] == f.neg(f.mul(b[3], params.frob_q(b[1], 1)))
}

/// N_2: the pi-coefficient of det iota'_2(g), for h = 2.
pub fn n2_norm(g: &TwistedElem) -> Result<u32> {
    if g.params().h() != 2 {
        return Err(Error::UnsupportedLevel(g.params().h()));
    }
    Ok(iota_prime(g).det().c[1])
}

/// Nm^{n,q} on G^{n,q}(F_{q^n}) through the reduced-norm residue at truncation pi^{2k+2}.
pub fn nm_gnq(g: &GnqElem, k: u32) -> Result<u32> {
    if k == 0 {
        return Err(Error::WrongParameters("k must be at least 1".into()));
    }
    let params = g.params();
    let f = params.field();
    let n = params.n() as usize;
    let r = 2 * k as usize + 2;
    let a = g.coeffs();
    // 1 + a~_n pi^{2k+1} + pi^k sum_{j<n} a~_j varpi^j, with varpi^j in row i at column i+j
    // (times pi when it wraps around)
    let mut m = MhMatrix::full_zero(f, n, r);
    for i in 0..n {
        let mut d = TruncPoly::one(r);
        d.c[2 * k as usize + 1] = params.frob_q(a[n], i as i64);
        m.e[i * n + i] = d;
        for j in 1..n {
            let col = (i + j) % n;
            let shift = k as usize + usize::from(i + j >= n);
            m.e[i * n + col].c[shift] = params.frob_q(a[j], i as i64);
        }
    }
    let det = m.det();
    let lower_ok = det.c[0] == 1 && det.c[1..=2 * k as usize].iter().all(|&x| x == 0);
    if !lower_ok {
        return Err(Error::WrongParameters("reduced norm left the expected congruence subgroup".into()));
    }
    Ok(det.c[2 * k as usize + 1])
}

/// Nm^{n,q} on U^{n,q}(F_{q^n}) (h = 2): the same pi-coefficient as N_2.
pub fn nm_nq(g: &TwistedElem) -> Result<u32> {
    n2_norm(g)
}

/// Ordered point set X_h(F_{q^{ns}}) restricted by an optional coordinate filter.
#[derive(Clone, Debug)]
pub struct XPointSet {
    pub params: Arc<RingParams>,
    pub points: Vec<Vec<u32>>,
}

fn check_size(what: &str, needed: u128, limit: u128) -> Result<()> {
    if needed > limit {
        return Err(Error::SizeLimitExceeded { what: what.into(), needed, limit });
    }
    Ok(())
}

/// All of X_h over the coefficient field of `params`, in mixed-radix order.
pub fn xh_points(params: &Arc<RingParams>, max_size: u128, shards: usize) -> Result<XPointSet> {
    let full = SubgroupSpec::for_ring(params, SubgroupKind::Full)?;
    let values = full.coord_values(params.field(), params.field().k());
    let total = tuple_count(&values);
    check_size("X_h enumeration", total, max_size)?;
    let parts: Vec<Vec<Vec<u32>>> = shard_ranges(total as u64, shards)
        .into_par_iter()
        .map(|(s, e)| {
            let mut out = Vec::new();
            for_each_tuple_range(&values, s, e, |_, a| {
                if in_xh_raw(params, a) {
                    out.push(a.to_vec());
                }
            });
            out
        })
        .collect();
    Ok(XPointSet { params: params.clone(), points: parts.into_iter().flatten().collect() })
}

/// {L_{q^n}(g) : g in X_h(F_{q^{ns}})}, duplicates removed.
pub fn y_h_image(params: &Arc<RingParams>, max_size: u128, shards: usize) -> Result<BTreeSet<Vec<u32>>> {
    let xs = xh_points(params, max_size, shards)?;
    let n = params.rational_degree() / params.qe();
    let sets: Vec<BTreeSet<Vec<u32>>> = xs
        .points
        .par_chunks(4096)
        .map(|chunk| chunk.iter().map(|a| params.lang_raw(a, n).expect("principal unit")).collect())
        .collect();
    Ok(sets.into_iter().fold(BTreeSet::new(), |mut acc, s| {
        acc.extend(s);
        acc
    }))
}

/// CSV with a header a_0..a_top and one row of field codes per point.
pub fn points_csv(points: &[Vec<u32>]) -> String {
    let mut s = String::new();
    let width = points.first().map_or(0, |p| p.len());
    let header: Vec<String> = (0..width).map(|j| format!("a_{j}")).collect();
    let _ = writeln!(s, "{}", header.join(","));
    for p in points {
        let row: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twistring::for_each_tuple;

    #[test]
    fn level_two_matrix_and_determinant() {
        let p = RingParams::over(2, 1, 2, 2, 2).unwrap();
        let f = p.field().clone();
        let (a1, a2) = (f.exp(3), f.exp(7));
        let g = TwistedElem::principal(&p, &[a1, a2]).unwrap();
        let m = iota_prime(&g);
        let fq = |x| f.frob_p(x, 1);
        assert_eq!(m.entry(0, 0).c, vec![1, a2]);
        assert_eq!(m.entry(0, 1).c, vec![a1, 0]);
        assert_eq!(m.entry(1, 0).c, vec![0, fq(a1)]);
        assert_eq!(m.entry(1, 1).c, vec![1, fq(a2)]);
        let want = f.sub(f.add(a2, fq(a2)), f.mul(a1, fq(a1)));
        assert_eq!(m.det().c, vec![1, want]);
        assert_eq!(n2_norm(&g).unwrap(), want);
    }

    #[test]
    fn n2_at_omega_is_one() {
        let p = RingParams::over(2, 1, 2, 2, 1).unwrap();
        let w = p.field().generator();
        let g = TwistedElem::principal(&p, &[w, 0]).unwrap();
        assert_eq!(n2_norm(&g).unwrap(), 1);
        assert_eq!(n2_norm(&TwistedElem::one(&p)).unwrap(), 0);
    }

    #[test]
    fn both_iota_routes_agree() {
        for (p, qe, n, h, s) in [(2, 1, 2, 3, 2), (3, 1, 2, 3, 1), (2, 1, 3, 2, 1), (2, 1, 3, 3, 1)] {
            let params = RingParams::over(p, qe, n, h, s).unwrap();
            let f = params.field().clone();
            let mut rng = 17u64;
            for _ in 0..200 {
                let a: Vec<u32> = (0..params.len())
                    .map(|_| {
                        rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        ((rng >> 33) % f.size() as u64) as u32
                    })
                    .collect();
                let m1 = iota(&params, &a);
                assert!(m1.has_mh_shape());
                assert_eq!(m1, iota_via_varpi(&params, &a));
            }
        }
    }

    #[test]
    fn x3_membership_matches_explicit_equations() {
        let p = RingParams::over(2, 1, 2, 3, 2).unwrap();
        let vals = SubgroupSpec::for_ring(&p, SubgroupKind::Full).unwrap().coord_values(p.field(), 4);
        let mut count = 0;
        for_each_tuple(&vals, |a| {
            let x = in_xh_raw(&p, a);
            assert_eq!(x, in_x3_closed(&p, a));
            count += x as u32;
        });
        assert!(count > 256);
    }

    #[test]
    fn rational_points_lie_in_xh() {
        let p = RingParams::over(3, 1, 2, 3, 1).unwrap();
        let vals = SubgroupSpec::for_ring(&p, SubgroupKind::Full).unwrap().coord_values(p.field(), 2);
        for_each_tuple(&vals, |a| assert!(in_xh_raw(&p, a)));
    }

    #[test]
    fn gnq_norm_on_center_is_trace() {
        let p = RingParams::over(2, 1, 3, 2, 1).unwrap();
        let f = p.field().clone();
        for a in f.elems() {
            let g = GnqElem::new(&p, &[0, 0, a]).unwrap();
            for k in 1..3 {
                assert_eq!(nm_gnq(&g, k).unwrap(), f.trace(a, 3, 1));
            }
        }
        assert_eq!(nm_gnq(&GnqElem::one(&p), 1).unwrap(), 0);
    }
}
