//! Enumeration kernels: twisted fixed-point counts, eigenspace dimensions,
//! Artin-Schreier sums and the intertwiner sum over beta^{-1}(Y).
//!
//! Every kernel is a fold over a mixed-radix index space cut into contiguous shards;
//! shards are merged in index order, so results do not depend on the shard count.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::charlib::{all_add_chars, chi_sharp, chis_over, conductor, h2_level3, AddChar, ThetaData};
use crate::cyclo::{CycloNum, RootSum};
use crate::ffield::{lcm, Field};
use crate::matmodel::{in_xh_raw, in_y3_closed, n2_norm, xh_points};
use crate::repkit::{GroupModel, RingGroup, SubgroupChar, TruncUnits, NONE};
use crate::twistring::{for_each_tuple_range, shard_ranges, star_action_raw, CoordDomain, RingParams, SubgroupKind, SubgroupSpec, TwistedElem};
use crate::{Error, Result};

pub const DEFAULT_LIMIT: u128 = 1 << 27;

fn check_size(what: &str, needed: u128, limit: u128) -> Result<()> {
    if needed > limit {
        return Err(Error::SizeLimitExceeded { what: what.into(), needed, limit });
    }
    Ok(())
}

fn tuple_total(values: &[Vec<u32>]) -> u128 {
    values.iter().map(|v| v.len() as u128).product()
}

/// Folds `step` over all tuples (with a leading 1, as in `for_each_tuple`), one accumulator
/// per shard, merged left to right.
fn fold_tuples<T: Send>(
    values: &[Vec<u32>],
    shards: usize,
    init: impl Fn() -> T + Sync,
    step: impl Fn(&mut T, &[u32]) + Sync,
    mut merge: impl FnMut(&mut T, T),
) -> T {
    let total = tuple_total(values) as u64;
    let parts: Vec<T> = shard_ranges(total, shards)
        .into_par_iter()
        .map(|(s, e)| {
            let mut acc = init();
            for_each_tuple_range(values, s, e, |_, a| step(&mut acc, a));
            acc
        })
        .collect();
    let mut out = init();
    for part in parts {
        merge(&mut out, part);
    }
    out
}

fn merge_counts<K: Ord>(a: &mut BTreeMap<K, u64>, b: BTreeMap<K, u64>) {
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
}

fn rational_int(v: &CycloNum) -> Option<BigInt> {
    let r = v.to_rational()?;
    r.is_integer().then(|| r.to_integer())
}

fn small_int(v: &CycloNum, what: &str) -> Result<i64> {
    rational_int(v)
        .and_then(|b| i64::try_from(b).ok())
        .ok_or_else(|| Error::NonIntegerDimension(format!("{what}: {v}")))
}

fn q_of(p: u32, qe: u32) -> u64 {
    (p as u64).pow(qe)
}

// ---------------------------------------------------------------------------------------
// twisted fixed points

/// Solutions of gamma * sigma(F_{q^d}(x)) = x a on X_h, enumerated over F_{q^{n s}}.
/// gamma and a are given by codes in F_{q^n}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TwistedFixedQuery {
    pub p: u32,
    pub qe: u32,
    pub n: u32,
    pub h: u32,
    pub s: u32,
    /// 1 + c_1 pi + ... + c_{h-1} pi^{h-1}
    pub gamma: Option<Vec<u32>>,
    /// sigma is conjugation by zeta-bar^k; 0 means no conjugation
    pub zeta_conj: u64,
    /// a_0 = 1, a_1, ..., a_top
    pub right: Vec<u32>,
    /// d in F_{q^d}; 0 drops the Frobenius
    pub frob: u32,
}

impl TwistedFixedQuery {
    /// F_{q^n}(x) = x: the rational points, with D = n p.
    pub fn untwisted(p: u32, qe: u32, n: u32, h: u32) -> TwistedFixedQuery {
        let top = (n * (h - 1)) as usize;
        let mut right = vec![0; top + 1];
        right[0] = 1;
        TwistedFixedQuery { p, qe, n, h, s: p, gamma: None, zeta_conj: 0, right, frob: n }
    }

    /// The fixed locus of zeta-bar conjugation.
    pub fn zeta_fixed(p: u32, qe: u32, n: u32, h: u32) -> TwistedFixedQuery {
        TwistedFixedQuery { zeta_conj: 1, frob: 0, ..TwistedFixedQuery::untwisted(p, qe, n, h) }
    }

    /// Enumeration field degree over F_q.
    pub fn degree(&self) -> u32 {
        self.n * self.s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TwistedCount {
    pub count: u64,
    /// points were enumerated over F_{q^degree}
    pub degree: u32,
    /// Some(count(D) == count(D p)) once the re-check ran
    pub saturated: Option<bool>,
}

impl TwistedCount {
    /// Err(UnsaturatedCount) while no saturation check has been run.
    pub fn status(&self) -> Result<()> {
        match self.saturated {
            None => Err(Error::UnsaturatedCount(self.degree)),
            Some(_) => Ok(()),
        }
    }
}

/// The solution set itself, in codes of the enumeration field.
pub fn twisted_points(q: &TwistedFixedQuery, limit: u128, shards: usize) -> Result<(Arc<RingParams>, Vec<Vec<u32>>)> {
    let params = RingParams::over(q.p, q.qe, q.n, q.h, q.s)?;
    let big = params.field().clone();
    let small = Field::get(q.p, q.qe * q.n)?;
    if q.right.len() != params.len() || q.right[0] != 1 {
        return Err(Error::WrongParameters("right element must be principal".into()));
    }
    let emb = |x: u32| small.embed_in(&big, x);
    let right: Vec<u32> = q.right.iter().map(|&x| emb(x)).collect::<Result<_>>()?;
    let gamma: Option<Vec<u32>> = match &q.gamma {
        Some(g) => {
            if g.len() != q.h as usize || g[0] != 1 {
                return Err(Error::WrongParameters(format!("gamma must be a principal unit mod pi^{}", q.h)));
            }
            Some(g.iter().map(|&x| emb(x)).collect::<Result<_>>()?)
        }
        None => None,
    };
    // zeta-bar^k a_j tau^j zeta-bar^{-k} = zeta-bar^{k(1 - q^j)} a_j tau^j
    let conj: Option<Vec<u32>> = (q.zeta_conj != 0).then(|| {
        let z = big.pow(emb(small.generator()).expect("subfield"), q.zeta_conj);
        (0..params.len()).map(|j| big.mul(z, big.inv(params.frob_q(z, j as i64)).unwrap())).collect()
    });
    let values: Vec<Vec<u32>> = vec![big.elems().collect(); params.top()];
    check_size("twisted fixed-point enumeration", tuple_total(&values), limit)?;
    let pts = fold_tuples(
        &values,
        shards,
        Vec::new,
        |acc: &mut Vec<Vec<u32>>, a| {
            if !in_xh_raw(&params, a) {
                return;
            }
            let mut y = if q.frob > 0 { params.frob_raw(a, q.frob as i64) } else { a.to_vec() };
            if let Some(c) = &conj {
                for (yj, &cj) in y.iter_mut().zip(c) {
                    *yj = big.mul(*yj, cj);
                }
            }
            if let Some(g) = &gamma {
                let mut out = vec![0; y.len()];
                star_action_raw(&params, g, &y, &mut out);
                y = out;
            }
            if y == params.mul_raw(a, &right) {
                acc.push(a.to_vec());
            }
        },
        |a, b| a.extend(b),
    );
    Ok((params, pts))
}

pub fn twisted_count(q: &TwistedFixedQuery, limit: u128, shards: usize) -> Result<TwistedCount> {
    let (_, pts) = twisted_points(q, limit, shards)?;
    Ok(TwistedCount { count: pts.len() as u64, degree: q.degree(), saturated: None })
}

/// Counts at D = n s and again at D p.
pub fn twisted_count_saturated(q: &TwistedFixedQuery, limit: u128, shards: usize) -> Result<TwistedCount> {
    let mut c = twisted_count(q, limit, shards)?;
    let wide = TwistedFixedQuery { s: q.s * q.p, ..q.clone() };
    let c2 = twisted_count(&wide, limit, shards)?;
    c.saturated = Some(c.count == c2.count);
    Ok(c)
}

// ---------------------------------------------------------------------------------------
// fixed points of zeta-bar and the trace of zeta-bar

/// One character psi of F_{q^n}: sum_z psi(z)^{-1} #Fix(z on X^{zeta-bar}) and the trace it gives.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRow {
    pub psi: u32,
    pub conductor: u32,
    pub sum: i64,
    pub expected_sum: i64,
    pub trace: i64,
    pub expected_trace: i64,
}

impl TraceRow {
    pub fn ok(&self) -> bool {
        self.sum == self.expected_sum && self.trace == self.expected_trace
    }
}

/// h = 2: X^{zeta-bar} is Z(F_{q^n}) and z acts by translation.
pub fn trace_suite_level2(p: u32, qe: u32, n: u32, limit: u128, shards: usize) -> Result<Vec<TraceRow>> {
    let (params, pts) = twisted_points(&TwistedFixedQuery::zeta_fixed(p, qe, n, 2), limit, shards)?;
    let big = params.field();
    let small = Field::get(p, qe * n)?;
    let q = q_of(p, qe);
    let qn = q.pow(n) as i64;
    let mut fix = Vec::with_capacity(small.size() as usize);
    for z in small.elems() {
        let mut c = vec![0; params.len()];
        c[0] = 1;
        c[n as usize] = small.embed_in(big, z)?;
        fix.push(pts.iter().filter(|x| params.mul_raw(x, &c) == **x).count() as i64);
    }
    let mut rows = Vec::new();
    for psi in all_add_chars(&small, qe * n)? {
        let mut rs = RootSum::new(p);
        for z in small.elems() {
            rs.push(p - psi.exponent(z), fix[z as usize]);
        }
        let sum = small_int(&rs.value(), "character sum")?;
        let m = conductor(&psi, qe)?;
        let sign = if (n + n / m).is_multiple_of(2) { 1 } else { -1 };
        if sum % qn != 0 {
            return Err(Error::NonIntegerDimension(format!("{sum}/{qn}")));
        }
        rows.push(TraceRow { psi: psi.param(), conductor: m, sum, expected_sum: qn, trace: sign * sum / qn, expected_trace: sign });
    }
    Ok(rows)
}

/// n = 2, h = 3: sum_gamma chi(gamma)^{-1} #Fix(gamma * on X_3^{zeta-bar}) for every chi of
/// U^1_L/U^3_L. Returns |X_3^{zeta-bar}| and the sums.
pub fn trace_suite_level3(p: u32, qe: u32, limit: u128, shards: usize) -> Result<(u64, Vec<i64>)> {
    let (params, pts) = twisted_points(&TwistedFixedQuery::zeta_fixed(p, qe, 2, 3), limit, shards)?;
    let big = params.field();
    let small = Field::get(p, 2 * qe)?;
    let units = TruncUnits::new(&small, 3)?;
    let order = units.order();
    let mut fix = vec![0i64; order];
    let mut out = vec![0; params.len()];
    for (idx, slot) in fix.iter_mut().enumerate() {
        let b = units.decode(idx);
        let gamma: Vec<u32> = b.iter().map(|&x| small.embed_in(big, x)).collect::<Result<_>>()?;
        *slot = pts
            .iter()
            .filter(|x| {
                star_action_raw(&params, &gamma, x, &mut out);
                out == **x
            })
            .count() as i64;
    }
    let mut sums = Vec::new();
    for psi in all_add_chars(&small, 2 * qe)? {
        for chi in chis_over(&units, &psi)? {
            let r = chi.root_order;
            let mut rs = RootSum::new(r);
            for (idx, &c) in fix.iter().enumerate() {
                rs.push(r - chi.table[idx] % r, c);
            }
            sums.push(small_int(&rs.value(), "character sum")?);
        }
    }
    Ok((pts.len() as u64, sums))
}

// ---------------------------------------------------------------------------------------
// eigenspace dimensions (n = 2, h = 3)

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenDomain {
    /// a_1, a_2 in F_{q^2}; a_3, a_4 in {y : y^{q^2} - y in F_{q^2}}; the pi^2 part of gamma
    /// is applied as the central shift g -> g + mu tau^4
    Reduced,
    /// every point of F_{q^{2p}}^4 and every gamma, no shortcuts
    Full,
}

/// N(gamma, g) = #{x in X_3 : gamma * F_{q^2}(x) = x g} for gamma in U^1_L/U^3_L and
/// g in H_2(F_{q^2}), keyed by (index in `units`, index in `group`). Zero entries are absent.
pub struct EigenTable {
    pub p: u32,
    pub qe: u32,
    pub units: Arc<TruncUnits>,
    pub group: Arc<RingGroup>,
    pub entries: BTreeMap<(usize, usize), u64>,
    /// number of enumerated points
    pub domain_size: u64,
}

impl EigenTable {
    pub fn get(&self, gamma: usize, g: usize) -> u64 {
        self.entries.get(&(gamma, g)).copied().unwrap_or(0)
    }
}

pub fn eigen_table(p: u32, qe: u32, domain: EigenDomain, limit: u128, shards: usize) -> Result<EigenTable> {
    let params = RingParams::over(p, qe, 2, 3, p)?;
    let big = params.field().clone();
    let small = Field::get(p, 2 * qe)?;
    let q = q_of(p, qe);
    let units = Arc::new(TruncUnits::new(&small, 3)?);
    let group = Arc::new(RingGroup::new(&RingParams::over(p, qe, 2, 3, 1)?, false)?);
    let lifted: Vec<u32> = small.elems().map(|x| small.embed_in(&big, x)).collect::<Result<_>>()?;
    let values = match domain {
        EigenDomain::Reduced => {
            let sub = big.subfield_elems(2 * qe);
            let v: Vec<u32> = big.elems().filter(|&y| big.in_subfield(big.sub(params.frob_q(y, 2), y), 2 * qe)).collect();
            if v.len() as u64 != q.pow(4) {
                return Err(Error::WrongParameters(format!("Artin-Schreier domain has {} points, expected q^4", v.len())));
            }
            vec![sub.clone(), sub, v.clone(), v]
        }
        EigenDomain::Full => vec![big.elems().collect(); 4],
    };
    check_size("eigenspace enumeration", tuple_total(&values) * lifted.len() as u128, limit)?;
    let g_index = |g: &[u32]| -> Option<usize> {
        if g[1] != 0 {
            return None;
        }
        let r: Option<Vec<u32>> = g[2..].iter().map(|&c| small.restrict_from(&big, c)).collect();
        r.map(|r| group.encode(&[1, 0, r[0], r[1], r[2]]))
    };
    let entries = fold_tuples(
        &values,
        shards,
        BTreeMap::new,
        |acc: &mut BTreeMap<(usize, usize), u64>, x| {
            if !in_xh_raw(&params, x) {
                return;
            }
            let fx = params.frob_raw(x, 2);
            let xinv = params.inv_raw(x).expect("principal unit");
            let mut y = vec![0; 5];
            for (li, &lam) in lifted.iter().enumerate() {
                match domain {
                    EigenDomain::Reduced => {
                        star_action_raw(&params, &[1, lam, 0], &fx, &mut y);
                        let mut g = params.mul_raw(&xinv, &y);
                        if g_index(&g).is_none() {
                            continue;
                        }
                        let g4 = g[4];
                        for (mi, &mu) in lifted.iter().enumerate() {
                            g[4] = big.add(g4, mu);
                            let gi = g_index(&g).expect("shift stays in H_2(F_{q^2})");
                            *acc.entry((units.encode(&[1, li as u32, mi as u32]), gi)).or_insert(0) += 1;
                        }
                    }
                    EigenDomain::Full => {
                        for (mi, &mu) in lifted.iter().enumerate() {
                            star_action_raw(&params, &[1, lam, mu], &fx, &mut y);
                            if let Some(gi) = g_index(&params.mul_raw(&xinv, &y)) {
                                *acc.entry((units.encode(&[1, li as u32, mi as u32]), gi)).or_insert(0) += 1;
                            }
                        }
                    }
                }
            }
        },
        merge_counts,
    );
    Ok(EigenTable { p, qe, units, group, entries, domain_size: tuple_total(&values) as u64 })
}

/// q^{-12} sum chi_1(gamma)^{-1} chi_2^#(g) N(gamma, g), with the Frobenius scalar on the
/// eigenspace taken to be q^2.
pub fn eigendim(table: &EigenTable, chi1: &SubgroupChar, chi2_sharp: &SubgroupChar) -> Result<u64> {
    let (r1, r2) = (chi1.root_order, chi2_sharp.root_order);
    let n = lcm(r1 as u64, r2 as u64) as u32;
    let mut rs = RootSum::new(n);
    for (&(gi, hi), &c) in &table.entries {
        let (a, b) = (chi1.table[gi], chi2_sharp.table[hi]);
        if a == NONE || b == NONE {
            return Err(Error::WrongParameters("character undefined on a table entry".into()));
        }
        let e = (n - (a * (n / r1)) % n + b * (n / r2)) % n;
        rs.push(e, c as i64);
    }
    let q = q_of(table.p, table.qe);
    let v = rs.value().scale(&BigRational::new(1.into(), BigInt::from(q).pow(12)));
    v.as_count().ok_or_else(|| Error::NonIntegerDimension(v.to_string()))
}

/// All dimensions eigendim(chi_i, chi_j) over the chi whose restriction to U^2_L/U^3_L has
/// conductor q^2.
#[derive(Clone, Debug, Serialize)]
pub struct EigenSuite {
    /// psi parameter of each chi, in row order
    pub psi_of: Vec<u32>,
    pub dims: Vec<Vec<u64>>,
}

impl EigenSuite {
    pub fn ok(&self) -> bool {
        self.dims.iter().enumerate().all(|(i, row)| row.iter().enumerate().all(|(j, &d)| d == u64::from(i == j)))
    }
}

pub fn eigen_suite(table: &EigenTable) -> Result<EigenSuite> {
    let small = table.units.field().clone();
    let h2 = h2_level3(&table.group)?;
    let mut chars = Vec::new();
    for psi in all_add_chars(&small, 2 * table.qe)? {
        if conductor(&psi, table.qe)? != 2 {
            continue;
        }
        for chi in chis_over(&table.units, &psi)? {
            let theta = ThetaData::new(&table.units, table.qe, chi.clone(), 0, 1, 0)?;
            let sharp = chi_sharp(&theta, &table.group, &h2)?;
            chars.push((psi.param(), chi, sharp));
        }
    }
    let dims: Vec<Vec<u64>> = chars
        .par_iter()
        .map(|(_, c1, _)| chars.iter().map(|(_, _, s2)| eigendim(table, c1, s2)).collect::<Result<Vec<u64>>>())
        .collect::<Result<_>>()?;
    Ok(EigenSuite { psi_of: chars.iter().map(|c| c.0).collect(), dims })
}

/// #{a_1 in F_{q^2} : a_1^{q+1}(lambda^q - lambda) + beta a_1^q - beta^q a_1 = delta}.
fn n_prime(f: &Field, qe: u32, lambda: u32, beta: u32, delta: u32) -> u64 {
    let fq = |x: u32| f.frob_p(x, qe as i64);
    let dl = f.sub(fq(lambda), lambda);
    f.elems()
        .filter(|&a| {
            let lhs = f.add(f.mul(f.mul(a, fq(a)), dl), f.sub(f.mul(beta, fq(a)), f.mul(fq(beta), a)));
            lhs == delta
        })
        .count() as u64
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NppRow {
    pub lambda: u32,
    pub delta: u32,
    pub sum: u64,
    pub expected: u64,
}

/// sum_beta N''(lambda, delta, beta) for every lambda in F_{q^2} and delta in ker Tr.
pub fn npp_identity(p: u32, qe: u32) -> Result<Vec<NppRow>> {
    let f = Field::get(p, 2 * qe)?;
    let q = q_of(p, qe);
    let mut rows = Vec::new();
    for lambda in f.elems() {
        for delta in f.elems().filter(|&d| f.trace(d, 2 * qe, qe) == 0) {
            let sum = f.elems().map(|beta| n_prime(&f, qe, lambda, beta, delta)).sum();
            let expected = if delta == 0 { q * q + (q * q - 1) * q } else { (q * q - 1) * q };
            rows.push(NppRow { lambda, delta, sum, expected });
        }
    }
    Ok(rows)
}

/// Entries of the table that differ from [lambda' = lambda] q^6 N'(lambda, mu, mu', beta),
/// over all gamma = 1 + lambda pi + mu pi^2 and g = 1 + lambda' tau^2 + beta tau^3 + mu' tau^4.
pub fn factorization_mismatches(table: &EigenTable) -> Result<u64> {
    let f = table.units.field().clone();
    let q = q_of(table.p, table.qe);
    let mut bad = 0;
    for lambda in f.elems() {
        for mu in f.elems() {
            let gi = table.units.encode(&[1, lambda, mu]);
            for l2 in f.elems() {
                for beta in f.elems() {
                    for mu2 in f.elems() {
                        let hi = table.group.encode(&[1, 0, l2, beta, mu2]);
                        let want = if l2 == lambda { q.pow(6) * n_prime(&f, table.qe, lambda, beta, f.sub(mu2, mu)) } else { 0 };
                        bad += u64::from(table.get(gi, hi) != want);
                    }
                }
            }
        }
    }
    Ok(bad)
}

// ---------------------------------------------------------------------------------------
// exponential sums

pub type PointPred = dyn Fn(&Field, &[u32]) -> bool + Send + Sync;
pub type PointMap = dyn Fn(&Field, &[u32]) -> u32 + Send + Sync;

/// S cut out by `pred` in A^dims over F_base = F_{p^base_deg}, with P = `map`. Both closures
/// receive the field the points are enumerated in.
pub struct PolySystem {
    pub name: String,
    pub p: u32,
    pub base_deg: u32,
    pub dims: usize,
    pub pred: Box<PointPred>,
    pub map: Box<PointMap>,
}

fn psi_param_in(psi: &AddChar, base_deg: u32, big: &Field) -> Result<u32> {
    if psi.deg() != base_deg {
        return Err(Error::ParameterMismatch(format!("psi lives on F_p^{}, the base is F_p^{base_deg}", psi.deg())));
    }
    psi.field().embed_in(big, psi.param())
}

/// sum over x in S(F_{base^s}) of psi(Tr(P(x))), exactly.
pub fn exp_sum(sys: &PolySystem, psi: &AddChar, s: u32, limit: u128, shards: usize) -> Result<CycloNum> {
    let d = sys.base_deg * s;
    let big = Field::get(sys.p, d)?;
    let a = psi_param_in(psi, sys.base_deg, &big)?;
    let values = vec![big.elems().collect::<Vec<u32>>(); sys.dims];
    check_size("exponential sum", tuple_total(&values), limit)?;
    let p = sys.p;
    let rs = fold_tuples(
        &values,
        shards,
        || RootSum::new(p),
        |acc, x| {
            let x = &x[1..];
            if (sys.pred)(&big, x) {
                let t = big.trace((sys.map)(&big, x), d, sys.base_deg);
                acc.push(big.abs_trace(big.mul(a, t), sys.base_deg), 1);
            }
        },
        |a, b| a.merge(&b),
    );
    Ok(rs.value())
}

fn pow_q(f: &Field, qe: u32, x: u32, e: u32) -> u32 {
    f.frob_p(x, (qe * e) as i64)
}

/// a_2^{q^2} - a_2 = a_1^{q+q^2} - a_1^{1+q}.
fn first_equation(f: &Field, qe: u32, a1: u32, a2: u32) -> bool {
    let q1 = pow_q(f, qe, a1, 1);
    let lhs = f.sub(pow_q(f, qe, a2, 2), a2);
    let rhs = f.sub(f.mul(q1, pow_q(f, qe, a1, 2)), f.mul(a1, q1));
    lhs == rhs
}

/// a_2^{1+q} - a_2^{q+q^2}.
fn p2_value(f: &Field, qe: u32, a2: u32) -> u32 {
    let q1 = pow_q(f, qe, a2, 1);
    f.sub(f.mul(a2, q1), f.mul(q1, pow_q(f, qe, a2, 2)))
}

/// a_1^q a_3 - a_1^{q^2} a_3^q + a_2^{1+q} - a_2^{q+q^2}.
fn p_value(f: &Field, qe: u32, a1: u32, a2: u32, a3: u32) -> u32 {
    let lin = f.sub(f.mul(pow_q(f, qe, a1, 1), a3), f.mul(pow_q(f, qe, a1, 2), pow_q(f, qe, a3, 1)));
    f.add(lin, p2_value(f, qe, a2))
}

/// The intertwiner instance over F_{q^2}: S in A^3 by the first equation, P as above.
pub fn intertwiner_system(p: u32, qe: u32) -> PolySystem {
    PolySystem {
        name: format!("intertwiner(q={}^{qe})", p),
        p,
        base_deg: 2 * qe,
        dims: 3,
        pred: Box::new(move |f, x| first_equation(f, qe, x[0], x[1])),
        map: Box::new(move |f, x| p_value(f, qe, x[0], x[1], x[2])),
    }
}

/// S = S_2 x A^1 with P(x, y) = f(x)^{q^j} y - f(x)^{q^n} y^{q^{n-j}} + P_2(x); `s2.map` is P_2
/// and `s2.base_deg` must be qe n.
pub struct InductiveSpec {
    pub qe: u32,
    pub n: u32,
    pub j: u32,
    pub s2: PolySystem,
    pub f: Box<PointMap>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InductiveRow {
    pub s: u32,
    pub lhs: String,
    pub rhs: String,
}

/// The intertwiner instance in inductive form: q -> q, n = 2, j = 1, f = a_1.
pub fn intertwiner_inductive(p: u32, qe: u32) -> InductiveSpec {
    InductiveSpec {
        qe,
        n: 2,
        j: 1,
        s2: PolySystem {
            name: format!("S_2(q={}^{qe})", p),
            p,
            base_deg: 2 * qe,
            dims: 2,
            pred: Box::new(move |f, x| first_equation(f, qe, x[0], x[1])),
            map: Box::new(move |f, x| p2_value(f, qe, x[1])),
        },
        f: Box::new(|_, x| x[0]),
    }
}

/// Checks sum_S psi(P) = q^{n s} sum_{S_3} psi(P_3) for each s, S_3 = {f = 0} in S_2.
pub fn inductive_check(spec: &InductiveSpec, psi: &AddChar, s_range: &[u32], limit: u128, shards: usize) -> Result<Vec<InductiveRow>> {
    let sys = &spec.s2;
    if sys.base_deg != spec.qe * spec.n || spec.j == 0 || spec.j >= spec.n {
        return Err(Error::WrongParameters("inductive data needs base F_{q^n} and 0 < j < n".into()));
    }
    let m = conductor(psi, spec.qe)?;
    if spec.j.is_multiple_of(m) {
        return Err(Error::WrongParameters(format!("conductor exponent m = {m} divides j = {}", spec.j)));
    }
    let p = sys.p;
    let q = q_of(p, spec.qe);
    let mut rows = Vec::new();
    for &s in s_range {
        let d = sys.base_deg * s;
        let big = Field::get(p, d)?;
        let a = psi_param_in(psi, sys.base_deg, &big)?;
        let chr = |x: u32| big.abs_trace(big.mul(a, big.trace(x, d, sys.base_deg)), sys.base_deg);
        let elems: Vec<u32> = big.elems().collect();
        let values = vec![elems.clone(); sys.dims + 1];
        check_size("inductive check", tuple_total(&values), limit)?;
        let lhs = fold_tuples(
            &values,
            shards,
            || RootSum::new(p),
            |acc, c| {
                let (x, y) = (&c[1..=sys.dims], c[sys.dims + 1]);
                if (sys.pred)(&big, x) {
                    let fx = (spec.f)(&big, x);
                    let lin = big.sub(big.mul(pow_q(&big, spec.qe, fx, spec.j), y), big.mul(pow_q(&big, spec.qe, fx, spec.n), pow_q(&big, spec.qe, y, spec.n - spec.j)));
                    acc.push(chr(big.add(lin, (sys.map)(&big, x))), 1);
                }
            },
            |a, b| a.merge(&b),
        );
        let values3 = vec![elems; sys.dims];
        let rhs = fold_tuples(
            &values3,
            shards,
            || RootSum::new(p),
            |acc, c| {
                let x = &c[1..];
                if (sys.pred)(&big, x) && (spec.f)(&big, x) == 0 {
                    acc.push(chr((sys.map)(&big, x)), 1);
                }
            },
            |a, b| a.merge(&b),
        );
        let lhs = lhs.value();
        let scale = BigRational::from_integer(BigInt::from(q).pow(spec.n * s));
        let rhs = rhs.value().scale(&scale);
        if lhs != rhs {
            return Err(Error::IdentityFails { s, lhs: lhs.to_string(), rhs: rhs.to_string() });
        }
        rows.push(InductiveRow { s, lhs: lhs.to_string(), rhs: rhs.to_string() });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------------------
// the intertwiner sum over beta^{-1}(Y)

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TargetSet {
    /// all of G
    Whole,
    /// Y_h = L(X_h), tested through a Lang preimage
    LangImage,
    /// the closed equations b_2 = 0, b_4 = -b_3 b_1^q (n = 2, h = 3)
    Y3Closed,
}

/// G = U^{n,q}_h over F_{q^n}, H a coordinate subgroup, s(x) = 1 + sum x_i tau^{section_i},
/// f(h) = h_{f_coord}.
pub struct DLSumSpec {
    pub p: u32,
    pub qe: u32,
    pub n: u32,
    pub h: u32,
    pub section: Vec<usize>,
    pub h_kind: SubgroupKind,
    pub f_coord: usize,
    pub target: TargetSet,
    pub psi: AddChar,
    h_coords: Vec<usize>,
}

impl DLSumSpec {
    /// Checks on F_{q^n}-points that (x, h) -> s(x) h is a bijection onto G, that H is closed
    /// under multiplication and that f is additive on it.
    #[allow(clippy::too_many_arguments)]
    pub fn new(p: u32, qe: u32, n: u32, h: u32, section: Vec<usize>, h_kind: SubgroupKind, f_coord: usize, target: TargetSet, psi: AddChar) -> Result<DLSumSpec> {
        let params = RingParams::over(p, qe, n, h, 1)?;
        let f = params.field().clone();
        if psi.deg() != f.k() {
            return Err(Error::ParameterMismatch("psi must be a character of F_{q^n}".into()));
        }
        if target == TargetSet::Y3Closed && (n, h) != (2, 3) {
            return Err(Error::WrongParameters("closed Y_3 equations need n = 2, h = 3".into()));
        }
        let spec = SubgroupSpec::for_ring(&params, h_kind)?;
        let top = params.top();
        let mut h_coords = Vec::new();
        for j in 1..=top {
            match spec.domain(j) {
                CoordDomain::Zero => {}
                CoordDomain::All => h_coords.push(j),
                CoordDomain::Sub(_) => return Err(Error::WrongParameters("H must be a coordinate subspace".into())),
            }
        }
        let mut all: Vec<usize> = section.iter().chain(&h_coords).copied().collect();
        all.sort_unstable();
        if all != (1..=top).collect::<Vec<_>>() {
            return Err(Error::WrongParameters("section and H coordinates must partition a_1..a_top".into()));
        }
        if !h_coords.contains(&f_coord) {
            return Err(Error::WrongParameters("f must read a coordinate of H".into()));
        }
        let out = DLSumSpec { p, qe, n, h, section, h_kind, f_coord, target, psi, h_coords };
        let elems: Vec<u32> = f.elems().collect();
        let size = (f.size() as u128).pow(top as u32);
        check_size("section check", size * 2, 1 << 24)?;
        let hs: Vec<Vec<u32>> = {
            let mut v = Vec::new();
            for_each_tuple_range(&vec![elems.clone(); out.h_coords.len()], 0, (f.size() as u64).pow(out.h_coords.len() as u32), |_, c| {
                v.push(out.h_elem(&params, &c[1..]));
            });
            v
        };
        let mut seen = HashSet::new();
        for_each_tuple_range(&vec![elems; out.section.len()], 0, (f.size() as u64).pow(out.section.len() as u32), |_, c| {
            let sx = out.section_elem(&params, &c[1..]);
            for hh in &hs {
                seen.insert(params.mul_raw(&sx, hh));
            }
        });
        if seen.len() as u128 != size {
            return Err(Error::WrongParameters("s is not a section of G -> G/H".into()));
        }
        for a in &hs {
            for b in &hs {
                let c = params.mul_raw(a, b);
                if !spec.contains(&f, &c) || c[f_coord] != f.add(a[f_coord], b[f_coord]) {
                    return Err(Error::WrongParameters("f is not a homomorphism on H".into()));
                }
            }
        }
        Ok(out)
    }

    /// The instance with G = U^{2,q}_3, H = H_3, s(a_1, a_2) = 1 + a_1 tau + a_2 tau^2, f = a_4.
    pub fn main_example(p: u32, qe: u32, psi: AddChar, target: TargetSet) -> Result<DLSumSpec> {
        DLSumSpec::new(p, qe, 2, 3, vec![1, 2], SubgroupKind::Filtration(3), 4, target, psi)
    }

    fn section_elem(&self, params: &RingParams, x: &[u32]) -> Vec<u32> {
        let mut a = vec![0; params.len()];
        a[0] = 1;
        for (&j, &v) in self.section.iter().zip(x) {
            a[j] = v;
        }
        a
    }

    fn h_elem(&self, params: &RingParams, y: &[u32]) -> Vec<u32> {
        let mut a = vec![0; params.len()];
        a[0] = 1;
        for (&j, &v) in self.h_coords.iter().zip(y) {
            a[j] = v;
        }
        a
    }
}

/// One root z of z^{q^d} - z = c for each c that has one (NONE otherwise).
fn as_roots(params: &RingParams, d: u32) -> Vec<u32> {
    let f = params.field();
    let mut root = vec![NONE; f.size() as usize];
    for z in f.elems() {
        let c = f.sub(params.frob_q(z, d as i64), z) as usize;
        if root[c] == NONE {
            root[c] = z;
        }
    }
    root
}

/// Some g with F_{q^d}(g) g^{-1} = y, where `roots` solves z^{q^d} - z = c; one coefficient at a time.
pub fn lang_preimage(params: &RingParams, y: &[u32], roots: &[u32]) -> Option<Vec<u32>> {
    let f = params.field();
    let mut g = vec![0u32; y.len()];
    g[0] = 1;
    // coefficient k of F(g) = y g: g_k^{q^d} - g_k = y_k + sum_{i, j >= 1, i + j = k} y_i g_j^{q^i}
    for k in 1..y.len() {
        let mut c = y[k];
        for i in 1..k {
            c = f.add(c, f.mul(y[i], params.frob_q(g[k - i], i as i64)));
        }
        let r = roots[c as usize];
        if r == NONE {
            return None;
        }
        g[k] = r;
    }
    Some(g)
}

/// beta^{-1}(Y)(F_{q^{n s}}) as coordinate vectors (1, a_1, ..., a_top), codes in F_{q^{n s}}.
pub fn dl_locus(spec: &DLSumSpec, s: u32, limit: u128, shards: usize) -> Result<Vec<Vec<u32>>> {
    let wide = if spec.target == TargetSet::LangImage { s * spec.p } else { s };
    let params = RingParams::over(spec.p, spec.qe, spec.n, spec.h, wide)?;
    let big = params.field().clone();
    let coord = Field::get(spec.p, spec.qe * spec.n * s)?;
    let top = params.top();
    let sub: Vec<u32> = coord.elems().map(|x| coord.embed_in(&big, x)).collect::<Result<_>>()?;
    let values = vec![sub; top];
    check_size("beta^{-1}(Y) enumeration", tuple_total(&values), limit)?;
    let roots = if spec.target == TargetSet::LangImage { as_roots(&params, spec.n) } else { Vec::new() };
    let n = spec.n as i64;
    let pts = fold_tuples(
        &values,
        shards,
        Vec::new,
        |acc: &mut Vec<Vec<u32>>, a| {
            let x: Vec<u32> = spec.section.iter().map(|&j| a[j]).collect();
            let y: Vec<u32> = spec.h_coords.iter().map(|&j| a[j]).collect();
            let sx = spec.section_elem(&params, &x);
            let hh = spec.h_elem(&params, &y);
            let keep = match spec.target {
                TargetSet::Whole => true,
                TargetSet::Y3Closed => {
                    let sfx = spec.section_elem(&params, &x.iter().map(|&c| params.frob_q(c, n)).collect::<Vec<_>>());
                    let beta = params.mul_raw(&params.mul_raw(&sfx, &hh), &params.inv_raw(&sx).expect("unit"));
                    in_y3_closed(&params, &beta)
                }
                TargetSet::LangImage => {
                    // beta(x, h) = L(s(x) h') whenever L(h') = h
                    let hp = lang_preimage(&params, &hh, &roots).expect("Artin-Schreier roots exist one level up");
                    let g = params.mul_raw(&sx, &hp);
                    debug_assert_eq!(params.lang_raw(&g, spec.n).unwrap(), {
                        let sfx = spec.section_elem(&params, &x.iter().map(|&c| params.frob_q(c, n)).collect::<Vec<_>>());
                        params.mul_raw(&params.mul_raw(&sfx, &hh), &params.inv_raw(&sx).unwrap())
                    });
                    in_xh_raw(&params, &g)
                }
            };
            if keep {
                acc.push(a.iter().map(|&c| coord.restrict_from(&big, c).expect("coordinate field")).collect());
            }
        },
        |a, b| a.extend(b),
    );
    Ok(pts)
}

/// sum over (x, h) in beta^{-1}(Y)(F_{q^{n s}}) of psi(Tr f(h)).
pub fn dl_intertwiner_sum(spec: &DLSumSpec, s: u32, limit: u128, shards: usize) -> Result<CycloNum> {
    let pts = dl_locus(spec, s, limit, shards)?;
    let base = spec.qe * spec.n;
    let coord = Field::get(spec.p, base * s)?;
    let a = psi_param_in(&spec.psi, base, &coord)?;
    let mut rs = RootSum::new(spec.p);
    for pt in &pts {
        let t = coord.trace(pt[spec.f_coord], base * s, base);
        rs.push(coord.abs_trace(coord.mul(a, t), base), 1);
    }
    Ok(rs.value())
}

/// Points (1, a_1, a_2, a_3, a_4) of F_{q^{2s}}^4 on the first equation with a_4 = P(a_1, a_2, a_3).
pub fn first_second_locus(p: u32, qe: u32, s: u32) -> Result<Vec<Vec<u32>>> {
    let f = Field::get(p, 2 * qe * s)?;
    let mut out = Vec::new();
    for a3 in f.elems() {
        for a2 in f.elems() {
            for a1 in f.elems() {
                if first_equation(&f, qe, a1, a2) {
                    out.push(vec![1, a1, a2, a3, p_value(&f, qe, a1, a2, a3)]);
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

// ---------------------------------------------------------------------------------------
// N_2 and point counts

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct N2Report {
    pub checked: u64,
    pub failures: u64,
}

/// pr_n(L_{q^n}(g)) = N_2(g)^q - N_2(g) for all g in U^{n,q}(F_{q^{2n}}).
pub fn n2_identity(p: u32, qe: u32, n: u32, limit: u128, shards: usize) -> Result<N2Report> {
    let params = RingParams::over(p, qe, n, 2, 2)?;
    let f = params.field().clone();
    let values = vec![f.elems().collect::<Vec<u32>>(); params.top()];
    check_size("N_2 identity", tuple_total(&values), limit)?;
    let (checked, failures) = fold_tuples(
        &values,
        shards,
        || (0u64, 0u64),
        |acc, a| {
            let g = TwistedElem::new(&params, a.to_vec()).expect("valid codes");
            let l = params.lang_raw(a, n).expect("principal unit");
            let n2 = n2_norm(&g).expect("h = 2");
            acc.0 += 1;
            acc.1 += u64::from(l[n as usize] != f.sub(params.frob_q(n2, 1), n2));
        },
        |a, b| {
            a.0 += b.0;
            a.1 += b.1;
        },
    );
    Ok(N2Report { checked, failures })
}

/// deg rho_psi for psi of conductor q^m: [U : H_m], or [U : Gamma_m] when m is even and n/m odd.
pub fn rho_degree(p: u32, qe: u32, n: u32, m: u32) -> Result<u64> {
    let params = RingParams::over(p, qe, n, 2, 1)?;
    let n1 = n / m;
    let kind = if m.is_multiple_of(2) && n1 % 2 == 1 { SubgroupKind::Gamma(m) } else { SubgroupKind::H(m) };
    let spec = SubgroupSpec::for_ring(&params, kind)?;
    let fk = params.field().k();
    let log_p_sub: u32 = (1..=params.top())
        .map(|j| match spec.domain(j) {
            CoordDomain::Zero => 0,
            CoordDomain::All => fk,
            CoordDomain::Sub(d) => d,
        })
        .sum();
    Ok((p as u64).pow(fk * params.top() as u32 - log_p_sub))
}

/// sum_psi deg rho_psi (-1)^{(n - n_1)(1 + s)} q^{s n (n + n_1 - 2)/2}: the Lefschetz number of
/// Fr_{q^n}^s on X when Fr_{q^n} acts on H^{n+n_1-2}_c[psi] by (-1)^{n-n_1} q^{n(n+n_1-2)/2}.
pub fn level2_prediction(p: u32, qe: u32, n: u32, s: u32) -> Result<i128> {
    let f = Field::get(p, qe * n)?;
    let q = q_of(p, qe) as i128;
    let mut total = 0i128;
    for psi in all_add_chars(&f, qe * n)? {
        let m = conductor(&psi, qe)?;
        let n1 = n / m;
        let sign = if ((n - n1) * (1 + s)).is_multiple_of(2) { 1 } else { -1 };
        total += sign * rho_degree(p, qe, n, m)? as i128 * q.pow(s * n * (n + n1 - 2) / 2);
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MaxRow {
    pub s: u32,
    /// |X_h(F_{q^{n s}})|
    pub count: u64,
    pub prediction: Option<i128>,
}

impl MaxRow {
    pub fn consistent(&self) -> Option<bool> {
        self.prediction.map(|v| v == self.count as i128)
    }
}

/// Point counts of X_h over F_{q^{n s}}; predictions exist for h = 2 only.
pub fn maximality_probe(p: u32, qe: u32, n: u32, h: u32, s_range: &[u32], limit: u128, shards: usize) -> Result<Vec<MaxRow>> {
    let mut rows = Vec::new();
    for &s in s_range {
        let params = RingParams::over(p, qe, n, h, s)?;
        let count = xh_points(&params, limit, shards)?.points.len() as u64;
        let prediction = if h == 2 { Some(level2_prediction(p, qe, n, s)?) } else { None };
        rows.push(MaxRow { s, count, prediction });
    }
    Ok(rows)
}

/// "query,parameters,count" lines.
pub fn counts_csv(rows: &[(String, String, u64)]) -> String {
    let mut out = String::from("query,parameters,count\n");
    for (q, params, c) in rows {
        out.push_str(&format!("{q},\"{params}\",{c}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const L: u128 = DEFAULT_LIMIT;

    #[test]
    fn untwisted_count_is_rational_points() {
        for (p, n, h) in [(2, 2, 2), (3, 2, 2), (2, 3, 2), (2, 2, 3)] {
            let q = TwistedFixedQuery::untwisted(p, 1, n, h);
            let c = twisted_count(&q, L, 4).unwrap();
            assert_eq!(c.count, (p as u64).pow(n * n * (h - 1)), "{p} {n} {h}");
            assert!(c.status().is_err());
        }
    }

    #[test]
    fn untwisted_count_saturates() {
        let c = twisted_count_saturated(&TwistedFixedQuery::untwisted(2, 1, 2, 2), L, 2).unwrap();
        assert_eq!(c.saturated, Some(true));
        assert!(c.status().is_ok());
    }

    #[test]
    fn zeta_fixed_locus_size() {
        for (p, n, h) in [(2, 2, 2), (3, 2, 2), (2, 3, 2), (2, 2, 3)] {
            let c = twisted_count(&TwistedFixedQuery::zeta_fixed(p, 1, n, h), L, 3).unwrap();
            assert_eq!(c.count, (p as u64).pow(n * (h - 1)));
        }
    }

    #[test]
    fn central_twists_have_no_solutions() {
        // F(x) = x (1 + z tau^n) forces pr_n(L(x)) = z, which is nonzero off Y; likewise for
        // gamma = 1 + z pi acting on the left
        let mut q = TwistedFixedQuery::untwisted(2, 1, 2, 2);
        q.right = vec![1, 0, 1];
        assert_eq!(twisted_count_saturated(&q, L, 2).unwrap().count, 0);
        let mut q = TwistedFixedQuery::untwisted(3, 1, 2, 2);
        q.gamma = Some(vec![1, 2]);
        assert_eq!(twisted_count(&q, L, 2).unwrap().count, 0);
    }

    #[test]
    fn level2_traces() {
        for (p, n) in [(2, 2), (3, 2), (2, 3)] {
            let rows = trace_suite_level2(p, 1, n, L, 4).unwrap();
            assert_eq!(rows.len(), (p as usize).pow(n));
            assert!(rows.iter().all(|r| r.ok()), "{rows:?}");
        }
    }

    #[test]
    fn level3_trace_sums() {
        let (size, sums) = trace_suite_level3(2, 1, L, 4).unwrap();
        assert_eq!(size, 16);
        assert_eq!(sums.len(), 16);
        assert!(sums.iter().all(|&s| s == 16));
    }

    #[test]
    fn npp_sums() {
        for p in [2, 3] {
            let rows = npp_identity(p, 1).unwrap();
            assert_eq!(rows.len(), (p * p * p) as usize);
            assert!(rows.iter().all(|r| r.sum == r.expected), "{rows:?}");
        }
    }

    #[test]
    fn reduced_table_matches_full_enumeration() {
        let red = eigen_table(2, 1, EigenDomain::Reduced, L, 4).unwrap();
        let full = eigen_table(2, 1, EigenDomain::Full, L, 4).unwrap();
        assert_eq!(red.entries, full.entries);
        assert_eq!(factorization_mismatches(&red).unwrap(), 0);
    }

    #[test]
    fn eigendims_at_two() {
        let t = eigen_table(2, 1, EigenDomain::Reduced, L, 2).unwrap();
        let suite = eigen_suite(&t).unwrap();
        assert_eq!(suite.dims.len(), 8);
        assert!(suite.ok(), "{:?}", suite.dims);
    }

    #[test]
    fn tables_do_not_depend_on_sharding() {
        let a = eigen_table(2, 1, EigenDomain::Reduced, L, 1).unwrap();
        let b = eigen_table(2, 1, EigenDomain::Reduced, L, 7).unwrap();
        assert_eq!(a.entries, b.entries);
        let psi = AddChar::new(&Field::get(2, 2).unwrap(), 2, 2).unwrap();
        let sys = intertwiner_system(2, 1);
        assert_eq!(exp_sum(&sys, &psi, 2, L, 1).unwrap(), exp_sum(&sys, &psi, 2, L, 5).unwrap());
    }

    fn conductor_two_chars(p: u32) -> Vec<AddChar> {
        let f = Field::get(p, 2).unwrap();
        all_add_chars(&f, 2).unwrap().into_iter().filter(|c| conductor(c, 1).unwrap() == 2).collect()
    }

    #[test]
    fn intertwiner_sums() {
        for p in [2u32, 3] {
            let sys = intertwiner_system(p, 1);
            for psi in conductor_two_chars(p) {
                for s in [1, 2] {
                    let v = exp_sum(&sys, &psi, s, L, 4).unwrap();
                    assert_eq!(v, CycloNum::from_int(p, (p as i64).pow(2 + 2 * s)), "p={p} s={s}");
                }
            }
        }
    }

    #[test]
    fn trivial_map_counts_points() {
        let f = Field::get(3, 2).unwrap();
        let sys = PolySystem { name: "plane".into(), p: 3, base_deg: 2, dims: 2, pred: Box::new(|_, _| true), map: Box::new(|_, _| 0) };
        let psi = AddChar::new(&f, 2, 1).unwrap();
        assert_eq!(exp_sum(&sys, &psi, 1, L, 2).unwrap(), CycloNum::from_int(3, 81));
    }

    #[test]
    fn inductive_identity() {
        for p in [2u32, 3] {
            let spec = intertwiner_inductive(p, 1);
            let s_range: &[u32] = if p == 2 { &[1, 2] } else { &[1] };
            for psi in conductor_two_chars(p) {
                let rows = inductive_check(&spec, &psi, s_range, L, 4).unwrap();
                assert_eq!(rows.len(), s_range.len());
                let direct = exp_sum(&intertwiner_system(p, 1), &psi, 1, L, 4).unwrap();
                assert_eq!(direct.to_string(), rows[0].lhs);
            }
        }
    }

    #[test]
    fn inductive_with_vanishing_f() {
        let p = 2;
        let mut spec = intertwiner_inductive(p, 1);
        spec.f = Box::new(|_, _| 0);
        let psi = conductor_two_chars(p).remove(0);
        assert!(inductive_check(&spec, &psi, &[1, 2], L, 2).is_ok());
    }

    #[test]
    fn inductive_rejects_dividing_conductor() {
        let f = Field::get(2, 2).unwrap();
        let psi = AddChar::new(&f, 2, 1).unwrap();
        assert!(inductive_check(&intertwiner_inductive(2, 1), &psi, &[1], L, 1).is_err());
    }

    #[test]
    fn dl_loci_agree() {
        let psi = conductor_two_chars(2).remove(0);
        let lang = dl_locus(&DLSumSpec::main_example(2, 1, psi.clone(), TargetSet::LangImage).unwrap(), 2, L, 4).unwrap();
        let closed = dl_locus(&DLSumSpec::main_example(2, 1, psi, TargetSet::Y3Closed).unwrap(), 2, L, 4).unwrap();
        let mut lang_sorted = lang.clone();
        lang_sorted.sort();
        let mut closed_sorted = closed;
        closed_sorted.sort();
        let eqs = first_second_locus(2, 1, 2).unwrap();
        assert_eq!(lang_sorted, eqs);
        assert_eq!(closed_sorted, eqs);
    }

    #[test]
    fn dl_sum_equals_reduced_sum() {
        for p in [2u32, 3] {
            for psi in conductor_two_chars(p) {
                let spec = DLSumSpec::main_example(p, 1, psi.clone(), TargetSet::LangImage).unwrap();
                let v = dl_intertwiner_sum(&spec, 1, L, 4).unwrap();
                assert_eq!(v, exp_sum(&intertwiner_system(p, 1), &psi, 1, L, 4).unwrap());
                assert_eq!(v, CycloNum::from_int(p, (p as i64).pow(4)));
            }
        }
    }

    #[test]
    fn dl_sum_over_whole_group_vanishes() {
        let psi = conductor_two_chars(2).remove(0);
        let spec = DLSumSpec::main_example(2, 1, psi, TargetSet::Whole).unwrap();
        assert!(dl_intertwiner_sum(&spec, 1, L, 2).unwrap().is_zero());
    }

    #[test]
    fn bad_section_is_rejected() {
        let psi = conductor_two_chars(2).remove(0);
        assert!(DLSumSpec::new(2, 1, 2, 3, vec![1, 3], SubgroupKind::Filtration(3), 4, TargetSet::Whole, psi).is_err());
    }

    #[test]
    fn lang_preimage_inverts_lang() {
        // coefficients in F_16, roots one Artin-Schreier step up in F_256
        let params = RingParams::over(2, 1, 2, 3, 4).unwrap();
        let f16 = Field::get(2, 4).unwrap();
        let roots = as_roots(&params, 2);
        let mut solved = 0;
        for c in [[0u32, 0, 5, 9], [0, 0, 1, 15], [3, 7, 1, 2], [1, 0, 0, 15]] {
            let mut y = vec![1];
            y.extend(c.iter().map(|&x| f16.embed_in(params.field(), x).unwrap()));
            // later coefficients may need a further extension; then there is no answer here
            if let Some(g) = lang_preimage(&params, &y, &roots) {
                assert_eq!(params.lang_raw(&g, 2).unwrap(), y);
                solved += 1;
            } else {
                assert_ne!(c[0], 0);
            }
        }
        assert!(solved >= 2);
    }

    #[test]
    fn n2_identity_holds() {
        for (p, n) in [(2, 2), (3, 2), (2, 3)] {
            let r = n2_identity(p, 1, n, L, 4).unwrap();
            assert_eq!(r.failures, 0);
            assert_eq!(r.checked, (p as u64).pow(2 * n * n));
        }
    }

    #[test]
    fn level2_predictions() {
        for (p, n) in [(2, 2), (3, 2), (2, 3)] {
            assert_eq!(level2_prediction(p, 1, n, 1).unwrap(), (p as i128).pow(n * n));
        }
        assert_eq!(rho_degree(2, 1, 2, 2).unwrap(), 2);
        assert_eq!(rho_degree(2, 1, 2, 1).unwrap(), 1);
    }

    #[test]
    fn probe_matches_predictions_at_level_two() {
        for (p, n, s_range) in [(2, 2, vec![1, 2, 3]), (3, 2, vec![1, 2]), (2, 3, vec![1, 2])] {
            let rows = maximality_probe(p, 1, n, 2, &s_range, L, 4).unwrap();
            assert!(rows.iter().all(|r| r.consistent() == Some(true)), "{rows:?}");
        }
        let rows = maximality_probe(2, 1, 2, 3, &[1], L, 2).unwrap();
        assert_eq!(rows[0].prediction, None);
        assert_eq!(rows[0].count, 256);
    }
}
