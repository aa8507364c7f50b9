//! Finite groups given by indexed element universes, class functions over Q(zeta_N),
//! induction, monomial representations, and extension of an invariant irreducible
//! representation across a cyclic quotient.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::cyclo::{CycloNum, RootSum};
use crate::error::{Error, Result};
use crate::ffield::{lcm, Field};
use crate::twistring::{gnq_inv_raw, gnq_mul_raw, RingParams};

/// Marks "not a member" in per-element tables.
pub const NONE: u32 = u32::MAX;

/// A finite group whose elements are the integers 0..order().
pub trait GroupModel: Send + Sync {
    fn order(&self) -> usize;
    fn mul(&self, a: usize, b: usize) -> usize;
    fn inv(&self, a: usize) -> usize;
    fn identity(&self) -> usize;
    /// A generating set.
    fn generators(&self) -> Vec<usize>;
    fn label(&self, a: usize) -> String;

    fn conj(&self, g: usize, x: usize) -> usize {
        self.mul(self.mul(g, x), self.inv(g))
    }
    fn pow(&self, a: usize, mut e: u64) -> usize {
        let mut acc = self.identity();
        let mut b = a;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        acc
    }
    fn elem_order(&self, a: usize) -> u64 {
        let id = self.identity();
        let mut x = a;
        let mut k = 1;
        while x != id {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }
}

/// lcm of all element orders.
pub fn group_exponent(g: &dyn GroupModel) -> u64 {
    (0..g.order()).fold(1, |acc, a| lcm(acc, g.elem_order(a)))
}

/// Group axioms on all triples (small groups) or on a deterministic sample.
pub fn check_group_axioms(g: &dyn GroupModel, sample: usize) -> Result<()> {
    let n = g.order();
    let id = g.identity();
    let bad = |what: &str| Err(Error::WrongParameters(format!("group axiom fails: {what}")));
    for a in 0..n {
        if g.mul(a, id) != a || g.mul(id, a) != a {
            return bad("identity");
        }
        if g.mul(a, g.inv(a)) != id {
            return bad("inverse");
        }
    }
    let mut s = 0x9e3779b97f4a7c15u64;
    let mut next = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s % n as u64) as usize
    };
    let triples = if n * n * n <= sample { None } else { Some(sample) };
    match triples {
        None => {
            for a in 0..n {
                for b in 0..n {
                    let ab = g.mul(a, b);
                    for c in 0..n {
                        if g.mul(ab, c) != g.mul(a, g.mul(b, c)) {
                            return bad("associativity");
                        }
                    }
                }
            }
        }
        Some(k) => {
            for _ in 0..k {
                let (a, b, c) = (next(), next(), next());
                if g.mul(g.mul(a, b), c) != g.mul(a, g.mul(b, c)) {
                    return bad("associativity");
                }
            }
        }
    }
    Ok(())
}

/// A verified subgroup: sorted members and a membership mask.
#[derive(Clone, Debug)]
pub struct Subgroup {
    pub name: String,
    pub members: Vec<usize>,
    pub mask: Vec<bool>,
    pub gens: Vec<usize>,
}

impl Subgroup {
    /// The members satisfying `pred`, verified to form a subgroup by building a generating
    /// set out of them and checking that its closure stays inside.
    pub fn from_predicate(g: &dyn GroupModel, name: &str, pred: impl Fn(usize) -> bool) -> Result<Subgroup> {
        let mask: Vec<bool> = (0..g.order()).map(&pred).collect();
        Subgroup::from_mask(g, name, mask)
    }

    pub fn from_mask(g: &dyn GroupModel, name: &str, mask: Vec<bool>) -> Result<Subgroup> {
        let members: Vec<usize> = (0..g.order()).filter(|&a| mask[a]).collect();
        if !mask[g.identity()] {
            return Err(Error::NotASubgroup(format!("{name} misses the identity")));
        }
        let mut reach = vec![false; g.order()];
        reach[g.identity()] = true;
        let mut list = vec![g.identity()];
        let mut gens = Vec::new();
        for &h in &members {
            if reach[h] {
                continue;
            }
            gens.push(h);
            // right-multiply everything reached so far by every generator until stable
            let mut queue: VecDeque<usize> = list.iter().copied().collect();
            while let Some(x) = queue.pop_front() {
                for &s in &gens {
                    let y = g.mul(x, s);
                    if !reach[y] {
                        if !mask[y] {
                            return Err(Error::NotASubgroup(format!("{name} is not closed under multiplication")));
                        }
                        reach[y] = true;
                        list.push(y);
                        queue.push_back(y);
                    }
                }
            }
        }
        Ok(Subgroup { name: name.into(), members, mask, gens })
    }

    /// Subgroup generated by the given elements.
    pub fn generated(g: &dyn GroupModel, name: &str, gens: &[usize]) -> Subgroup {
        let mut mask = vec![false; g.order()];
        mask[g.identity()] = true;
        let mut queue = VecDeque::from([g.identity()]);
        while let Some(x) = queue.pop_front() {
            for &s in gens {
                let y = g.mul(x, s);
                if !mask[y] {
                    mask[y] = true;
                    queue.push_back(y);
                }
            }
        }
        let members = (0..g.order()).filter(|&a| mask[a]).collect();
        Subgroup { name: name.into(), members, mask, gens: gens.to_vec() }
    }

    pub fn whole(g: &dyn GroupModel) -> Subgroup {
        Subgroup {
            name: "G".into(),
            members: (0..g.order()).collect(),
            mask: vec![true; g.order()],
            gens: g.generators(),
        }
    }

    pub fn order(&self) -> usize {
        self.members.len()
    }
    pub fn contains(&self, a: usize) -> bool {
        self.mask[a]
    }
}

/// Left transversal of H in G with the coset of every element.
#[derive(Clone, Debug)]
pub struct Transversal {
    pub reps: Vec<usize>,
    pub rep_inv: Vec<usize>,
    pub coset_of: Vec<u32>,
}

impl Transversal {
    pub fn left(g: &dyn GroupModel, h: &Subgroup) -> Transversal {
        let mut coset_of = vec![NONE; g.order()];
        let mut reps = Vec::new();
        for x in 0..g.order() {
            if coset_of[x] != NONE {
                continue;
            }
            let c = reps.len() as u32;
            reps.push(x);
            for &y in &h.members {
                coset_of[g.mul(x, y)] = c;
            }
        }
        let rep_inv = reps.iter().map(|&r| g.inv(r)).collect();
        Transversal { reps, rep_inv, coset_of }
    }
    pub fn index(&self) -> usize {
        self.reps.len()
    }
}

/// Conjugacy classes, found as orbits under conjugation by the generators.
#[derive(Clone, Debug)]
pub struct ConjClasses {
    pub class_of: Vec<u32>,
    pub reps: Vec<usize>,
    pub sizes: Vec<usize>,
    pub group_order: usize,
}

impl ConjClasses {
    pub fn compute(g: &dyn GroupModel, max_size: usize) -> Result<ConjClasses> {
        if g.order() > max_size {
            return Err(Error::SizeLimitExceeded {
                what: "conjugacy classes".into(),
                needed: g.order() as u128,
                limit: max_size as u128,
            });
        }
        let gens: Vec<(usize, usize)> = g.generators().into_iter().map(|s| (s, g.inv(s))).collect();
        let mut class_of = vec![NONE; g.order()];
        let mut reps = Vec::new();
        let mut sizes = Vec::new();
        for x in 0..g.order() {
            if class_of[x] != NONE {
                continue;
            }
            let c = reps.len() as u32;
            reps.push(x);
            class_of[x] = c;
            let mut size = 1;
            let mut queue = VecDeque::from([x]);
            while let Some(y) = queue.pop_front() {
                for &(s, si) in &gens {
                    let z = g.mul(g.mul(s, y), si);
                    if class_of[z] == NONE {
                        class_of[z] = c;
                        size += 1;
                        queue.push_back(z);
                    }
                }
            }
            sizes.push(size);
        }
        Ok(ConjClasses { class_of, reps, sizes, group_order: g.order() })
    }
    /// Classes of a subgroup H under its own conjugation; `class_of` is indexed by the
    /// elements of G and holds NONE outside H.
    pub fn of_subgroup(g: &dyn GroupModel, h: &Subgroup) -> ConjClasses {
        let gens: Vec<(usize, usize)> = h.gens.iter().map(|&s| (s, g.inv(s))).collect();
        let mut class_of = vec![NONE; g.order()];
        let mut reps = Vec::new();
        let mut sizes = Vec::new();
        for &x in &h.members {
            if class_of[x] != NONE {
                continue;
            }
            let c = reps.len() as u32;
            reps.push(x);
            class_of[x] = c;
            let mut size = 1;
            let mut queue = VecDeque::from([x]);
            while let Some(y) = queue.pop_front() {
                for &(s, si) in &gens {
                    let z = g.mul(g.mul(s, y), si);
                    if class_of[z] == NONE {
                        class_of[z] = c;
                        size += 1;
                        queue.push_back(z);
                    }
                }
            }
            sizes.push(size);
        }
        ConjClasses { class_of, reps, sizes, group_order: h.order() }
    }

    pub fn count(&self) -> usize {
        self.reps.len()
    }
}

/// A linear character of a subgroup: exponents of zeta_N per element, NONE outside.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgroupChar {
    pub root_order: u32,
    pub table: Vec<u32>,
}

impl SubgroupChar {
    pub fn trivial(g: &dyn GroupModel, h: &Subgroup, root_order: u32) -> SubgroupChar {
        let mut table = vec![NONE; g.order()];
        for &x in &h.members {
            table[x] = 0;
        }
        SubgroupChar { root_order, table }
    }

    /// The same character with values read in zeta_{n2}, n2 a multiple of root_order.
    pub fn lift(&self, n2: u32) -> Result<SubgroupChar> {
        if !n2.is_multiple_of(self.root_order) {
            return Err(Error::MixedOrderWithoutLift(self.root_order, n2));
        }
        let k = n2 / self.root_order;
        let table = self.table.iter().map(|&v| if v == NONE { NONE } else { v * k }).collect();
        Ok(SubgroupChar { root_order: n2, table })
    }

    pub fn value(&self, x: usize) -> Option<u32> {
        let v = self.table[x];
        (v != NONE).then_some(v)
    }

    /// chi(ab) = chi(a) chi(b) for all a in H and b among the generators of H; this
    /// propagates to all pairs.
    pub fn is_homomorphism(&self, g: &dyn GroupModel, h: &Subgroup) -> bool {
        let n = self.root_order;
        h.members.iter().all(|&a| {
            h.gens.iter().all(|&b| {
                let ab = self.table[g.mul(a, b)];
                ab != NONE && ab == (self.table[a] + self.table[b]) % n
            })
        }) && self.table[g.identity()] == 0
    }

    /// Exhaustive version over all pairs.
    pub fn is_homomorphism_all_pairs(&self, g: &dyn GroupModel, h: &Subgroup) -> bool {
        let n = self.root_order;
        h.members.iter().all(|&a| {
            h.members.iter().all(|&b| {
                let ab = self.table[g.mul(a, b)];
                ab != NONE && ab == (self.table[a] + self.table[b]) % n
            })
        })
    }

    pub fn csv(&self, g: &dyn GroupModel) -> String {
        let mut s = String::from("element,value\n");
        for (x, &v) in self.table.iter().enumerate() {
            if v != NONE {
                let _ = writeln!(s, "\"{}\",{}", g.label(x), CycloNum::root_of_unity(self.root_order, v as i64));
            }
        }
        s
    }
}

/// All extensions of chi from S to <S, g>, assuming g normalizes S. Empty when chi is not
/// invariant under conjugation by g.
pub fn extend_linear_char(g: &dyn GroupModel, s: &Subgroup, chi: &SubgroupChar, x: usize) -> Result<(Subgroup, Vec<SubgroupChar>)> {
    let n = chi.root_order as u64;
    let xi = g.inv(x);
    for &a in &s.members {
        let c = g.mul(g.mul(x, a), xi);
        if !s.mask[c] {
            return Err(Error::NotASubgroup(format!("{} is not normalized by the new generator", s.name)));
        }
    }
    let mut gens = s.gens.clone();
    gens.push(x);
    let big = Subgroup::generated(g, &format!("<{}, g>", s.name), &gens);
    // invariance of chi under conjugation by x
    let invariant = s.members.iter().all(|&a| chi.table[g.mul(g.mul(x, a), xi)] == chi.table[a]);
    if !invariant {
        return Ok((big, Vec::new()));
    }
    let mut r = 1u64;
    let mut xr = x;
    while !s.mask[xr] {
        xr = g.mul(xr, x);
        r += 1;
    }
    let target = chi.table[xr] as u64;
    let mut out = Vec::new();
    for v in 0..n {
        if (r * v) % n != target {
            continue;
        }
        // chi'(x^i a) = v i + chi(a)
        let mut table = vec![NONE; g.order()];
        let mut xi_pow = g.identity();
        for i in 0..r {
            for &a in &s.members {
                table[g.mul(xi_pow, a)] = ((v * i + chi.table[a] as u64) % n) as u32;
            }
            xi_pow = g.mul(xi_pow, x);
        }
        out.push(SubgroupChar { root_order: chi.root_order, table });
    }
    if out.is_empty() {
        return Err(Error::NoExtensionExists(format!(
            "zeta_{n} has no {r}-th root of the required value; the root order is too small"
        )));
    }
    Ok((big, out))
}

/// All linear characters of H extending chi from S, by successive cyclic extensions along
/// the members of H in index order. Each step must normalize the previous subgroup, which
/// holds for the nested abelian-by-central subgroups used here.
pub fn all_extensions(g: &dyn GroupModel, s: &Subgroup, chi: &SubgroupChar, h: &Subgroup) -> Result<Vec<SubgroupChar>> {
    let mut level = vec![(s.clone(), chi.clone())];
    loop {
        let cur = &level[0].0;
        if cur.order() == h.order() {
            break;
        }
        let x = *h.members.iter().find(|&&x| !cur.mask[x]).expect("proper subgroup");
        let mut next = Vec::new();
        for (sub, c) in &level {
            let (big, exts) = extend_linear_char(g, sub, c, x)?;
            for e in exts {
                next.push((big.clone(), e));
            }
        }
        if next.is_empty() {
            return Ok(Vec::new());
        }
        level = next;
    }
    let mut out: Vec<SubgroupChar> = level.into_iter().map(|(_, c)| c).collect();
    out.sort_by(|a, b| a.table.cmp(&b.table));
    Ok(out)
}

/// Class function with exact values per class.
#[derive(Clone, Debug)]
pub struct ClassFunction {
    pub classes: Arc<ConjClasses>,
    pub values: Vec<CycloNum>,
}

impl ClassFunction {
    pub fn from_fn(classes: &Arc<ConjClasses>, f: impl Fn(usize) -> CycloNum) -> ClassFunction {
        let values = classes.reps.iter().map(|&r| f(r)).collect();
        ClassFunction { classes: classes.clone(), values }
    }

    pub fn at(&self, x: usize) -> &CycloNum {
        &self.values[self.classes.class_of[x] as usize]
    }

    pub fn degree(&self, identity: usize) -> Option<u64> {
        self.at(identity).as_count()
    }

    pub fn csv(&self, g: &dyn GroupModel) -> String {
        let mut s = String::from("class_representative,size,value\n");
        for (i, &r) in self.classes.reps.iter().enumerate() {
            let _ = writeln!(s, "\"{}\",{},\"{}\"", g.label(r), self.classes.sizes[i], self.values[i]);
        }
        s
    }
}

/// (1/|G|) sum_g f1(g) conj(f2(g)).
pub fn inner_product(f1: &ClassFunction, f2: &ClassFunction) -> Result<CycloNum> {
    if !Arc::ptr_eq(&f1.classes, &f2.classes) {
        return Err(Error::ParameterMismatch("class functions on different groups".into()));
    }
    let n = f1.values[0].order();
    let mut acc = CycloNum::zero(n);
    for (i, (a, b)) in f1.values.iter().zip(&f2.values).enumerate() {
        let size = CycloNum::from_int(n, f1.classes.sizes[i] as i64);
        acc = &acc + &(&(a * &b.conj()) * &size);
    }
    let inv = BigRational::new(BigInt::from(1), BigInt::from(f1.classes.group_order));
    Ok(acc.scale(&inv))
}

/// Inner product that must be a nonnegative integer.
pub fn inner_product_count(f1: &ClassFunction, f2: &ClassFunction) -> Result<u64> {
    let v = inner_product(f1, f2)?;
    v.as_count().ok_or_else(|| Error::InnerProductNotInteger(v.to_string()))
}

pub fn is_irreducible(f: &ClassFunction) -> Result<bool> {
    Ok(inner_product_count(f, f)? == 1)
}

/// Ind_H^G of a function on H, Ind f(g) = sum over left coset reps r of f(r^{-1} g r).
pub fn induce_fn(
    g: &dyn GroupModel,
    classes: &Arc<ConjClasses>,
    tr: &Transversal,
    h: &Subgroup,
    n: u32,
    f: &(dyn Fn(usize) -> CycloNum + Sync),
) -> ClassFunction {
    let values = classes
        .reps
        .iter()
        .map(|&x| {
            let mut acc = CycloNum::zero(n);
            for (&r, &ri) in tr.reps.iter().zip(&tr.rep_inv) {
                let y = g.mul(g.mul(ri, x), r);
                if h.mask[y] {
                    acc = &acc + &f(y);
                }
            }
            acc
        })
        .collect();
    ClassFunction { classes: classes.clone(), values }
}

/// Ind_H^G of a linear character.
pub fn induce_char(g: &dyn GroupModel, classes: &Arc<ConjClasses>, h: &Subgroup, chi: &SubgroupChar) -> Result<ClassFunction> {
    if !chi.is_homomorphism(g, h) {
        return Err(Error::NotASubgroup(format!("character table is not a homomorphism on {}", h.name)));
    }
    let tr = Transversal::left(g, h);
    Ok(induce_char_with(g, classes, &tr, chi))
}

/// Ind of a linear character with a precomputed left transversal; the table is trusted.
pub fn induce_char_with(g: &dyn GroupModel, classes: &Arc<ConjClasses>, tr: &Transversal, chi: &SubgroupChar) -> ClassFunction {
    let n = chi.root_order;
    let values = classes
        .reps
        .iter()
        .map(|&x| {
            let mut acc = RootSum::new(n);
            for (&r, &ri) in tr.reps.iter().zip(&tr.rep_inv) {
                let v = chi.table[g.mul(g.mul(ri, x), r)];
                if v != NONE {
                    acc.push(v, 1);
                }
            }
            acc.value()
        })
        .collect();
    ClassFunction { classes: classes.clone(), values }
}

/// Restriction of a class function of G to a subgroup, on that subgroup's classes;
/// `embed` maps subgroup indices to G indices.
pub fn restrict(f: &ClassFunction, sub_classes: &Arc<ConjClasses>, embed: &dyn Fn(usize) -> usize) -> ClassFunction {
    ClassFunction::from_fn(sub_classes, |x| f.at(embed(x)).clone())
}

/// Permutation-with-phases matrix: column i has the single entry zeta^phase[i] in row perm[i].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonoMat {
    pub perm: Vec<u32>,
    pub phase: Vec<u32>,
}

impl MonoMat {
    pub fn mul(&self, o: &MonoMat, n: u32) -> MonoMat {
        // (A B) e_i = A (zeta^{b_i} e_{o(i)}) = zeta^{b_i + a_{o(i)}} e_{perm(o(i))}
        let perm = o.perm.iter().map(|&j| self.perm[j as usize]).collect();
        let phase = o.phase.iter().zip(&o.perm).map(|(&b, &j)| (b + self.phase[j as usize]) % n).collect();
        MonoMat { perm, phase }
    }
    pub fn trace(&self, n: u32) -> RootSum {
        let mut acc = RootSum::new(n);
        for (i, (&p, &ph)) in self.perm.iter().zip(&self.phase).enumerate() {
            if p as usize == i {
                acc.push(ph, 1);
            }
        }
        acc
    }
}

/// Ind_H^G(chi) realized on the basis of left cosets.
#[derive(Clone)]
pub struct MonomialRep {
    pub group: Arc<dyn GroupModel>,
    pub sub: Subgroup,
    pub chi: SubgroupChar,
    pub tr: Transversal,
}

impl MonomialRep {
    pub fn new(group: Arc<dyn GroupModel>, sub: Subgroup, chi: SubgroupChar) -> Result<MonomialRep> {
        if !chi.is_homomorphism(group.as_ref(), &sub) {
            return Err(Error::NotASubgroup(format!("character is not a homomorphism on {}", sub.name)));
        }
        let tr = Transversal::left(group.as_ref(), &sub);
        Ok(MonomialRep { group, sub, chi, tr })
    }

    pub fn degree(&self) -> usize {
        self.tr.index()
    }
    pub fn root_order(&self) -> u32 {
        self.chi.root_order
    }

    /// x r_i = r_j h sends e_i to chi(h) e_j.
    pub fn matrix(&self, x: usize) -> MonoMat {
        let g = self.group.as_ref();
        let d = self.degree();
        let mut perm = Vec::with_capacity(d);
        let mut phase = Vec::with_capacity(d);
        for &r in &self.tr.reps {
            let y = g.mul(x, r);
            let j = self.tr.coset_of[y] as usize;
            let h = g.mul(self.tr.rep_inv[j], y);
            perm.push(j as u32);
            phase.push(self.chi.table[h]);
        }
        MonoMat { perm, phase }
    }

    pub fn trace(&self, x: usize) -> RootSum {
        self.matrix(x).trace(self.root_order())
    }

    pub fn character(&self, classes: &Arc<ConjClasses>) -> ClassFunction {
        ClassFunction::from_fn(classes, |x| self.trace(x).value())
    }
}

/// Dense matrix over Z[zeta_N].
#[derive(Clone, Debug)]
pub struct DenseMat {
    pub d: usize,
    pub n: u32,
    pub e: Vec<RootSum>,
}

impl DenseMat {
    pub fn identity(d: usize, n: u32) -> DenseMat {
        let mut e = vec![RootSum::new(n); d * d];
        for i in 0..d {
            e[i * d + i].push(0, 1);
        }
        DenseMat { d, n, e }
    }
    pub fn mul(&self, o: &DenseMat) -> DenseMat {
        let d = self.d;
        let mut e = vec![RootSum::new(self.n); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = &self.e[i * d + k];
                if a.counts().iter().all(|&c| c == 0) {
                    continue;
                }
                for j in 0..d {
                    let b = &o.e[k * d + j];
                    if b.counts().iter().any(|&c| c != 0) {
                        e[i * d + j].merge(&a.mul(b));
                    }
                }
            }
        }
        DenseMat { d, n: self.n, e }
    }
    pub fn trace(&self) -> RootSum {
        let mut acc = RootSum::new(self.n);
        for i in 0..self.d {
            acc.merge(&self.e[i * self.d + i]);
        }
        acc
    }
    /// Tr(self * M) for a monomial M.
    pub fn trace_with(&self, m: &MonoMat) -> RootSum {
        let mut acc = RootSum::new(self.n);
        for (i, (&row, &ph)) in m.perm.iter().zip(&m.phase).enumerate() {
            // (A M)_{ii} = A_{i, perm(i)} zeta^{phase(i)}: column i of M sits in row perm(i)
            acc.merge(&self.e[i * self.d + row as usize].rotate(ph));
        }
        acc
    }
    pub fn from_mono(m: &MonoMat, n: u32) -> DenseMat {
        let d = m.perm.len();
        let mut e = vec![RootSum::new(n); d * d];
        for (j, (&i, &ph)) in m.perm.iter().zip(&m.phase).enumerate() {
            e[i as usize * d + j].push(ph, 1);
        }
        DenseMat { d, n, e }
    }
    pub fn same_value(&self, o: &DenseMat) -> bool {
        self.e.iter().zip(&o.e).all(|(a, b)| a.same_value(b))
    }
}

/// An irreducible monomial representation rho of N extended to <g, N> with G/N cyclic of
/// order c: xi(g^k x) = (mu T)^k rho(x).
pub struct Extension {
    pub rho: MonomialRep,
    pub c: u64,
    pub t: DenseMat,
    /// T^k for k in 0..c
    pub t_pows: Vec<DenseMat>,
    pub mu: CycloNum,
    /// scalar lambda with T^c = lambda rho(g^c)
    pub lambda: CycloNum,
    pub trace_t: CycloNum,
}

/// Solves T rho(x) = rho(g x g^{-1}) T. Every equation links two entries of T by a root of
/// unity, so elimination reduces to a union-find with exponent offsets; Schur's lemma
/// leaves exactly one consistent component.
pub fn solve_intertwiner(rho: &MonomialRep, conj_g: &dyn Fn(usize) -> usize) -> Result<DenseMat> {
    let d = rho.degree();
    let n = rho.root_order();
    let mut parent: Vec<usize> = (0..d * d).collect();
    // value(u) = zeta^{pot(u)} value(parent(u))
    let mut pot = vec![0u32; d * d];
    let mut bad = vec![false; d * d];
    fn find(u: usize, parent: &mut [usize], pot: &mut [u32], n: u32) -> (usize, u32) {
        let mut path = Vec::new();
        let mut x = u;
        while parent[x] != x {
            path.push(x);
            x = parent[x];
        }
        let root = x;
        // compress from the top of the path down
        let mut acc = 0;
        for &y in path.iter().rev() {
            acc = (acc + pot[y]) % n;
            pot[y] = acc;
            parent[y] = root;
        }
        (root, if path.is_empty() { 0 } else { pot[u] })
    }
    for x in rho.group.generators().into_iter().chain(rho.sub.gens.iter().copied()) {
        let a = rho.matrix(x);
        let b = rho.matrix(conj_g(x));
        let mut tau_inv = vec![0usize; d];
        for (k, &t) in b.perm.iter().enumerate() {
            tau_inv[t as usize] = k;
        }
        for i in 0..d {
            let k = tau_inv[i];
            for j in 0..d {
                // T_{i, sigma(j)} = zeta^{beta_k - alpha_j} T_{k, j}
                let u = i * d + a.perm[j] as usize;
                let v = k * d + j;
                let w = (b.phase[k] + n - a.phase[j]) % n;
                let (ru, pu) = find(u, &mut parent, &mut pot, n);
                let (rv, pv) = find(v, &mut parent, &mut pot, n);
                if ru == rv {
                    // zeta^{pu} = zeta^{w + pv} must hold
                    if pu != (w + pv) % n {
                        bad[ru] = true;
                    }
                } else {
                    // attach ru below rv: value(ru) = zeta^{w + pv - pu} value(rv)
                    parent[ru] = rv;
                    pot[ru] = (w + pv + n - pu) % n;
                    if bad[ru] {
                        bad[rv] = true;
                    }
                }
            }
        }
    }
    let mut roots = Vec::new();
    for u in 0..d * d {
        let (r, _) = find(u, &mut parent, &mut pot, n);
        if !bad[r] && !roots.contains(&r) {
            roots.push(r);
        }
    }
    match roots.len() {
        0 => return Err(Error::NotInvariant),
        1 => {}
        _ => return Err(Error::WrongParameters("intertwiner space has dimension > 1; rho is reducible".into())),
    }
    let root = roots[0];
    let members: Vec<usize> = (0..d * d).filter(|&u| find(u, &mut parent, &mut pot, n).0 == root).collect();
    // normalize the first entry of the component to 1
    let base = find(members[0], &mut parent, &mut pot, n).1;
    let mut e = vec![RootSum::new(n); d * d];
    for &u in &members {
        let p = find(u, &mut parent, &mut pot, n).1;
        e[u].push((p + n - base) % n, 1);
    }
    Ok(DenseMat { d, n, e })
}

/// Extends rho along g. `conj_g` is x -> g x g^{-1} on N, `g_c` is g^c as an element of N,
/// and the extension with trace `target` at g is returned.
pub fn extend_invariant_irrep(
    rho: &MonomialRep,
    conj_g: &dyn Fn(usize) -> usize,
    c: u64,
    g_c: usize,
    target: &CycloNum,
) -> Result<Extension> {
    let g = rho.group.as_ref();
    let n = rho.root_order();
    if target.order() != n {
        return Err(Error::MixedOrderWithoutLift(target.order(), n));
    }
    // invariance by characters
    for x in 0..g.order() {
        if !rho.trace(x).same_value(&rho.trace(conj_g(x))) {
            return Err(Error::NotInvariant);
        }
    }
    let t = solve_intertwiner(rho, conj_g)?;
    let mut t_pows = vec![DenseMat::identity(t.d, n)];
    for k in 1..=c {
        let next = t_pows[k as usize - 1].mul(&t);
        t_pows.push(next);
    }
    let tc = t_pows.pop().expect("c >= 1");
    // T^c = lambda rho(g^c): compare at a nonzero entry of rho(g^c)
    let m = rho.matrix(g_c);
    let col = 0usize;
    let row = m.perm[col] as usize;
    let lambda = tc.e[row * t.d + col].rotate(n - m.phase[col]).value();
    let scaled = DenseMat::from_mono(&m, n);
    for i in 0..t.d * t.d {
        let want = &scaled.e[i].value() * &lambda;
        if tc.e[i].value() != want {
            return Err(Error::WrongParameters("T^c is not a scalar multiple of rho(g^c)".into()));
        }
    }
    let trace_t = t.trace().value();
    let candidates = || -> Vec<String> {
        match lambda.inverse().ok().and_then(|li| li.root_exponent()) {
            Some(j) => (0..n as u64)
                .filter(|&v| (v * c) % n as u64 == j as u64)
                .map(|v| (&CycloNum::root_of_unity(n, v as i64) * &trace_t).to_string())
                .collect(),
            None => vec![format!("omega * Tr(T) with omega^{c} = ({})^-1", lambda)],
        }
    };
    if trace_t.is_zero() {
        if target.is_zero() {
            return Err(Error::WrongParameters("trace at the generator vanishes for every twist; extension not unique".into()));
        }
        return Err(Error::NoExtensionWithRequestedTrace { target: target.to_string(), candidates: candidates() });
    }
    let mu = target * &trace_t.inverse()?;
    if !(&mu.pow(c) * &lambda).is_one() {
        return Err(Error::NoExtensionWithRequestedTrace { target: target.to_string(), candidates: candidates() });
    }
    Ok(Extension { rho: rho.clone(), c, t, t_pows, mu, lambda, trace_t })
}

impl Extension {
    /// Tr xi(g^k x) = mu^k Tr(T^k rho(x)), returned as (mu^k, integral part).
    pub fn trace_parts(&self, k: u64, x: usize) -> RootSum {
        let m = self.rho.matrix(x);
        self.t_pows[(k % self.c) as usize].trace_with(&m)
    }

    pub fn trace(&self, k: u64, x: usize) -> CycloNum {
        let kk = k % self.c;
        &self.mu.pow(kk) * &self.trace_parts(kk, x).value()
    }
}

/// Ind_K^G f is irreducible iff f is irreducible and no conjugate by a nontrivial coset
/// representative of the normal subgroup K agrees with it: <f, f^{s}>_K = 0.
/// `k_classes` are the classes of K, `f` a class function of K given on elements, and
/// `conj_s` lists x -> s x s^{-1} on K for the nontrivial representatives.
pub fn mackey_irreducible(
    k_classes: &ConjClasses,
    f: &(dyn Fn(usize) -> CycloNum + Sync),
    conj_s: &[&(dyn Fn(usize) -> usize + Sync)],
) -> Result<bool> {
    let scale = BigRational::new(BigInt::from(1), BigInt::from(k_classes.group_order));
    let fv: Vec<CycloNum> = k_classes.reps.iter().map(|&x| f(x)).collect();
    if inner_product_count_raw(k_classes, &fv, &fv, &scale)? != 1 {
        return Ok(false);
    }
    for conj in conj_s {
        let gv: Vec<CycloNum> = k_classes.reps.iter().map(|&x| f(conj(x))).collect();
        if inner_product_count_raw(k_classes, &fv, &gv, &scale)? != 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn inner_product_count_raw(cl: &ConjClasses, a: &[CycloNum], b: &[CycloNum], scale: &BigRational) -> Result<u64> {
    let n = a[0].order();
    let mut acc = CycloNum::zero(n);
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        acc = &acc + &(&(x * &y.conj()) * &CycloNum::from_int(n, cl.sizes[i] as i64));
    }
    let v = acc.scale(scale);
    v.as_count().ok_or_else(|| Error::InnerProductNotInteger(v.to_string()))
}

/// U^{n,q}_h(F_{q^n}) or the full unit group R^x(F_{q^n}) = <zeta> x U.
pub struct RingGroup {
    params: Arc<RingParams>,
    units: bool,
    size: u64,
    order: usize,
}

impl RingGroup {
    /// The coefficient field of `params` must be F_{q^n} itself.
    pub fn new(params: &Arc<RingParams>, units: bool) -> Result<RingGroup> {
        if params.field().k() != params.rational_degree() {
            return Err(Error::WrongParameters("group models need the coefficient field F_{q^n}".into()));
        }
        let size = params.field().size() as u64;
        let mut order = size.checked_pow(params.top() as u32).unwrap_or(u64::MAX);
        if units {
            order = order.saturating_mul(size - 1);
        }
        if order > 50_000_000 {
            return Err(Error::SizeLimitExceeded { what: "unit group".into(), needed: order as u128, limit: 50_000_000 });
        }
        Ok(RingGroup { params: params.clone(), units, size, order: order as usize })
    }

    pub fn params(&self) -> &Arc<RingParams> {
        &self.params
    }
    pub fn has_units(&self) -> bool {
        self.units
    }

    pub fn encode(&self, a: &[u32]) -> usize {
        let mut idx = 0u64;
        for &x in a[1..].iter().rev() {
            idx = idx * self.size + x as u64;
        }
        if self.units {
            let l = self.params.field().log(a[0]).expect("unit") as u64;
            idx = idx * (self.size - 1) + l;
        } else {
            debug_assert_eq!(a[0], 1);
        }
        idx as usize
    }

    pub fn decode(&self, idx: usize) -> Vec<u32> {
        let mut idx = idx as u64;
        let mut a = vec![0u32; self.params.len()];
        if self.units {
            a[0] = self.params.field().exp(idx % (self.size - 1));
            idx /= self.size - 1;
        } else {
            a[0] = 1;
        }
        for slot in a[1..].iter_mut() {
            *slot = (idx % self.size) as u32;
            idx /= self.size;
        }
        a
    }

    /// zeta^k as an element (needs units).
    pub fn zeta_pow(&self, k: u64) -> usize {
        let mut a = vec![0; self.params.len()];
        a[0] = self.params.field().exp(k);
        self.encode(&a)
    }

    /// Writes a unit as zeta^k x with x principal; returns (k, coefficients of x).
    pub fn split(&self, idx: usize) -> (u64, Vec<u32>) {
        let a = self.decode(idx);
        let f = self.params.field();
        let k = f.log(a[0]).expect("unit") as u64;
        let inv0 = f.inv(a[0]).unwrap();
        (k, a.iter().map(|&x| f.mul(inv0, x)).collect())
    }
}

impl GroupModel for RingGroup {
    fn order(&self) -> usize {
        self.order
    }
    fn mul(&self, a: usize, b: usize) -> usize {
        self.encode(&self.params.mul_raw(&self.decode(a), &self.decode(b)))
    }
    fn inv(&self, a: usize) -> usize {
        self.encode(&self.params.inv_raw(&self.decode(a)).expect("unit"))
    }
    fn identity(&self) -> usize {
        self.encode(crate::twistring::TwistedElem::one(&self.params).coeffs())
    }
    fn generators(&self) -> Vec<usize> {
        let f = self.params.field();
        let p = f.p();
        let mut gens = Vec::new();
        if self.units {
            gens.push(self.zeta_pow(1));
        }
        for j in 1..=self.params.top() {
            for i in 0..f.k() {
                let mut a = vec![0; self.params.len()];
                a[0] = 1;
                a[j] = p.pow(i);
                gens.push(self.encode(&a));
            }
        }
        gens
    }
    fn label(&self, a: usize) -> String {
        let f = self.params.field();
        let parts: Vec<String> = self.decode(a).iter().map(|&x| f.fmt_elem(x)).collect();
        format!("[{}]", parts.join("; "))
    }
}

/// G^{n,q}(F_{q^n}).
pub struct GnqGroup {
    params: Arc<RingParams>,
    size: u64,
    order: usize,
}

impl GnqGroup {
    pub fn new(params: &Arc<RingParams>) -> Result<GnqGroup> {
        if params.field().k() != params.rational_degree() {
            return Err(Error::WrongParameters("group models need the coefficient field F_{q^n}".into()));
        }
        let size = params.field().size() as u64;
        let order = size.pow(params.n());
        Ok(GnqGroup { params: params.clone(), size, order: order as usize })
    }
    pub fn params(&self) -> &Arc<RingParams> {
        &self.params
    }
    pub fn encode(&self, a: &[u32]) -> usize {
        a[1..].iter().rev().fold(0u64, |acc, &x| acc * self.size + x as u64) as usize
    }
    pub fn decode(&self, idx: usize) -> Vec<u32> {
        let mut idx = idx as u64;
        let mut a = vec![1u32; self.params.n() as usize + 1];
        for slot in a[1..].iter_mut() {
            *slot = (idx % self.size) as u32;
            idx /= self.size;
        }
        a
    }
}

impl GroupModel for GnqGroup {
    fn order(&self) -> usize {
        self.order
    }
    fn mul(&self, a: usize, b: usize) -> usize {
        let mut out = vec![0; self.params.n() as usize + 1];
        gnq_mul_raw(&self.params, &self.decode(a), &self.decode(b), &mut out);
        self.encode(&out)
    }
    fn inv(&self, a: usize) -> usize {
        self.encode(&gnq_inv_raw(&self.params, &self.decode(a)))
    }
    fn identity(&self) -> usize {
        0
    }
    fn generators(&self) -> Vec<usize> {
        let f = self.params.field();
        let mut gens = Vec::new();
        for j in 1..=self.params.n() as usize {
            for i in 0..f.k() {
                let mut a = vec![0; self.params.n() as usize + 1];
                a[0] = 1;
                a[j] = f.p().pow(i);
                gens.push(self.encode(&a));
            }
        }
        gens
    }
    fn label(&self, a: usize) -> String {
        let f = self.params.field();
        let parts: Vec<String> = self.decode(a)[1..].iter().map(|&x| f.fmt_elem(x)).collect();
        format!("G[{}]", parts.join("; "))
    }
}

/// Truncated principal units 1 + b_1 pi + ... + b_{h-1} pi^{h-1}, b_j in F_{q^n}.
pub struct TruncUnits {
    field: Arc<Field>,
    h: usize,
    size: u64,
    order: usize,
}

impl TruncUnits {
    pub fn new(field: &Arc<Field>, h: u32) -> Result<TruncUnits> {
        if h < 2 {
            return Err(Error::UnsupportedLevel(h));
        }
        let size = field.size() as u64;
        Ok(TruncUnits { field: field.clone(), h: h as usize, size, order: size.pow(h - 1) as usize })
    }
    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }
    pub fn h(&self) -> usize {
        self.h
    }
    pub fn encode(&self, b: &[u32]) -> usize {
        b[1..].iter().rev().fold(0u64, |acc, &x| acc * self.size + x as u64) as usize
    }
    pub fn decode(&self, idx: usize) -> Vec<u32> {
        let mut idx = idx as u64;
        let mut b = vec![1u32; self.h];
        for slot in b[1..].iter_mut() {
            *slot = (idx % self.size) as u32;
            idx /= self.size;
        }
        b
    }
}

impl GroupModel for TruncUnits {
    fn order(&self) -> usize {
        self.order
    }
    fn mul(&self, a: usize, b: usize) -> usize {
        let f = &self.field;
        let (x, y) = (self.decode(a), self.decode(b));
        let mut c = vec![0u32; self.h];
        for i in 0..self.h {
            for j in 0..self.h - i {
                c[i + j] = f.add(c[i + j], f.mul(x[i], y[j]));
            }
        }
        self.encode(&c)
    }
    fn inv(&self, a: usize) -> usize {
        let f = &self.field;
        let x = self.decode(a);
        let mut c = vec![0u32; self.h];
        c[0] = 1;
        for k in 1..self.h {
            let mut acc = 0;
            for i in 1..=k {
                acc = f.add(acc, f.mul(x[i], c[k - i]));
            }
            c[k] = f.neg(acc);
        }
        self.encode(&c)
    }
    fn identity(&self) -> usize {
        0
    }
    fn generators(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        for j in 1..self.h {
            for i in 0..self.field.k() {
                let mut b = vec![0; self.h];
                b[0] = 1;
                b[j] = self.field.p().pow(i);
                gens.push(self.encode(&b));
            }
        }
        gens
    }
    fn label(&self, a: usize) -> String {
        let parts: Vec<String> = self.decode(a).iter().map(|&x| self.field.fmt_elem(x)).collect();
        format!("1+pi[{}]", parts[1..].join("; "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u22() -> RingGroup {
        RingGroup::new(&RingParams::over(2, 1, 2, 2, 1).unwrap(), false).unwrap()
    }

    #[test]
    fn ring_group_axioms_and_classes() {
        let g = u22();
        assert_eq!(g.order(), 16);
        check_group_axioms(&g, 10_000).unwrap();
        let cl = ConjClasses::compute(&g, 1 << 20).unwrap();
        assert_eq!(cl.sizes.iter().sum::<usize>(), 16);
        assert_eq!(cl.sizes[cl.class_of[g.identity()] as usize], 1);
        for a in 0..16 {
            assert_eq!(g.encode(&g.decode(a)), a);
        }
        let units = RingGroup::new(g.params(), true).unwrap();
        assert_eq!(units.order(), 48);
        check_group_axioms(&units, 200_000).unwrap();
    }

    #[test]
    fn abelian_groups_have_singleton_classes() {
        let t = TruncUnits::new(&Field::get(3, 2).unwrap(), 3).unwrap();
        check_group_axioms(&t, 100_000).unwrap();
        let cl = ConjClasses::compute(&t, 1 << 20).unwrap();
        assert_eq!(cl.count(), t.order());
    }

    #[test]
    fn induction_from_center_of_u22() {
        let g = u22();
        let gm: &dyn GroupModel = &g;
        let cl = Arc::new(ConjClasses::compute(gm, 1 << 20).unwrap());
        let z = Subgroup::from_predicate(gm, "Z", |x| {
            let a = g.decode(x);
            a[1] == 0
        })
        .unwrap();
        assert_eq!(z.order(), 4);
        // nontrivial character of F_4 under the trace pairing with a = 1
        let f = g.params().field().clone();
        let mut chi = SubgroupChar::trivial(gm, &z, 2);
        for &x in &z.members {
            chi.table[x] = f.abs_trace(g.decode(x)[2], 2);
        }
        assert!(chi.is_homomorphism_all_pairs(gm, &z));
        let ind = induce_char(gm, &cl, &z, &chi).unwrap();
        assert_eq!(ind.at(g.identity()).as_count(), Some(4));
        assert_eq!(inner_product_count(&ind, &ind).unwrap(), 4);
        let triv = ClassFunction::from_fn(&cl, |_| CycloNum::one(2));
        assert_eq!(inner_product_count(&triv, &triv).unwrap(), 1);
        let whole = Subgroup::whole(gm);
        let t = SubgroupChar::trivial(gm, &whole, 2);
        let reg = induce_char(gm, &cl, &Subgroup::generated(gm, "1", &[]), &SubgroupChar::trivial(gm, &Subgroup::generated(gm, "1", &[]), 2)).unwrap();
        assert_eq!(inner_product_count(&reg, &triv).unwrap(), 1);
        let ind_triv = induce_char(gm, &cl, &whole, &t).unwrap();
        assert_eq!(inner_product_count(&ind_triv, &triv).unwrap(), 1);
    }

    #[test]
    fn non_subgroups_are_rejected() {
        let g = u22();
        let r = Subgroup::from_predicate(&g, "bad", |x| {
            let a = g.decode(x);
            a[1] <= 1 && a[2] == 0
        });
        assert!(matches!(r, Err(Error::NotASubgroup(_))));
    }

    #[test]
    fn monomial_matrices_multiply_like_the_group() {
        let p = RingParams::over(2, 1, 2, 2, 1).unwrap();
        let g: Arc<dyn GroupModel> = Arc::new(RingGroup::new(&p, false).unwrap());
        let rg = RingGroup::new(&p, false).unwrap();
        let h = Subgroup::from_predicate(g.as_ref(), "H_2", |x| rg.decode(x)[1] == 0).unwrap();
        let f = p.field().clone();
        let w = f.generator();
        let mut chi = SubgroupChar::trivial(g.as_ref(), &h, 2);
        for &x in &h.members {
            chi.table[x] = f.abs_trace(f.mul(w, rg.decode(x)[2]), 2);
        }
        let rho = MonomialRep::new(g.clone(), h, chi).unwrap();
        for x in 0..16 {
            for y in 0..16 {
                let lhs = rho.matrix(x).mul(&rho.matrix(y), 2);
                assert_eq!(lhs, rho.matrix(g.mul(x, y)));
            }
        }
        let cl = Arc::new(ConjClasses::compute(g.as_ref(), 1 << 20).unwrap());
        // H_2 is the center here, so the induced character is twice an irreducible of degree 2
        assert_eq!(inner_product_count(&rho.character(&cl), &rho.character(&cl)).unwrap(), 4);
    }

    #[test]
    fn extension_along_zeta_is_a_representation() {
        // rho_psi for psi of conductor q^2 on U^{2,2}, extended to <zeta> x U
        let p = RingParams::over(2, 1, 2, 2, 1).unwrap();
        let rg = Arc::new(RingGroup::new(&p, false).unwrap());
        let units = RingGroup::new(&p, true).unwrap();
        let g: Arc<dyn GroupModel> = rg.clone();
        let f = p.field().clone();
        let gamma = Subgroup::from_predicate(g.as_ref(), "Gamma_2", |x| f.in_subfield(rg.decode(x)[1], 1)).unwrap();
        let h = Subgroup::from_predicate(g.as_ref(), "H_2", |x| rg.decode(x)[1] == 0).unwrap();
        let w = f.generator();
        let n = 12;
        let mut chi = SubgroupChar::trivial(g.as_ref(), &h, n);
        for &x in &h.members {
            chi.table[x] = 6 * f.abs_trace(f.mul(w, rg.decode(x)[2]), 2);
        }
        let exts = all_extensions(g.as_ref(), &h, &chi, &gamma).unwrap();
        assert_eq!(exts.len(), 2);
        let rho = MonomialRep::new(g.clone(), gamma, exts[0].clone()).unwrap();
        assert_eq!(rho.degree(), 2);
        let z = units.zeta_pow(1);
        let zi = units.inv(z);
        let to_units = |x: usize| units.encode(&rg.decode(x));
        let from_units = |x: usize| rg.encode(&units.decode(x));
        let conj = |x: usize| from_units(units.mul(units.mul(z, to_units(x)), zi));
        // (-1)^{n + n/m} theta(zeta) with theta(zeta) = 1
        let target = CycloNum::from_int(n, -1);
        let ext = extend_invariant_irrep(&rho, &conj, 3, rg.identity(), &target).unwrap();
        assert_eq!(ext.trace(1, rg.identity()), target);
        // the extended character is a class function of <zeta> x U and is irreducible
        let ucl = Arc::new(ConjClasses::compute(&units, 1 << 20).unwrap());
        let xi = |u: usize| {
            let (k, xs) = units.split(u);
            ext.trace(k, rg.encode(&xs))
        };
        for u in 0..units.order() {
            for s in units.generators() {
                assert_eq!(xi(units.conj(s, u)), xi(u));
            }
        }
        let chr = ClassFunction::from_fn(&ucl, xi);
        assert!(is_irreducible(&chr).unwrap());
        assert_eq!(chr.degree(units.identity()), Some(2));
    }
}
