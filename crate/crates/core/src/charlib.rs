//! Additive characters, conductors, and the character data attached to theta.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::constructions::DivQuot;
use crate::cyclo::CycloNum;
use crate::ffield::{divisors, lcm, Field};
use crate::matmodel::{n2_norm, nm_gnq};
use crate::repkit::{all_extensions, group_exponent, GnqGroup, GroupModel, RingGroup, Subgroup, SubgroupChar, TruncUnits, NONE};
use crate::twistring::{nu_m, nu_m_gnq, small_params, GnqElem, SubgroupKind, SubgroupSpec, TwistedElem};
use crate::{Error, Result};

/// psi_a(x) = zeta_p^{Tr(a x)} on the subfield F_{p^deg} of `field`.
#[derive(Clone, Debug)]
pub struct AddChar {
    field: Arc<Field>,
    deg: u32,
    a: u32,
}

impl PartialEq for AddChar {
    fn eq(&self, o: &AddChar) -> bool {
        self.field.id() == o.field.id() && self.deg == o.deg && self.a == o.a
    }
}
impl Eq for AddChar {}

impl AddChar {
    pub fn new(field: &Arc<Field>, deg: u32, a: u32) -> Result<AddChar> {
        if deg == 0 || !field.k().is_multiple_of(deg) {
            return Err(Error::NotASubfield { p: field.p(), sub: deg, sup: field.k() });
        }
        if a >= field.size() || !field.in_subfield(a, deg) {
            return Err(Error::WrongParameters(format!("parameter {} is not in F_{}^{}", field.fmt_elem(a), field.p(), deg)));
        }
        Ok(AddChar { field: field.clone(), deg, a })
    }

    pub fn trivial(field: &Arc<Field>, deg: u32) -> Result<AddChar> {
        AddChar::new(field, deg, 0)
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }
    /// p-degree of the domain.
    pub fn deg(&self) -> u32 {
        self.deg
    }
    pub fn param(&self) -> u32 {
        self.a
    }
    pub fn is_trivial(&self) -> bool {
        self.a == 0
    }

    /// psi(x) = zeta_p^{exponent(x)}.
    pub fn exponent(&self, x: u32) -> u32 {
        self.field.abs_trace(self.field.mul(self.a, x), self.deg)
    }

    pub fn value(&self, x: u32) -> CycloNum {
        CycloNum::root_of_unity(self.field.p(), self.exponent(x) as i64)
    }

    /// Exponent of psi(x) read in zeta_n, p | n.
    pub fn exponent_in(&self, x: u32, n: u32) -> u32 {
        self.exponent(x) * (n / self.field.p())
    }

    /// The character psi_1 of F_{q^m} with psi = psi_1 o Tr, m the conductor exponent.
    pub fn descend(&self, qe: u32) -> Result<(u32, AddChar)> {
        let m = conductor(self, qe)?;
        Ok((m, AddChar::new(&self.field, qe * m, self.a)?))
    }
}

/// All characters of F_{p^deg}, ordered by parameter code.
pub fn all_add_chars(field: &Arc<Field>, deg: u32) -> Result<Vec<AddChar>> {
    field.subfield_elems(deg).into_iter().map(|a| AddChar::new(field, deg, a)).collect()
}

/// The m | n with q^m the conductor of psi on F_{q^n}, q = p^qe.
pub fn conductor(psi: &AddChar, qe: u32) -> Result<u32> {
    if qe == 0 || !psi.deg.is_multiple_of(qe) {
        return Err(Error::WrongParameters(format!("q = p^{qe} does not divide the domain degree {}", psi.deg)));
    }
    let n = psi.deg / qe;
    // psi factors through Tr to F_{q^m} exactly when a lies in F_{q^m}
    Ok(divisors(n).into_iter().find(|&m| psi.field.in_subfield(psi.a, qe * m)).unwrap_or(n))
}

/// theta restricted to O_L^x and pi: chi on U^1_L/U^h_L plus theta(zeta), theta(pi).
#[derive(Clone)]
pub struct ThetaData {
    pub n: u32,
    pub h: u32,
    pub qe: u32,
    pub units: Arc<TruncUnits>,
    pub chi: SubgroupChar,
    /// theta(pi) = zeta_M^theta_pi
    pub m_pi: u32,
    pub theta_pi: u32,
    /// theta(zeta) = zeta_{q^n-1}^theta_zeta
    pub theta_zeta: u32,
}

impl ThetaData {
    pub fn new(units: &Arc<TruncUnits>, qe: u32, chi: SubgroupChar, theta_zeta: u32, m_pi: u32, theta_pi: u32) -> Result<ThetaData> {
        let f = units.field();
        if qe == 0 || !f.k().is_multiple_of(qe) {
            return Err(Error::WrongParameters(format!("q = p^{qe} does not divide the degree of {:?}", f.id())));
        }
        let n = f.k() / qe;
        let zn = f.units();
        if theta_zeta >= zn || m_pi == 0 || theta_pi >= m_pi {
            return Err(Error::WrongParameters("theta(zeta) or theta(pi) exponent out of range".into()));
        }
        let whole = Subgroup::whole(units.as_ref());
        if chi.table.len() != units.order() || !chi.is_homomorphism(units.as_ref(), &whole) {
            return Err(Error::WrongParameters("chi is not a character of the truncated units".into()));
        }
        Ok(ThetaData { n, h: units.h() as u32, qe, units: units.clone(), chi, m_pi, theta_pi, theta_zeta })
    }

    /// Level 2 theta from psi on U^1_L/U^2_L = F_{q^n}.
    pub fn level2(psi: &AddChar, qe: u32, theta_zeta: u32, m_pi: u32, theta_pi: u32) -> Result<ThetaData> {
        let f = psi.field();
        if psi.deg() != f.k() {
            return Err(Error::WrongParameters("psi must live on the whole coefficient field".into()));
        }
        let units = Arc::new(TruncUnits::new(f, 2)?);
        let p = f.p();
        let table = (0..units.order()).map(|x| psi.exponent(units.decode(x)[1])).collect();
        ThetaData::new(&units, qe, SubgroupChar { root_order: p, table }, theta_zeta, m_pi, theta_pi)
    }

    pub fn field(&self) -> &Arc<Field> {
        self.units.field()
    }

    /// Smallest r with chi trivial on U^r_L.
    pub fn level(&self) -> u32 {
        let u = &self.units;
        (1..self.h)
            .find(|&r| {
                (0..u.order()).all(|x| {
                    let b = u.decode(x);
                    b[1..r as usize].iter().any(|&c| c != 0) || self.chi.table[x] == 0
                })
            })
            .unwrap_or(self.h)
    }

    /// chi exponent at 1 + b_1 pi + ... (b[0] = 1).
    pub fn chi_exp(&self, b: &[u32]) -> u32 {
        self.chi.table[self.units.encode(b)]
    }

    /// The additive character b -> chi(1 + b pi^{h-1}).
    pub fn top_char(&self) -> Result<AddChar> {
        let f = self.field();
        let mut b = vec![0u32; self.h as usize];
        b[0] = 1;
        let top = self.h as usize - 1;
        let scale = self.chi.root_order / f.p();
        let at = |x: u32, b: &mut Vec<u32>| {
            b[top] = x;
            self.chi_exp(b)
        };
        for a in f.elems() {
            let psi = AddChar::new(f, f.k(), a)?;
            if f.elems().all(|x| psi.exponent(x) * scale == at(x, &mut b)) {
                return Ok(psi);
            }
        }
        Err(Error::WrongParameters("chi on U^{h-1} is not an additive character".into()))
    }

    pub fn theta_zeta_value(&self, n: u32) -> Result<CycloNum> {
        CycloNum::root_of_unity(self.field().units(), self.theta_zeta as i64).lift_to(n)
    }

    pub fn theta_pi_value(&self, n: u32) -> Result<CycloNum> {
        CycloNum::root_of_unity(self.m_pi, self.theta_pi as i64).lift_to(n)
    }

    /// Exponents in zeta_n of theta(zeta)^k theta(pi)^s chi(b).
    pub fn exp_in(&self, n: u32, s: u64, k: u64, b: &[u32]) -> Result<u32> {
        let zn = self.field().units();
        let cr = self.chi.root_order;
        if !n.is_multiple_of(zn) || !n.is_multiple_of(self.m_pi) || !n.is_multiple_of(cr) {
            return Err(Error::MixedOrderWithoutLift(lcm(lcm(zn as u64, self.m_pi as u64), cr as u64) as u32, n));
        }
        let e = (n / zn) as u64 * ((self.theta_zeta as u64 * k) % zn as u64)
            + (n / self.m_pi) as u64 * ((self.theta_pi as u64 * s) % self.m_pi as u64)
            + (n / cr) as u64 * self.chi_exp(b) as u64;
        Ok((e % n as u64) as u32)
    }

    pub fn csv(&self) -> String {
        let mut s = format!("# theta(zeta) = zeta_{}^{}, theta(pi) = zeta_{}^{}\n", self.field().units(), self.theta_zeta, self.m_pi, self.theta_pi);
        s.push_str(&self.chi.csv(self.units.as_ref()));
        s
    }
}

/// U^{h-1}_L/U^h_L inside the truncated units.
pub fn top_subgroup(units: &TruncUnits) -> Result<Subgroup> {
    let h = units.h();
    Subgroup::from_predicate(units, "U^{h-1}_L", |x| units.decode(x)[1..h - 1].iter().all(|&c| c == 0))
}

/// All characters chi of U^1_L/U^h_L with chi(1 + b pi^{h-1}) = psi(b), in a common root order
/// (the group exponent), sorted by table.
pub fn chis_over(units: &TruncUnits, psi: &AddChar) -> Result<Vec<SubgroupChar>> {
    let top = top_subgroup(units)?;
    let n = group_exponent(units) as u32;
    let h = units.h();
    let mut table = vec![NONE; units.order()];
    for &x in &top.members {
        table[x] = psi.exponent_in(units.decode(x)[h - 1], n);
    }
    let whole = Subgroup::whole(units);
    all_extensions(units, &top, &SubgroupChar { root_order: n, table }, &whole)
}

/// All level-3 theta (n = 2) with chi|_{U^2} of conductor q^2, theta(pi) = 1 (M = 1).
pub fn main_example_thetas(field: &Arc<Field>, qe: u32) -> Result<Vec<ThetaData>> {
    if field.k() != 2 * qe {
        return Err(Error::WrongParameters("the main example lives over F_{q^2}".into()));
    }
    let units = Arc::new(TruncUnits::new(field, 3)?);
    let mut out = Vec::new();
    for psi in all_add_chars(field, field.k())? {
        if conductor(&psi, qe)? != 2 {
            continue;
        }
        for chi in chis_over(&units, &psi)? {
            for tz in 0..field.units() {
                out.push(ThetaData::new(&units, qe, chi.clone(), tz, 1, 0)?);
            }
        }
    }
    Ok(out)
}

fn check_same_field(a: &Field, b: &Field) -> Result<()> {
    if a.id() != b.id() {
        return Err(Error::ParameterMismatch(format!("{:?} vs {:?}", a.id(), b.id())));
    }
    Ok(())
}

/// H_2 = {a_1 = 0} in U^{2,q}_3(F_{q^2}).
pub fn h2_level3(u: &RingGroup) -> Result<Subgroup> {
    let p = u.params();
    if p.n() != 2 || p.h() != 3 || u.has_units() {
        return Err(Error::WrongParameters("H_2 is defined here for U^{2,q}_3".into()));
    }
    let spec = SubgroupSpec::for_ring(p, SubgroupKind::Filtration(2))?;
    Subgroup::from_predicate(u, "H_2", |x| spec.contains(p.field(), &u.decode(x)))
}

/// chi^#(1 + a_2 tau^2 + a_3 tau^3 + a_4 tau^4) = chi(1 + a_2 pi + a_4 pi^2) on H_2(F_{q^2}).
pub fn chi_sharp(theta: &ThetaData, u: &RingGroup, h2: &Subgroup) -> Result<SubgroupChar> {
    if theta.n != 2 || theta.h != 3 {
        return Err(Error::WrongParameters(format!("chi^# needs n = 2, h = 3, got n = {}, h = {}", theta.n, theta.h)));
    }
    check_same_field(u.params().field(), theta.field())?;
    let mut table = vec![NONE; u.order()];
    for &x in &h2.members {
        let a = u.decode(x);
        table[x] = theta.chi_exp(&[1, a[2], a[4]]);
    }
    Ok(SubgroupChar { root_order: theta.chi.root_order, table })
}

/// psi~(1 + a_3 tau^3 + a_4 tau^4) = psi(a_4) on H_3(F_{q^2}).
pub fn psi_tilde_h3(psi: &AddChar, u: &RingGroup) -> Result<(Subgroup, SubgroupChar)> {
    let p = u.params();
    check_same_field(p.field(), psi.field())?;
    if p.n() != 2 || p.h() != 3 || u.has_units() {
        return Err(Error::WrongParameters("H_3 is defined here for U^{2,q}_3".into()));
    }
    let spec = SubgroupSpec::for_ring(p, SubgroupKind::Filtration(3))?;
    let h3 = Subgroup::from_predicate(u, "H_3", |x| spec.contains(p.field(), &u.decode(x)))?;
    let mut table = vec![NONE; u.order()];
    for &x in &h3.members {
        table[x] = psi.exponent(u.decode(x)[4]);
    }
    Ok((h3, SubgroupChar { root_order: psi.field().p(), table }))
}

/// theta^#(zeta^k x) = theta(zeta)^k chi^#(x) on <zeta> H_2 inside R^x_{3,2,q}(F_{q^2}).
pub fn theta_sharp(theta: &ThetaData, r: &RingGroup, n: u32) -> Result<(Subgroup, SubgroupChar)> {
    let p = r.params();
    if !r.has_units() || p.n() != 2 || p.h() != 3 {
        return Err(Error::WrongParameters("theta^# lives on R^x_{3,2,q}".into()));
    }
    check_same_field(p.field(), theta.field())?;
    let sub = Subgroup::from_predicate(r, "<zeta>H_2", |x| r.split(x).1[1] == 0)?;
    let mut table = vec![NONE; r.order()];
    for &x in &sub.members {
        let (k, a) = r.split(x);
        table[x] = theta.exp_in(n, 0, k, &[1, a[2], a[4]])?;
    }
    Ok((sub, SubgroupChar { root_order: n, table }))
}

fn check_descent(psi1: &AddChar, qe: u32, n: u32, m: u32) -> Result<()> {
    if m == 0 || !n.is_multiple_of(m) || psi1.deg() != qe * m {
        return Err(Error::ParameterMismatch(format!("psi_1 must live on F_{{q^{m}}} with m | n = {n}")));
    }
    Ok(())
}

/// psi~ = psi_1 o Nm^{n_1,q_1} o nu_m on H_m(F_{q^n}), h = 2.
pub fn psi_tilde_norm(psi1: &AddChar, u: &RingGroup, m: u32) -> Result<(Subgroup, SubgroupChar)> {
    let params = u.params();
    check_same_field(params.field(), psi1.field())?;
    check_descent(psi1, params.qe(), params.n(), m)?;
    if u.has_units() || params.h() != 2 {
        return Err(Error::UnsupportedLevel(params.h()));
    }
    let spec = SubgroupSpec::for_ring(params, SubgroupKind::H(m))?;
    let hm = Subgroup::from_predicate(u, &format!("H_{m}"), |x| spec.contains(params.field(), &u.decode(x)))?;
    let sp = small_params(params, m)?;
    let f = params.field();
    let mut table = vec![NONE; u.order()];
    for &x in &hm.members {
        let y = nu_m(&TwistedElem::new(params, u.decode(x))?, m)?;
        let nm = n2_norm(&y)?;
        if !f.in_subfield(nm, sp.qe()) {
            return Err(Error::WrongParameters("reduced norm left F_{q_1}".into()));
        }
        table[x] = psi1.exponent(nm);
    }
    Ok((hm, SubgroupChar { root_order: f.p(), table }))
}

/// psi~' = psi_1 o Nm^{n_1,q_1} o nu'_m on H'_m(F_{q^n}) inside G^{n,q}.
pub fn psi_tilde_prime(psi1: &AddChar, g: &GnqGroup, m: u32) -> Result<(Subgroup, SubgroupChar)> {
    let params = g.params();
    check_same_field(params.field(), psi1.field())?;
    check_descent(psi1, params.qe(), params.n(), m)?;
    let spec = SubgroupSpec::for_gnq(params, SubgroupKind::H(m))?;
    let hm = Subgroup::from_predicate(g, &format!("H'_{m}"), |x| spec.contains(params.field(), &g.decode(x)))?;
    let sp = small_params(params, m)?;
    let f = params.field();
    let mut table = vec![NONE; g.order()];
    for &x in &hm.members {
        let a = g.decode(x);
        let y = nu_m_gnq(&GnqElem::new(params, &a[1..])?, m)?;
        let nm = nm_gnq(&y, 1)?;
        if !f.in_subfield(nm, sp.qe()) {
            return Err(Error::WrongParameters("reduced norm left F_{q_1}".into()));
        }
        table[x] = psi1.exponent(nm);
    }
    Ok((hm, SubgroupChar { root_order: f.p(), table }))
}

/// Which power of pi carries a_4 in theta'. The displayed formula has pi^4, which vanishes
/// modulo pi^3; chi^# uses pi^2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaPrimeReading {
    Pi2,
    Pi4,
}

impl ThetaPrimeReading {
    pub fn exponent(self) -> u32 {
        match self {
            ThetaPrimeReading::Pi2 => 2,
            ThetaPrimeReading::Pi4 => 4,
        }
    }
}

/// pi^Z <zeta> U^2_D inside the division quotient: e divisible by n and a_1 = 0.
pub fn theta_prime_domain(dq: &DivQuot) -> Result<Subgroup> {
    let n = dq.n() as u64;
    Subgroup::from_predicate(dq, "pi^Z<zeta>U^2_D", |x| {
        let (e, u) = dq.split(x);
        e % n == 0 && dq.ring().split(u).1[1] == 0
    })
}

/// theta'(pi^s zeta^k (1 + sum_{j>=2} a_j Pi^j)) = theta(pi)^s theta(zeta)^k chi(1 + a_2 pi + a_4 pi^c).
/// The table is not checked for multiplicativity here; the caller decides what a failure means.
pub fn theta_prime(theta: &ThetaData, dq: &DivQuot, dom: &Subgroup, reading: ThetaPrimeReading, n: u32) -> Result<SubgroupChar> {
    if theta.n != 2 || theta.h != 3 || dq.n() != 2 || dq.h() != 3 {
        return Err(Error::WrongParameters("theta' needs n = 2, h = 3".into()));
    }
    check_same_field(dq.ring().params().field(), theta.field())?;
    let c = reading.exponent();
    let mut table = vec![NONE; dq.order()];
    for &x in &dom.members {
        let (e, u) = dq.split(x);
        let (k, a) = dq.ring().split(u);
        let s = e / dq.n() as u64;
        let a4 = if c < theta.h { a[4] } else { 0 };
        table[x] = theta.exp_in(n, s, k, &[1, a[2], a4])?;
    }
    Ok(SubgroupChar { root_order: n, table })
}

/// Additive character table as CSV: x, psi(x).
pub fn add_char_csv(psi: &AddChar) -> String {
    let f = psi.field();
    let mut s = String::from("element,value\n");
    for x in f.subfield_elems(psi.deg()) {
        let _ = writeln!(s, "\"{}\",{}", f.fmt_elem(x), psi.value(x));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twistring::RingParams;

    fn f(p: u32, k: u32) -> Arc<Field> {
        Field::get(p, k).unwrap()
    }

    #[test]
    fn conductor_examples() {
        let f4 = f(2, 2);
        let one = AddChar::new(&f4, 2, 1).unwrap();
        assert_eq!(conductor(&one, 1).unwrap(), 1);
        assert_eq!(conductor(&AddChar::trivial(&f4, 2).unwrap(), 1).unwrap(), 1);
        let w = f4.generator();
        assert_eq!(conductor(&AddChar::new(&f4, 2, w).unwrap(), 1).unwrap(), 2);
    }

    // psi factors through Tr to F_{q^m} iff it kills the kernel of that trace
    fn conductor_by_kernel(psi: &AddChar, qe: u32) -> u32 {
        let fld = psi.field();
        let n = psi.deg() / qe;
        for m in 1..=n {
            if !n.is_multiple_of(m) {
                continue;
            }
            let kills = fld
                .subfield_elems(psi.deg())
                .into_iter()
                .filter(|&x| fld.trace(x, psi.deg(), qe * m) == 0)
                .all(|x| psi.exponent(x) == 0);
            if kills {
                return m;
            }
        }
        n
    }

    #[test]
    fn conductor_matches_kernel_oracle() {
        for (p, k, qe) in [(2, 4, 1), (2, 4, 2), (2, 6, 1), (2, 6, 2), (3, 4, 1), (2, 8, 2), (5, 2, 1)] {
            let fld = f(p, k);
            for psi in all_add_chars(&fld, k).unwrap() {
                assert_eq!(conductor(&psi, qe).unwrap(), conductor_by_kernel(&psi, qe), "{p}^{k} a={}", psi.param());
            }
        }
    }

    #[test]
    fn duality_is_injective_and_frobenius_equivariant() {
        for (p, k) in [(2, 3), (3, 2), (2, 8)] {
            let fld = f(p, k);
            let chars = all_add_chars(&fld, k).unwrap();
            let tables: Vec<Vec<u32>> = chars.iter().map(|c| fld.elems().map(|x| c.exponent(x)).collect()).collect();
            let mut sorted = tables.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), tables.len());
            for c in &chars {
                let cp = AddChar::new(&fld, k, fld.frob_p(c.param(), 1)).unwrap();
                for x in fld.elems() {
                    assert_eq!(cp.exponent(x), c.exponent(fld.frob_p(x, -1)));
                }
            }
        }
    }

    #[test]
    fn level2_theta_and_top_char() {
        let f4 = f(2, 2);
        let psi = AddChar::new(&f4, 2, f4.generator()).unwrap();
        let th = ThetaData::level2(&psi, 1, 1, 1, 0).unwrap();
        assert_eq!(th.level(), 2);
        assert_eq!(th.top_char().unwrap(), psi);
        let triv = ThetaData::level2(&AddChar::trivial(&f4, 2).unwrap(), 1, 0, 1, 0).unwrap();
        assert_eq!(triv.level(), 1);
    }

    #[test]
    fn level3_characters_over_a_top_character() {
        let f4 = f(2, 2);
        let units = TruncUnits::new(&f4, 3).unwrap();
        let psi = AddChar::new(&f4, 2, f4.generator()).unwrap();
        let chis = chis_over(&units, &psi).unwrap();
        // one for each character of U^1/U^2 = F_4
        assert_eq!(chis.len(), 4);
        let whole = Subgroup::whole(&units);
        assert!(chis.iter().all(|c| c.is_homomorphism_all_pairs(&units, &whole)));
        // (2, 2): 2 conductor-4 characters, 4 extensions each, 3 values of theta(zeta)
        assert_eq!(main_example_thetas(&f4, 1).unwrap().len(), 24);
    }

    #[test]
    fn chi_sharp_values_and_multiplicativity() {
        let f4 = f(2, 2);
        let params = RingParams::new(f4.clone(), 1, 2, 3).unwrap();
        let u = RingGroup::new(&params, false).unwrap();
        let h2 = h2_level3(&u).unwrap();
        assert_eq!(h2.order(), 64);
        for th in main_example_thetas(&f4, 1).unwrap().into_iter().step_by(3) {
            let cs = chi_sharp(&th, &u, &h2).unwrap();
            assert!(cs.is_homomorphism_all_pairs(&u, &h2));
            let psi = th.top_char().unwrap();
            let scale = cs.root_order / 2;
            for x in f4.elems() {
                assert_eq!(cs.table[u.encode(&[1, 0, 0, x, 0])], 0);
                assert_eq!(cs.table[u.encode(&[1, 0, 0, 0, x])], psi.exponent(x) * scale);
            }
            // restriction to H_3 is psi~
            let (h3, pt) = psi_tilde_h3(&psi, &u).unwrap();
            for &x in &h3.members {
                assert_eq!(cs.table[x], pt.table[x] * scale);
            }
        }
    }

    #[test]
    fn psi_tilde_restricts_to_psi_on_the_center() {
        for (p, qe, n) in [(2, 1, 2), (3, 1, 2), (2, 1, 3)] {
            let fld = f(p, qe * n);
            let params = RingParams::new(fld.clone(), qe, n, 2).unwrap();
            let u = RingGroup::new(&params, false).unwrap();
            let g = GnqGroup::new(&params).unwrap();
            for psi in all_add_chars(&fld, fld.k()).unwrap() {
                let (m, psi1) = psi.descend(qe).unwrap();
                let (hm, t) = psi_tilde_norm(&psi1, &u, m).unwrap();
                assert!(t.is_homomorphism(&u, &hm));
                let (hg, tg) = psi_tilde_prime(&psi1, &g, m).unwrap();
                assert!(tg.is_homomorphism(&g, &hg));
                for z in fld.elems() {
                    let mut a = vec![0; params.len()];
                    a[0] = 1;
                    a[n as usize] = z;
                    assert_eq!(t.table[u.encode(&a)], psi.exponent(z));
                    assert_eq!(tg.table[g.encode(&a)], psi.exponent(z));
                }
                assert_eq!(t.table[u.identity()], 0);
            }
        }
    }
}
