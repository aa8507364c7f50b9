//! rho_psi, rho'_psi, the division quotient and eta_theta.

use std::sync::Arc;

use crate::charlib::{
    chi_sharp, conductor, h2_level3, psi_tilde_h3, psi_tilde_norm, psi_tilde_prime, theta_prime, theta_prime_domain, theta_sharp, AddChar,
    ThetaData, ThetaPrimeReading,
};
use crate::cyclo::CycloNum;
use crate::ffield::lcm;
use crate::repkit::{
    all_extensions, extend_invariant_irrep, induce_char_with, inner_product_count, is_irreducible, mackey_irreducible, ClassFunction,
    ConjClasses, Extension, GnqGroup, GroupModel, MonomialRep, RingGroup, Subgroup, SubgroupChar, Transversal, NONE,
};
use crate::twistring::{RingParams, SubgroupKind, SubgroupSpec};
use crate::{Error, Result};

const CLASS_LIMIT: usize = 2_000_000;

/// The finite quotient of D^x_{1/n} by <pi^M> U_D^{n(h-1)+1}. Elements are Pi^e u with
/// e in Z/(nM) and u in R^x_{h,n,q}(F_{q^n}); Pi u Pi^{-1} = phi(u), phi the q-power on
/// coefficients.
pub struct DivQuot {
    ring: RingGroup,
    n: u32,
    m_pi: u32,
    e_mod: u64,
    ring_order: usize,
}

impl DivQuot {
    pub fn new(params: &Arc<RingParams>, m_pi: u32) -> Result<DivQuot> {
        if m_pi == 0 {
            return Err(Error::WrongParameters("M must be positive".into()));
        }
        let ring = RingGroup::new(params, true)?;
        let ring_order = ring.order();
        let e_mod = params.n() as u64 * m_pi as u64;
        if (ring_order as u64).saturating_mul(e_mod) > 50_000_000 {
            return Err(Error::SizeLimitExceeded {
                what: "division quotient".into(),
                needed: ring_order as u128 * e_mod as u128,
                limit: 50_000_000,
            });
        }
        Ok(DivQuot { ring, n: params.n(), m_pi, e_mod, ring_order })
    }

    pub fn ring(&self) -> &RingGroup {
        &self.ring
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn h(&self) -> u32 {
        self.ring.params().h()
    }
    pub fn m_pi(&self) -> u32 {
        self.m_pi
    }

    /// nM (q^n - 1) q^{n n(h-1)}.
    pub fn expected_order(&self) -> u128 {
        let p = self.ring.params();
        let q = p.q() as u128;
        let qn = q.pow(p.n());
        self.e_mod as u128 * (qn - 1) * qn.pow(p.n() * (p.h() - 1))
    }

    pub fn split(&self, x: usize) -> (u64, usize) {
        ((x / self.ring_order) as u64, x % self.ring_order)
    }
    pub fn join(&self, e: u64, u: usize) -> usize {
        (e % self.e_mod) as usize * self.ring_order + u
    }

    /// Pi^j.
    pub fn big_pi(&self, j: u64) -> usize {
        self.join(j, self.ring.identity())
    }
    /// pi = Pi^n.
    pub fn pi(&self) -> usize {
        self.big_pi(self.n as u64)
    }
    pub fn zeta(&self) -> usize {
        self.join(0, self.ring.zeta_pow(1))
    }

    /// pi^Z O_D^x: the elements with n | e.
    pub fn in_k(&self, x: usize) -> bool {
        self.split(x).0.is_multiple_of(self.n as u64)
    }

    fn twist(&self, u: usize, e: i64) -> Vec<u32> {
        self.ring.params().frob_raw(&self.ring.decode(u), e)
    }
}

impl GroupModel for DivQuot {
    fn order(&self) -> usize {
        self.ring_order * self.e_mod as usize
    }
    fn mul(&self, a: usize, b: usize) -> usize {
        let (e, u) = self.split(a);
        let (e2, u2) = self.split(b);
        let params = self.ring.params();
        let v = params.mul_raw(&self.twist(u, -(e2 as i64)), &self.ring.decode(u2));
        self.join(e + e2, self.ring.encode(&v))
    }
    fn inv(&self, a: usize) -> usize {
        let (e, u) = self.split(a);
        let ui = self.ring.inv(u);
        let v = self.twist(ui, e as i64);
        self.join(self.e_mod - e % self.e_mod, self.ring.encode(&v))
    }
    fn identity(&self) -> usize {
        self.join(0, self.ring.identity())
    }
    fn generators(&self) -> Vec<usize> {
        let mut g = vec![self.big_pi(1)];
        g.extend(self.ring.generators().into_iter().map(|u| self.join(0, u)));
        g
    }
    fn label(&self, a: usize) -> String {
        let (e, u) = self.split(a);
        format!("Pi^{e} {}", self.ring.label(u))
    }
}

/// Which construction produced rho_psi.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// Ind_{H_m} psi~, irreducible
    FromH,
    /// Ind_{Gamma_m} chi with chi extending psi~ (m even, n_1 odd)
    FromGamma,
}

/// A group with its classes, shared across the characters built on it.
pub struct GroupCtx {
    pub group: Arc<dyn GroupModel>,
    pub classes: Arc<ConjClasses>,
}

impl GroupCtx {
    pub fn new(group: Arc<dyn GroupModel>) -> Result<GroupCtx> {
        let classes = Arc::new(ConjClasses::compute(group.as_ref(), CLASS_LIMIT)?);
        Ok(GroupCtx { group, classes })
    }
}

pub struct RhoPsi {
    pub psi: AddChar,
    pub m: u32,
    pub n1: u32,
    pub branch: Branch,
    pub h_m: Subgroup,
    pub psi_tilde: SubgroupChar,
    pub rep: MonomialRep,
    /// Ind_{H_m} psi~
    pub induced: ClassFunction,
    pub character: ClassFunction,
}

/// Facts about rho_psi checked by the suites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhoChecks {
    pub degree: u64,
    pub irreducible: bool,
    pub central_character_ok: bool,
    /// <Ind_{H_m} psi~, rho_psi>
    pub multiplicity: u64,
    /// <Ind_{H_m} psi~, Ind_{H_m} psi~>
    pub induced_norm: u64,
}

impl RhoPsi {
    /// Predicted multiplicity of rho_psi in Ind_{H_m} psi~.
    pub fn expected_multiplicity(&self, q: u64, n: u32) -> u64 {
        match self.branch {
            Branch::FromH => 1,
            Branch::FromGamma => q.pow(n / 2),
        }
    }

    /// `center` lists (a_n, element) pairs for the central elements 1 + a_n tau^n.
    pub fn check(&self, center: &[(u32, usize)]) -> Result<RhoChecks> {
        let g = self.rep.group.as_ref();
        let degree = self.character.degree(g.identity()).ok_or_else(|| Error::NonIntegerDimension(self.character.at(g.identity()).to_string()))?;
        let n = self.character.values[0].order();
        let central_character_ok = center.iter().all(|&(a, z)| {
            let want = &CycloNum::from_int(n, degree as i64) * &CycloNum::root_of_unity(n, self.psi.exponent_in(a, n) as i64);
            *self.character.at(z) == want
        });
        let induced = lift_cf(&self.induced, n)?;
        Ok(RhoChecks {
            degree,
            irreducible: is_irreducible(&self.character)?,
            central_character_ok,
            multiplicity: inner_product_count(&induced, &self.character)?,
            induced_norm: inner_product_count(&induced, &induced)?,
        })
    }
}

fn lift_cf(f: &ClassFunction, n: u32) -> Result<ClassFunction> {
    let values = f.values.iter().map(|v| v.lift_to(n)).collect::<Result<Vec<_>>>()?;
    Ok(ClassFunction { classes: f.classes.clone(), values })
}

fn subgroup_exponent(g: &dyn GroupModel, s: &Subgroup) -> u64 {
    s.members.iter().fold(1, |acc, &x| lcm(acc, g.elem_order(x)))
}

fn build_rho_common(
    ctx: &GroupCtx,
    psi: &AddChar,
    m: u32,
    n: u32,
    h_m: Subgroup,
    psi_tilde: SubgroupChar,
    gamma: impl Fn() -> Result<Subgroup>,
) -> Result<RhoPsi> {
    let g = ctx.group.as_ref();
    let n1 = n / m;
    let induced = induce_char_with(g, &ctx.classes, &Transversal::left(g, &h_m), &psi_tilde);
    let (branch, rep) = if m.is_multiple_of(2) && n1 % 2 == 1 {
        let gam = gamma()?;
        let root = lcm(psi_tilde.root_order as u64, subgroup_exponent(g, &gam)) as u32;
        let exts = all_extensions(g, &h_m, &psi_tilde.lift(root)?, &gam)?;
        let chi = exts.into_iter().next().ok_or_else(|| Error::NoExtensionExists(format!("psi~ does not extend to {}", gam.name)))?;
        (Branch::FromGamma, MonomialRep::new(ctx.group.clone(), gam, chi)?)
    } else {
        (Branch::FromH, MonomialRep::new(ctx.group.clone(), h_m.clone(), psi_tilde.clone())?)
    };
    let character = rep.character(&ctx.classes);
    Ok(RhoPsi { psi: psi.clone(), m, n1, branch, h_m, psi_tilde, rep, induced, character })
}

/// rho_psi on U^{n,q}(F_{q^n}); `ctx.group` must be the RingGroup `u`.
pub fn build_rho_psi(ctx: &GroupCtx, u: &RingGroup, psi: &AddChar) -> Result<RhoPsi> {
    let params = u.params();
    let (m, psi1) = psi.descend(params.qe())?;
    let (h_m, pt) = psi_tilde_norm(&psi1, u, m)?;
    build_rho_common(ctx, psi, m, params.n(), h_m, pt, || {
        let spec = SubgroupSpec::for_ring(params, SubgroupKind::Gamma(m))?;
        Subgroup::from_predicate(u, &format!("Gamma_{m}"), |x| spec.contains(params.field(), &u.decode(x)))
    })
}

/// rho'_psi on G^{n,q}(F_{q^n}); `ctx.group` must be the GnqGroup `g`.
pub fn build_rho_psi_prime(ctx: &GroupCtx, g: &GnqGroup, psi: &AddChar) -> Result<RhoPsi> {
    let params = g.params();
    let (m, psi1) = psi.descend(params.qe())?;
    let (h_m, pt) = psi_tilde_prime(&psi1, g, m)?;
    build_rho_common(ctx, psi, m, params.n(), h_m, pt, || {
        let spec = SubgroupSpec::for_gnq(params, SubgroupKind::Gamma(m))?;
        Subgroup::from_predicate(g, &format!("Gamma'_{m}"), |x| spec.contains(params.field(), &g.decode(x)))
    })
}

/// Central elements 1 + a tau^n, keyed by a.
pub fn center_elements(params: &RingParams, encode: &dyn Fn(&[u32]) -> usize) -> Vec<(u32, usize)> {
    params
        .field()
        .elems()
        .map(|a| {
            let mut v = vec![0; params.n() as usize + 1];
            v[0] = 1;
            v[params.n() as usize] = a;
            (a, encode(&v))
        })
        .collect()
}

/// Lefschetz shadow: sum_psi q^{n(n+n_1-2)/2} deg rho_psi.
pub fn lefschetz_sum(q: u64, n: u32, rhos: &[(u32, u64)]) -> u64 {
    rhos.iter().map(|&(n1, deg)| q.pow(n * (n + n1 - 2) / 2) * deg).sum()
}

/// U-conjugates of psi~ on H_3 are exactly the characters of H_3 extending psi on H_4
/// (n = 2, h = 3, psi of conductor q^2).
pub fn psi_tilde_orbit_is_transitive(u: &RingGroup, psi: &AddChar) -> Result<bool> {
    let (h3, pt) = psi_tilde_h3(psi, u)?;
    let params = u.params();
    let spec = SubgroupSpec::for_ring(params, SubgroupKind::Filtration(4))?;
    let h4 = Subgroup::from_predicate(u, "H_4", |x| spec.contains(params.field(), &u.decode(x)))?;
    let mut on_h4 = vec![NONE; u.order()];
    for &x in &h4.members {
        on_h4[x] = pt.table[x];
    }
    let ext = all_extensions(u, &h4, &SubgroupChar { root_order: pt.root_order, table: on_h4 }, &h3)?;
    let mut orbit: Vec<Vec<u32>> = (0..u.order())
        .map(|g| {
            let gi = u.inv(g);
            let mut t = vec![NONE; u.order()];
            for &x in &h3.members {
                t[x] = pt.table[u.mul(u.mul(gi, x), g)];
            }
            t
        })
        .collect();
    orbit.sort();
    orbit.dedup();
    let mut want: Vec<Vec<u32>> = ext.into_iter().map(|c| c.table).collect();
    want.sort();
    Ok(orbit == want)
}

/// Everything about D^x / <pi^M> U_D^{n(h-1)+1} that does not depend on theta.
pub struct DivisionCtx {
    pub params: Arc<RingParams>,
    pub u: Arc<RingGroup>,
    pub u_ctx: GroupCtx,
    pub dq: Arc<DivQuot>,
    pub dq_ctx: GroupCtx,
    pub k: Subgroup,
    pub k_classes: ConjClasses,
    /// x -> zeta x zeta^{-1} on U
    pub zeta_conj: Vec<u32>,
    /// Pi^{-j} x Pi^j for j = 0..n on DivQuot, NONE outside K
    pi_conj: Vec<Vec<u32>>,
}

impl DivisionCtx {
    pub fn new(params: &Arc<RingParams>, m_pi: u32) -> Result<DivisionCtx> {
        let u = Arc::new(RingGroup::new(params, false)?);
        let u_ctx = GroupCtx::new(u.clone())?;
        let dq = Arc::new(DivQuot::new(params, m_pi)?);
        let dq_ctx = GroupCtx::new(dq.clone())?;
        let k = Subgroup::from_predicate(dq.as_ref(), "pi^Z O_D^x", |x| dq.in_k(x))?;
        let k_classes = ConjClasses::of_subgroup(dq.as_ref(), &k);
        let r = dq.ring();
        let z = r.zeta_pow(1);
        let zi = r.inv(z);
        let zeta_conj = (0..u.order())
            .map(|x| {
                let y = r.mul(r.mul(z, r.encode(&u.decode(x))), zi);
                u.encode(&r.decode(y)) as u32
            })
            .collect();
        let pi_conj = (0..params.n() as u64)
            .map(|j| {
                let p = dq.big_pi(j);
                let pinv = dq.inv(p);
                (0..dq.order()).map(|x| if dq.in_k(x) { dq.mul(dq.mul(pinv, x), p) as u32 } else { NONE }).collect()
            })
            .collect();
        Ok(DivisionCtx { params: params.clone(), u, u_ctx, dq, dq_ctx, k, k_classes, zeta_conj, pi_conj })
    }

    pub fn ring(&self) -> &RingGroup {
        self.dq.ring()
    }
}

/// The nonvanishing R^i_{T,theta} modeled as eta_theta on the division quotient.
pub struct RTheta {
    pub level: u32,
    /// the homological degree i
    pub degree: u32,
    pub conductor_m: u32,
    pub root_order: u32,
    pub rho_degree: u64,
    pub ext: Extension,
    pub target: CycloNum,
    pub eta: ClassFunction,
}

impl RTheta {
    /// eta'_theta(pi^s zeta^k x) = theta(pi)^s mu^k Tr(T^k rho(x)) on K.
    pub fn eta_prime(&self, ctx: &DivisionCtx, theta: &ThetaData, x: usize) -> CycloNum {
        let (e, u) = ctx.dq.split(x);
        let s = e / ctx.dq.n() as u64;
        let (k, a) = ctx.ring().split(u);
        let t = self.ext.trace(k, ctx.u.encode(&a));
        let tp = CycloNum::root_of_unity(self.root_order, ((self.root_order / theta.m_pi) as u64 * ((theta.theta_pi as u64 * s) % theta.m_pi as u64)) as i64);
        &t * &tp
    }

    pub fn eta_degree(&self, ctx: &DivisionCtx) -> Option<u64> {
        self.eta.degree(ctx.dq.identity())
    }

    pub fn is_irreducible(&self) -> Result<bool> {
        is_irreducible(&self.eta)
    }

    /// Mackey: eta'_theta irreducible on K with all Pi^j-conjugates distinct.
    pub fn mackey_irreducible(&self, ctx: &DivisionCtx, theta: &ThetaData) -> Result<bool> {
        let f = |x: usize| self.eta_prime(ctx, theta, x);
        let conj: Vec<Box<dyn Fn(usize) -> usize + Sync>> =
            (1..ctx.dq.n() as usize).map(|j| Box::new(move |x: usize| ctx.pi_conj[j][x] as usize) as Box<dyn Fn(usize) -> usize + Sync>).collect();
        let refs: Vec<&(dyn Fn(usize) -> usize + Sync)> = conj.iter().map(|b| b.as_ref()).collect();
        mackey_irreducible(&ctx.k_classes, &f, &refs)
    }
}

fn sign(n: u32, e: u32) -> CycloNum {
    CycloNum::from_int(n, if e.is_multiple_of(2) { 1 } else { -1 })
}

/// eta_theta = Ind_{pi^Z O_D^x} eta'_theta for level(theta) = 2, or level 3 with n = 2.
pub fn build_eta_theta(ctx: &DivisionCtx, theta: &ThetaData) -> Result<RTheta> {
    let params = &ctx.params;
    if theta.h != params.h() || theta.n != params.n() || theta.m_pi != ctx.dq.m_pi() {
        return Err(Error::ParameterMismatch("theta and the division quotient disagree on n, h or M".into()));
    }
    let level = theta.level();
    let n = params.n();
    let zn = params.field().units();
    let (rho, target_sign, degree, conductor_m) = match (params.h(), level) {
        (2, 2) => {
            let psi = theta.top_char()?;
            let m = conductor(&psi, params.qe())?;
            let rho = build_rho_psi(&ctx.u_ctx, &ctx.u, &psi)?.rep;
            (rho, n + n / m, n - n / m, m)
        }
        (3, 3) if n == 2 => {
            let psi = theta.top_char()?;
            let m = conductor(&psi, params.qe())?;
            if m != 2 {
                return Err(Error::WrongParameters("the main example needs chi|U^2 of conductor q^2".into()));
            }
            let h2 = h2_level3(&ctx.u)?;
            let cs = chi_sharp(theta, &ctx.u, &h2)?;
            let rho = MonomialRep::new(ctx.u_ctx.group.clone(), h2, cs)?;
            // r = 2
            (rho, 2, 2, m)
        }
        (h, _) if h > 3 => return Err(Error::UnsupportedLevel(h)),
        (h, l) => return Err(Error::WrongParameters(format!("theta has level {l}, the construction expects level {h}"))),
    };
    let root = [rho.root_order() as u64, zn as u64, theta.m_pi as u64, theta.chi.root_order as u64, 2].into_iter().fold(1, lcm) as u32;
    let rho = MonomialRep::new(rho.group.clone(), rho.sub.clone(), rho.chi.lift(root)?)?;
    let target = &sign(root, target_sign) * &theta.theta_zeta_value(root)?;
    let conj = |x: usize| ctx.zeta_conj[x] as usize;
    let ext = extend_invariant_irrep(&rho, &conj, zn as u64, ctx.u.identity(), &target)?;
    let rho_degree = rho.degree() as u64;
    let mut out = RTheta {
        level,
        degree,
        conductor_m,
        root_order: root,
        rho_degree,
        ext,
        target,
        eta: ClassFunction { classes: ctx.dq_ctx.classes.clone(), values: Vec::new() },
    };
    let values = ctx
        .dq_ctx
        .classes
        .reps
        .iter()
        .map(|&x| {
            if !ctx.dq.in_k(x) {
                return CycloNum::zero(root);
            }
            let mut acc = CycloNum::zero(root);
            for j in 0..n as usize {
                acc = &acc + &out.eta_prime(ctx, theta, ctx.pi_conj[j][x] as usize);
            }
            acc
        })
        .collect();
    out.eta.values = values;
    Ok(out)
}

/// A level-2 theta is regular when no F_q^j, 0 < j < n, fixes it: either psi o F^j != psi
/// (m does not divide j) or theta(zeta)^{q^j} != theta(zeta).
pub fn level2_regular(theta: &ThetaData) -> Result<bool> {
    let psi = theta.top_char()?;
    let m = conductor(&psi, theta.qe)?;
    let q = (theta.field().p() as u64).pow(theta.qe);
    let zn = theta.field().units() as u64;
    let tz = theta.theta_zeta as u64;
    Ok((1..theta.n).all(|j| j % m != 0 || (tz * q.pow(j)) % zn != tz))
}

/// What happened to one reading of theta'.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReadingOutcome {
    Equal,
    NotACharacter,
    Mismatch { class: String, left: String, right: String },
}

#[derive(Clone, Debug)]
pub struct MainExampleReport {
    pub eta_degree: u64,
    pub induced_degree: u64,
    pub pi2: ReadingOutcome,
    pub pi4: ReadingOutcome,
    pub eta_irreducible: bool,
    pub induced_irreducible: bool,
    /// Ind_{<zeta>H_2}(chi') has trace 1 at zeta, chi'(zeta) = 1
    pub chi_prime_trace_one: bool,
    /// Ind_{<zeta>H_2}(theta^#) equals the extension of rho_chi class by class
    pub theta_sharp_matches: bool,
}

/// Objects the main example reuses across theta.
pub struct MainExampleCtx {
    pub div: DivisionCtx,
    pub s: Subgroup,
    pub s_tr: Transversal,
    pub r_ctx: GroupCtx,
    pub r: Arc<RingGroup>,
    pub zh2_tr: Transversal,
    pub zh2: Subgroup,
}

impl MainExampleCtx {
    pub fn new(params: &Arc<RingParams>) -> Result<MainExampleCtx> {
        if params.n() != 2 || params.h() != 3 {
            return Err(Error::WrongParameters("the main example is n = 2, h = 3".into()));
        }
        let div = DivisionCtx::new(params, 1)?;
        let s = theta_prime_domain(&div.dq)?;
        let s_tr = Transversal::left(div.dq.as_ref(), &s);
        let r = Arc::new(RingGroup::new(params, true)?);
        let r_ctx = GroupCtx::new(r.clone())?;
        let zh2 = Subgroup::from_predicate(r.as_ref(), "<zeta>H_2", |x| r.split(x).1[1] == 0)?;
        let zh2_tr = Transversal::left(r.as_ref(), &zh2);
        Ok(MainExampleCtx { div, s, s_tr, r_ctx, r, zh2_tr, zh2 })
    }
}

fn compare(a: &ClassFunction, b: &ClassFunction, g: &dyn GroupModel) -> ReadingOutcome {
    for (i, (x, y)) in a.values.iter().zip(&b.values).enumerate() {
        if x != y {
            return ReadingOutcome::Mismatch { class: g.label(a.classes.reps[i]), left: x.to_string(), right: y.to_string() };
        }
    }
    ReadingOutcome::Equal
}

/// R^2_{T,theta} against Ind_{pi^Z <zeta> U^2_D} theta', for both readings of theta'.
pub fn verify_main_example(ctx: &MainExampleCtx, theta: &ThetaData) -> Result<MainExampleReport> {
    let div = &ctx.div;
    let dq = div.dq.as_ref();
    let rt = build_eta_theta(div, theta)?;
    let n = rt.root_order;
    let outcome = |reading| -> Result<(ReadingOutcome, Option<ClassFunction>)> {
        let tp = theta_prime(theta, dq, &ctx.s, reading, n)?;
        if !tp.is_homomorphism(dq, &ctx.s) {
            return Ok((ReadingOutcome::NotACharacter, None));
        }
        let ind = induce_char_with(dq, &div.dq_ctx.classes, &ctx.s_tr, &tp);
        Ok((compare(&rt.eta, &ind, dq), Some(ind)))
    };
    let (pi2, ind2) = outcome(ThetaPrimeReading::Pi2)?;
    let (pi4, _) = outcome(ThetaPrimeReading::Pi4)?;
    let ind2 = ind2.ok_or_else(|| Error::WrongParameters("theta' with pi^2 is not a character".into()))?;

    // theta^# route on R^x
    let r = ctx.r.as_ref();
    let (_, ts) = theta_sharp(theta, r, n)?;
    let ind_ts = induce_char_with(r, &ctx.r_ctx.classes, &ctx.zh2_tr, &ts);
    let ext_char = ClassFunction::from_fn(&ctx.r_ctx.classes, |x| {
        let (k, a) = r.split(x);
        rt.ext.trace(k, div.u.encode(&a))
    });
    let mut trivial_zeta = theta.clone();
    trivial_zeta.theta_zeta = 0;
    let (_, cp) = theta_sharp(&trivial_zeta, r, n)?;
    let ind_cp = induce_char_with(r, &ctx.r_ctx.classes, &ctx.zh2_tr, &cp);
    let zeta = r.zeta_pow(1);

    let id = dq.identity();
    Ok(MainExampleReport {
        eta_degree: rt.eta_degree(div).unwrap_or(0),
        induced_degree: ind2.degree(id).unwrap_or(0),
        pi2,
        pi4,
        eta_irreducible: rt.is_irreducible()?,
        induced_irreducible: is_irreducible(&ind2)?,
        chi_prime_trace_one: ind_cp.at(zeta).is_one(),
        theta_sharp_matches: compare(&ind_ts, &ext_char, r) == ReadingOutcome::Equal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charlib::{all_add_chars, main_example_thetas};
    use crate::ffield::Field;
    use crate::repkit::check_group_axioms;

    fn params(p: u32, qe: u32, n: u32, h: u32) -> Arc<RingParams> {
        RingParams::new(Field::get(p, qe * n).unwrap(), qe, n, h).unwrap()
    }

    #[test]
    fn division_quotient_is_a_group_of_the_right_order() {
        for (p, n, h, m) in [(2, 2, 2, 1), (2, 2, 2, 2), (3, 2, 2, 1), (2, 3, 2, 1)] {
            let pr = params(p, 1, n, h);
            let dq = DivQuot::new(&pr, m).unwrap();
            assert_eq!(dq.order() as u128, dq.expected_order());
            check_group_axioms(&dq, 4000).unwrap();
            // Pi a Pi^{-1} = a^q
            let f = pr.field();
            for c in f.elems().skip(1) {
                let mut a = vec![0; pr.len()];
                a[0] = c;
                let x = dq.join(0, dq.ring().encode(&a));
                let y = dq.conj(dq.big_pi(1), x);
                a[0] = f.pow(c, p as u64);
                assert_eq!(y, dq.join(0, dq.ring().encode(&a)));
            }
            // pi is central
            let pi = dq.pi();
            assert!(dq.generators().iter().all(|&g| dq.mul(g, pi) == dq.mul(pi, g)));
        }
    }

    #[test]
    fn rho_psi_at_2_2() {
        let pr = params(2, 1, 2, 2);
        let u = Arc::new(RingGroup::new(&pr, false).unwrap());
        let ctx = GroupCtx::new(u.clone()).unwrap();
        let center = center_elements(&pr, &|a| u.encode(a));
        let mut degs = Vec::new();
        for psi in all_add_chars(pr.field(), 2).unwrap() {
            let rho = build_rho_psi(&ctx, &u, &psi).unwrap();
            let c = rho.check(&center).unwrap();
            assert!(c.irreducible && c.central_character_ok);
            assert_eq!(c.multiplicity, rho.expected_multiplicity(2, 2));
            if rho.branch == Branch::FromGamma {
                assert_eq!(c.degree, 2);
                assert_eq!(c.induced_norm, 4);
            } else {
                assert_eq!(c.degree, 1);
            }
            degs.push((rho.n1, c.degree));
        }
        assert_eq!(lefschetz_sum(2, 2, &degs), 16);
    }

    #[test]
    fn rho_psi_prime_at_2_2() {
        let pr = params(2, 1, 2, 2);
        let g = Arc::new(GnqGroup::new(&pr).unwrap());
        let ctx = GroupCtx::new(g.clone()).unwrap();
        let center = center_elements(&pr, &|a| g.encode(a));
        let mut degs = Vec::new();
        for psi in all_add_chars(pr.field(), 2).unwrap() {
            let rho = build_rho_psi_prime(&ctx, &g, &psi).unwrap();
            let c = rho.check(&center).unwrap();
            assert!(c.irreducible && c.central_character_ok, "{c:?}");
            assert_eq!(c.multiplicity, rho.expected_multiplicity(2, 2));
            degs.push((rho.n1, c.degree));
        }
        assert_eq!(lefschetz_sum(2, 2, &degs), 16);
    }

    #[test]
    fn eta_theta_level_two_at_2_2() {
        let pr = params(2, 1, 2, 2);
        let ctx = DivisionCtx::new(&pr, 1).unwrap();
        for psi in all_add_chars(pr.field(), 2).unwrap().into_iter().skip(1) {
            for tz in 0..3 {
                let th = ThetaData::level2(&psi, 1, tz, 1, 0).unwrap();
                let rt = build_eta_theta(&ctx, &th).unwrap();
                assert_eq!(rt.eta_degree(&ctx), Some(2 * rt.rho_degree));
                let irr = rt.is_irreducible().unwrap();
                assert_eq!(irr, level2_regular(&th).unwrap());
                if rt.conductor_m == 2 {
                    assert!(irr);
                }
                assert_eq!(rt.mackey_irreducible(&ctx, &th).unwrap(), irr);
            }
        }
    }

    #[test]
    fn main_example_at_q2() {
        let pr = params(2, 1, 2, 3);
        let ctx = MainExampleCtx::new(&pr).unwrap();
        for th in main_example_thetas(pr.field(), 1).unwrap() {
            let rep = verify_main_example(&ctx, &th).unwrap();
            assert_eq!(rep.pi2, ReadingOutcome::Equal);
            assert_ne!(rep.pi4, ReadingOutcome::Equal);
            assert!(rep.eta_irreducible && rep.induced_irreducible);
            assert!(rep.chi_prime_trace_one && rep.theta_sharp_matches);
            assert_eq!(rep.eta_degree, 8);
        }
    }

    #[test]
    fn psi_tilde_orbit_at_q2() {
        let pr = params(2, 1, 2, 3);
        let u = RingGroup::new(&pr, false).unwrap();
        for psi in all_add_chars(pr.field(), 2).unwrap() {
            if conductor(&psi, 1).unwrap() == 2 {
                assert!(psi_tilde_orbit_is_transitive(&u, &psi).unwrap());
            }
        }
    }
}
