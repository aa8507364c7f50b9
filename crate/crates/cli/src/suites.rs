//! Verification suites. Each one enumerates its parameter sets, runs the checks and
//! collects one claim per checked statement into a `Report`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use dllab::charlib::{all_add_chars, conductor, main_example_thetas, AddChar, ThetaData};
use dllab::constructions::{
    build_eta_theta, build_rho_psi, build_rho_psi_prime, center_elements, lefschetz_sum, level2_regular,
    verify_main_example, Branch, DivisionCtx, GroupCtx, MainExampleCtx, ReadingOutcome, RhoPsi,
};
use dllab::counting::{
    dl_intertwiner_sum, dl_locus, eigen_suite, eigen_table, exp_sum, factorization_mismatches, first_second_locus,
    inductive_check, intertwiner_inductive, intertwiner_system, maximality_probe, n2_identity, npp_identity,
    rho_degree, trace_suite_level2, trace_suite_level3, DLSumSpec, EigenDomain, TargetSet,
};
use dllab::ffield::{is_prime, Field};
use dllab::matmodel::{in_x3_closed, in_xh_raw, in_y3_closed, nm_gnq, xh_points, y_h_image};
use dllab::repkit::{GnqGroup, RingGroup};
use dllab::serieslab::{
    det_valuation, det_valuation_direct, form_matrix, random_series, random_unipotent, solve_quotient, xtilde_form,
    LaurentSeries, SeriesField,
};
use dllab::twistring::{for_each_tuple, GnqElem, RingParams, SubgroupKind, SubgroupSpec};
use dllab::{Error, Result};

use crate::report::{Claim, Report};

pub const SUITES: &[&str] = &[
    "rho-psi",
    "rho-psi-prime",
    "eigenspaces",
    "intertwiners",
    "traces",
    "eta-level2",
    "main-example",
    "matrix-y",
    "series",
    "maximality",
];

pub const DEFAULT_MAX_SIZE: u128 = 1 << 27;

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub suite: String,
    /// restricts the suite to this q (a prime power)
    pub q: Option<u64>,
    pub n: Option<u32>,
    pub h: Option<u32>,
    /// pi acts through zeta_M
    pub m_pi: u32,
    pub jobs: usize,
    pub max_size: u128,
    pub saturate: bool,
    pub seed: u64,
    /// print progress to stderr
    pub progress: bool,
}

impl SuiteConfig {
    pub fn new(suite: &str) -> SuiteConfig {
        SuiteConfig {
            suite: suite.into(),
            q: None,
            n: None,
            h: None,
            m_pi: 1,
            jobs: 1,
            max_size: DEFAULT_MAX_SIZE,
            saturate: false,
            seed: 1,
            progress: false,
        }
    }

    /// Parameters that enter the report; `jobs` and `progress` deliberately do not.
    fn report_params(&self) -> Value {
        json!({
            "q": self.q, "n": self.n, "h": self.h, "M": self.m_pi,
            "max_size": self.max_size.to_string(), "saturate": self.saturate, "seed": self.seed,
        })
    }

    fn note(&self, msg: &str) {
        if self.progress {
            eprintln!("[{}] {msg}", self.suite);
        }
    }

    /// Keeps the (n, q) pairs the flags allow.
    fn pick(&self, all: &[(u32, u64)]) -> Vec<(u32, u64)> {
        all.iter().copied().filter(|&(n, q)| self.n.is_none_or(|x| x == n) && self.q.is_none_or(|x| x == q)).collect()
    }
}

/// q = p^e with p prime.
pub fn split_prime_power(q: u64) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let mut e = 0;
    let mut r = q;
    while r.is_multiple_of(p) {
        r /= p;
        e += 1;
    }
    (r == 1 && is_prime(p)).then_some((p as u32, e))
}

/// Rejects flag combinations before anything runs.
pub fn validate(cfg: &SuiteConfig) -> std::result::Result<(), String> {
    if !SUITES.contains(&cfg.suite.as_str()) {
        return Err(format!("unknown suite '{}'; known: {}", cfg.suite, SUITES.join(", ")));
    }
    if let Some(q) = cfg.q {
        if split_prime_power(q).is_none() {
            return Err(format!("q = {q} is not a prime power"));
        }
    }
    if cfg.n == Some(0) || cfg.h.is_some_and(|h| h < 2) || cfg.m_pi == 0 || cfg.jobs == 0 {
        return Err("need n >= 1, h >= 2, M >= 1 and jobs >= 1".into());
    }
    if cfg.h.is_some_and(|h| h != 2) && cfg.suite != "maximality" {
        return Err(format!("suite '{}' has a fixed level; --h applies to 'maximality' only", cfg.suite));
    }
    Ok(())
}

/// Runs one suite inside a thread pool of `jobs` workers; `jobs` is also the shard count.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Report> {
    validate(cfg).map_err(Error::WrongParameters)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::WrongParameters(e.to_string()))?;
    let claims = pool.install(|| match cfg.suite.as_str() {
        "rho-psi" => rho_suite(cfg, false),
        "rho-psi-prime" => rho_suite(cfg, true),
        "eigenspaces" => eigen(cfg),
        "intertwiners" => intertwiners(cfg),
        "traces" => traces(cfg),
        "eta-level2" => eta_level2(cfg),
        "main-example" => main_example(cfg),
        "matrix-y" => matrix_y(cfg),
        "series" => series(cfg),
        "maximality" => maximality(cfg),
        _ => unreachable!("validated"),
    })?;
    Ok(Report::new(&cfg.suite, cfg.report_params(), claims))
}

fn pq(q: u64) -> (u32, u32) {
    split_prime_power(q).expect("validated prime power")
}

fn q_pow(q: u64, e: u32) -> u64 {
    q.pow(e)
}

// ---------------------------------------------------------------------------------------
// rho_psi and rho'_psi

const RHO_PARAMS: &[(u32, u64)] = &[(2, 2), (2, 3), (3, 2)];

/// Refuses groups of order above --max-size before building them. `extra` multiplies the
/// order q^{n n(h-1)} of the principal units, e.g. by n M (q^n - 1) for the division quotient.
fn check_group(cfg: &SuiteConfig, what: &str, params: &RingParams, extra: u128) -> Result<()> {
    let needed = (params.field().size() as u128).pow(params.len() as u32 - 1) * extra;
    if needed > cfg.max_size {
        return Err(Error::SizeLimitExceeded { what: what.into(), needed, limit: cfg.max_size });
    }
    Ok(())
}

fn rho_claims(cfg: &SuiteConfig, prime: bool, n: u32, q: u64, out: &mut Vec<Claim>) -> Result<()> {
    let (p, qe) = pq(q);
    let params = RingParams::new(Field::get(p, qe * n)?, qe, n, 2)?;
    check_group(cfg, if prime { "G^{n,q}" } else { "U^{n,q}" }, &params, 1)?;
    let (ctx, build): (GroupCtx, Box<dyn Fn(&GroupCtx, &AddChar) -> Result<RhoPsi>>) = if prime {
        let g = Arc::new(GnqGroup::new(&params)?);
        let gg = g.clone();
        (GroupCtx::new(g)?, Box::new(move |c, psi| build_rho_psi_prime(c, &gg, psi)))
    } else {
        let u = Arc::new(RingGroup::new(&params, false)?);
        let uu = u.clone();
        (GroupCtx::new(u)?, Box::new(move |c, psi| build_rho_psi(c, &uu, psi)))
    };
    let center = if prime {
        let g = GnqGroup::new(&params)?;
        center_elements(&params, &|a| g.encode(a))
    } else {
        let u = RingGroup::new(&params, false)?;
        center_elements(&params, &|a| u.encode(a))
    };
    let tag = if prime { "rho_prime" } else { "rho" };
    let mut degs = Vec::new();
    for psi in all_add_chars(params.field(), qe * n)? {
        let rho = build(&ctx, &psi)?;
        let c = rho.check(&center)?;
        let pp = json!({"n": n, "q": q, "psi": psi.param(), "conductor_exp": rho.m});
        let gamma = rho.branch == Branch::FromGamma;
        let (mult, norm) = if gamma { (q_pow(q, n / 2), q_pow(q, n)) } else { (1, 1) };
        out.push(Claim::new(
            &format!("{tag}.irreducible"),
            "rho_psi is irreducible: <chi, chi> = 1",
            pp.clone(),
            true,
            c.irreducible,
        ));
        out.push(Claim::new(
            &format!("{tag}.central_character"),
            "the center 1 + a tau^n acts through psi(a)",
            pp.clone(),
            true,
            c.central_character_ok,
        ));
        out.push(
            Claim::new(
                &format!("{tag}.induced"),
                "Ind_{H_m} psi~ is rho_psi, or q^{n/2} copies of it when m is even and n/m odd",
                pp.clone(),
                json!({"multiplicity": mult, "norm": norm}),
                json!({"multiplicity": c.multiplicity, "norm": c.induced_norm}),
            )
            .with_witness(json!({"branch": format!("{:?}", rho.branch), "degree": c.degree})),
        );
        if !prime {
            out.push(Claim::new(
                "rho.degree",
                "deg rho_psi is the index of H_m, or of Gamma_m in the even/odd case",
                pp.clone(),
                rho_degree(p, qe, n, rho.m)?,
                c.degree,
            ));
        }
        degs.push((rho.n1, c.degree));
    }
    out.push(
        Claim::new(
            &format!("{tag}.lefschetz"),
            "sum_psi q^{n(n+n_1-2)/2} deg rho_psi = q^{n^2}",
            json!({"n": n, "q": q}),
            q_pow(q, n * n),
            lefschetz_sum(q, n, &degs),
        )
        .with_witness(&degs),
    );
    if prime {
        out.push(nm_homomorphism(&params, n, q)?);
    }
    cfg.note(&format!("n={n} q={q}: {} characters", degs.len()));
    Ok(())
}

/// Nm^{n,q}(gh) = Nm(g) + Nm(h) over all pairs of G^{n,q}(F_{q^n}), truncation k = 1.
fn nm_homomorphism(params: &Arc<RingParams>, n: u32, q: u64) -> Result<Claim> {
    let f = params.field();
    let vals = vec![f.elems().collect::<Vec<u32>>(); n as usize];
    let mut elems = Vec::new();
    for_each_tuple(&vals, |a| elems.push(a[1..].to_vec()));
    let elems: Vec<GnqElem> = elems.iter().map(|a| GnqElem::new(params, a)).collect::<Result<_>>()?;
    let norms: Vec<u32> = elems.iter().map(|g| nm_gnq(g, 1)).collect::<Result<_>>()?;
    use rayon::prelude::*;
    let bad: usize = (0..elems.len())
        .into_par_iter()
        .map(|i| {
            (0..elems.len())
                .filter(|&j| {
                    let gh = elems[i].mul(&elems[j]).expect("same params");
                    nm_gnq(&gh, 1).expect("k = 1") != f.add(norms[i], norms[j])
                })
                .count()
        })
        .sum();
    Ok(Claim::new(
        "rho_prime.norm_homomorphism",
        "Nm^{n,q} is a homomorphism G^{n,q}(F_{q^n}) -> F_q",
        json!({"n": n, "q": q, "k": 1, "pairs": elems.len() * elems.len()}),
        0,
        bad,
    ))
}

fn rho_suite(cfg: &SuiteConfig, prime: bool) -> Result<Vec<Claim>> {
    let mut out = Vec::new();
    for (n, q) in cfg.pick(RHO_PARAMS) {
        rho_claims(cfg, prime, n, q, &mut out)?;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------------------
// eigenspaces, intertwiners, traces

fn qs(cfg: &SuiteConfig, all: &[u64]) -> Vec<u64> {
    all.iter().copied().filter(|&q| cfg.q.is_none_or(|x| x == q)).collect()
}

fn eigen(cfg: &SuiteConfig) -> Result<Vec<Claim>> {
    let mut out = Vec::new();
    for q in qs(cfg, &[2, 3]) {
        let (p, qe) = pq(q);
        let table = eigen_table(p, qe, EigenDomain::Reduced, cfg.max_size, cfg.jobs)?;
        let suite = eigen_suite(&table)?;
        let k = suite.dims.len();
        let identity: Vec<Vec<u64>> = (0..k).map(|i| (0..k).map(|j| u64::from(i == j)).collect()).collect();
        out.push(
            Claim::new(
                "eigen.dimensions",
                "the chi_1-eigenspace of chi_2^# has dimension 1 if chi_1 = chi_2 and 0 otherwise",
                json!({"q": q, "characters": k}),
                &identity,
                &suite.dims,
            )
            .with_witness(&suite.psi_of),
        );
        let rows = npp_identity(p, qe)?;
        let bad: Vec<_> = rows.iter().filter(|r| r.sum != r.expected).collect();
        out.push(
            Claim::new(
                "eigen.npp_identity",
                "sum_beta N''(lambda, delta, beta) = q^2 + (q^2-1)q for delta = 0, (q^2-1)q otherwise",
                json!({"q": q, "pairs": rows.len()}),
                0,
                bad.len(),
            )
            .with_witness(&bad),
        );
        out.push(Claim::new(
            "eigen.factorization",
            "N(gamma, g) splits as [lambda' = lambda] q^6 N'",
            json!({"q": q}),
            0,
            factorization_mismatches(&table)?,
        ));
        cfg.note(&format!("q={q}: {k} characters"));
    }
    Ok(out)
}

fn conductor_two_chars(p: u32, qe: u32) -> Result<Vec<AddChar>> {
    let f = Field::get(p, 2 * qe)?;
    let mut out = Vec::new();
    for c in all_add_chars(&f, 2 * qe)? {
        if conductor(&c, qe)? == 2 {
            out.push(c);
        }
    }
    Ok(out)
}

fn intertwiners(cfg: &SuiteConfig) -> Result<Vec<Claim>> {
    let mut out = Vec::new();
    for q in qs(cfg, &[2, 3]) {
        let (p, qe) = pq(q);
        let sys = intertwiner_system(p, qe);
        let spec = intertwiner_inductive(p, qe);
        let s_range: &[u32] = if q == 2 { &[1, 2] } else { &[1] };
        for psi in conductor_two_chars(p, qe)? {
            for s in [1u32, 2] {
                let v = exp_sum(&sys, &psi, s, cfg.max_size, cfg.jobs)?;
                out.push(Claim::new(
                    "intertwiner.exp_sum",
                    "the intertwiner sum is q^{2+2s}: dimension q^2 with Frobenius scalar q^2",
                    json!({"q": q, "psi": psi.param(), "s": s}),
                    q_pow(q, 2 + 2 * s).to_string(),
                    v.to_string(),
                ));
            }
            let rows = inductive_check(&spec, &psi, s_range, cfg.max_size, cfg.jobs);
            let (ok, witness) = match &rows {
                Ok(r) => (true, serde_json::to_value(r).unwrap_or(Value::Null)),
                Err(e) => (false, json!(e.to_string())),
            };
            out.push(
                Claim::new(
                    "intertwiner.inductive",
                    "the sum over the big system equals q^{s j} times the sum over the small one",
                    json!({"q": q, "psi": psi.param(), "s": s_range}),
                    true,
                    ok,
                )
                .with_witness(witness),
            );
            let dl = DLSumSpec::main_example(p, qe, psi.clone(), TargetSet::LangImage)?;
            out.push(Claim::new(
                "intertwiner.dl_sum",
                "the Deligne-Lusztig sum over the Lang locus equals the reduced sum",
                json!({"q": q, "psi": psi.param(), "s": 1}),
                exp_sum(&sys, &psi, 1, cfg.max_size, cfg.jobs)?.to_string(),
                dl_intertwiner_sum(&dl, 1, cfg.max_size, cfg.jobs)?.to_string(),
            ));
        }
        cfg.note(&format!("q={q} done"));
    }
    Ok(out)
}

fn traces(cfg: &SuiteConfig) -> Result<Vec<Claim>> {
    let mut out = Vec::new();
    for (n, q) in cfg.pick(RHO_PARAMS) {
        let (p, qe) = pq(q);
        for row in trace_suite_level2(p, qe, n, cfg.max_size, cfg.jobs)? {
            let pp = json!({"n": n, "q": q, "h": 2, "psi": row.psi, "conductor_exp": row.conductor});
            out.push(Claim::new(
                "trace.sum",
                "sum_z psi(z)^{-1} #Fix(z on X^{zeta-bar}) = q^n",
                pp.clone(),
                row.expected_sum,
                row.sum,
            ));
            out.push(Claim::new(
                "trace.zeta_bar",
                "zeta-bar acts on the psi-part with trace (-1)^{n+n/m}",
                pp,
                row.expected_trace,
                row.trace,
            ));
        }
    }
    if cfg.n.is_none_or(|n| n == 2) && cfg.q.is_none_or(|q| q == 2) {
        let (size, sums) = trace_suite_level3(2, 1, cfg.max_size, cfg.jobs)?;
        out.push(
            Claim::new(
                "trace.level3",
                "sum_gamma chi(gamma)^{-1} #Fix(gamma on X_3^{zeta-bar}) = q^{n(h-1)}",
                json!({"n": 2, "q": 2, "h": 3, "fixed_points": size}),
                vec![16i64; sums.len()],
                &sums,
            )
            .with_witness(json!({"characters": sums.len()})),
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------------------
// division algebra suites

fn eta_level2(cfg: &SuiteConfig) -> Result<Vec<Claim>> {
    let mut out = Vec::new();
    for (n, q) in cfg.pick(&[(2, 2), (3, 2)]) {
        let (p, qe) = pq(q);
        let params = RingParams::new(Field::get(p, qe * n)?, qe, n, 2)?;
        check_group(cfg, "division quotient", &params, n as u128 * cfg.m_pi as u128 * params.field().units() as u128)?;
        let ctx = DivisionCtx::new(&params, cfg.m_pi)?;
        let zn = params.field().units();
        let mut iff_bad = Vec::new();
        let mut count = 0;
        for psi in all_add_chars(params.field(), qe * n)?.into_iter().filter(|c| !c.is_trivial()) {
            for tz in 0..zn {
                for tp in 0..cfg.m_pi {
                    count += 1;
                    let theta = ThetaData::level2(&psi, qe, tz, cfg.m_pi, tp)?;
                    let m = conductor(&psi, qe)?;
                    let pp = json!({"n": n, "q": q, "psi": psi.param(), "theta_zeta": tz, "theta_pi": tp, "conductor_exp": m});
                    let rt = match build_eta_theta(&ctx, &theta) {
                        Ok(rt) => rt,
                        Err(e) => {
                            out.push(Claim::new("eta.extension", "rho_psi extends with the prescribed trace at zeta", pp, true, false).with_witness(e.to_string()));
                            continue;
                        }
                    };
                    out.push(
                        Claim::new("eta.extension", "rho_psi extends with the prescribed trace at zeta", pp.clone(), true, true)
                            .with_witness(rt.target.to_string()),
                    );
                    out.push(Claim::new(
                        "eta.degree",
                        "deg eta_theta = n deg rho_psi",
                        pp.clone(),
                        n as u64 * rt.rho_degree,
                        rt.eta_degree(&ctx).unwrap_or(0),
                    ));
                    let irr = rt.is_irreducible()?;
                    let regular = level2_regular(&theta)?;
                    out.push(Claim::new(
                        "eta.full_conductor_irreducible",
                        "conductor q^n implies eta_theta irreducible",
                        pp.clone(),
                        true,
                        m != n || irr,
                    ));
                    out.push(Claim::new(
                        "eta.irreducible_iff_regular",
                        "eta_theta is irreducible exactly when no F_q^j, 0 < j < n, fixes theta",
                        pp.clone(),
                        regular,
                        irr,
                    ));
                    out.push(Claim::new(
                        "eta.mackey",
                        "Mackey's criterion agrees with <eta, eta> = 1",
                        pp.clone(),
                        irr,
                        rt.mackey_irreducible(&ctx, &theta)?,
                    ));
                    if irr != (m == n) {
                        iff_bad.push(pp);
                    }
                }
            }
        }
        out.push(
            Claim::new(
                "eta.irreducible_iff_full_conductor",
                "eta_theta is irreducible exactly when psi has conductor q^n",
                json!({"n": n, "q": q, "thetas": count}),
                0,
                iff_bad.len(),
            )
            .with_witness(&iff_bad),
        );
        cfg.note(&format!("n={n} q={q}: {count} characters theta"));
    }
    Ok(out)
}

fn main_example(cfg: &SuiteConfig) -> Result<Vec<Claim>> {
    let mut out = Vec::new();
    for q in qs(cfg, &[2, 3]) {
        let (p, qe) = pq(q);
        let params = RingParams::new(Field::get(p, 2 * qe)?, qe, 2, 3)?;
        check_group(cfg, "main example groups", &params, 2 * params.field().units() as u128)?;
        let ctx = MainExampleCtx::new(&params)?;
        let thetas = main_example_thetas(params.field(), qe)?;
        let mut readings = (0usize, 0usize, 0usize);
        let total = thetas.len();
        for (i, th) in thetas.iter().enumerate() {
            let rep = verify_main_example(&ctx, th)?;
            let pp = json!({"q": q, "theta": i, "theta_zeta": th.theta_zeta});
            let outcome = |r: &ReadingOutcome| match r {
                ReadingOutcome::Equal => json!("equal"),
                ReadingOutcome::NotACharacter => json!("not a character"),
                ReadingOutcome::Mismatch { class, left, right } => json!({"class": class, "left": left, "right": right}),
            };
            readings.0 += usize::from(rep.pi2 == ReadingOutcome::Equal);
            readings.1 += usize::from(rep.pi4 == ReadingOutcome::Equal);
            readings.2 += usize::from(rep.pi4 == ReadingOutcome::NotACharacter);
            out.push(
                Claim::new(
                    "main.character_equality",
                    "R^2 equals Ind_{pi^Z <zeta> U^2_D} theta' class by class",
                    pp.clone(),
                    json!("equal"),
                    outcome(&rep.pi2),
                )
                .with_witness(json!({"pi4_reading": outcome(&rep.pi4)})),
            );
            out.push(Claim::new(
                "main.irreducible",
                "R^2 and the induced character are irreducible of the same degree",
                pp.clone(),
                json!({"eta": true, "induced": true, "degrees_equal": true}),
                json!({"eta": rep.eta_irreducible, "induced": rep.induced_irreducible, "degrees_equal": rep.eta_degree == rep.induced_degree}),
            ));
            out.push(Claim::new(
                "main.theta_sharp",
                "Ind_{<zeta>H_2} theta^# is the extension of rho_chi and chi'(zeta) has trace 1",
                pp,
                json!([true, true]),
                json!([rep.theta_sharp_matches, rep.chi_prime_trace_one]),
            ));
            if cfg.progress && (i + 1) % 50 == 0 {
                cfg.note(&format!("q={q}: {}/{total}", i + 1));
            }
        }
        out.push(Claim::new(
            "main.theta_prime_reading",
            "which exponent of pi makes theta' a character equal to R^2",
            json!({"q": q, "thetas": total}),
            json!({"pi2_equal": total, "pi4_equal": 0, "pi4_not_a_character": total}),
            json!({"pi2_equal": readings.0, "pi4_equal": readings.1, "pi4_not_a_character": readings.2}),
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------------------
// matrix model, series, point counts

fn matrix_y(cfg: &SuiteConfig) -> Result<Vec<Claim>> {
    let mut out = Vec::new();
    if cfg.q.is_none_or(|q| q == 2) && cfg.n.is_none_or(|n| n == 2) {
        let params = RingParams::over(2, 1, 2, 3, 2)?;
        let vals = SubgroupSpec::for_ring(&params, SubgroupKind::Full)?.coord_values(params.field(), params.field().k());
        let (mut checked, mut bad) = (0u64, 0u64);
        for_each_tuple(&vals, |a| {
            checked += 1;
            bad += u64::from(in_xh_raw(&params, a) != in_x3_closed(&params, a));
        });
        let pp = json!({"n": 2, "h": 3, "q": 2, "field": "F_16"});
        out.push(Claim::new("matrix.x3_equations", "X_3 is cut out by its two explicit equations", pp.clone(), 0, bad).with_witness(json!({"checked": checked})));
        let ys = y_h_image(&params, cfg.max_size, cfg.jobs)?;
        let outside = ys.iter().filter(|y| !in_y3_closed(&params, y)).count();
        out.push(Claim::new("matrix.y3_equations", "Lang images of X_3 satisfy b_2 = 0, b_4 = -b_3 b_1^q", pp.clone(), 0, outside).with_witness(json!({"images": ys.len()})));
        let psi = conductor_two_chars(2, 1)?.remove(0);
        let eqs = first_second_locus(2, 1, 2)?;
        for (name, target) in [("matrix.locus_closed", TargetSet::Y3Closed), ("matrix.locus_lang", TargetSet::LangImage)] {
            let mut locus = dl_locus(&DLSumSpec::main_example(2, 1, psi.clone(), target)?, 2, cfg.max_size, cfg.jobs)?;
            locus.sort();
            out.push(
                Claim::new(name, "the preimage of Y_3 under the section is the locus of the two displayed equations", pp.clone(), eqs.len(), locus.len())
                    .with_witness(json!({"sets_equal": locus == eqs})),
            );
            out.push(Claim::new(&format!("{name}_equal"), "the two loci coincide as sets", pp.clone(), true, locus == eqs));
        }
    }
    for (n, q) in cfg.pick(RHO_PARAMS) {
        let (p, qe) = pq(q);
        let r = n2_identity(p, qe, n, cfg.max_size, cfg.jobs)?;
        out.push(
            Claim::new("matrix.n2_identity", "pr_n o L = AS o N_2 on U^{n,q}(F_{q^{2n}})", json!({"n": n, "q": q}), 0, r.failures)
                .with_witness(json!({"checked": r.checked})),
        );
    }
    Ok(out)
}

/// Fields for the series suite: (qe, k) with q = 2^qe and F_{2^k}, k <= 6.
const SERIES_FIELDS: &[(u32, u32)] = &[(1, 2), (1, 3), (1, 4), (1, 6), (2, 4), (2, 6)];

fn series(cfg: &SuiteConfig) -> Result<Vec<Claim>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    let prec = 6;
    let ctxs: Vec<Arc<SeriesField>> = SERIES_FIELDS.iter().map(|&(qe, k)| SeriesField::new(2, qe, k / qe)).collect::<Result<_>>()?;

    let (mut solved, mut failures) = (0u64, Vec::new());
    for i in 0..1000 {
        let ctx = &ctxs[rng.gen_range(0..ctxs.len())];
        let n = rng.gen_range(1..=3);
        let h = random_unipotent(ctx, &mut rng, n, prec);
        match solve_quotient(&h) {
            Ok(sol) if sol.residual_precision >= prec - 1 => solved += 1,
            Ok(sol) => failures.push(json!({"instance": i, "residual_precision": sol.residual_precision})),
            Err(e) => failures.push(json!({"instance": i, "error": e.to_string()})),
        }
    }
    out.push(
        Claim::new(
            "series.solve_quotient",
            "F(B) g = h B has one solution with B in U cap F^{-1}(U), g in U cap F(U^-); residual zero, two solve orders agree",
            json!({"instances": 1000, "n_max": 3, "precision": prec}),
            1000,
            solved,
        )
        .with_witness(&failures),
    );

    let mut mismatches = Vec::new();
    let mut skipped = 0u64;
    for i in 0..10_000 {
        let ctx = &ctxs[rng.gen_range(0..ctxs.len())];
        let n = rng.gen_range(1..=4);
        let a: Vec<LaurentSeries> = (0..n)
            .map(|_| {
                let v = rng.gen_range(-2..=3);
                if rng.gen_bool(0.15) {
                    LaurentSeries::zero(ctx, prec)
                } else {
                    let lead = rng.gen_range(1..ctx.field().size());
                    random_series(ctx, &mut rng, v + 1, prec).add(&LaurentSeries::from_coeffs(ctx, v, &[lead], prec))
                }
            })
            .collect();
        match (det_valuation(&a), det_valuation_direct(&a)) {
            (Ok(x), Ok(y)) if x == y => {}
            (Err(Error::AllZero), Err(Error::AllZero)) => skipped += 1,
            (x, y) => mismatches.push(json!({"sample": i, "formula": format!("{x:?}"), "direct": format!("{y:?}")})),
        }
    }
    out.push(
        Claim::new(
            "series.det_valuation_random",
            "v(det A) = min_j (n v_j + j)",
            json!({"samples": 10_000, "n_max": 4, "precision": prec}),
            0,
            mismatches.len(),
        )
        .with_witness(json!({"all_zero": skipped, "mismatches": mismatches})),
    );
    out.push(det_grid()?);

    let mut trips = 0u64;
    let mut bad = Vec::new();
    for i in 0..500 {
        // coefficients in F_{q^n}((pi)) give elements of D, whose determinant is the reduced norm
        let (qe, n, s) = [(1u32, 2usize, 4u32), (1, 3, 6), (2, 2, 2), (1, 2, 2)][i % 4];
        let ctx = SeriesField::new(2, qe, s)?;
        let sub = ctx.field().subfield_elems(qe * n as u32);
        let coeff = |rng: &mut ChaCha8Rng| {
            let c: Vec<u32> = (0..prec).map(|_| sub[rng.gen_range(0..sub.len())]).collect();
            LaurentSeries::from_coeffs(&ctx, 0, &c, prec)
        };
        let mut a: Vec<LaurentSeries> = (0..n).map(|_| coeff(&mut rng)).collect();
        if a[0].coeff(0) == Some(0) {
            a[0] = a[0].add(&LaurentSeries::one(&ctx, prec));
        }
        let m = form_matrix(&a)?;
        match xtilde_form(&m)? {
            Some(back) if form_matrix(&back)?.agrees(&m) && back.iter().zip(&a).all(|(x, y)| x.agrees(y)) => trips += 1,
            other => bad.push(json!({"sample": i, "found": other.is_some()})),
        }
    }
    trips += xh_round_trips(&mut bad)?;
    out.push(
        Claim::new(
            "series.xtilde_round_trip",
            "xtilde_form recovers (a_0, ..., a_{n-1}) and rebuilds the same matrix",
            json!({"samples": "500 division-algebra elements + all X_2 points at n = 2, q = 2 over F_16"}),
            0,
            bad.len(),
        )
        .with_witness(json!({"round_trips": trips, "failures": bad})),
    );
    Ok(out)
}

/// Exhaustive: n = 2 with a_j in F_4[pi]/pi^3, n = 3 with a_j in F_4[pi]/pi^2.
fn det_grid() -> Result<Claim> {
    let ctx = SeriesField::new(2, 1, 2)?;
    let mut checked = 0u64;
    let mut bad = 0u64;
    for (n, w) in [(2usize, 3u32), (3, 2)] {
        let per = 4u32.pow(w);
        for code in 0..per.pow(n as u32) {
            let mut r = code;
            let a: Vec<LaurentSeries> = (0..n)
                .map(|_| {
                    let x = r % per;
                    r /= per;
                    let d: Vec<u32> = (0..w).map(|i| (x >> (2 * i)) & 3).collect();
                    LaurentSeries::from_coeffs(&ctx, 0, &d, w as i64)
                })
                .collect();
            checked += 1;
            match (det_valuation(&a), det_valuation_direct(&a)) {
                (Ok(x), Ok(y)) if x == y => {}
                (Err(Error::AllZero), Err(Error::AllZero)) => {}
                _ => bad += 1,
            }
        }
    }
    Ok(Claim::new(
        "series.det_valuation_grid",
        "v(det A) = min_j (n v_j + j) on every coefficient choice in the grid",
        json!({"grid": "n=2 window 3, n=3 window 2, F_4"}),
        0,
        bad,
    )
    .with_witness(json!({"checked": checked})))
}

/// Every point of X_2(F_16) at n = 2, q = 2, lifted to series, has the normal form.
fn xh_round_trips(bad: &mut Vec<Value>) -> Result<u64> {
    let params = RingParams::over(2, 1, 2, 2, 2)?;
    let ctx = SeriesField::new(2, 1, 4)?;
    let pts = xh_points(&params, DEFAULT_MAX_SIZE, 1)?;
    let mut ok = 0;
    for pt in &pts.points {
        let a = vec![
            LaurentSeries::from_coeffs(&ctx, 0, &[pt[0], pt[2]], 2),
            LaurentSeries::from_coeffs(&ctx, 0, &[pt[1]], 1),
        ];
        match xtilde_form(&form_matrix(&a)?) {
            Ok(Some(back)) if back.iter().zip(&a).all(|(x, y)| x.agrees(y)) => ok += 1,
            other => bad.push(json!({"point": pt, "result": format!("{:?}", other.map(|o| o.is_some()))})),
        }
    }
    Ok(ok)
}

fn maximality(cfg: &SuiteConfig) -> Result<Vec<Claim>> {
    let mut out = Vec::new();
    let h = cfg.h.unwrap_or(2);
    for (n, q) in cfg.pick(RHO_PARAMS) {
        let (p, qe) = pq(q);
        let s_range: Vec<u32> = if q == 2 && n == 2 { vec![1, 2, 3] } else { vec![1, 2] };
        let s_range = if h == 2 { s_range } else { vec![1] };
        for row in maximality_probe(p, qe, n, h, &s_range, cfg.max_size, cfg.jobs)? {
            let pp = json!({"n": n, "q": q, "h": h, "s": row.s});
            match row.prediction {
                Some(pred) => out.push(Claim::new(
                    "maximality.count",
                    "|X_2(F_{q^{ns}})| = sum_psi deg rho_psi (-1)^{(n-n_1)(1+s)} q^{sn(n+n_1-2)/2}",
                    pp,
                    pred.to_string(),
                    row.count.to_string(),
                )),
                None => out.push(Claim::new("maximality.count", "point count recorded, no prediction at this level", pp, row.count, row.count)),
            }
        }
    }
    Ok(out)
}
