//! CSV dumps: characters rho_psi, points of X_h and the Lang image Y_h.

use std::fmt::Write as _;
use std::sync::Arc;

use dllab::charlib::all_add_chars;
use dllab::constructions::{build_rho_psi, GroupCtx};
use dllab::ffield::Field;
use dllab::matmodel::{points_csv, xh_points, y_h_image};
use dllab::repkit::{GroupModel, RingGroup};
use dllab::twistring::RingParams;
use dllab::{Error, Result};

use crate::suites::split_prime_power;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DumpKind {
    CharTable,
    Points,
    YSet,
}

impl DumpKind {
    pub fn parse(s: &str) -> Option<DumpKind> {
        match s {
            "char-table" => Some(DumpKind::CharTable),
            "points" => Some(DumpKind::Points),
            "y-set" => Some(DumpKind::YSet),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DumpConfig {
    pub kind: DumpKind,
    pub q: u64,
    pub n: u32,
    pub h: u32,
    /// points over F_{q^{n s}}
    pub s: u32,
    pub max_size: u128,
    pub jobs: usize,
}

pub fn validate(cfg: &DumpConfig) -> std::result::Result<(u32, u32), String> {
    let (p, qe) = split_prime_power(cfg.q).ok_or_else(|| format!("q = {} is not a prime power", cfg.q))?;
    if cfg.n == 0 || cfg.h < 2 || cfg.s == 0 || cfg.jobs == 0 {
        return Err("need n >= 1, h >= 2, s >= 1 and jobs >= 1".into());
    }
    if cfg.kind == DumpKind::CharTable && (cfg.h != 2 || cfg.s != 1) {
        return Err("char-table is computed on U^{n,q}_2(F_{q^n}); --h and --s do not apply".into());
    }
    Ok((p, qe))
}

pub fn dump(cfg: &DumpConfig) -> Result<String> {
    let (p, qe) = validate(cfg).map_err(Error::WrongParameters)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::WrongParameters(e.to_string()))?;
    pool.install(|| match cfg.kind {
        DumpKind::CharTable => char_table(p, qe, cfg.n, cfg.max_size),
        DumpKind::Points => {
            let params = RingParams::over(p, qe, cfg.n, cfg.h, cfg.s)?;
            Ok(points_csv(&xh_points(&params, cfg.max_size, cfg.jobs)?.points))
        }
        DumpKind::YSet => {
            let params = RingParams::over(p, qe, cfg.n, cfg.h, cfg.s)?;
            let ys: Vec<Vec<u32>> = y_h_image(&params, cfg.max_size, cfg.jobs)?.into_iter().collect();
            Ok(points_csv(&ys))
        }
    })
}

/// One row per psi, one column per conjugacy class of U^{n,q}_2(F_{q^n}).
fn char_table(p: u32, qe: u32, n: u32, max_size: u128) -> Result<String> {
    let params = RingParams::new(Field::get(p, qe * n)?, qe, n, 2)?;
    let u = Arc::new(RingGroup::new(&params, false)?);
    if u.order() as u128 > max_size {
        return Err(Error::SizeLimitExceeded { what: "char-table group".into(), needed: u.order() as u128, limit: max_size });
    }
    let ctx = GroupCtx::new(u.clone())?;
    let mut s = String::from("psi,degree");
    for &r in &ctx.classes.reps {
        let _ = write!(s, ",\"{}\"", u.label(r));
    }
    s.push('\n');
    for psi in all_add_chars(params.field(), qe * n)? {
        let rho = build_rho_psi(&ctx, &u, &psi)?;
        let deg = rho.character.degree(u.identity()).unwrap_or(0);
        let _ = write!(s, "{},{deg}", psi.param());
        for v in &rho.character.values {
            let _ = write!(s, ",\"{v}\"");
        }
        s.push('\n');
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: DumpKind, q: u64, n: u32, h: u32) -> DumpConfig {
        DumpConfig { kind, q, n, h, s: 1, max_size: 1 << 24, jobs: 2 }
    }

    #[test]
    fn x3_points_over_f4() {
        let csv = dump(&cfg(DumpKind::Points, 2, 2, 3)).unwrap();
        assert_eq!(csv.lines().count(), 1 + 256);
        assert!(csv.starts_with("a_0,a_1,a_2,a_3,a_4\n"));
    }

    #[test]
    fn char_table_rows() {
        let csv = dump(&cfg(DumpKind::CharTable, 2, 2, 2)).unwrap();
        assert_eq!(csv.lines().count(), 1 + 4);
    }

    #[test]
    fn clashes_are_rejected() {
        assert!(validate(&cfg(DumpKind::CharTable, 2, 2, 3)).is_err());
        assert!(validate(&cfg(DumpKind::Points, 6, 2, 2)).is_err());
        assert!(validate(&cfg(DumpKind::Points, 2, 0, 2)).is_err());
    }
}
