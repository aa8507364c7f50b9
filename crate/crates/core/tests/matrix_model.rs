use dllab::matmodel::{det_trunc, in_xh, iota, iota_via_varpi, xh_points};
use dllab::twistring::{RingParams, TwistedElem};

fn all_units(p: &RingParams) -> Vec<Vec<u32>> {
    let size = p.field().size();
    let mut out = Vec::new();
    let mut a = vec![0u32; p.len()];
    loop {
        if a[0] != 0 {
            out.push(a.clone());
        }
        let mut j = 0;
        while j < a.len() {
            a[j] += 1;
            if a[j] < size {
                break;
            }
            a[j] = 0;
            j += 1;
        }
        if j == a.len() {
            return out;
        }
    }
}

#[test]
fn iota_is_a_ring_map() {
    for (q, n, h) in [(2, 2, 2), (2, 2, 3), (3, 2, 2)] {
        let p = RingParams::over(q, 1, n, h, 1).unwrap();
        let units = all_units(&p);
        for (i, a) in units.iter().enumerate().step_by(7) {
            let b = &units[(i * 31 + 5) % units.len()];
            let ab = p.mul_raw(a, b);
            assert_eq!(iota(&p, &ab), iota(&p, a).mul(&iota(&p, b)), "q={q} n={n} h={h} a={a:?} b={b:?}");
            assert_eq!(iota(&p, a), iota_via_varpi(&p, a));
            let f = p.field();
            assert_eq!(det_trunc(&iota(&p, &ab)), det_trunc(&iota(&p, a)).mul(f, &det_trunc(&iota(&p, b))));
        }
    }
}

#[test]
fn xh_enumeration_matches_elementwise_test() {
    // over F_16 = F_{q^{n s}} with s = 2, so not every principal unit lies in X_h
    let p = RingParams::over(2, 1, 2, 3, 2).unwrap();
    let direct = all_units(&p)
        .into_iter()
        .filter(|a| a[0] == 1 && in_xh(&TwistedElem::new(&p, a.clone()).unwrap()))
        .count();
    let one = xh_points(&p, 1 << 20, 1).unwrap().points;
    let three = xh_points(&p, 1 << 20, 3).unwrap().points;
    // 16^4 principal units; the pi and pi^2 coefficients of the determinant must lie in F_2
    assert_eq!(direct, 16usize.pow(4) / 8 / 8);
    assert_eq!(one.len(), direct);
    assert_eq!(one, three);
}

#[test]
fn size_limit_is_enforced() {
    let p = RingParams::over(2, 1, 2, 3, 1).unwrap();
    assert!(xh_points(&p, 100, 1).is_err());
}
