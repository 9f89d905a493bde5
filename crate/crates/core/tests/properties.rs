//! Property tests for the algebraic laws: `∝` versus supports, additivity
//! and functoriality of morphisms, enumeration stability, and witness
//! re-verification on randomized instances.

use proptest::prelude::*;

use refinemon::divisibility::weak_divide;
use refinemon::oracle::{FreeOracle, MonoidOracle, OracleElem};
use refinemon::simplicial::{Element, Morphism};
use refinemon::{nat, Nat};

type E = Element<Nat>;
type M = Morphism<Nat>;

fn elem(coords: &[u64]) -> E {
    E::new(coords.iter().map(|&c| nat(c)).collect())
}

fn vec_strategy(rank: usize, max: u64) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0..=max, rank)
}

proptest! {
    // propto is present exactly when supports are nested, and agrees with
    // the brute-force scan of n in 0..=Σx_i.
    #[test]
    fn propto_matches_supports_and_brute_force(
        (xs, ys) in (1usize..=6).prop_flat_map(|r| (vec_strategy(r, 9), vec_strategy(r, 9)))
    ) {
        let x = elem(&xs);
        let y = elem(&ys);
        let got = x.propto(&y).unwrap();
        prop_assert_eq!(got.is_some(), x.support().is_subset(&y.support()));
        let bound: u64 = xs.iter().sum();
        let brute = (0..=bound).map(nat).find(|n| x.le(&y.scale(n)).unwrap());
        prop_assert_eq!(got, brute);
    }

    #[test]
    fn apply_is_additive(
        (cols, xs, ys) in (1usize..=3, 1usize..=3).prop_flat_map(|(src, dst)| (
            prop::collection::vec(vec_strategy(dst, 3), src),
            vec_strategy(src, 3),
            vec_strategy(src, 3),
        ))
    ) {
        let f = M::new(cols[0].len(), cols.iter().map(|c| elem(c)).collect()).unwrap();
        let x = elem(&xs);
        let y = elem(&ys);
        let lhs = f.apply(&x.add(&y).unwrap()).unwrap();
        let rhs = f.apply(&x).unwrap().add(&f.apply(&y).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn composition_is_functorial(
        (f_cols, g_cols, xs) in (1usize..=3, 1usize..=3, 1usize..=3).prop_flat_map(|(a, b, c)| (
            prop::collection::vec(vec_strategy(b, 4), a),
            prop::collection::vec(vec_strategy(c, 4), b),
            vec_strategy(a, 4),
        ))
    ) {
        let f = M::new(f_cols[0].len(), f_cols.iter().map(|c| elem(c)).collect()).unwrap();
        let g = M::new(g_cols[0].len(), g_cols.iter().map(|c| elem(c)).collect()).unwrap();
        let gf = M::compose(&g, &f).unwrap();
        let x = elem(&xs);
        prop_assert_eq!(gf.apply(&x).unwrap(), g.apply(&f.apply(&x).unwrap()).unwrap());
    }

    #[test]
    fn enumeration_is_prefix_stable(rank in 0usize..=3, k in 0usize..30) {
        let o = FreeOracle::new(rank);
        let shorter = o.enumerate(k);
        let longer = o.enumerate(k + 1);
        prop_assert!(longer.len() >= shorter.len());
        prop_assert_eq!(&longer[..shorter.len()], &shorter[..]);
    }

    // Refinement witnesses re-verify their four defining equations.
    #[test]
    fn refine_reverifies_over_free_monoids(
        (x1, x2, y1) in (1usize..=3).prop_flat_map(|r| (
            vec_strategy(r, 9),
            vec_strategy(r, 9),
            vec_strategy(r, 9),
        ))
    ) {
        let rank = x1.len();
        let o = FreeOracle::new(rank);
        // Force x1+x2 = y1+y2 by clamping y1 below the total.
        let total: Vec<u64> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();
        let y1: Vec<u64> = y1.iter().zip(&total).map(|(a, t)| *a.min(t)).collect();
        let y2: Vec<u64> = total.iter().zip(&y1).map(|(t, a)| t - a).collect();
        let (e1, e2) = (OracleElem::from_u64s(&x1), OracleElem::from_u64s(&x2));
        let (f1, f2) = (OracleElem::from_u64s(&y1), OracleElem::from_u64s(&y2));
        let z = o.refine(&e1, &e2, &f1, &f2).unwrap();
        prop_assert!(o.eq_elem(&o.add(&z[0][0], &z[0][1]).unwrap(), &e1).unwrap());
        prop_assert!(o.eq_elem(&o.add(&z[1][0], &z[1][1]).unwrap(), &e2).unwrap());
        prop_assert!(o.eq_elem(&o.add(&z[0][0], &z[1][0]).unwrap(), &f1).unwrap());
        prop_assert!(o.eq_elem(&o.add(&z[0][1], &z[1][1]).unwrap(), &f2).unwrap());
    }

    // Riesz witnesses re-verify both defining identities.
    #[test]
    fn riesz_reverifies_over_naturals(y in 1u64..=9, n in 1usize..=6, frac in 0.0f64..=1.0) {
        let o = FreeOracle::naturals();
        let x = ((n as u64 * y) as f64 * frac).floor() as u64;
        let parts = o
            .riesz_decompose(&OracleElem::from_u64s(&[x]), &OracleElem::from_u64s(&[y]), n)
            .unwrap();
        let mut weighted = o.zero();
        let mut total = o.zero();
        for (j, p) in parts.iter().enumerate() {
            weighted = o.add(&weighted, &o.scale(&nat(j as u64), p).unwrap()).unwrap();
            total = o.add(&total, p).unwrap();
        }
        prop_assert!(o.eq_elem(&weighted, &OracleElem::from_u64s(&[x])).unwrap());
        prop_assert!(o.eq_elem(&total, &OracleElem::from_u64s(&[y])).unwrap());
    }

    // Every certificate weak_divide returns re-validates exactly.
    #[test]
    fn weak_divide_certificates_validate(x in 0u64..=80, pick in 0usize..4) {
        let targets: &[&[u64]] = &[&[2, 3], &[3, 4, 5], &[5, 7], &[4, 6]];
        let targets = targets[pick];
        let o = FreeOracle::naturals();
        if let Ok(cert) = weak_divide(&o, &OracleElem::from_u64s(&[x]), targets) {
            prop_assert!(cert.verify(&o).unwrap());
            prop_assert_eq!(cert.targets.as_slice(), targets);
        }
    }
}
