use std::collections::HashSet;

use ewm_core::ring::{RingContext, RingElement, RootChoice};
use ewm_core::system::{alphabet_lower_bound, locality_backmap, NumerationSystem};
use ewm_core::EwmError;
use num_complex::Complex64;
use proptest::prelude::*;

fn system(mp: &[i64], hint: RootChoice, base: &[i64], digits: &[&[i64]]) -> NumerationSystem {
    let ctx = RingContext::new(mp, hint).unwrap();
    let base = ctx.element(base).unwrap();
    let a = digits.iter().map(|c| ctx.element(c).unwrap()).collect();
    NumerationSystem::build(ctx, base, a, None, 1).unwrap().0
}

fn penney() -> NumerationSystem {
    system(&[1, 0, 1], RootChoice::Default, &[-1, 1], &[&[-1], &[0], &[1]])
}

fn eisenstein_integer() -> NumerationSystem {
    system(&[1, 1, 1], RootChoice::Default, &[-1, 1], &[&[-2], &[-1], &[0], &[1], &[2]])
}

fn block_strategy() -> impl Strategy<Value = (bool, usize, Vec<usize>)> {
    (any::<bool>(), 2usize..=3).prop_flat_map(|(which, k)| {
        (Just(which), Just(k), proptest::collection::vec(0usize..5, k..=4 * k))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// A k·n digit string read in blocks of k is a string over Ã in base β^k.
    #[test]
    fn blocking_preserves_values((which, k, picks) in block_strategy()) {
        let sys = if which { penney() } else { eisenstein_integer() };
        let (lifted, _) = sys.block_transform(k).unwrap();
        let ctx = sys.context();
        let a = sys.alphabet();
        let mut digits: Vec<RingElement> = picks.iter().map(|&i| a[i % a.len()].clone()).collect();
        while digits.len() % k != 0 {
            digits.push(ctx.zero());
        }
        let blocks: Vec<RingElement> = digits
            .chunks(k)
            .map(|c| NumerationSystem::horner(&sys, c))
            .collect();
        let lifted_digits: HashSet<&RingElement> = lifted.alphabet().iter().collect();
        for b in &blocks {
            prop_assert!(lifted_digits.contains(b));
        }
        prop_assert_eq!(lifted.horner(&blocks), sys.horner(&digits));
    }
}

#[test]
fn block_base_is_the_power() {
    for sys in [penney(), eisenstein_integer()] {
        let ctx = sys.context();
        for k in 1..=4 {
            let (lifted, report) = sys.block_transform(k).unwrap();
            let mut power = ctx.one();
            for _ in 0..k {
                power = ctx.mul(&power, sys.base());
            }
            assert_eq!(lifted.base(), &power);
            assert_eq!(report.block_length, k);
            let a = lifted.alphabet();
            assert!(a.windows(2).all(|w| w[0] < w[1]), "lifted alphabet sorted and duplicate free");
        }
    }
}

#[test]
fn lower_bound_does_not_depend_on_the_embedding() {
    let cases: [(&[i64], &[i64], &[Complex64]); 3] = [
        (&[-2, 0, 1], &[0, 1], &[Complex64::new(1.4, 0.0), Complex64::new(-1.4, 0.0)]),
        (&[1, 1, 1], &[-1, 1], &[Complex64::new(-0.5, 0.87), Complex64::new(-0.5, -0.87)]),
        (&[-2, 0, 0, 1], &[0, 1, 0], &[Complex64::new(1.26, 0.0), Complex64::new(-0.63, 1.09), Complex64::new(-0.63, -1.09)]),
    ];
    for (mp, base, hints) in cases {
        let bounds: HashSet<u64> = hints
            .iter()
            .map(|&h| {
                let ctx = RingContext::new(mp, RootChoice::Near(h)).unwrap();
                let b = ctx.element(base).unwrap();
                alphabet_lower_bound(&ctx, &b).unwrap()
            })
            .collect();
        assert_eq!(bounds.len(), 1, "{mp:?}");
    }
}

#[test]
fn published_systems_are_eligible() {
    let sqrt2 = RootChoice::Near(Complex64::new(1.4, 0.0));
    let cases: Vec<(&[i64], RootChoice, &[i64], Vec<&[i64]>)> = vec![
        (&[-3, 1], RootChoice::Default, &[3], vec![&[-2], &[-1], &[0], &[1], &[2]]),
        (&[-2, 1], RootChoice::Default, &[2], vec![&[-1], &[0], &[1]]),
        (&[3, 1], RootChoice::Default, &[-3], vec![&[-1], &[0], &[1], &[2]]),
        (&[-2, 0, 1], sqrt2, &[0, 1], vec![&[0], &[1], &[2]]),
        (&[4, 0, 1], RootChoice::Default, &[0, 1], vec![&[-2], &[-1], &[0], &[1], &[2]]),
        (&[2, 0, 1], RootChoice::Default, &[0, 1], vec![&[-1], &[0], &[1]]),
        (&[1, 0, 1], RootChoice::Default, &[-1, 1], vec![&[-2], &[-1], &[0], &[1], &[2]]),
        (&[1, 1, 1], RootChoice::Default, &[-1, 1], vec![&[0, 0], &[1, 0], &[-1, 0], &[0, 1], &[0, -1], &[1, 1], &[-1, -1]]),
    ];
    for (mp, hint, base, digits) in cases {
        let ctx = RingContext::new(mp, hint).unwrap();
        let b = ctx.element(base).unwrap();
        let a = digits.iter().map(|c| ctx.element(c).unwrap()).collect();
        let (_, report) = NumerationSystem::build(ctx, b, a, None, 1).unwrap();
        assert!(report.expanding);
        assert!(report.classes_mod_base.complete());
    }
}

#[test]
fn non_expanding_bases_are_ineligible() {
    let ctx = RingContext::new(&[-1, -1, 1], RootChoice::Near(Complex64::new(1.6, 0.0))).unwrap();
    let a = vec![ctx.integer(0), ctx.integer(1)];
    let r = NumerationSystem::build(ctx.clone(), ctx.omega(), a, None, 1);
    assert!(matches!(r, Err(EwmError::Ineligible(_))));
}

#[test]
fn backmap_positions_sum_to_the_window() {
    for k in 1..=4 {
        for p in 1..=8 {
            for l in locality_backmap(k, p) {
                assert_eq!(l.memory + l.anticipation + 1, k * p);
            }
        }
    }
}
