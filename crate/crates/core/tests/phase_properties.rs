use std::collections::HashSet;

use ewm_core::phase1::{run_phase1, verify_fixpoint, Phase1Method, DEFAULT_MAX_ITER};
use ewm_core::phase2::{run_phase2, window_sets, NonConvergence, Phase2Method, Phase2Options, Phase2Outcome};
use ewm_core::ring::{RingContext, RingElement, RootChoice};
use ewm_core::system::NumerationSystem;
use ewm_core::table::{export_csv, WeightFunction};
use num_complex::Complex64;

fn system(mp: &[i64], hint: RootChoice, base: &[i64], digits: &[&[i64]]) -> NumerationSystem {
    let ctx = RingContext::new(mp, hint).unwrap();
    let base = ctx.element(base).unwrap();
    let a = digits.iter().map(|c| ctx.element(c).unwrap()).collect();
    NumerationSystem::build(ctx, base, a, None, 1).unwrap().0
}

fn small_systems() -> Vec<(&'static str, NumerationSystem)> {
    vec![
        ("binary", system(&[-2, 1], RootChoice::Default, &[2], &[&[-1], &[0], &[1]])),
        ("negative ternary", system(&[3, 1], RootChoice::Default, &[-3], &[&[-1], &[0], &[1], &[2]])),
        ("sqrt2", system(&[-2, 0, 1], RootChoice::Near(Complex64::new(1.4, 0.0)), &[0, 1], &[&[0], &[1], &[2]])),
        ("i sqrt2", system(&[2, 0, 1], RootChoice::Default, &[0, 1], &[&[-1], &[0], &[1]])),
        (
            "eisenstein",
            system(&[1, 1, 1], RootChoice::Default, &[-1, 1], &[&[0, 0], &[1, 0], &[-1, 0], &[0, 1], &[0, -1], &[1, 1], &[-1, -1]]),
        ),
    ]
}

fn methods() -> [(Phase1Method, Phase2Method); 4] {
    [
        (Phase1Method::Abs, Phase2Method::Gravity),
        (Phase1Method::BetaNorm, Phase2Method::Gravity),
        (Phase1Method::Abs, Phase2Method::BetaNorm),
        (Phase1Method::BetaNorm, Phase2Method::BetaNorm),
    ]
}

fn converge(sys: &NumerationSystem, q: &[RingElement], m2: Phase2Method) -> WeightFunction {
    match run_phase2(sys, q, &Phase2Options { method: m2, ..Default::default() }).unwrap() {
        Phase2Outcome::Converged(r) => r.weight_function,
        Phase2Outcome::NonConvergent { witness, .. } => panic!("{witness}"),
    }
}

#[test]
fn phase1_grows_strictly_then_stops() {
    for (name, sys) in small_systems() {
        for m in [Phase1Method::Abs, Phase1Method::BetaNorm] {
            let q = run_phase1(&sys, m, DEFAULT_MAX_ITER).unwrap();
            let h = &q.history;
            assert!(h.len() >= 2, "{name}");
            assert!(h[0] > 1, "{name}: Q_1 strictly contains Q_0 = {{0}}");
            assert!(h[..h.len() - 1].windows(2).all(|w| w[0] < w[1]), "{name}: {h:?}");
            assert_eq!(h[h.len() - 1], h[h.len() - 2], "{name}");
            assert_eq!(*h.last().unwrap(), q.elements.len());
            assert_eq!(q.iterations, h.len());
        }
    }
}

#[test]
fn phase1_fixpoint_and_bound() {
    for (name, sys) in small_systems() {
        for m in [Phase1Method::Abs, Phase1Method::BetaNorm] {
            let q = run_phase1(&sys, m, DEFAULT_MAX_ITER).unwrap();
            assert_eq!(verify_fixpoint(&sys, &q.elements), Ok(()), "{name}");
            assert!(q.elements.contains(&sys.context().zero()));
            let bound = sys.weight_bound();
            for x in &q.elements {
                assert!(sys.context().beta_norm(x) <= bound + 1e-9, "{name}: {x}");
            }
            let again = run_phase1(&sys, m, DEFAULT_MAX_ITER).unwrap();
            assert_eq!(again.elements, q.elements);
        }
    }
}

#[test]
fn fixpoint_check_finds_gaps() {
    let (_, sys) = &small_systems()[0];
    let zero_only = vec![sys.context().zero()];
    assert!(verify_fixpoint(sys, &zero_only).is_err());
}

/// Nesting Q_w ⊆ Q_prefix, covering of every carry by some q ∈ Q_w, and
/// stability of singletons, checked on every window of the first levels.
#[test]
fn window_set_invariants() {
    for (name, sys) in small_systems() {
        let nb = sys.input_alphabet().len();
        let levels = if nb > 10 { 2 } else { 4 };
        for (m1, m2) in methods() {
            let q = run_phase1(&sys, m1, DEFAULT_MAX_ITER).unwrap().elements;
            let ctx = sys.context();
            let a: HashSet<&RingElement> = sys.alphabet().iter().collect();
            let b = sys.input_alphabet();
            let covers = |w0: usize, qc: usize, qi: usize| a.contains(&(&(&b[w0] + &q[qc]) - &ctx.mul(sys.base(), &q[qi])));
            let sets = window_sets(&sys, &q, m2, levels).unwrap();
            let all: Vec<usize> = (0..q.len()).collect();
            for (k, level) in sets.iter().enumerate() {
                let stride = nb.pow(k as u32);
                for (idx, set) in level.iter().enumerate() {
                    assert!(!set.is_empty(), "{name}: empty set");
                    let w0 = idx / stride;
                    let (prefix, carry) = if k == 0 { (&all, &all) } else { (&sets[k - 1][idx / nb], &sets[k - 1][idx % stride]) };
                    assert!(set.iter().all(|x| prefix.contains(x)), "{name}: nesting at level {k}");
                    for &qc in carry {
                        assert!(set.iter().any(|&qi| covers(w0, qc, qi)), "{name}: covering at level {k}");
                    }
                    if k > 0 && prefix.len() == 1 {
                        assert_eq!(set, prefix, "{name}: stability at level {k}");
                    }
                }
            }
        }
    }
}

fn brute_force_valid(wf: &WeightFunction) -> bool {
    let sys = wf.system();
    let b = sys.input_alphabet();
    let a: HashSet<&RingElement> = sys.alphabet().iter().collect();
    let r = wf.memory();
    let nb = b.len();
    let total = nb.pow(r as u32 + 1);
    (0..total).all(|mut idx| {
        let mut w = vec![b[0].clone(); r + 1];
        for slot in w.iter_mut().rev() {
            *slot = b[idx % nb].clone();
            idx /= nb;
        }
        let q_now = wf.lookup(&w[..r]).unwrap();
        let q_before = wf.lookup(&w[1..]).unwrap();
        let z = &(&w[0] + q_before) - &sys.context().mul(sys.base(), q_now);
        a.contains(&z)
    })
}

#[test]
fn finalized_tables_pass_the_brute_force_oracle() {
    for (name, sys) in small_systems() {
        for (m1, m2) in methods() {
            let q = run_phase1(&sys, m1, DEFAULT_MAX_ITER).unwrap();
            let wf = converge(&sys, &q.elements, m2);
            assert!(wf.zero_window_is_zero(), "{name}");
            assert!(brute_force_valid(&wf), "{name} {m1}/{m2}");
            assert!(wf.check_validity(1 << 30, 0).passed(), "{name} {m1}/{m2}");
        }
    }
}

#[test]
fn output_is_independent_of_thread_count() {
    for (name, sys) in small_systems() {
        let q = run_phase1(&sys, Phase1Method::BetaNorm, DEFAULT_MAX_ITER).unwrap();
        let csv = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let q1 = run_phase1(&sys, Phase1Method::BetaNorm, DEFAULT_MAX_ITER).unwrap();
                assert_eq!(q1.elements, q.elements);
                export_csv(&converge(&sys, &q1.elements, Phase2Method::Gravity))
            })
        };
        assert_eq!(csv(1), csv(4), "{name}");
    }
}

/// A failing constant-digit check means the constant windows of that digit
/// never shrink to a singleton on the levels we can afford to enumerate.
#[test]
fn constant_digit_failures_never_resolve() {
    let knuth = system(&[4, 0, 1], RootChoice::Default, &[0, 1], &[&[0, 0], &[1, 1], &[-1, -1], &[2, -1], &[-2, 1]]);
    let q = run_phase1(&knuth, Phase1Method::BetaNorm, DEFAULT_MAX_ITER).unwrap().elements;
    let outcome = run_phase2(&knuth, &q, &Phase2Options::default()).unwrap();
    let Phase2Outcome::NonConvergent { witness: NonConvergence::ConstantDigit { digit, .. }, .. } = outcome else {
        panic!("expected a constant digit witness");
    };
    let b = knuth.input_alphabet();
    let bi = b.iter().position(|x| x.to_string() == digit).unwrap();
    let nb = b.len();
    let sets = window_sets(&knuth, &q, Phase2Method::Gravity, 4).unwrap();
    for (k, level) in sets.iter().enumerate() {
        let idx = (0..=k).fold(0, |acc, _| acc * nb + bi);
        assert!(level[idx].len() >= 2, "level {k}");
    }
}
