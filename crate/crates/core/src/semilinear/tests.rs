use super::*;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use proptest::prelude::*;

fn prog(start: u64, step: u64) -> SemilinearSet {
    SemilinearSet::progression(start, step).unwrap()
}

/// Membership bit-vector on `1..=limit` (index 0 unused).
fn bits(s: &SemilinearSet, limit: u64) -> Vec<bool> {
    (0..=limit).map(|n| n >= 1 && s.contains(n)).collect()
}

#[test]
fn membership_examples() {
    let s = prog(5, 2);
    assert!(s.contains(7));
    assert!(!s.contains(4));
    assert!(!s.contains(3));
    assert!(!s.contains(0));
    assert_eq!(s.progression_starts(), vec![5]);
    assert_eq!(s.modulus(), 2);
    assert!(s.finite_part().is_empty());
}

#[test]
fn complement_of_evens_is_odds() {
    let evens = prog(2, 2);
    let odds = evens.complement();
    assert_eq!(odds, prog(1, 2));
    assert_eq!(odds.to_string(), "(1 + 2N)");
}

#[test]
fn intersect_with_universe() {
    let a = prog(1, 2);
    assert_eq!(a.intersect(&SemilinearSet::universe()), a);
    assert_eq!(a.union(&SemilinearSet::empty()), a);
}

#[test]
fn shift_examples() {
    assert_eq!(prog(5, 2).shift_down(1), prog(4, 2));
    assert_eq!(SemilinearSet::finite([1, 3]).shift_down(1), SemilinearSet::finite([2]));
    assert_eq!(SemilinearSet::universe().shift_down(3), SemilinearSet::universe());
}

#[test]
fn finiteness_and_supremum() {
    let f = SemilinearSet::finite([1, 3, 5]);
    assert!(f.is_finite());
    assert_eq!(f.supremum(), Ok(Some(5)));
    assert!(!prog(5, 2).is_finite());
    assert_eq!(prog(5, 2).supremum(), Ok(None));
    assert!(SemilinearSet::empty().is_empty());
    assert_eq!(SemilinearSet::empty().supremum(), Err(SemilinearError::Empty));
}

#[test]
fn canonical_absorbs_and_minimizes() {
    // {3} ∪ (5 + 2N) is (3 + 2N); a redundant modulus 6 collapses to 2
    let a = SemilinearSet::from_parts([3], 6, 5, [5, 1, 3]);
    assert_eq!(a, prog(3, 2));
    assert_eq!(a.threshold(), 2);
    assert_eq!(a.progression_starts(), vec![3]);
    // {1} ∪ (4 + 2N) keeps 1 and starts at 4
    let b = SemilinearSet::from_parts([1], 2, 4, [0]);
    assert_eq!(b.to_string(), "{1} ∪ (4 + 2N)");
    assert_eq!(b.progression_starts(), vec![4]);
    // finite elements above the threshold that the progressions miss
    let c = SemilinearSet::from_parts([9], 2, 1, [0]);
    for n in 1..40 {
        assert_eq!(c.contains(n), n % 2 == 0 || n == 9);
    }
}

#[test]
fn rendering() {
    assert_eq!(SemilinearSet::empty().to_string(), "∅");
    assert_eq!(SemilinearSet::universe().to_string(), "(1 + 1N)");
    let s = SemilinearSet::finite([1, 3]).union(&prog(5, 2));
    assert_eq!(s, prog(1, 2));
    let t = SemilinearSet::finite([1, 2]).union(&prog(5, 3));
    assert_eq!(t.to_string(), "{1} ∪ (2 + 3N)");
    let u = SemilinearSet::finite([1, 3]).union(&prog(6, 3));
    assert_eq!(u.to_string(), "{1} ∪ (3 + 3N)");
}

#[test]
fn evidence_negation_swaps() {
    let e = EvidenceApprox::new(prog(1, 2), prog(5, 2));
    let n = e.negate();
    assert_eq!(n.over, prog(5, 2).complement());
    assert_eq!(n.under, prog(2, 2));
    assert_eq!(n.negate(), e);
}

prop_compose! {
    fn arb_set()(
        k in 1u64..=12,
        t in 1u64..=20,
        finite in proptest::collection::vec(1u64..30, 0..6),
        mask in any::<u16>(),
    ) -> SemilinearSet {
        let residues: Vec<u64> = (0..k).filter(|r| mask & (1 << r) != 0).collect();
        SemilinearSet::from_parts(finite, k, t, residues)
    }
}

/// Window that certifies equality for sets with these parameters.
fn window(a: &SemilinearSet, b: &SemilinearSet) -> u64 {
    let maxf = a
        .finite_part()
        .iter()
        .chain(b.finite_part())
        .copied()
        .max()
        .unwrap_or(0);
    10 * lcm(a.modulus(), b.modulus()) + maxf + a.threshold().max(b.threshold())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn ops_match_bitvector_oracle(a in arb_set(), b in arb_set(), by in 1u64..8) {
        let w = window(&a, &b) + by;
        let (ba, bb) = (bits(&a, w), bits(&b, w));
        let u = bits(&a.union(&b), w);
        let i = bits(&a.intersect(&b), w);
        let c = bits(&a.complement(), w);
        let s = bits(&a.shift_down(by), w - by);
        for n in 1..=w as usize {
            prop_assert_eq!(u[n], ba[n] || bb[n]);
            prop_assert_eq!(i[n], ba[n] && bb[n]);
            prop_assert_eq!(c[n], !ba[n]);
        }
        for n in 1..=(w - by) as usize {
            prop_assert_eq!(s[n], ba[n + by as usize]);
        }
    }

    #[test]
    fn canonical_form_is_unique(a in arb_set(), b in arb_set()) {
        // equal membership on the window implies equal representation
        let w = window(&a, &b);
        if bits(&a, w) == bits(&b, w) {
            prop_assert_eq!(&a, &b);
        }
        let again = SemilinearSet::from_parts(
            a.finite_part().iter().copied(), a.modulus(), a.threshold(), a.residues().iter().copied());
        prop_assert_eq!(&again, &a);
    }

    #[test]
    fn de_morgan(a in arb_set(), b in arb_set()) {
        prop_assert_eq!(a.union(&b).complement(), a.complement().intersect(&b.complement()));
        prop_assert_eq!(a.complement().complement(), a.clone());
    }

    #[test]
    fn canonical_invariants(a in arb_set()) {
        prop_assert!(a.residues().len() as u64 <= a.modulus());
        prop_assert!(a.finite_part().iter().all(|&n| n < a.threshold()));
        for s in a.progression_starts() {
            prop_assert!(s >= a.threshold() && s < a.threshold() + a.modulus());
        }
    }
}
