use super::*;
use crate::bench;
use crate::matcore::{random_matrix, random_unitary};
use alloc::vec::Vec;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn unit(d: usize, i: usize, j: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |a, b| if a == i && b == j { c(1.0) } else { ZERO })
}

/// `|i+1⟩⟨i|` cyclically on `C^3`: irreducible with period 3.
fn cyclic3() -> KrausSet {
    KrausSet::new((0..3).map(|i| unit(3, (i + 1) % 3, i)).collect()).unwrap()
}

/// Random trace-preserving Kraus set with `n` operators of size `d`.
fn random_cptp(rng: &mut ChaCha8Rng, d: usize, n: usize) -> KrausSet {
    let u = random_unitary(rng, d * n);
    let mats = (0..n)
        .map(|k| CMatrix::from_fn(d, d, |i, j| u[(k * d + i, j)]))
        .collect();
    KrausSet::new(mats).unwrap()
}

fn direct_trace(k: &KrausSet, n: u64) -> C64 {
    liouville_matrix(k).pow(n).unwrap().trace().unwrap()
}

#[test]
fn closure_stays_in_a_block() {
    let s = bench::two_block_family();
    let u = bench::two_block_basis();
    // first column of U lies in the first block
    let sub = minimal_invariant_subspace(s.kraus(), &u.column(0)).unwrap();
    assert_eq!(sub.cols(), 2);
    assert!(invariance_defect(s.kraus(), &sub) < 1e-12);
    let generic: Vec<C64> = (0..4).map(|i| c(1.0 + i as f64)).collect();
    assert_eq!(minimal_invariant_subspace(s.kraus(), &generic).unwrap().cols(), 4);
    assert_eq!(
        minimal_invariant_subspace(s.kraus(), &[ZERO; 4]).unwrap_err(),
        SpectralError::ZeroSeed
    );
}

#[test]
fn two_block_periods() {
    let d = decompose(bench::two_block_family().kraus()).unwrap();
    assert_eq!(d.components.len(), 2);
    assert_eq!(d.kappa, 2);
    let mut periods: Vec<(u32, usize)> = d.components.iter().map(|c| (c.period, c.dim())).collect();
    periods.sort();
    assert_eq!(periods, [(1, 2), (2, 2)]);
    for comp in &d.components {
        assert!((comp.radius - 1.0).abs() < 1e-10);
        assert!(!comp.degenerate);
        let want = if comp.period == 1 { 1.0 / 3.0 } else { 0.0 };
        assert!((comp.second_radius - want).abs() < 1e-8, "{}", comp.second_radius);
        for (l, v) in comp.peripheral_values().iter().enumerate() {
            let w = C64::from_polar(1.0, TAU * l as f64 / comp.period as f64);
            assert!((v - w).norm() < 1e-8);
        }
    }
    for n in 1..12u64 {
        let want = 2.0 + (-1f64).powi(n as i32) + 3.0 * (-1.0f64 / 3.0).powi(n as i32);
        assert!((d.trace_power(n).re - want).abs() < 1e-10);
    }
}

#[test]
fn cyclic_channel_has_period_three() {
    let k = cyclic3();
    let d = decompose(&k).unwrap();
    assert_eq!(d.components.len(), 1);
    assert_eq!(d.components[0].period, 3);
    assert_eq!(d.kappa, 3);
    let trace = |n: u64| Ok(direct_trace(&k, n));
    assert_eq!(detect_period(&trace, 1.0, 0.0, 9).unwrap(), 3);
    assert!((spectral_radius(&k).unwrap() - 1.0).abs() < 1e-9);
    assert!(second_radius(&k, &d.components[0].peripheral_pairs).unwrap() < 1e-8);
}

#[test]
fn detect_period_rejects_aperiodic_sequences() {
    // an irrational rotation never settles
    let trace = |n: u64| Ok(c(1.0) + C64::from_polar(1.0, 2.0 * n as f64));
    assert!(matches!(
        detect_period(&trace, 1.0, 0.0, 6),
        Err(SpectralError::Period { .. })
    ));
    assert_eq!(
        detect_period(&trace, 0.0, 0.0, 6).unwrap_err(),
        SpectralError::ZeroRadius
    );
}

#[test]
fn trace_identity_needs_cross_sectors() {
    let f = bench::dichotomy_tensors();
    let d = decompose(f.kraus()).unwrap();
    let m = d.components.len();
    assert!(m >= 2);
    let mut cross_matters = false;
    for n in 1..9u64 {
        let direct = direct_trace(f.kraus(), n);
        let mut sectors = ZERO;
        let mut diagonal = ZERO;
        for i in 0..m {
            for j in 0..m {
                let t = d.sector_matrix(i, j).pow(n).unwrap().trace().unwrap();
                sectors += t;
                if i == j {
                    diagonal += t;
                }
            }
        }
        assert!((direct - sectors).norm() < 1e-9 * (1.0 + direct.norm()));
        assert!((direct - d.trace_power(n)).norm() < 1e-9 * (1.0 + direct.norm()));
        cross_matters |= (direct - diagonal).norm() > 1e-3;
    }
    assert!(cross_matters);
}

#[test]
fn decomposition_is_unitarily_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base = bench::two_block_family();
    let u = random_unitary(&mut rng, 4);
    let rotated = base.kraus().conjugate_by(&u).unwrap();
    let a = decompose(base.kraus()).unwrap();
    let b = decompose(&rotated).unwrap();
    let summary = |d: &Decomposition| {
        let mut v: Vec<(usize, u32)> = d.components.iter().map(|c| (c.dim(), c.period)).collect();
        v.sort();
        v
    };
    assert_eq!(summary(&a), summary(&b));
    for n in 1..10 {
        assert!((a.trace_power(n) - b.trace_power(n)).norm() < 1e-9);
    }
}

#[test]
fn seeds_do_not_change_the_decomposition() {
    let f = bench::dichotomy_tensors();
    let base = decompose(f.kraus()).unwrap();
    for seed in 1..6 {
        let d = decompose_with(f.kraus(), DecomposeOptions { seed }).unwrap();
        assert_eq!(d.components.len(), base.components.len());
        assert_eq!(d.kappa, base.kappa);
        for n in 1..8 {
            assert!((d.trace_power(n) - base.trace_power(n)).norm() < 1e-9);
        }
    }
}

#[test]
fn random_channels_have_root_of_unity_peripheries() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let d = 2 + trial % 3;
        let n = 1 + trial % 3;
        let k = random_cptp(&mut rng, d, n);
        let dec = decompose(&k).unwrap();
        for comp in dec.components.iter().filter(|c| c.radius > 0.0) {
            let p = comp.period as usize;
            assert!(p <= comp.dim() * comp.dim());
            for (l, v) in comp.peripheral_values().iter().enumerate() {
                let w = C64::from_polar(comp.radius, TAU * l as f64 / p as f64);
                assert!((v - w).norm() <= 1e-7 * comp.radius, "trial {trial}: {v} vs {w}");
            }
        }
    }
}

#[test]
fn block_diagonal_random_sets_split() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = random_unitary(&mut rng, 5);
    let mats = (0..3)
        .map(|_| {
            let a = random_matrix(&mut rng, 2, 2);
            let b = random_matrix(&mut rng, 3, 3);
            let blk = bench::direct_sum(&a, &b);
            u.matmul(&blk).unwrap().matmul(&u.adjoint()).unwrap()
        })
        .collect();
    let k = KrausSet::new(mats).unwrap();
    let d = decompose(&k).unwrap();
    let mut dims: Vec<usize> = d.components.iter().map(|c| c.dim()).collect();
    dims.sort();
    assert_eq!(dims, [2, 3]);
    for comp in &d.components {
        assert!(invariance_defect(&k, &comp.basis) < 1e-8 * k.stacked_norm());
    }
    for n in 1..6 {
        let direct = direct_trace(&k, n);
        assert!((direct - d.trace_power(n)).norm() < 1e-8 * (1.0 + direct.norm()));
    }
}

#[test]
fn tail_bound_dominates_subleading_part() {
    let f = bench::two_block_family();
    let d = decompose(f.kraus()).unwrap();
    for n in 1..40u64 {
        let sub = 3.0 * (1.0f64 / 3.0).powi(n as i32);
        assert!(sub <= tail_bound(&d, 1.0, n));
    }
    assert!(tail_bound(&d, 1.0, 0) >= 3.0);
}

#[test]
fn matrix_free_agrees_with_dense_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let k = random_cptp(&mut rng, 3, 2);
    let dense = eigenvalues(&liouville_matrix(&k))
        .unwrap()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    assert!((spectral_radius(&k).unwrap() - dense).abs() < 1e-8);
}
