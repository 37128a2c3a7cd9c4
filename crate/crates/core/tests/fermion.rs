//! Ramond Fock space against its generating function.

mod common;

use common::fermion_series;
use loop_index::fermion::{check_car, check_car_range, ramond_fock, ramond_vacuum_index};
use proptest::prelude::*;

#[test]
fn series_oracle_sanity() {
    // six Majorana towers: 1, 6, 21, 62, 162, ...
    assert_eq!(fermion_series(6, 5), vec![1, 6, 21, 62, 162, 384]);
}

#[test]
fn graded_dimensions_match_generating_function() {
    let cutoff = 5;
    let fs = ramond_fock(3, cutoff).unwrap();
    let p = fermion_series(6, cutoff as usize);
    for e in 0..=cutoff {
        let states: Vec<usize> = (0..fs.dim()).filter(|&i| fs.states[i].energy == e).collect();
        assert_eq!(states.len() as u64, 8 * p[e as usize], "energy {e}");
        let even = states.iter().filter(|&&i| fs.grading[i] == 1).count();
        // the zero-mode Clifford module splits evenly at every energy
        assert_eq!(2 * even, states.len(), "energy {e}");
    }
}

#[test]
fn lowest_energy_space() {
    let fs = ramond_fock(3, 3).unwrap();
    let lowest: Vec<usize> = (0..fs.dim()).filter(|&i| fs.l0(i) == 3.0 / 8.0).collect();
    assert_eq!(lowest.len(), 8);
    assert_eq!(lowest.iter().filter(|&&i| fs.grading[i] == 1).count(), 4);
    assert_eq!((0..fs.dim()).map(|i| fs.l0(i)).fold(f64::INFINITY, f64::min), 3.0 / 8.0);
    for choice in 0..2 {
        let v = ramond_vacuum_index(&fs, choice).unwrap();
        assert!(lowest.contains(&v) && fs.grading[v] == 1);
    }
}

#[test]
fn heat_trace_matches_generating_function() {
    // Tr e^{-t L0} on the truncation equals the truncated series 2^d q^{d/8} prod (1+q^n)^{2d}
    let cutoff = 6;
    let fs = ramond_fock(3, cutoff).unwrap();
    let p = fermion_series(6, cutoff as usize);
    for t in [0.5f64, 1.0, 2.0] {
        let q = (-t).exp();
        let oracle: f64 = 8.0 * q.powf(3.0 / 8.0) * p.iter().enumerate().map(|(e, &c)| c as f64 * q.powi(e as i32)).sum::<f64>();
        let got = fs.partition_function(t);
        assert!((got - oracle).abs() < 1e-9 * oracle, "t={t}: {got} vs {oracle}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn car_holds_for_small_spaces(d in 1usize..=3, cutoff in 0u32..=3) {
        let fs = ramond_fock(d, cutoff).unwrap();
        prop_assert!(check_car(&fs) < 1e-12);
        prop_assert!(check_car_range(&fs, cutoff.min(1)) < 1e-12);
        let p = fermion_series(2 * d, cutoff as usize);
        let zero = 1u64 << d;
        prop_assert_eq!(fs.dim() as u64, zero * p.iter().sum::<u64>());
        let even = fs.grading.iter().filter(|&&g| g == 1).count();
        prop_assert_eq!(2 * even, fs.dim());
    }
}
