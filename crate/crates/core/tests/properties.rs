use proptest::prelude::*;
use pyics_core::diagnostics::{density_summary, deviance, ess, DevianceMode, Grid};
use pyics_core::model::{Atom, Dataset};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normal_kernel_is_symmetric(x in -50.0..50.0f64, m in -50.0..50.0f64, v in 0.01..20.0f64) {
        let a = Atom::normal(m, v).unwrap().ln_density(&[x]);
        let b = Atom::normal(x, v).unwrap().ln_density(&[m]);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn ess_ignores_affine_maps(
        trace in prop::collection::vec(-10.0..10.0f64, 20..200),
        scale in 0.1..100.0f64,
        shift in -1e3..1e3f64,
    ) {
        prop_assume!(trace.iter().any(|&x| (x - trace[0]).abs() > 1e-6));
        let mapped: Vec<f64> = trace.iter().map(|x| scale * x + shift).collect();
        let (a, b) = (ess(&trace).unwrap(), ess(&mapped).unwrap());
        prop_assert!((a - b).abs() <= 1e-6 * a, "{} vs {}", a, b);
    }

    #[test]
    fn deviance_ignores_cluster_order(
        clusters in prop::collection::vec((1usize..20, -5.0..5.0f64, 0.1..4.0f64), 1..6),
        xs in prop::collection::vec(-8.0..8.0f64, 1..30),
        rotate in 0usize..6,
    ) {
        let data = Dataset::univariate(xs).unwrap();
        let counts: Vec<usize> = clusters.iter().map(|c| c.0).collect();
        let atoms: Vec<Atom> = clusters.iter().map(|c| Atom::normal(c.1, c.2).unwrap()).collect();
        let k = counts.len();
        let r = rotate % k;
        let mut c2 = counts.clone();
        let mut a2 = atoms.clone();
        c2.rotate_left(r);
        a2.rotate_left(r);
        c2.reverse();
        a2.reverse();
        let d1 = deviance(&counts, &atoms, &data, DevianceMode::Log).unwrap();
        let d2 = deviance(&c2, &a2, &data, DevianceMode::Log).unwrap();
        prop_assert!((d1 - d2).abs() <= 1e-9 * d1.abs().max(1.0));
    }

    #[test]
    fn summary_mean_is_the_arithmetic_mean(
        rows in prop::collection::vec(prop::collection::vec(0.0..5.0f64, 4), 2..20),
        level in 0.05..0.99f64,
    ) {
        let grid = Grid::line(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let s = density_summary(&grid, &rows, level).unwrap();
        for j in 0..4 {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64;
            prop_assert_eq!(s.mean[j], mean);
            prop_assert!(s.lower[j] <= s.mean[j] && s.mean[j] <= s.upper[j]);
        }
    }
}
