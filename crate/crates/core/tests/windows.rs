use proptest::prelude::*;
use szlab_core::window::{apply_window, build_window, node_distance, solve_diagonal_threshold, solve_gaussian_sigma};
use szlab_core::{Tensor, WindowKind, WindowSpec};

/// Distance from `(i, j)` to the line through the origin with slope `n_y / n_x`,
/// via orthogonal projection.
fn projected_distance(i: usize, j: usize, n_x: usize, n_y: usize) -> f64 {
    let r = n_y as f64 / n_x as f64;
    let (x, y) = (i as f64, j as f64);
    let t = (x + r * y) / (1.0 + r * r);
    (x - t).hypot(y - r * t)
}

/// Number of elements sharing the k-th smallest distance, from a float sort.
fn tie_group_at_threshold(n_x: usize, n_y: usize, rho: f64) -> usize {
    let mut d: Vec<f64> = (0..n_x)
        .flat_map(|i| (0..n_y).map(move |j| projected_distance(i, j, n_x, n_y)))
        .collect();
    d.sort_by(f64::total_cmp);
    let k = (((1.0 - rho) * d.len() as f64).round() as usize).clamp(1, d.len());
    let t = d[k - 1];
    d.iter().filter(|&&x| (x - t).abs() <= 1e-9 * (1.0 + t)).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_matches_projection(n_x in 1usize..300, n_y in 1usize..300, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let i = (a * n_x as f64) as usize;
        let j = (b * n_y as f64) as usize;
        let got = node_distance(i, j, n_x, n_y);
        let want = projected_distance(i, j, n_x, n_y);
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want), "{got} vs {want}");
    }

    #[test]
    fn diagonal_windows_nest(n_x in 2usize..80, n_y in 2usize..80, lo in 0.0f64..0.95, step in 0.0f64..0.5) {
        let hi = (lo + step).min(0.99);
        let small = build_window(&WindowSpec::new(WindowKind::Diagonal, hi), n_x, n_y).unwrap();
        let large = build_window(&WindowSpec::new(WindowKind::Diagonal, lo), n_x, n_y).unwrap();
        for (s, l) in small.values().iter().zip(large.values()) {
            prop_assert!(s <= l);
        }
        prop_assert!(small.achieved_reduction() >= large.achieved_reduction());
    }

    #[test]
    fn scaled_window_preserves_total_scale(
        kind in prop::sample::select(vec![WindowKind::Diagonal, WindowKind::Gaussian, WindowKind::Stripe, WindowKind::Centered, WindowKind::Random]),
        n_x in 2usize..40,
        n_y in 2usize..40,
        rho in 0.05f64..0.6,
        seed in any::<u64>(),
    ) {
        let w = build_window(&WindowSpec::new(kind, rho).with_seed(seed), n_x, n_y).unwrap();
        let ones = Tensor::<f64>::filled(&[n_x, n_y], 1.0);
        let scaled = apply_window(&ones, &w).unwrap();
        let n = (n_x * n_y) as f64;
        prop_assert!((scaled.sum() - n).abs() < 1e-9 * n);
    }

    #[test]
    fn binary_windows_hit_target(
        n_x in 64usize..160,
        n_y in 64usize..160,
        rho in 0.02f64..0.95,
        seed in any::<u64>(),
    ) {
        let random = build_window(&WindowSpec::new(WindowKind::Random, rho).with_seed(seed), n_x, n_y).unwrap();
        prop_assert!((random.achieved_reduction() - rho).abs() <= 0.005);

        let diag = build_window(&WindowSpec::new(WindowKind::Diagonal, rho), n_x, n_y).unwrap();
        let allowance = tie_group_at_threshold(n_x, n_y, rho) as f64 / (n_x * n_y) as f64;
        prop_assert!((diag.achieved_reduction() - rho).abs() <= 0.005 + allowance);

        if n_x >= 100 {
            let stripe = build_window(&WindowSpec::new(WindowKind::Stripe, rho), n_x, n_y).unwrap();
            prop_assert!((stripe.achieved_reduction() - rho).abs() <= 0.005 + 1e-12);
        }
        if n_x >= 100 && n_y >= 100 {
            let centered = build_window(&WindowSpec::new(WindowKind::Centered, rho), n_x, n_y).unwrap();
            prop_assert!((centered.achieved_reduction() - rho).abs() <= 0.005);
        }
    }

    #[test]
    fn gaussian_hits_target(n_x in 64usize..128, n_y in 64usize..128, rho in 0.05f64..0.9) {
        let (sigma, achieved) = solve_gaussian_sigma(n_x, n_y, rho).unwrap();
        prop_assert!(sigma > 0.0);
        prop_assert!((achieved - rho).abs() <= 1e-4);
        let w = build_window(&WindowSpec::new(WindowKind::Gaussian, rho), n_x, n_y).unwrap();
        prop_assert!((w.achieved_reduction() - rho).abs() <= 1e-4);
    }

    #[test]
    fn windows_are_reproducible(
        kind in prop::sample::select(WindowKind::ALL.to_vec()),
        rho in 0.05f64..0.9,
        seed in any::<u64>(),
    ) {
        let spec = WindowSpec::new(kind, rho).with_seed(seed);
        let a = build_window(&spec, 37, 53).unwrap();
        let b = build_window(&spec, 37, 53).unwrap();
        let bits = |w: &szlab_core::WindowMatrix| w.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&b));
    }
}

#[test]
fn small_matrix_example() {
    let (_, achieved) = solve_diagonal_threshold(3, 64, 0.417).unwrap();
    assert!((achieved - 80.0 / 192.0).abs() < 1e-15);
}

#[test]
fn threshold_keeps_the_band() {
    let (threshold, _) = solve_diagonal_threshold(512, 512, 0.6).unwrap();
    let w = build_window(&WindowSpec::new(WindowKind::Diagonal, 0.6), 512, 512).unwrap();
    for i in (0..512).step_by(7) {
        for j in (0..512).step_by(5) {
            let kept = projected_distance(i, j, 512, 512) <= threshold + 1e-9;
            assert_eq!(w.get(i, j) == 1.0, kept, "({i}, {j})");
        }
    }
}
