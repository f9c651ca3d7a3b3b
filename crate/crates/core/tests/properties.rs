use proptest::prelude::*;

use robust_bounds::divergences::DivergenceSpec;
use robust_bounds::inner::{
    best_case_mean, divergence_from_uniform, weight_norm_constant, weight_norm_diagnostic, worst_case_mean,
    worst_case_mean_chi2_exact, worst_case_mean_cressie_read, worst_case_mean_dual, UncertaintyBudget,
};
use robust_bounds::stats::{chi_square_cdf, chi_square_quantile, student_t_cdf, student_t_quantile};

fn divergence() -> impl Strategy<Value = DivergenceSpec> {
    prop_oneof![
        Just(DivergenceSpec::EmpiricalLikelihood),
        Just(DivergenceSpec::KullbackLeibler),
        (1.2f64..4.0).prop_map(|k| DivergenceSpec::cressie_read(k).unwrap()),
        (-1.5f64..0.9).prop_map(|k| DivergenceSpec::cressie_read(k).unwrap()),
    ]
}

fn losses() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 2..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fenchel_young(div in divergence(), t in 0.01f64..8.0, s in -5.0f64..0.9) {
        let fs = div.conjugate(s).unwrap();
        let ft = div.value(t).unwrap();
        prop_assert!(fs + ft >= s * t - 1e-9 * (1.0 + (s * t).abs()));
        // equality at s = f'(t)
        let d = div.derivative(t);
        let gap = div.conjugate(d).unwrap() + ft - d * t;
        prop_assert!(gap.abs() <= 1e-9 * (1.0 + (d * t).abs() + ft.abs()));
    }

    #[test]
    fn weights_are_feasible(div in divergence(), z in losses(), rho in 0.01f64..10.0) {
        let budget = UncertaintyBudget::new(rho, z.len()).unwrap();
        let eval = worst_case_mean(&z, &div, &budget).unwrap();
        let w = eval.weights.unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(w.iter().all(|&p| p >= 0.0));
        prop_assert!(divergence_from_uniform(&w, &div) <= budget.radius() + 1e-9);
        let attained: f64 = w.iter().zip(&z).map(|(p, v)| p * v).sum();
        prop_assert!(attained <= eval.value + 1e-7 * (1.0 + eval.value.abs()));
        prop_assert!(weight_norm_diagnostic(&w) <= (rho * weight_norm_constant(&div, rho)).sqrt() + 1e-9);
    }

    #[test]
    fn monotone_in_rho(div in divergence(), z in losses(), rho in 0.01f64..5.0, factor in 1.0f64..4.0) {
        let n = z.len();
        let small = worst_case_mean(&z, &div, &UncertaintyBudget::new(rho, n).unwrap()).unwrap().value;
        let large = worst_case_mean(&z, &div, &UncertaintyBudget::new(rho * factor, n).unwrap()).unwrap().value;
        prop_assert!(large >= small - 1e-8 * (1.0 + small.abs()));
    }

    #[test]
    fn translation_and_scaling(div in divergence(), z in losses(), rho in 0.01f64..5.0,
                               c in -20.0f64..20.0, a in 0.05f64..20.0) {
        let budget = UncertaintyBudget::new(rho, z.len()).unwrap();
        let base = worst_case_mean(&z, &div, &budget).unwrap().value;
        let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
        let scaled: Vec<f64> = z.iter().map(|v| v * a).collect();
        let tol = 1e-7 * (1.0 + base.abs() + c.abs());
        prop_assert!((worst_case_mean(&shifted, &div, &budget).unwrap().value - base - c).abs() <= tol);
        prop_assert!((worst_case_mean(&scaled, &div, &budget).unwrap().value - a * base).abs() <= tol * a);
    }

    #[test]
    fn bounds_bracket_the_mean(div in divergence(), z in losses(), rho in 0.01f64..10.0) {
        let budget = UncertaintyBudget::new(rho, z.len()).unwrap();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let hi = worst_case_mean(&z, &div, &budget).unwrap().value;
        let lo = best_case_mean(&z, &div, &budget).unwrap().value;
        let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let zmin = z.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(zmin - 1e-9 <= lo && lo <= mean + 1e-9);
        prop_assert!(mean - 1e-9 <= hi && hi <= zmax + 1e-9);
    }

    #[test]
    fn solvers_agree(z in losses(), rho in 0.01f64..10.0, k in prop::sample::select(vec![1.5, 2.0, 3.0])) {
        let budget = UncertaintyBudget::new(rho, z.len()).unwrap();
        let div = DivergenceSpec::cressie_read(k).unwrap();
        let dual = worst_case_mean_dual(&z, &div, &budget).unwrap().value;
        let closed = worst_case_mean_cressie_read(&z, k, &budget).unwrap().value;
        prop_assert!((dual - closed).abs() <= 1e-6 * (1.0 + dual.abs()));
        if k == 2.0 {
            let exact = worst_case_mean_chi2_exact(&z, &budget).unwrap().value;
            prop_assert!((dual - exact).abs() <= 1e-6 * (1.0 + dual.abs()));
        }
    }

    #[test]
    fn quantiles_round_trip(p in 1e-6f64..(1.0 - 1e-6), df in 1u32..50) {
        prop_assert!((chi_square_cdf(df, chi_square_quantile(df, p).unwrap()) - p).abs() <= 1e-9);
        prop_assert!((student_t_cdf(df, student_t_quantile(df, p).unwrap()) - p).abs() <= 1e-9);
    }
}
