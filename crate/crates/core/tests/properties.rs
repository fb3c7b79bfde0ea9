//! Property tests across module boundaries.

use proptest::prelude::*;

use kfdp::constants::{c2_sd, c2_su, c3_sd_value, c3_su_value, compute_constants, Family, Params, Template, TemplateFamily};
use kfdp::engine::{step_down, step_up, PValueVector};
use kfdp::error::Error;
use kfdp::gamma::GammaRational;
use kfdp::oracle::{check_simes_containment, check_stepdown_count_bound, check_stepup_count_bound, SmallInstance};
use kfdp::pairdist::{bvn_cdf, norm_cdf, two_sided_equicorr_f, PairwiseModel, PairwiseNullF};
use kfdp::rates::TruthLabels;

fn gamma() -> impl Strategy<Value = GammaRational> {
    prop::sample::select(vec![(1u64, 20u64), (1, 10), (1, 4), (3, 10)])
        .prop_map(|(a, b)| GammaRational::new(a, b).unwrap())
}

fn model() -> impl Strategy<Value = PairwiseModel> {
    prop_oneof![
        Just(PairwiseModel::Independence),
        Just(PairwiseModel::Comonotone),
        (-0.9f64..0.99).prop_map(|rho| PairwiseModel::EquicorrelatedTwoSided { rho }),
    ]
}

fn template_family() -> impl Strategy<Value = TemplateFamily> {
    prop::sample::select(vec![TemplateFamily::Lr, TemplateFamily::Bh, TemplateFamily::Gbs])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_family_returns_valid_constants(
        n in 2usize..30, g in gamma(), k in 1usize..4, alpha in 0.01f64..0.2, m in model(),
        family in prop::sample::select(Family::ALL.to_vec()),
    ) {
        let k = k.min(n);
        prop_assume!(!(family == Family::Pairwise && k < 2));
        let params = Params::new(n, g, k, alpha).unwrap();
        let template = Template::lr(n, g);
        match compute_constants(family, &params, &template, Some(&m)) {
            Ok(report) => {
                let v = report.constants.values();
                prop_assert_eq!(v.len(), n);
                prop_assert!(v.iter().all(|&a| a > 0.0 && a < 1.0));
                prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));
                prop_assert!(v[..k].iter().all(|&a| a == v[k - 1]));
                if let Some(c) = report.scaling {
                    prop_assert!(c > 0.0);
                }
            }
            Err(Error::Unattainable { .. }) => prop_assert!(matches!(family, Family::CalibratedSd | Family::CalibratedSu)),
            Err(e) => prop_assert!(false, "{family}: {e}"),
        }
    }

    #[test]
    fn calibrated_bound_never_exceeds_telescoped_bound(
        n in 1usize..25, g in gamma(), k in 1usize..4, beta in 0.001f64..0.9, m in model(), tf in template_family(),
    ) {
        let k = k.min(n);
        let params = Params::new(n, g, k, 0.05).unwrap();
        let values = Template::new(tf, n, g).unwrap().values(beta).unwrap();
        let sd3 = c3_sd_value(&values, &params, &m).unwrap().value;
        let su3 = c3_su_value(&values, &params, &m).unwrap().value;
        prop_assert!(sd3 <= c2_sd(&values, &params).unwrap().scaling.unwrap());
        prop_assert!(su3 <= c2_su(&values, &params).unwrap().scaling.unwrap());
    }

    #[test]
    fn stepup_rejects_a_superset_and_relabeling_is_equivariant(
        p in prop::collection::vec(0.0f64..0.2, 1..40), g in gamma(), shift in 0usize..40,
    ) {
        let n = p.len();
        let params = Params::new(n, g, 1, 0.05).unwrap();
        let c = compute_constants(Family::SumSu, &params, &Template::lr(n, g), None).unwrap().constants;
        let pv = PValueVector::new(p.clone()).unwrap();
        let sd = step_down(&pv, &c).unwrap();
        let su = step_up(&pv, &c).unwrap();
        prop_assert!(sd.rejected().iter().all(|i| su.rejected().contains(i)));

        let labels: Vec<bool> = (0..n).map(|i| i % 3 != 0).collect();
        let mut q = p.clone();
        let mut l = labels.clone();
        q.rotate_left(shift % n);
        l.rotate_left(shift % n);
        let a = su.with_truth(&TruthLabels::new(labels)).unwrap().truth().unwrap();
        let b = step_up(&PValueVector::new(q).unwrap(), &c).unwrap().with_truth(&TruthLabels::new(l)).unwrap().truth().unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn oracle_checks_hold_on_arbitrary_instances(
        p in prop::collection::vec(0.0f64..1.0, 1..9), nulls in prop::collection::vec(any::<bool>(), 9),
        c in prop::collection::vec(0.001f64..0.999, 9), g in gamma(), k in 1usize..4, alpha in 0.01f64..0.9,
    ) {
        let n = p.len();
        let mut c = c[..n].to_vec();
        c.sort_by(f64::total_cmp);
        let inst = SmallInstance::new(p, nulls[..n].to_vec(), c, g, k, alpha).unwrap();
        prop_assert!(check_stepdown_count_bound(&inst).is_ok());
        prop_assert!(check_stepup_count_bound(&inst).is_ok());
        prop_assert!(check_simes_containment(&inst).is_ok());
    }

    #[test]
    fn bvn_reflection(a in -6.0f64..6.0, b in -6.0f64..6.0, rho in -1.0f64..=1.0) {
        let lhs = bvn_cdf(a, b, rho).unwrap() + bvn_cdf(-a, b, -rho).unwrap();
        prop_assert!((lhs - norm_cdf(b)).abs() <= 1e-9);
    }

    #[test]
    fn two_sided_joint_increases_with_correlation(u in 0.001f64..0.999, v in 0.001f64..0.999, r in 0.0f64..0.9, d in 0.01f64..0.09) {
        let lo = two_sided_equicorr_f(u, v, r).unwrap();
        let hi = two_sided_equicorr_f(u, v, r + d).unwrap();
        prop_assert!(hi >= lo - 1e-12);
        let m = PairwiseModel::EquicorrelatedTwoSided { rho: r };
        prop_assert!((m.joint(u, v) - m.joint(v, u)).abs() <= 1e-10);
    }
}
