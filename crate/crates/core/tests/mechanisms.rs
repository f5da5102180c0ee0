use fica::mechanisms::{
    run_hybrid_ica, run_mlca, split_budget, vcg_payments, wht_allocation_rule, HybridConfig, HybridVariant, MlcaConfig,
    GSVM_SPLIT,
};
use fica::valuemodels::{generate, InstanceSpec, ModelFamily};
use fica::wdp::WdpSolver;
use fica::{Bundle, ReportSet};

mod common;
use common::brute_vcg;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn vcg_matches_brute_force_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..100 {
        let n = rng.random_range(1..=3usize);
        let m = rng.random_range(1..=4usize);
        let reports: Vec<ReportSet> = (0..n)
            .map(|_| {
                let count = rng.random_range(1..=(1usize << m));
                (0..count).map(|_| (Bundle(rng.random_range(0..1u32 << m)), rng.random_range(0.0..10.0))).collect()
            })
            .collect();
        let want = brute_vcg(&reports, m);
        for solver in [WdpSolver::DenseDp, WdpSolver::Mip(Default::default())] {
            let got = vcg_payments(&reports, m, solver).unwrap();
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-9, "trial {trial}: {got:?} vs {want:?}");
            }
        }
    }
}

fn small_instance(family: ModelFamily, m: usize, seed: u64) -> fica::valuemodels::Instance {
    generate(&InstanceSpec::new(family, m, InstanceSpec::roster_of(1, 2), seed)).unwrap()
}

#[test]
fn mlca_respects_budget_and_never_repeats() {
    let inst = small_instance(ModelFamily::GlobalSynergy, 6, 3);
    let cfg = MlcaConfig { q_init: 5, q_max: 14, seed: 3, ..MlcaConfig::default() };
    let res = run_mlca(&inst, &cfg).unwrap();
    for r in &res.reports {
        // reports are keyed by bundle, so their count is the number of distinct queries
        assert!(r.len() >= cfg.q_init && r.len() <= cfg.q_max, "{}", r.len());
    }
    assert!(res.trace.windows(2).all(|w| w[0].queries <= w[1].queries));
    assert!(res.trace.windows(2).all(|w| w[0].reported_welfare <= w[1].reported_welfare + 1e-9));
    assert_eq!(res.trace.iter().map(|t| t.phase.as_str()).collect::<Vec<_>>(), ["initial", "mlca"]);
    assert!(res.payments.iter().all(|p| *p >= 0.0));
}

#[test]
fn hybrid_without_fourier_phases_is_mlca() {
    let inst = small_instance(ModelFamily::SparseSynthetic, 6, 11);
    let cfg = HybridConfig { l1: 6, l2: 6, l3: 0, l4: 0, seed: 11, ..HybridConfig::default() };
    let hybrid = run_hybrid_ica(&inst, &cfg).unwrap();
    let mlca = run_mlca(&inst, &cfg.mlca()).unwrap();
    assert_eq!(hybrid.reports, mlca.reports);
    assert_eq!(hybrid.allocation, mlca.allocation);
    assert_eq!(hybrid.payments, mlca.payments);
}

#[test]
fn full_information_is_efficient() {
    let inst = small_instance(ModelFamily::LocalSynergy, 4, 5);
    let cfg = MlcaConfig { q_init: 15, q_max: 15, seed: 5, ..MlcaConfig::default() };
    let res = run_mlca(&inst, &cfg).unwrap();
    assert!((res.efficiency() - 1.0).abs() < 1e-12);
}

#[test]
fn hybrid_variants_spend_the_budget() {
    let inst = small_instance(ModelFamily::GlobalSynergy, 8, 21);
    let [l1, l2, l3, l4] = split_budget(20, GSVM_SPLIT);
    for variant in [HybridVariant::Full, HybridVariant::NoFr, HybridVariant::NoFrFa] {
        let cfg = HybridConfig { l1, l2, l3, l4, seed: 21, variant, ..HybridConfig::default() };
        let res = run_hybrid_ica(&inst, &cfg).unwrap();
        for r in &res.reports {
            assert!(r.len() <= cfg.total_budget());
        }
        let phases: Vec<&str> = res.trace.iter().map(|t| t.phase.as_str()).collect();
        match variant {
            HybridVariant::NoFrFa => assert_eq!(phases, ["initial", "mlca", "random"]),
            _ => assert_eq!(phases, ["initial", "mlca", "reconstruction", "allocation"]),
        }
        assert!(res.trace.windows(2).all(|w| w[0].reported_welfare <= w[1].reported_welfare + 1e-9));
        assert!(res.efficiency() > 0.0 && res.efficiency() <= 1.0 + 1e-9);
    }
}

#[test]
fn runs_are_deterministic() {
    let inst = small_instance(ModelFamily::SparseSynthetic, 7, 8);
    let cfg = HybridConfig { l1: 5, l2: 3, l3: 3, l4: 3, seed: 8, ..HybridConfig::default() };
    let a = run_hybrid_ica(&inst, &cfg).unwrap();
    let b = run_hybrid_ica(&inst, &cfg).unwrap();
    assert_eq!(a.reports, b.reports);
    assert_eq!(a.trace, b.trace);
}

#[test]
fn wht_rule_with_every_coefficient_is_efficient() {
    let inst = small_instance(ModelFamily::LocalSynergy, 6, 2);
    let (_, eff) = wht_allocation_rule(&inst, 1 << 6, WdpSolver::Auto).unwrap();
    assert!((eff - 1.0).abs() < 1e-9);
}
