use fica::experiments::{run, ExperimentId, ExperimentSpec, Mechanism};
use fica::mechanisms::{run_hybrid_ica, HybridConfig, HybridVariant};
use fica::valuemodels::{generate, InstanceSpec, ModelFamily};
use fica::TransformKind;

fn spec(id: ExperimentId, family: ModelFamily, m: usize, seeds: u64) -> ExperimentSpec {
    ExperimentSpec::new(id, InstanceSpec::new(family, m, InstanceSpec::roster_of(1, 2), 0), (0..seeds).collect())
}

#[test]
fn every_experiment_is_reproducible() {
    for id in ExperimentId::ALL {
        let mut s = spec(id, ModelFamily::SparseSynthetic, 5, 3);
        s.ks = vec![1, 4, 32];
        s.budget = 10;
        s.training_queries = 12;
        let a = run(&s).unwrap();
        let b = run(&s).unwrap();
        assert_eq!(a.tables.len(), b.tables.len());
        for ((na, ta), (nb, tb)) in a.tables.iter().zip(&b.tables) {
            assert_eq!(na, nb);
            assert_eq!(ta.to_csv_without_timing().unwrap(), tb.to_csv_without_timing().unwrap(), "{na}");
        }
    }
}

#[test]
fn global_synergy_energy_stops_at_degree_two() {
    let out = run(&spec(ExperimentId::SpectralEnergy, ModelFamily::GlobalSynergy, 8, 4)).unwrap();
    let t = out.table("spectral_energy").unwrap();
    let (k, d, e) = (t.column("kind").unwrap(), t.column("cardinality").unwrap(), t.column("energy_share").unwrap());
    for kind in TransformKind::ALL {
        let rows: Vec<&Vec<String>> = t.rows.iter().filter(|r| r[k] == kind.as_str()).collect();
        let total: f64 = rows.iter().map(|r| r[e].parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
        if kind == TransformKind::Ft3 {
            for r in rows.iter().filter(|r| r[d].parse::<usize>().unwrap() >= 3) {
                assert!(r[e].parse::<f64>().unwrap() < 1e-18);
            }
        }
    }
}

#[test]
fn reconstruction_error_vanishes_at_full_and_true_sparsity() {
    let mut s = spec(ExperimentId::ReconstructionError, ModelFamily::GlobalSynergy, 7, 3);
    // degree two over 7 items: at most 1 + 7 + 21 coefficients
    s.ks = vec![29, 128];
    s.kinds = vec![TransformKind::Ft3];
    let out = run(&s).unwrap();
    let t = out.table("reconstruction_error").unwrap();
    assert!(t.numbers("rmse").unwrap().iter().all(|e| *e < 1e-9));

    s.kinds = TransformKind::ALL.to_vec();
    s.ks = vec![128];
    let out = run(&s).unwrap();
    assert!(out.table("reconstruction_error").unwrap().numbers("rmse").unwrap().iter().all(|e| *e < 1e-9));
}

#[test]
fn local_synergy_favours_the_wht() {
    let mut s = spec(ExperimentId::ReconstructionError, ModelFamily::LocalSynergy, 12, 6);
    s.ks = vec![100];
    let out = run(&s).unwrap();
    let t = out.table("reconstruction_error").unwrap();
    let (k, ty, e) = (t.column("kind").unwrap(), t.column("bidder_type").unwrap(), t.column("rmse").unwrap());
    for bt in ["national", "regional"] {
        let get = |kind: &str| -> f64 { t.rows.iter().find(|r| r[k] == kind && r[ty] == bt).unwrap()[e].parse().unwrap() };
        assert!(get("wht") <= get("ft3") && get("wht") <= get("ft4"), "{bt}");
    }
}

#[test]
fn energy_ratios_are_fractions() {
    let mut s = spec(ExperimentId::EnergyRatio, ModelFamily::GlobalSynergy, 6, 2);
    s.ks = vec![1, 5, 20];
    s.training_queries = 30;
    let out = run(&s).unwrap();
    let t = out.table("energy_ratio").unwrap();
    let ratios = t.numbers("energy_ratio").unwrap();
    assert!(ratios.iter().all(|r| (0.0..=1.0 + 1e-9).contains(r)), "{ratios:?}");
}

#[test]
fn full_budget_makes_every_mechanism_efficient() {
    let mut s = spec(ExperimentId::MechanismCompare, ModelFamily::LocalSynergy, 4, 2);
    s.budget = 15;
    let out = run(&s).unwrap();
    let t = out.table("mechanism_compare").unwrap();
    assert_eq!(t.rows.len(), Mechanism::ALL.len());
    for e in t.numbers("efficiency_mean").unwrap() {
        assert!((e - 1.0).abs() < 1e-12, "{e}");
    }
}

#[test]
fn without_reconstruction_queries_hybrid_equals_no_fr() {
    let inst = generate(&InstanceSpec::new(ModelFamily::SparseSynthetic, 7, InstanceSpec::roster_of(1, 2), 4)).unwrap();
    let base = HybridConfig { l1: 6, l2: 3, l3: 0, l4: 4, seed: 4, ..HybridConfig::default() };
    let full = run_hybrid_ica(&inst, &base).unwrap();
    let no_fr = run_hybrid_ica(&inst, &HybridConfig { variant: HybridVariant::NoFr, ..base }).unwrap();
    assert_eq!(full.trace, no_fr.trace);
    assert_eq!(full.reports, no_fr.reports);
}
