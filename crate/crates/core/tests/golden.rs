use pcg_core::agent::validate_plan;
use pcg_core::eval::{evaluate, MapFamily};
use pcg_core::executor::execute;
use pcg_core::registry::Registry;

#[test]
fn golden_plans_validate_and_satisfy_their_suites() {
    let registry = Registry::bundled();
    for family in MapFamily::ALL {
        let plan = family.golden();
        assert_eq!(validate_plan(&plan, &registry), vec![], "{family}");
        for seed in 0..40 {
            let report = execute(&plan, &registry, seed);
            let failure = report.failure().cloned();
            let artifact = report.artifact.unwrap_or_else(|| panic!("{family} seed {seed}: {failure:?}"));
            for r in evaluate(&artifact, &family.constraints()) {
                assert!(r.satisfied, "{family} seed {seed}: {r:?}");
            }
        }
    }
}

#[test]
fn family_detection() {
    for family in MapFamily::ALL {
        assert_eq!(MapFamily::detect(family.prompt()), family);
    }
    assert_eq!(MapFamily::detect("something vague"), MapFamily::MountainIsland);
}
