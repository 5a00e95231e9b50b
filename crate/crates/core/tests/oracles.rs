use collision_lab::battery::{
    bijection_identities, bound_sandwich, crossing_example, oracle_equivalence, ordering_suite, standard_battery,
};
use collision_lab::CollisionOrder;

#[test]
fn exact_matches_enumeration_up_to_six_balls() {
    let rep = oracle_equivalence(6).unwrap();
    assert!(rep.passed(), "{:?}", rep.violations);
    assert!(rep.checks > 100);
}

#[test]
fn fixed_indegree_identities() {
    let rep = bijection_identities(6).unwrap();
    assert!(rep.passed(), "{:?}", rep.violations);
}

#[test]
fn orderings_on_battery() {
    let rep = ordering_suite(&standard_battery()).unwrap();
    assert!(rep.passed(), "{:?}", rep.violations);
}

#[test]
fn bounds_on_battery() {
    let rep = bound_sandwich(&standard_battery(), 1e-10).unwrap();
    assert!(rep.passed(), "{:?}", rep.violations);
}

#[test]
fn no_ordering_between_k1_and_r_for_larger_r() {
    for r in 3..=5 {
        let [k1_r, r_r, k1_next, r_next] = crossing_example(CollisionOrder::new(r).unwrap()).unwrap();
        assert!(k1_r > r_r, "r={r}");
        assert!(k1_next < r_next, "r={r}");
    }
}
