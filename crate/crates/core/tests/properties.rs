mod common;

use proptest::prelude::*;
use school_choice::fairness::{blocking_pairs, blocking_students, is_stable, stable_set_bruteforce};
use school_choice::io::{instance_to_string, parse_instance, Roster};
use school_choice::mechanisms::{
    boston_traced, deferred_acceptance, deferred_acceptance_traced, first_preference_first, run_mechanism,
    MechanismSpec,
};
use school_choice::model::{ConstraintVector, SchoolId, StudentId};
use school_choice::strategy::{gs_manipulating_students_fast, manipulating_students};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn da_matches_reference_and_is_stable(inst in common::instances(6, 4)) {
        let m = deferred_acceptance(&inst);
        prop_assert_eq!(&m, &common::da(&inst, &common::full(&inst)));
        prop_assert!(is_stable(&m, &inst));
        prop_assert!(m.respects_capacities(&inst));
    }

    #[test]
    fn constrained_gs_matches_reference(inst in common::instances(6, 4), k in 1usize..=4) {
        let m = run_mechanism(&MechanismSpec::gs().with_k(k), &inst).unwrap();
        prop_assert_eq!(m, common::da(&inst, &common::truncated(&inst, k)));
    }

    #[test]
    fn boston_matches_reference(inst in common::instances(6, 4), k in 1usize..=4) {
        let m = run_mechanism(&MechanismSpec::boston().with_k(k), &inst).unwrap();
        prop_assert_eq!(m, common::boston(&inst, &common::truncated(&inst, k)));
    }

    #[test]
    fn boston_is_fpf_with_every_school(inst in common::instances(6, 4)) {
        let all: Vec<SchoolId> = inst.schools().collect();
        prop_assert_eq!(first_preference_first(&inst.with_fpf_schools(&all)), common::boston(&inst, &common::full(&inst)));
        prop_assert_eq!(first_preference_first(&inst.with_fpf_schools(&[])), deferred_acceptance(&inst));
    }

    #[test]
    fn sd_is_greedy_picking(inst in common::common_instances(6, 4), k in 1usize..=4) {
        let m = run_mechanism(&MechanismSpec::sd().with_k(k), &inst).unwrap();
        prop_assert_eq!(&m, &common::serial_dictatorship(&inst, &common::truncated(&inst, k)));
        prop_assert_eq!(m, run_mechanism(&MechanismSpec::gs().with_k(k), &inst).unwrap());
    }

    #[test]
    fn chinese_matches_reference(inst in common::instances(6, 4), e in 1usize..=4) {
        let m = run_mechanism(&MechanismSpec::chinese(e), &inst).unwrap();
        prop_assert_eq!(&m, &common::chinese(&inst, e));
        if e >= inst.n_schools() {
            prop_assert_eq!(m, deferred_acceptance(&inst));
        }
    }

    #[test]
    fn slack_constraint_changes_nothing(inst in common::instances(6, 4)) {
        let k = inst.max_list_len().max(1);
        for spec in [MechanismSpec::gs(), MechanismSpec::boston(), MechanismSpec::fpf()] {
            let base = run_mechanism(&spec, &inst).unwrap();
            prop_assert_eq!(run_mechanism(&spec.clone().with_k(k), &inst).unwrap(), base.clone());
            let limits = ConstraintVector::uniform(k + 3, inst.n_students()).unwrap();
            prop_assert_eq!(run_mechanism(&spec.with_limits(limits), &inst).unwrap(), base);
        }
    }

    #[test]
    fn traces_replay_to_outcome(inst in common::instances(6, 4)) {
        let (m, trace) = deferred_acceptance_traced(&inst);
        prop_assert_eq!(trace.replay(inst.n_students()), m);
        let (m, trace) = boston_traced(&inst);
        prop_assert_eq!(trace.replay(inst.n_students()), m);
    }

    #[test]
    fn blocking_pairs_match_reference(inst in common::instances(6, 4), k in 1usize..=3) {
        for spec in [MechanismSpec::gs().with_k(k), MechanismSpec::boston().with_k(k), MechanismSpec::fpf().with_k(k)] {
            let m = run_mechanism(&spec, &inst).unwrap();
            let pairs = blocking_pairs(&m, &inst);
            let got: Vec<(usize, usize)> = pairs.iter().map(|p| (p.student.0, p.school.0)).collect();
            let mut want = common::blocking_pairs(&inst, &m);
            want.sort();
            prop_assert_eq!(got, want);
            prop_assert!(pairs.iter().all(|p| p.holds(&m, &inst)));
            prop_assert_eq!(blocking_students(&m, &inst).len(), common::blocking_count(&inst, &m));
        }
    }

    #[test]
    fn stable_set_matches_reference(inst in common::instances(5, 3)) {
        let set = stable_set_bruteforce(&inst).unwrap();
        prop_assert_eq!(&set, &common::stable_set(&inst));
        prop_assert!(set.contains(&deferred_acceptance(&inst)));
    }

    #[test]
    fn documents_round_trip(inst in common::instances(8, 5)) {
        let roster = Roster::for_instance(&inst);
        let text = instance_to_string(&inst, &roster);
        let back = parse_instance(&text, "mem").unwrap();
        prop_assert_eq!(&back.instance, &inst);
        prop_assert_eq!(instance_to_string(&back.instance, &back.roster), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn fast_gs_manipulators_match_search(inst in common::instances(5, 3), k in 2usize..=3) {
        let slow = manipulating_students(&MechanismSpec::gs().with_k(k), &inst).unwrap();
        prop_assert_eq!(gs_manipulating_students_fast(&inst, k).unwrap(), slow);
    }

    #[test]
    fn gs_manipulators_are_unmatched_blockers(inst in common::instances(5, 3), k in 2usize..=3) {
        let spec = MechanismSpec::gs().with_k(k);
        let m = run_mechanism(&spec, &inst).unwrap();
        let blocking = blocking_students(&m, &inst);
        for i in manipulating_students(&spec, &inst).unwrap() {
            prop_assert!(blocking.contains(&i));
            prop_assert!(!m.is_matched(StudentId(i.0)));
        }
    }
}
