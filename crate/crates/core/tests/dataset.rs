use std::path::Path;

use proptest::prelude::*;

use gep_core::system::{compute_isf, load_system, write_system, SystemData};
use gep_core::Error;

fn mini3() -> SystemData {
    load_system(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mini3")).unwrap()
}

#[test]
fn shipped_datasets_round_trip() {
    for name in ["mini3", "nine_bus"] {
        let sys = load_system(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_system(&sys, dir.path()).unwrap();
        assert_eq!(load_system(dir.path()).unwrap(), sys, "{name}");
    }
}

#[test]
fn nine_bus_shape() {
    let sys = load_system(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/nine_bus")).unwrap();
    let t = sys.temporal_structure().unwrap();
    assert_eq!((sys.buses.len(), sys.lines.len()), (9, 13));
    assert_eq!((t.num_rep_periods(), t.num_steps()), (7, 24));
    assert!((t.total_hours() - 364.0 * 24.0).abs() < 1e-9);
}

#[derive(Debug, Clone)]
enum Mutation {
    NegativePmax,
    PminAbovePmax,
    UnknownBus(usize),
    ZeroReactance(usize),
    DuplicateBus,
    NoSlack,
    BadVoltageBox(usize),
    EfficiencyAboveOne,
    NegativeDemand(usize),
    ProfileAboveOne(usize),
}

fn mutation() -> impl Strategy<Value = Mutation> {
    prop_oneof![
        Just(Mutation::NegativePmax),
        Just(Mutation::PminAbovePmax),
        (0usize..8).prop_map(Mutation::UnknownBus),
        (0usize..8).prop_map(Mutation::ZeroReactance),
        Just(Mutation::DuplicateBus),
        Just(Mutation::NoSlack),
        (0usize..8).prop_map(Mutation::BadVoltageBox),
        Just(Mutation::EfficiencyAboveOne),
        (0usize..64).prop_map(Mutation::NegativeDemand),
        (0usize..64).prop_map(Mutation::ProfileAboveOne),
    ]
}

fn apply(sys: &mut SystemData, m: &Mutation) {
    let nl = sys.lines.len();
    match *m {
        Mutation::NegativePmax => sys.thermal[0].p_max = -0.1,
        Mutation::PminAbovePmax => sys.thermal[0].p_min = sys.thermal[0].p_max + 0.1,
        Mutation::UnknownBus(i) => sys.lines[i % nl].to = "NOWHERE".into(),
        Mutation::ZeroReactance(i) => sys.lines[i % nl].reactance = 0.0,
        Mutation::DuplicateBus => {
            let b = sys.buses[1].clone();
            sys.buses.push(b);
        }
        Mutation::NoSlack => sys.buses.iter_mut().for_each(|b| b.is_slack = false),
        Mutation::BadVoltageBox(i) => {
            let n = sys.buses.len();
            let b = &mut sys.buses[i % n];
            b.v_min = b.v_max + 0.05;
        }
        Mutation::EfficiencyAboveOne => sys.storage[0].eff_charge = 1.2,
        Mutation::NegativeDemand(i) => {
            let key = sys.demand.keys().nth(i % sys.demand.len()).unwrap().clone();
            sys.demand.get_mut(&key).unwrap().0 = -0.5;
        }
        Mutation::ProfileAboveOne(i) => {
            let key = sys.profiles.keys().nth(i % sys.profiles.len()).unwrap().clone();
            *sys.profiles.get_mut(&key).unwrap() = 1.5;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_mutation_is_rejected(m in mutation()) {
        let mut sys = mini3();
        prop_assert!(sys.validate().is_ok());
        apply(&mut sys, &m);
        prop_assert!(sys.validate().is_err(), "{:?} accepted", m);
    }

    #[test]
    fn rejected_datasets_fail_to_load(m in mutation()) {
        let mut sys = mini3();
        apply(&mut sys, &m);
        let dir = tempfile::tempdir().unwrap();
        // writing does not validate; loading must
        if write_system(&sys, dir.path()).is_ok() {
            let err = load_system(dir.path()).unwrap_err();
            prop_assert!(!matches!(err, Error::Io { .. }), "{:?}: {}", m, err);
        }
    }

    #[test]
    fn isf_flows_conserve_injections(
        seed_x in proptest::collection::vec(0.01f64..0.5, 3),
        p in proptest::collection::vec(-1.0f64..1.0, 2),
    ) {
        let mut sys = mini3();
        for (l, x) in sys.lines.iter_mut().zip(&seed_x) {
            l.reactance = *x;
            l.susceptance = -1.0 / x;
        }
        let isf = compute_isf(&sys).unwrap();
        let inj = vec![-(p[0] + p[1]), p[0], p[1]];
        let flows = isf.flows(&sys, &inj);
        for (i, b) in sys.buses.iter().enumerate() {
            let net: f64 = sys.lines.iter().zip(&flows).map(|(l, f)| {
                if l.from == b.id { *f } else if l.to == b.id { -*f } else { 0.0 }
            }).sum();
            prop_assert!((net - inj[i]).abs() < 1e-10, "bus {}: {} vs {}", b.id, net, inj[i]);
        }
    }
}
