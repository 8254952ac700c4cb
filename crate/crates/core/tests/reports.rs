use growth_lab::report::{
    emit_report, from_csv_str, from_json_str, round12, to_csv_string, to_json_string, validate_json, BoundCheck,
    ExperimentReport, Quantity, Relation, ReportFormat,
};
use proptest::prelude::*;

fn quantity() -> impl Strategy<Value = Quantity> {
    prop_oneof![
        any::<u64>().prop_map(Quantity::Int),
        (-1e12f64..1e12).prop_map(Quantity::real),
        (1e-9f64..1.0).prop_map(Quantity::real),
    ]
}

fn relation() -> impl Strategy<Value = Relation> {
    prop_oneof![Just(Relation::Le), Just(Relation::Ge), Just(Relation::Eq)]
}

prop_compose! {
    fn bound()(name in "[a-z_]{1,12}", lhs in quantity(), rel in relation(), rhs in quantity(), holds in any::<bool>())
        -> BoundCheck {
        BoundCheck::new(&name, lhs, rel, rhs, holds)
    }
}

prop_compose! {
    fn report()(
        run in "cell-[0-9]{4}",
        audit in "[a-z0-9]{2,9}",
        family in "[a-z]{2,6}=[0-9]{1,4}( [a-z]{1,5}=-?[0-9]{1,3}){0,3}",
        seed in any::<u64>(),
        sizes in prop::collection::btree_map("[a-z_]{1,10}", any::<u64>(), 0..5),
        bounds in prop::collection::vec(bound(), 0..5),
        flags in prop::collection::btree_map("[a-z_]{1,10}", any::<bool>(), 0..3),
        wall in 0u64..100_000,
    ) -> ExperimentReport {
        let mut r = ExperimentReport::new(run, audit, family, seed);
        r.sizes = sizes;
        r.bounds = bounds;
        r.flags = flags;
        r.wall_time_ms = wall;
        r
    }
}

proptest! {
    #[test]
    fn json_round_trip(reports in prop::collection::vec(report(), 0..4)) {
        let text = to_json_string(&reports).unwrap();
        validate_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(from_json_str(&text).unwrap(), reports);
    }

    #[test]
    fn csv_round_trip(reports in prop::collection::vec(report(), 0..4)) {
        let text = to_csv_string(&reports).unwrap();
        let back = from_csv_str(&text).unwrap();
        prop_assert_eq!(&back, &reports);
        prop_assert_eq!(to_csv_string(&back).unwrap(), text);
    }

    #[test]
    fn ratios_are_consistent(b in bound()) {
        let r = b.rhs.as_f64();
        match b.ratio {
            None => prop_assert_eq!(r, 0.0),
            Some(x) => prop_assert_eq!(x, round12(b.lhs.as_f64() / r)),
        }
        let mut rep = ExperimentReport::new("cell-0000", "t", "f", 0);
        rep.bound(b);
        prop_assert!(rep.check_consistency().is_ok());
    }

    #[test]
    fn rounding_is_idempotent(x in any::<f64>()) {
        prop_assume!(x.is_finite());
        let once = round12(x);
        prop_assert_eq!(round12(once), once);
        if x != 0.0 {
            prop_assert!(((once - x) / x).abs() <= 1e-11);
        }
    }
}

#[test]
fn tampered_ratio_is_rejected_everywhere() {
    let mut r = ExperimentReport::new("cell-0000", "ruzsa", "kind=random p=101 size=5 seed=1", 1);
    r.bound(BoundCheck::new("ruzsa", 20u64, Relation::Le, 25u64, true));
    assert_eq!(r.bounds[0].ratio, Some(0.8));
    let json = to_json_string(std::slice::from_ref(&r)).unwrap();
    let csv = to_csv_string(std::slice::from_ref(&r)).unwrap();
    assert!(from_json_str(&json.replace("0.8", "0.7")).is_err());
    assert!(from_csv_str(&csv.replace("0.8", "0.7")).is_err());

    r.bounds[0].ratio = Some(0.7);
    assert!(r.check_consistency().is_err());
    assert!(to_json_string(std::slice::from_ref(&r)).is_err());
    assert!(to_csv_string(std::slice::from_ref(&r)).is_err());
}

#[test]
fn emitted_files_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = ExperimentReport::new("cell-0001", "thm1", "kind=ap p=10007 size=20 seed=0", 0);
    r.size("card_a", 20)
        .bound(BoundCheck::compare("beta", Quantity::real(1.7), Relation::Ge, Quantity::real(106.0 / 105.0)))
        .flag("pass", true);
    let reports = vec![r];
    let (json, csv) = (dir.path().join("r.json"), dir.path().join("r.csv"));
    emit_report(&reports, ReportFormat::Json, &json).unwrap();
    emit_report(&reports, ReportFormat::Csv, &csv).unwrap();
    assert_eq!(from_json_str(&std::fs::read_to_string(json).unwrap()).unwrap(), reports);
    assert_eq!(from_csv_str(&std::fs::read_to_string(csv).unwrap()).unwrap(), reports);
}
