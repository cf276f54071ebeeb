use hyperklein::prym::prym_datum;
use hyperklein::reconstruct::invert;
use hyperklein::towers::{build_tower, standard_config};
use hyperklein::{CaseTag, PrymDatum, Tower};

const KLEIN: [CaseTag; 4] = [CaseTag::EtaleKlein, CaseTag::Mixed8, CaseTag::Branched12, CaseTag::Mixed4];

#[test]
fn tower_json_round_trip_keeps_validation() {
    for case in KLEIN {
        let t = build_tower(&standard_config(case, 2), case).unwrap();
        let back = Tower::from_json(&t.to_json()).unwrap();
        assert_eq!(back.to_json(), t.to_json());
        assert!(back.validate().all_hold(), "{case}");
    }
}

#[test]
fn datum_json_round_trip_inverts() {
    for case in KLEIN {
        let t = build_tower(&standard_config(case, 3), case).unwrap();
        let d = prym_datum(&t, Some(5)).unwrap();
        let back = PrymDatum::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
        assert!(invert(&back).is_ok(), "{case}");
    }
}

#[test]
fn garbage_json_is_a_parse_error() {
    assert!(matches!(PrymDatum::from_json("{\"case\": 3}"), Err(hyperklein::Error::Parse(_))));
    assert!(Tower::from_json("[]").is_err());
}
