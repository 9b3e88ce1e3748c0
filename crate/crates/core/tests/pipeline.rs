use infheat::barriers::{certify, BarrierForm, Side, Verdict};
use infheat::regularity::{classify, default_probe_eps, Resolution};
use infheat::{CertificateReport, Region, RegularityReport, RegularityVerdict, SpaceTimePoint, SpatialDomain};

fn wall() -> (Region, SpaceTimePoint) {
    (
        Region::cylinder(SpatialDomain::interval(0.0, 0.5), 0.0, 0.5),
        SpaceTimePoint::new(vec![0.0], 0.25),
    )
}

fn coarse() -> Vec<Resolution> {
    [0.01, 0.005].into_iter().map(|h| Resolution::new(h, 1, 2)).collect()
}

#[test]
fn classification_is_deterministic_and_round_trips() {
    let (region, z) = wall();
    let eps = default_probe_eps(&region).unwrap();
    let a = classify(&region, &z, &coarse(), eps).unwrap();
    let b = classify(&region, &z, &coarse(), eps).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.verdict, RegularityVerdict::Regular);
    let back: RegularityReport = serde_json::from_str(&a.to_json()).unwrap();
    assert_eq!(back.to_json(), a.to_json());
}

#[test]
fn certificate_round_trips() {
    let region = Region::petrovsky(1, 4.0, 0.1);
    let f = BarrierForm::petrovsky_barrier(0.25).unwrap();
    let rep = certify(&f, &region, Side::Super, 300, 5, 1e-9).unwrap();
    assert_eq!(rep.verdict, Verdict::Certified);
    let back: CertificateReport = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(back.to_json(), rep.to_json());
}

#[test]
fn probe_limits_stay_in_unit_range() {
    let (region, z) = wall();
    let rep = classify(&region, &z, &coarse(), 0.5).unwrap();
    assert!(rep.relative_limits().iter().all(|v| (0.0..=1.0).contains(v)));
}
