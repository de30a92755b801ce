use ddlv::{fringe_probability, HalfInt, SpinSystem};
use ddlv_web::{noisy_scan, steepest, surface};

#[test]
fn surface_matches_pointwise_fringe() {
    let v = surface(7, 1, 5, 4).unwrap();
    assert_eq!(v.len(), 20);
    let sys = SpinSystem::new(HalfInt::from_f64(3.5).unwrap()).unwrap();
    let m = HalfInt::from_f64(0.5).unwrap();
    let p = fringe_probability(&sys, m, std::f64::consts::PI / 2.0, std::f64::consts::PI).unwrap();
    assert!((v[2 * 4 + 2] - p).abs() < 1e-14);
}

#[test]
fn working_point_reference() {
    let r = steepest(7, 1, std::f64::consts::PI).unwrap();
    assert!((r[0] - 0.150).abs() < 1e-3);
    assert!((r[3] - 0.1003).abs() < 1e-3);
}

#[test]
fn noisy_scan_tracks_ideal_without_noise() {
    let v = noisy_scan(5, -3, std::f64::consts::PI, 4, 0.0, 10, 200, 12, 3).unwrap();
    assert_eq!(v.len(), 36);
    for c in v.chunks(3) {
        assert!((c[1] - c[2]).abs() < 0.05, "{c:?}");
    }
    assert_eq!(v, noisy_scan(5, -3, std::f64::consts::PI, 4, 0.0, 10, 200, 12, 3).unwrap());
}

#[test]
fn invalid_quantum_numbers_rejected() {
    assert!(surface(3, 5, 4, 4).is_err());
    assert!(noisy_scan(3, 1, 0.0, 1, 0.0, 0, 1, 4, 0).is_err());
}
