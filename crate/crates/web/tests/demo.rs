use liquid_drop_web::Demo;

fn parse(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn shape_view_is_prolate_for_positive_amplitude() {
    let d = Demo::new(12, 48).unwrap();
    let v = parse(&d.shape(0.1, 64).unwrap());
    assert_eq!(v["prolate"], true);
    assert_eq!(v["meridian"].as_array().unwrap().len(), 64);
    assert!(v["volume"].as_f64().unwrap() < 10.0);
    let pole = &v["meridian"][0];
    assert!(pole[0].as_f64().unwrap().abs() < 1e-12);
    let v = parse(&d.shape(0.0, 16).unwrap());
    assert!((v["radius"].as_f64().unwrap() - Demo::r_star()).abs() < 1e-15);
}

#[test]
fn spectrum_view_has_zero_mode_at_volume_ten() {
    let d = Demo::new(8, 32).unwrap();
    let v = parse(&d.spectrum(Demo::r_star()).unwrap());
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert!(rows[1]["numeric"].as_f64().unwrap().abs() < 1e-6);
}

#[test]
fn curve_view_follows_the_cubic_law() {
    let d = Demo::new(12, 48).unwrap();
    let v = parse(&d.curve(0.05, 0.025).unwrap());
    assert!(v["error"].is_null());
    let f = v["bw_f"].as_array().unwrap();
    let law = v["bw_law"].as_array().unwrap();
    assert_eq!(f.len(), 5);
    for (a, b) in f.iter().zip(law) {
        let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
        assert!((a - b).abs() <= 0.1 * b.abs() + 1e-12, "{a} {b}");
    }
}
