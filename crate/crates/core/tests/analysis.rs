use proptest::prelude::*;
use pxp_scars::analysis::*;

fn rates(d: f64, s: f64, e: f64) -> QuantumRates {
    QuantumRates {
        density: Rate { value: d, stderr: d * 0.05 },
        entropy: Rate { value: s, stderr: s * 0.01 },
        echo: Rate { value: e, stderr: e * 0.03 },
    }
}

#[test]
fn escape_time_limits() {
    // No gap left to grow across as δθ₀ → 1.
    let t = escape_time(0.006, 1.0 - 1e-12).unwrap();
    assert!(t < 1e-6);
    assert!((escape_time(0.006, 0.01).unwrap() - 100f64.ln() / 0.006).abs() < 1e-9);
}

#[test]
fn report_schema_keys() {
    let r = report_from_rates(0.006, 0.01, rates(0.015, 0.03, 0.025), Some(0.0064)).unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    for k in ["h_ks", "delta_theta0", "t_star", "lambda", "rates", "ratio", "pass"] {
        assert!(v.get(k).is_some(), "{k}");
    }
    for k in ["density", "entropy", "echo"] {
        assert!(v["rates"][k]["value"].is_number() && v["rates"][k]["stderr"].is_number());
    }
    assert!((r.ratio - 0.03 / r.lambda).abs() < 1e-15);
}

proptest! {
    #[test]
    fn rate_and_time_are_reciprocal(h in 1e-5f64..1.0, d in 1e-6f64..0.999) {
        let l = escape_rate(h, d).unwrap();
        let t = escape_time(h, d).unwrap();
        prop_assert!((l * t - 1.0).abs() < 1e-12);
        prop_assert!((l - h / (1.0 / d).ln()).abs() <= 1e-15 * l.max(1.0));
    }

    #[test]
    fn rate_monotone(h in 1e-5f64..0.5, d in 1e-6f64..0.5, k in 1.01f64..10.0) {
        prop_assert!(escape_rate(k * h, d).unwrap() > escape_rate(h, d).unwrap());
        // Smaller δθ₀ means a larger log gap and a slower escape.
        prop_assert!(escape_rate(h, d / k).unwrap() < escape_rate(h, d).unwrap());
        prop_assert!((escape_time(k * h, d).unwrap() * k - escape_time(h, d).unwrap()).abs() < 1e-9 * escape_time(h, d).unwrap());
    }

    #[test]
    fn report_json_roundtrip(h in 1e-4f64..0.1, d in 1e-4f64..0.9, a in 1e-3f64..0.1, b in 1e-3f64..0.1, c in 1e-3f64..0.1) {
        let r = report_from_rates(h, d, rates(a, b, c), Some(h / 2.0)).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: EscapeReport = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, r);
    }
}
