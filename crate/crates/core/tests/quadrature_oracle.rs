mod oracles;

use levy_drift_core::lyapunov::LyapunovSpec;

#[test]
fn jump_integrals_match_brute_force_sums() {
    let v = LyapunovSpec::new(0.5).unwrap();
    let rows = oracles::quadrature::compare_all(&v);
    for (name, es, eb) in &rows {
        println!("{name:28} small rel {es:.1e}, big rel {eb:.1e}");
    }
    let bad: Vec<_> = rows.iter().filter(|r| !(r.1 < 1e-3 && r.2 < 1e-3)).collect();
    assert!(bad.is_empty(), "fixtures off by more than 1e-3: {bad:?}");
}
