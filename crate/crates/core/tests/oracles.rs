mod common;

#[test]
fn closed_forms_match_quadrature() {
    let cases = common::corpus();
    assert!(cases.len() >= 50, "corpus has {} cases", cases.len());
    let mut bad = Vec::new();
    for c in &cases {
        let e = c.rel_err();
        println!("{:<45} closed {:>22.15e} oracle {:>22.15e} rel {:.1e}", c.name, c.closed, c.oracle, e);
        if !(e <= 1e-8) {
            bad.push(c.name.clone());
        }
    }
    assert!(bad.is_empty(), "outside 1e-8: {bad:?}");
}
