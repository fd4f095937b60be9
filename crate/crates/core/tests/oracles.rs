//! Small instances worked out by hand.

use fracsum_core::blocks::{v_block, w_block, wj_closed};
use fracsum_core::directsum::{v_direct, w_direct, wj_direct, EvalContext};
use fracsum_core::exactnum::{int, parse_rational, ratio};
use fracsum_core::Rational;

fn ctx(a: Rational, b: Rational, x: Rational) -> EvalContext {
    EvalContext::from_values(a, b, x).unwrap()
}

#[test]
fn below_a_every_term_is_unfloored() {
    // x < a: W = V = cx·Σ 1/((n+a)(n+b)) = x·Σ_{0≤i<c} 1/(a+i) for integer c
    let c = ctx(int(1), int(3), ratio(3, 4));
    let expected = ratio(3, 4) * (int(1) + ratio(1, 2));
    for v in [w_direct(&c, 1e-25).unwrap(), w_block(&c, 1e-25).unwrap(), v_block(&c, 1e-25).unwrap()] {
        assert!(v.contains(&expected), "{v}");
    }
}

#[test]
fn x_two_unit_gap() {
    // n=0: {2}-{1} = 0; n=1: {1}-{2/3} = -2/3; the rest telescopes to 2/3
    let c = ctx(int(1), int(2), int(2));
    assert!(w_direct(&c, 1e-25).unwrap().contains(&ratio(4, 3)));
    assert!(w_block(&c, 1e-25).unwrap().contains(&ratio(4, 3)));
    assert!(v_direct(&c, 1e-25).unwrap().contains(&int(0)));
    assert!(v_block(&c, 1e-25).unwrap().contains(&int(0)));
}

#[test]
fn half_integer_endpoints() {
    // n=0: {2}-{2/3} = -2/3; for n ≥ 1 both quotients are below 1 and the
    // differences telescope to 1/(3/2) = 2/3
    let c = ctx(ratio(1, 2), ratio(3, 2), int(1));
    assert!(v_block(&c, 1e-25).unwrap().contains(&int(0)));
    assert!(w_block(&c, 1e-25).unwrap().contains(&ratio(4, 3)));
}

#[test]
fn w1_matches_recorded_value() {
    let c = ctx(int(1), int(2), int(100));
    let recorded = parse_rational(include_str!("data/wj_100_1_2_j1.txt").trim()).unwrap();
    assert_eq!(wj_direct(&c, 1).unwrap(), recorded);
    assert!(wj_closed(1, &c, 1e-25).unwrap().contains(&recorded));
}

#[test]
fn parse_accepts_decimal_forms() {
    assert_eq!(parse_rational("1e6").unwrap(), int(1_000_000));
    assert_eq!(parse_rational("2.5e-3").unwrap(), ratio(1, 400));
    assert_eq!(parse_rational("-7/21").unwrap(), ratio(-1, 3));
    assert!(parse_rational("1/0").is_err());
    assert!(parse_rational("abc").is_err());
}
