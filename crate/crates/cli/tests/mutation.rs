use noisyrank::verify::{inverted_keep_rule, standard_keep_rule, two_element_exactness};

#[test]
fn inverted_keep_ratio_is_caught_by_the_two_element_check() {
    let good = two_element_exactness(20_000, standard_keep_rule, 4);
    assert!(good.passed, "{}", good.line());
    let planted = two_element_exactness(20_000, inverted_keep_rule, 4);
    assert!(!planted.passed, "{}", planted.line());
    assert!(planted.metric > 0.1, "{}", planted.line());
}
