use earnings_distill::corpus::split_sentences;

const RAW: &str = include_str!("fixtures/segmentation_raw.txt");
const EXPECTED: &str = include_str!("fixtures/segmentation_expected.txt");

#[test]
fn matches_hand_segmented_fixture() {
    let expected: Vec<&str> = EXPECTED.lines().collect();
    assert_eq!(expected.len(), 50);
    let got = split_sentences(RAW);
    for (i, (g, e)) in got.iter().zip(&expected).enumerate() {
        assert_eq!(g, e, "sentence {}", i + 1);
    }
    assert_eq!(got.len(), expected.len());
}

#[test]
fn fixture_preserves_non_whitespace() {
    let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
    assert_eq!(strip(&split_sentences(RAW).join(" ")), strip(RAW));
}

#[test]
fn guidance_example_is_one_sentence() {
    assert!(EXPECTED.lines().any(|l| l == "We beat guidance, i.e. by 3.2%."));
    assert_eq!(split_sentences("We beat guidance, i.e. by 3.2%.").len(), 1);
}
