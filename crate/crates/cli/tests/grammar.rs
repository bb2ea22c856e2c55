//! Every argument vector either runs or fails with a usage message.

use proptest::prelude::*;

fn token() -> impl Strategy<Value = String> {
    prop_oneof![
        prop_oneof![
            Just("classify"), Just("singularity"), Just("slide-map"), Just("transform-check"), Just("sweep"),
            Just("scenario"), Just("list"), Just("show"),
        ],
        prop_oneof![
            Just("--a1"), Just("--a2"), Just("--b1"), Just("--b2"), Just("--alpha"), Just("--scenario"),
            Just("--steps"), Just("--range"), Just("--scales"), Just("--seed"), Just("--view"), Just("--frob"),
            Just("-x"),
        ],
        prop_oneof![
            Just("1"), Just("-1"), Just("0.2"), Just("-2"), Just("3"), Just("nan"), Just("inf"), Just("abc"),
            Just("visible-nf"), Just("example-ii"), Just("1e-1,1e-2"), Just("-1:1"), Just("x2"), Just(""),
        ],
    ]
    .prop_map(str::to_string)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 400, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn argv_parses_or_explains(tokens in proptest::collection::vec(token(), 0..8)) {
        let argv: Vec<String> = std::iter::once("twofold".to_string()).chain(tokens).collect();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = twofold_cli::run(&argv, &mut out, &mut err);
        let err = String::from_utf8(err).unwrap();
        match code {
            0 => prop_assert!(!out.is_empty(), "{argv:?} printed nothing"),
            2 => prop_assert!(err.to_lowercase().contains("usage"), "{argv:?}: {err}"),
            other => prop_assert!(false, "{argv:?} exited {other}: {err}"),
        }
    }
}
