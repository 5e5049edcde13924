use wildkac::models::{build_dgp, build_percolation};
use wildkac::modelfile::ModelSpec;
use wildkac::Error;

#[test]
fn builtins_survive_text() {
    let mut pi = vec![0.0; 9];
    pi[1] = 1.0;
    let specs = [
        build_dgp(1.0, 0.2, 0.05).to_spec(),
        build_dgp(2.0, 0.0, 0.0).to_spec(),
        build_percolation(2, 8, &pi, 1.0, 0.5).unwrap().to_spec(),
        build_percolation(3, 8, &pi, 1.5, 0.0).unwrap().to_spec(),
    ];
    for spec in &specs {
        let back = ModelSpec::parse(&spec.to_text()).unwrap();
        assert_eq!(&back, spec);
        let a = spec.series(&spec.init, 0.7, 1e-9).unwrap();
        let b = back.series(&back.init, 0.7, 1e-9).unwrap();
        assert_eq!(a.law, b.law);
    }
}

#[test]
fn hand_written_file() {
    let text = "\
# liquidity swaps
states a b c
arity 2
lambda 0.5
meet a b -> b a 1
meet b a -> a b 1
meet a c -> c c 0.5
meet a c -> a c 0.5
meet c a -> c c 0.5
meet c a -> c a 0.5
unary decay 0.1
move decay c a 1
init 0.5 0.25 0.25
";
    let spec = ModelSpec::parse(text).unwrap();
    assert_eq!(spec.arity(), 2);
    assert_eq!(spec.lambda, 0.5);
    assert_eq!(spec.total_unary_rate(), 0.1);
    let law = spec.series(&spec.init, 1.0, 1e-10).unwrap().law;
    let ode = wildkac::ode::ode_solve(&spec.generator().unwrap(), &spec.init, 1.0, 1e-3).unwrap();
    assert!(law.l1_distance(&ode).unwrap() < 1e-8);
}

#[test]
fn asymmetric_file_is_rejected_at_its_line() {
    let text = "states a b\narity 2\nmeet a b -> b b 1\n";
    match ModelSpec::parse(text) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a parse error, got {other:?}"),
    }
}
