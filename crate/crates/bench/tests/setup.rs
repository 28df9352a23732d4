use hylp::desk::desk_suite;
use hylp_bench::{instance, prepared, BENCH_MODELS};

#[test]
fn bench_models_exist_and_prepare() {
    let names: Vec<String> = desk_suite().into_iter().map(|i| i.name).collect();
    for name in BENCH_MODELS {
        assert!(names.iter().any(|n| n == name), "{name}");
        let p = prepared(name);
        assert!(p.m() > 0 && p.n() >= p.m());
        assert!(p.a.row_inf_norms().iter().all(|&v| (0.5..=2.0).contains(&v)));
    }
}

#[test]
#[should_panic(expected = "no desk instance")]
fn unknown_model_panics() {
    instance("nope");
}
