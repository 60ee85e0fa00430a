use costlam_core::examples;

macro_rules! golden {
    ($($name:ident => $check:path),* $(,)?) => {
        $(
            #[test]
            fn $name() {
                if let Err(e) = $check() {
                    panic!("{e}");
                }
            }
        )*
    };
}

golden! {
    eta_discrepancy => examples::example_eta_discrepancy,
    cps_translation_and_simulation => examples::example_cps,
    value_named_form => examples::example_value_named,
    closure_conversion => examples::example_closure_conversion,
    hoisting_orderings => examples::example_hoisting_orderings,
    labelling => examples::example_labelling,
    typed_compilation => examples::example_typed_compilation,
    memory_errors => examples::example_memory_errors,
    types_and_effects => examples::example_types_and_effects,
}

#[test]
fn every_example_is_listed() {
    assert_eq!(examples::ALL.len(), 9);
    for (name, check) in examples::ALL {
        assert!(check().is_ok(), "{name}");
    }
}
