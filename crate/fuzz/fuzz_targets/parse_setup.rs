#![no_main]

use amplab::setup::{canonicalize, parse};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(expr) = parse(text) else {
        return;
    };
    // Printing must reparse to the same tree.
    let printed = expr.to_string();
    let again = parse(&printed).expect("printed expression reparses");
    assert_eq!(again.without_spans(), expr.without_spans());

    if let Ok(setup) = canonicalize(&expr) {
        let leaf = parse(&setup.to_string()).expect("canonical text reparses");
        assert_eq!(canonicalize(&leaf).expect("canonical text is valid"), setup);
    }
});
