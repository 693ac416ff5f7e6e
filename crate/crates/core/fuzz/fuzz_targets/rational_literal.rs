#![no_main]

use fejer_core::moduli::rational::{parse_rational, rat_to_string};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(r) = parse_rational(text) {
            assert_eq!(parse_rational(&rat_to_string(&r)).expect("canonical form parses"), r);
        }
    }
});
