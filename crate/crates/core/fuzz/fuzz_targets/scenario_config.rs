#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(list) = fejer_core::scenario::parse_config(text) {
            for sc in list {
                let again = serde_json::to_string(&sc).expect("serializes");
                fejer_core::scenario::Scenario::from_json(&again).expect("a parsed scenario reparses");
            }
        }
    }
});
