#![no_main]

use fejer_core::moduli::Budget;
use fejer_core::scenario::certify_pairs;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut words = text.split_whitespace();
    let Some(theorem) = words.next() else { return };
    let pairs: Vec<&str> = words.collect();
    let budget = Budget { max_bits: 64, max_steps: 10_000, max_precision_bits: 256, enum_cap: 1 << 10 };
    let _ = certify_pairs(theorem, &pairs, &budget);
});
