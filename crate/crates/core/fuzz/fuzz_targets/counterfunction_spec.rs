#![no_main]

use fejer_core::moduli::counter::tilde_iterate;
use fejer_core::moduli::{Budget, CounterfunctionSpec, Ctx, ExtNat};
use libfuzzer_sys::fuzz_target;
use num_bigint::BigUint;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = CounterfunctionSpec::parse_short(text) else { return };
    let f = spec.build();
    let budget = Budget { max_bits: 64, max_steps: 10_000, ..Budget::default() };
    let mut ctx = Ctx::new(budget, 64);
    for n in [0u32, 1, 7, 1000] {
        let _ = f.eval(&mut ctx, &BigUint::from(n));
    }
    let _ = tilde_iterate(&mut ctx, &f, &ExtNat::from_u64(50));
});
