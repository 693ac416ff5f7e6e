#![no_main]

use fejer_core::scenario::{render, Format, ScenarioReports};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(list) = serde_json::from_slice::<Vec<ScenarioReports>>(data) {
        for fmt in [Format::Text, Format::Json, Format::Csv] {
            let _ = render(&list, fmt);
        }
    }
});
