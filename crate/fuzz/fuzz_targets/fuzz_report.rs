#![no_main]

use libfuzzer_sys::fuzz_target;

// Reports round-trip through their own parser; arbitrary JSON-ish bytes
// must be rejected gracefully.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = rwre_harness::RunReport::from_json(text);
});
