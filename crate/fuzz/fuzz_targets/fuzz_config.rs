#![no_main]

use libfuzzer_sys::fuzz_target;

// The config parser and the law constructors are the trust boundary for
// untrusted text: they must reject bad input with errors, never panic.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = rwre_harness::parse_config(text) {
        let _ = cfg.a_law();
        let _ = cfg.offspring_law();
        let _ = cfg.seed(None);
        let _ = cfg.get_f64_list("analysis.lambda.grid");
    }
});
