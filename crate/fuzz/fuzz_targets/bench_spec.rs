#![no_main]

use ilc_core::bench::BenchmarkSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(spec) = BenchmarkSpec::from_json_str(s) {
            assert!(!spec.solvers.is_empty() && spec.budget > 0);
            for cfg in &spec.solvers {
                let _ = cfg.validate();
                let _ = cfg.label();
            }
        }
    }
});
