#![no_main]

use ilc_core::SystemFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(file) = SystemFile::from_json_str(s) else {
        return;
    };
    let Ok(ss) = file.state_space() else {
        return;
    };
    // keep lifted operators small
    if file.n.saturating_mul(file.n).saturating_mul(file.n_i).saturating_mul(file.n_o) > 1 << 16 {
        return;
    }
    if let Ok(j) = ilc_core::lift(&ss, file.n) {
        let f = j.input_zeros();
        assert!(j.apply(&f).unwrap().is_zero());
    }
});
