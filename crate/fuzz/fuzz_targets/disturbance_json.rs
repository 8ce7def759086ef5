#![no_main]

use ilc_core::bench::parse_disturbance;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&shape, rest)) = data.split_first() else {
        return;
    };
    let Ok(s) = std::str::from_utf8(rest) else {
        return;
    };
    let (n, n_o) = (usize::from(shape >> 4) + 1, usize::from(shape & 0x0f) + 1);
    if let Ok(r) = parse_disturbance(s, n, n_o) {
        assert_eq!(r.len(), n * n_o);
        assert!(r.as_slice().iter().all(|x| x.is_finite()));
    }
});
