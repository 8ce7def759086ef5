#![no_main]

use ilc_core::trace::{read_records, write_records};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(records) = read_records(data) else {
        return;
    };
    let mut buf = Vec::new();
    write_records(&records, &mut buf).unwrap();
    let again = read_records(buf.as_slice()).unwrap();
    assert_eq!(again.len(), records.len());
});
