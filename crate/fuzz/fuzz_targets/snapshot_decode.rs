#![no_main]

use libfuzzer_sys::fuzz_target;
use nls_solitons::snapshot::{decode, encode};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = decode(data) {
        // a decoded snapshot re-encodes to the same bytes
        assert_eq!(encode(&s.grid, s.t, &s.u), data);
    }
});
