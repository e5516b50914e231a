#![no_main]

use libfuzzer_sys::fuzz_target;
use nls_solitons::system_model::parse_system_json;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = parse_system_json(text) {
            // anything accepted must also pass validation
            spec.validate().expect("parsed system fails validation");
        }
    }
});
