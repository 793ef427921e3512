#![no_main]

use libfuzzer_sys::fuzz_target;
use plurality_core::parse::{parse_key_values, SpecFields};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(map) = parse_key_values(text) else {
        return;
    };
    if let Ok(fields) = SpecFields::from_map(&map) {
        // building validates but never runs trials
        let _ = fields.build();
    }
});
