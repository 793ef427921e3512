#![no_main]

use libfuzzer_sys::fuzz_target;
use plurality_core::parse::{parse_list, parse_population, BiasRule, ColorRule};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(n) = parse_population(text) {
        assert!(n > 0);
    }
    if let Ok(rule) = text.parse::<BiasRule>() {
        let _ = rule.resolve(1_000_000);
    }
    if let Ok(rule) = text.parse::<ColorRule>() {
        let _ = rule.resolve(1_000_000);
    }
    let _ = parse_list(text, parse_population);
    let _ = parse_list(text, |s| s.parse::<BiasRule>());
});
