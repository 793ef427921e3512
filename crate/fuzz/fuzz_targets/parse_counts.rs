#![no_main]

use libfuzzer_sys::fuzz_target;
use plurality_core::parse::parse_counts;
use plurality_core::Configuration;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(counts) = parse_counts(text) {
        let total: u64 = counts.iter().sum();
        let printed = counts.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        assert_eq!(parse_counts(&printed).unwrap(), counts);
        if let Ok(cfg) = Configuration::new(counts) {
            assert_eq!(cfg.n(), total);
        }
    }
});
