#![no_main]

use libfuzzer_sys::fuzz_target;
use uav_pdc::harness::parse_schemes;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(schemes) = parse_schemes(text) {
        assert!(!schemes.is_empty());
        let joined: Vec<&str> = schemes.iter().map(|s| s.as_str()).collect();
        assert_eq!(parse_schemes(&joined.join(",")).expect("re-parse"), schemes);
    }
});
