#![no_main]

use libfuzzer_sys::fuzz_target;
use uav_pdc::harness::io;

fuzz_target!(|data: &[u8]| {
    if let Ok(diags) = io::read_diagnostics(data) {
        let mut buf = Vec::new();
        io::write_diagnostics(&diags, &mut buf).expect("write");
        assert_eq!(io::read_diagnostics(buf.as_slice()).expect("re-read"), diags);
    }
});
