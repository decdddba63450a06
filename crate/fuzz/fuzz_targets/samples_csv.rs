#![no_main]

use libfuzzer_sys::fuzz_target;
use uav_pdc::harness::io;

fuzz_target!(|data: &[u8]| {
    if let Ok(samples) = io::read_samples(data) {
        let mut buf = Vec::new();
        io::write_samples(&samples, &mut buf).expect("write");
        let back = io::read_samples(buf.as_slice()).expect("re-read");
        assert_eq!(back.len(), samples.len());
        for (a, b) in samples.iter().zip(&back) {
            assert_eq!(a.db().to_bits(), b.db().to_bits());
        }
    }
});
