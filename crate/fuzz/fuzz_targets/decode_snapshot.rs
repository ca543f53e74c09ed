#![no_main]

use compresslab::sim::{decode_snapshot, encode_snapshot};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Anything that decodes must re-encode to the same bytes.
    if let Ok(chain) = decode_snapshot(data) {
        assert_eq!(encode_snapshot(&chain), data);
    }
});
