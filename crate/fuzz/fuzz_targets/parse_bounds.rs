#![no_main]

use compresslab::julia::Bounds;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    // Display and FromStr must agree on every accepted rectangle.
    if let Ok(b) = data.parse::<Bounds>() {
        let again: Bounds = b.to_string().parse().expect("displayed bounds parse");
        assert_eq!(again, b);
    }
});
