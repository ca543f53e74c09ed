#![no_main]

use compresslab::julia::parse_pgm;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(g) = parse_pgm(data) {
        assert_eq!(g.pixels.len(), g.width * g.height);
        assert!(g.pixels.iter().all(|&p| p <= g.maxval));
    }
});
