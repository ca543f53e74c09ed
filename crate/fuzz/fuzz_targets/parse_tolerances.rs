#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    // accepted files hold only positive finite tolerances
    if let Ok(t) = compresslab::report::parse_tolerances(data) {
        assert!(t.validate().is_ok());
    }
});
