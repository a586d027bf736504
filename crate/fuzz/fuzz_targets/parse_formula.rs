#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(f) = gke::parse_formula(text) {
        assert_eq!(gke::parse_formula(&f.to_string()).as_ref(), Ok(&f));
    }
});
