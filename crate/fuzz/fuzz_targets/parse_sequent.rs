#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = gke::parse_sequent(text) {
        assert_eq!(gke::parse_sequent(&s.to_string()).as_ref(), Ok(&s));
    }
});
