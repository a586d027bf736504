#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = gke::parse_proof_document(text) {
        let printed = gke::print_proof_document(&t);
        assert_eq!(gke::parse_proof_document(&printed).as_ref(), Ok(&t));
    }
});
