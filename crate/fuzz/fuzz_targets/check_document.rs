#![no_main]

use gke::analysis::minimally_focus;
use gke::export::{proof_stats, to_dot};
use gke::{check_derivation, Derivation};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(t) = gke::parse_proof_document(text) else { return };
    if t.size() > 2000 {
        return;
    }
    let d = Derivation::from_tree(&t);
    let report = check_derivation(&d);
    let stats = proof_stats(&d);
    assert_eq!(stats.accepted, report.accepted);
    let _ = to_dot(&d);
    if report.accepted {
        let normal = minimally_focus(&d);
        assert_eq!(normal.sequent, t.sequent);
        assert!(check_derivation(&Derivation::from_tree(&normal)).accepted);
    }
});
