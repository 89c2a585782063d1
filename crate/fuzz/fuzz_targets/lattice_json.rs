#![no_main]

use amplab::lattice::{build_hamiltonian, LatticeConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = LatticeConfig::from_json(text) else {
        return;
    };
    let back = LatticeConfig::from_json(&cfg.to_json()).expect("serialized lattice reparses");
    assert_eq!(back.to_json(), cfg.to_json());
    if cfg.num_sites() <= 64 {
        let h = build_hamiltonian(&cfg);
        assert_eq!(h.matrix().adjoint(), h.matrix().clone());
    }
});
