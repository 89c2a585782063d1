#![no_main]

use amplab::lattice::{build_hamiltonian, build_kernel, Boundary, LatticeConfig};
use amplab::StateSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spec) = StateSpec::from_json(text) else {
        return;
    };
    let cfg = LatticeConfig::uniform(4, 1.0, Boundary::Reflecting).unwrap();
    let k = build_kernel(&build_hamiltonian(&cfg), 0.3).unwrap();
    // Bound the evolution length so long time spans do not stall the run.
    if let StateSpec::Prepared { source, time, .. } = &spec {
        if time.abs_diff(source.time) > 256 {
            return;
        }
    }
    let _ = spec.realize(&cfg, Some(&k));
});
