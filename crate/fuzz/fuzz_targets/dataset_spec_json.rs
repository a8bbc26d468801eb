#![no_main]

use imbench_core::datagen::{cell_probabilities, DatasetSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(content) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = DatasetSpec::from_json_str(content) {
        // A validated spec has feasible cells for every binary feature.
        for b in &spec.binary_features {
            let cells = cell_probabilities(&spec.contingency(b)).expect("validated spec");
            let total = cells.pi_00 + cells.pi_01 + cells.pi_10 + cells.pi_11;
            assert!((total - 1.0).abs() < 1e-9);
        }
    }
});
