#![no_main]

use imbench_core::dataset::ingest_csv_str;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(content) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((ds, report)) = ingest_csv_str(content, "Y") {
        // Parsed datasets must be internally consistent.
        assert_eq!(report.n_rows_kept, ds.n_rows());
        assert!(report.n_rows_kept + report.dropped_missing <= report.n_rows_read + 1);
        for f in &ds.features {
            assert_eq!(f.values.len(), ds.n_rows());
        }
        assert!(ds.outcome.iter().all(|&y| y <= 1));
        // Round-trip: serialization of an ingested dataset re-ingests.
        let text = ds.to_csv_string();
        let _ = ingest_csv_str(&text, "Y");
    }
});
