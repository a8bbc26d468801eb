#![no_main]

use imbench_core::dataset::DatasetMeta;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(content) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(meta) = DatasetMeta::from_json_str(content) {
        if let Some(spec) = &meta.spec {
            let _ = spec.validate();
        }
        let _ = serde_json_round_trip(&meta);
    }
});

fn serde_json_round_trip(meta: &DatasetMeta) -> DatasetMeta {
    let text = serde_json::to_string(meta).expect("serialize");
    DatasetMeta::from_json_str(&text).expect("round trip")
}
