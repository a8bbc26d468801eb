#![no_main]

use imbench_core::bench::BenchConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(content) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = BenchConfig::from_toml_str(content) {
        // A config that parses and validates must serialize and reload.
        let echo = cfg.to_toml_string();
        BenchConfig::from_toml_str(&echo).expect("round trip");
    }
});
