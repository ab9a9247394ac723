#![no_main]

use bmcouple::config::SimConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(cfg) = SimConfig::parse(data) {
        let again = SimConfig::parse(&cfg.render()).expect("rendered configs parse");
        assert_eq!(again, cfg);
        // Validation may fail but must not panic.
        let _ = cfg.validate();
    }
});
