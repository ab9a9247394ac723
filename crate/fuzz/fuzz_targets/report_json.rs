#![no_main]

use bmcouple::verify::report::Summary;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(summary) = Summary::from_json(data) {
        let text = summary.to_json().expect("decoded summaries encode");
        assert_eq!(Summary::from_json(&text).expect("round trip"), summary);
    }
});
