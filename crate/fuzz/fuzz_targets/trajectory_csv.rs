#![no_main]

use bmcouple::verify::trajectory::{parse_csv, to_csv_string};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_csv(data) {
        let text = to_csv_string(&rows).expect("parsed rows encode");
        assert_eq!(parse_csv(text.as_bytes()).expect("round trip"), rows);
    }
});
