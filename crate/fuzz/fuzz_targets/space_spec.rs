#![no_main]

use bmcouple::SpaceSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(space) = data.parse::<SpaceSpec>() {
        let again: SpaceSpec = space.to_string().parse().expect("rendered spaces parse");
        assert_eq!(again, space);
    }
});
