#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 65_536 {
        return;
    }
    if let Ok(text) = std::str::from_utf8(data) {
        // Ok or a located error, never a panic
        if let Err(e) = tempnet::io::parse_problem(text) {
            assert!(e.line() >= 1);
        }
    }
});
