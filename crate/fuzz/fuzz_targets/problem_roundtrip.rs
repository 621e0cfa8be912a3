#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 65_536 {
        return;
    }
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(problem) = tempnet::io::parse_problem(text) else { return };
    let written = tempnet::io::write_problem(&problem);
    let back = tempnet::io::parse_problem(&written).expect("canonical text parses");
    assert_eq!(back, problem);
    assert_eq!(tempnet::io::write_problem(&back), written);
});
