#![no_main]
use libfuzzer_sys::fuzz_target;

const TREE: &str = "%phylogeny\nroot R\nedge R E\nedge R F\nedge E A\nedge E B\nedge F C\nedge F D\nedge F \"a:b\"\nedge F a\n";

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let problem = tempnet::io::parse_problem(TREE).expect("fixed tree parses");
    if let Ok(summary) = tempnet::io::parse_contacts(&problem.phylogeny, text) {
        let root = problem.phylogeny.root();
        for pair in summary.pairs() {
            assert_ne!(pair.first(), pair.second());
            assert_ne!(pair.first().base(), root);
            assert_ne!(pair.second().base(), root);
        }
    }
});
