#![no_main]

use libfuzzer_sys::fuzz_target;
use molcomm::cli::grid::parse_grid;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((_, values)) = parse_grid(spec) {
        assert!(!values.is_empty() && values.len() <= 1_000_000);
    }
});
