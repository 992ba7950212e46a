#![no_main]

use libfuzzer_sys::fuzz_target;

use ipcw_cli::parse;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse::parse_region(text);
    if let Ok(grid) = parse::parse_h_grid(text) {
        assert!(grid.iter().all(|h| *h > 0.0));
    }
    let _ = parse::parse_psi(text);
    let _ = parse::parse_bandwidth(text);
    let _ = parse::parse_list(text);
    let _ = parse::parse_count_list(text);
    let _ = parse::parse_bounds(text);
});
