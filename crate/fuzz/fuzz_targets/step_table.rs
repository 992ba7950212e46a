#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(sf) = ipcw::io::read_step_table(data) {
        assert!(sf.jumps().windows(2).all(|w| w[0] < w[1]));
    }
    if let Ok(g) = ipcw::io::read_distribution_table(data) {
        assert!(g.is_distribution_function());
    }
});
