#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(table) = ipcw::io::read_bandwidth_table(data) {
        let origin = vec![0.0; table.dim()];
        let h = table.lookup(&origin);
        assert!(h > 0.0);
    }
});
