#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(parsed) = ipcw::io::read_dataset(data) else {
        return;
    };
    // anything accepted must survive a write/read round trip
    let mut out = Vec::new();
    ipcw::io::write_dataset(&mut out, &parsed, &[]).unwrap();
    let again = ipcw::io::read_dataset(out.as_slice()).unwrap();
    assert_eq!(parsed, again);
    let _ = ipcw::km_censoring(&parsed);
});
