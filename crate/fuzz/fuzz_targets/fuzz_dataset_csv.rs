#![no_main]

use libfuzzer_sys::fuzz_target;
use molcomm::propagation::{fit_molecular, fit_radio, read_dataset_csv, write_dataset_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(records) = read_dataset_csv(data) else {
        return;
    };
    // whatever parses must survive a write/read round trip
    let mut buf = Vec::new();
    write_dataset_csv(&records, &mut buf, &[]).unwrap();
    assert_eq!(read_dataset_csv(buf.as_slice()).unwrap(), records);
    let _ = fit_radio(&records);
    let _ = fit_molecular(&records);
});
