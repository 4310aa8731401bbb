#![no_main]

use libfuzzer_sys::fuzz_target;
use molcomm::pulse::{estimate_delay_spread, ingest_trace_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(trace) = ingest_trace_csv(data) else {
        return;
    };
    assert!(trace.samples.iter().all(|s| *s >= 0.0));
    if let Ok(d) = estimate_delay_spread(&trace) {
        assert!(d.tau >= 0.0);
    }
});
