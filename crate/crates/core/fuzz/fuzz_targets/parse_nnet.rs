#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Must reject or accept without panicking; accepted networks round-trip.
    if let Ok(net) = relucheck::model_io::parse_nnet(text) {
        let again = relucheck::model_io::serialize_nnet(&net);
        let _ = relucheck::model_io::parse_nnet(&again).unwrap();
    }
});
