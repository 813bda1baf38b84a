#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((input, objective)) = relucheck::model_io::parse_property(text) {
        let again = relucheck::model_io::serialize_property(&input, &objective);
        let _ = relucheck::model_io::parse_property(&again).unwrap();
    }
});
