#![no_main]

use libfuzzer_sys::fuzz_target;
use momentrelax::problem::Poly;

fuzz_target!(|data: &[u8]| {
    let Ok(poly) = serde_json::from_slice::<Poly>(data) else {
        return;
    };
    for n in 0..3 {
        if poly.validate(n).is_ok() {
            let x = vec![0.5; n];
            let _ = poly.eval(&x);
        }
    }
});
