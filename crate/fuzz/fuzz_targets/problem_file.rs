#![no_main]

use libfuzzer_sys::fuzz_target;
use momentrelax::certificates::Statement;
use momentrelax::problem::Problem;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(problem) = Problem::parse(text) {
        let _ = problem.x_samples();
        for name in problem.file.run.certificates.iter().flatten() {
            let _ = Statement::parse(name);
        }
    }
});
