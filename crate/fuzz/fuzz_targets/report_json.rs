#![no_main]

use libfuzzer_sys::fuzz_target;
use sicbo_cli::io::{parse_nn_summary_json, parse_report_json, to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = parse_report_json(text) {
        let again = parse_report_json(&to_json(&report).expect("serializing")).expect("reparsing");
        assert_eq!(again.report.iterations, report.report.iterations);
    }
    let _ = parse_nn_summary_json(text);
});
