#![no_main]

use libfuzzer_sys::fuzz_target;
use sicbo_cli::parse_grid_list;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_grid_list::<usize>(text);
    let _ = parse_grid_list::<String>(text);
    if let Ok(values) = parse_grid_list::<f64>(text) {
        let joined: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
        let again = parse_grid_list::<f64>(&joined.join(",")).expect("reparsing joined list");
        assert_eq!(again.len(), values.len());
    }
});
