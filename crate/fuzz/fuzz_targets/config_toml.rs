#![no_main]

use libfuzzer_sys::fuzz_target;
use sicbo_cli::config::{resolve_bench, resolve_nn, resolve_run};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = sicbo_cli::parse_config(text) {
        // resolution must reject bad values without panicking; example2 is
        // skipped because drawing its landscape dominates the run time
        if cfg.run.problem.as_deref().is_some_and(|p| !p.trim().eq_ignore_ascii_case("example2")) {
            let _ = resolve_run(&cfg.run);
        }
        let _ = resolve_bench(&cfg.bench);
        let _ = resolve_nn(&cfg.nn);
    }
});
