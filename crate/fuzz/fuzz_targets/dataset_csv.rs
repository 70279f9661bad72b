#![no_main]

use libfuzzer_sys::fuzz_target;
use sicbo::nn::{read_dataset_csv, write_dataset_csv};

fuzz_target!(|data: &[u8]| {
    let n_train = data.first().map_or(0, |b| (*b % 8) as usize);
    if let Ok(ds) = read_dataset_csv(data.get(1..).unwrap_or_default(), n_train) {
        let mut buf = Vec::new();
        write_dataset_csv(&ds, &mut buf).expect("writing a parsed dataset");
        let again = read_dataset_csv(buf.as_slice(), n_train).expect("reparsing written dataset");
        assert_eq!(again, ds);
    }
});
