#![no_main]

use dance_core::seqdata::parse_fasta;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(seqs) = parse_fasta(data) {
        let mut out = Vec::new();
        dance_core::seqdata::write_fasta(&mut out, &seqs).unwrap();
        assert_eq!(parse_fasta(&out).unwrap(), seqs);
    }
});
