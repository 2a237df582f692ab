//! Generate a synthetic minute-CSV dataset for demo runs.
//!
//! Usage: synth_dataset <start YYYY-MM-DD> <n_days> <seed> <output.csv> [golden|hawaii]

use suncluster::solar::{GOLDEN, HAWAII};
use suncluster::synthetic::{generate_csv, SyntheticSpec};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.len() < 5 {
        eprintln!("usage: synth_dataset <start YYYY-MM-DD> <n_days> <seed> <output.csv> [golden|hawaii]");
        std::process::exit(2);
    }
    let start: chrono::NaiveDate = args[1].parse().expect("start date");
    let n_days: usize = args[2].parse().expect("day count");
    let seed: u64 = args[3].parse().expect("seed");
    let site = match args.get(5).map(String::as_str) {
        None | Some("golden") => GOLDEN,
        Some("hawaii") => HAWAII,
        Some(other) => {
            eprintln!("unknown site {other:?}");
            std::process::exit(2);
        }
    };
    let spec = SyntheticSpec::new(site, start, n_days, seed);
    let csv = generate_csv(&spec).expect("generation");
    std::fs::write(&args[4], csv).expect("write output");
    eprintln!("wrote {} days to {}", n_days, args[4]);
}
