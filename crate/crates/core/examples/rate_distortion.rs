//! Rate–distortion benchmark over a directory of PNGs, CSV to stdout.
//!
//! ```bash
//! cargo run --release -p coin --example rate_distortion -- path/to/kodak 50000
//! ```

use std::path::PathBuf;

use coin::bench::{run_bench, write_bench_csv, BenchConfig};
use coin::TrainConfig;

fn main() -> coin::Result<()> {
    let mut args = std::env::args().skip(1);
    let corpus = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures"));
    let iterations = args.next().and_then(|s| s.parse().ok()).unwrap_or(300);

    let cfg = BenchConfig {
        labels: vec![0.07, 0.15, 0.3],
        train: TrainConfig {
            iterations,
            ..TrainConfig::default()
        },
        threads: 0,
    };
    let report = run_bench(&corpus, &cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    write_bench_csv(&report, std::io::stdout())?;
    Ok(())
}
