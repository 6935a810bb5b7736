// A reduced Monte-Carlo sweep over the number of active sensors, written as
// CSV and summarized per method.

use std::collections::BTreeMap;

use lis_beam::harness::{run_experiment, to_csv, ExperimentConfig, Method};
use lis_beam::Result;

pub fn run_example() -> Result<()> {
    let mut config = ExperimentConfig::desk();
    config.trials = 20;
    config.active_counts = vec![2, 4, 8];
    config.methods = vec![Method::UpperBound, Method::Cs];
    let rows = run_experiment(&config)?;

    let mut means: BTreeMap<(String, usize), (f64, usize)> = BTreeMap::new();
    for row in &rows {
        let e = means.entry((row.method_label(), row.m_bar)).or_default();
        e.0 += row.rate_ratio;
        e.1 += 1;
    }
    for ((method, m_bar), (sum, n)) in &means {
        println!("{method:>12} M_bar={m_bar:2}: mean rate ratio {:.3}", sum / *n as f64);
    }
    let csv = to_csv(&rows);
    println!("{} CSV lines, header: {}", csv.lines().count(), csv.lines().next().unwrap_or(""));
    Ok(())
}

fn main() -> Result<()> {
    run_example()
}
