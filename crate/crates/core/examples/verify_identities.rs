// Runs the numerical identity checks on seeded random instances and prints
// the worst deviation of each against its tolerance.

use graph_diffusion_cf::{run_battery, Result};

pub fn run_example() -> Result<()> {
    let report = run_battery(0, 10, &[], None)?;
    println!("{report}");
    assert!(report.passed);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
