//! Runs every oracle check and prints the report.

use otfs_detect::sim::run_validate;
use otfs_detect::Result;

fn main() -> Result<()> {
    let report = run_validate(1)?;
    print!("{}", report.render());
    if !report.all_passed() {
        std::process::exit(1);
    }
    Ok(())
}
