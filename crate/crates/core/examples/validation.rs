//! The brute-force self-checks, including a deliberately broken measurement
//! to show how a failure is reported.

use hyperdiamond::error::Result;
use hyperdiamond::validate::{run_all, Fault, ValidateOptions};

fn main() -> Result<()> {
    let options = ValidateOptions {
        trials: 200,
        ..ValidateOptions::default()
    };
    print!("{}", run_all(&options)?);
    println!("with a sign fault:");
    print!("{}", run_all(&ValidateOptions { fault: Some(Fault::MeasurementSign), ..options })?);
    Ok(())
}
