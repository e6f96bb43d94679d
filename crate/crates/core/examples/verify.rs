//! Runs the invariant suite, then again with a deliberately wrong transpose.

use rotvq::verify::{run_suite, Fault, VerifyOptions};

fn main() -> rotvq::Result<()> {
    let clean = run_suite(&VerifyOptions { samples: 2000, ..Default::default() })?;
    for p in &clean.properties {
        println!("{} {:<42} {:.2e}", if p.passed { "ok  " } else { "FAIL" }, p.name, p.max_error);
    }
    let broken = run_suite(&VerifyOptions {
        samples: 2000,
        fault: Some(Fault::FlipTransposeSign),
        ..Default::default()
    })?;
    let names: Vec<&str> = broken.failures().map(|p| p.name.as_str()).collect();
    println!("with a flipped transpose: {}", names.join(", "));
    Ok(())
}
