//! One disordered realization of the hyperdiamond circuit: gate statistics,
//! the event dump and the operator-spreading (butterfly) velocity.

use hyperdiamond::circuit::{butterfly_probe, sample_realization, GateKind};
use hyperdiamond::error::Result;
use hyperdiamond::lattice::LatticeSpec;

fn main() -> Result<()> {
    let spec = LatticeSpec::protocol(3, 4)?;
    for p in [0.0, 0.1, 0.5] {
        let c = sample_realization(&spec, p, 8, 7)?;
        let (mut cnot, mut meas, mut had) = (0, 0, 0);
        for e in c.events() {
            match e.kind {
                GateKind::Cnot { .. } => cnot += 1,
                GateKind::MeasZx { .. } => meas += 1,
                GateKind::Hadamard { .. } => had += 1,
            }
        }
        println!("p={p}: {cnot} CNOT, {meas} MEAS_ZX, {had} H over {} steps", c.steps());
    }

    let small = LatticeSpec::protocol(1, 4)?;
    let c = sample_realization(&small, 0.25, 2, 3)?;
    print!("{}", c.dump());

    for d in 1..=3 {
        let probe = butterfly_probe(&LatticeSpec::protocol(d, 6)?, 1)?;
        println!("d={d}: radius per period {:?}, v_B = {:.2}", probe.radii, probe.velocity);
    }
    Ok(())
}
