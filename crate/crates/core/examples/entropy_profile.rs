//! Entanglement profile S(x, t) of one realization of the joined-halves
//! protocol at d=3, L=4.

use hyperdiamond::error::Result;
use hyperdiamond::experiment::{run_realization, ProtocolConfig};
use hyperdiamond::seeding::sample_seed;

fn main() -> Result<()> {
    let l = 4;
    for p in [0.05, 0.15] {
        let config = ProtocolConfig::new(3, l, p);
        let record = run_realization(&config, sample_seed(11, 0))?;
        println!("p = {p}");
        for (t, prof) in record.times.iter().zip(&record.profiles) {
            let centre: Vec<u32> = prof[2 * l - 3..=2 * l + 3].to_vec();
            println!("  t={t:2}  S(x), |x|<=3: {centre:?}  dS(+-1)={:?}", record.delta(*t, 1).unwrap());
        }
    }
    Ok(())
}
