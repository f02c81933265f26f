//! Bell and GHZ states, a two-qubit Pauli measurement and bipartite
//! entropies on a small tableau.

use hyperdiamond::error::Result;
use hyperdiamond::pauli::{PauliOperator, Sign};
use hyperdiamond::stabilizer::{CutSpec, OutcomeSource, Tableau};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut t = Tableau::new_computational_basis(3)?;
    t.apply_hadamard(0)?;
    t.apply_cnot(0, 1)?;
    t.apply_cnot(1, 2)?;
    print!("{}", t.dump());
    for region in [vec![0], vec![0, 1], vec![]] {
        let cut = CutSpec::new(3, region.clone())?;
        println!("S({region:?}) = {}", t.entropy_of_cut(&cut));
    }

    let zx: PauliOperator = "+ZXI".parse()?;
    let m = t.measure_pauli(&zx, OutcomeSource::<ChaCha8Rng>::Forced(Sign::Plus))?;
    println!("measured {zx}: outcome {:?}, deterministic {}", m.outcome, m.deterministic);
    println!("S([0]) after measurement = {}", t.entropy_of_cut(&CutSpec::new(3, [0])?));
    t.check_invariants()?;
    Ok(())
}
