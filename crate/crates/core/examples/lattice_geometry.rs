//! The protocol lattice: sizes, CNOT targets and the cut groups along x.

use hyperdiamond::error::Result;
use hyperdiamond::lattice::{LatticeSpec, Site};

fn main() -> Result<()> {
    for (d, l) in [(1, 8), (2, 4), (3, 4)] {
        let spec = LatticeSpec::protocol(d, l)?;
        println!(
            "d={d} L={l}: extents {:?}, {} sites, {} cuts",
            spec.extents(),
            spec.num_sites(),
            spec.cut_positions().len()
        );
    }

    let spec = LatticeSpec::protocol(3, 4)?;
    let origin = Site::new(vec![0, 0, 0]);
    let inner = Site::new(vec![5, 1, 2]);
    for s in [&origin, &inner] {
        let targets: Vec<Vec<usize>> = spec.target_sites(s)?.into_iter().map(|t| t.coords).collect();
        println!("{:?} ({:?}) drives {targets:?}", s.coords, s.parity());
    }
    let groups = spec.cut_prefix_groups();
    println!("slice x=0 holds sites {:?}..", &groups[0][..4]);
    println!("cut coordinates {:?}", spec.cut_positions());
    Ok(())
}
