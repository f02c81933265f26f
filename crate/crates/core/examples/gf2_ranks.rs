//! Bit-packed GF(2) ranks: a full elimination per prefix against one
//! incremental sweep.

use std::time::Instant;

use hyperdiamond::error::Result;
use hyperdiamond::gf2::{words_for, BitMatrix, XorBasis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let m = BitMatrix::from_bit_strings(&["1100", "0110", "1010", "0001"])?;
    println!("{m:?}rank = {}", m.rank());

    let (rows, cols) = (2048, 2048);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut big = BitMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            if rng.random::<bool>() {
                big.set(r, c, true);
            }
        }
    }
    let boundaries: Vec<usize> = (0..=rows).step_by(128).collect();

    let start = Instant::now();
    let per_prefix: Vec<usize> = boundaries
        .iter()
        .map(|&b| {
            let mut sub = BitMatrix::zeros(b, cols);
            for r in 0..b {
                sub.set_row_words(r, big.row(r));
            }
            sub.rank()
        })
        .collect();
    let slow = start.elapsed();

    let start = Instant::now();
    let sweep = XorBasis::prefix_ranks(cols, (0..rows).map(|r| big.row(r)), &boundaries)?;
    let fast = start.elapsed();

    assert_eq!(per_prefix, sweep);
    println!("{} prefixes of a {rows}x{cols} matrix ({} words per row)", boundaries.len(), words_for(cols));
    println!("per-prefix elimination {slow:?}, incremental sweep {fast:?}");
    Ok(())
}
