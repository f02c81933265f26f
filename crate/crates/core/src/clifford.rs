//! Uniform sampling of Clifford group elements on `m` qubits.
//!
//! A Clifford (modulo global phase) is fixed by the images of `X_k` and `Z_k`
//! for every qubit: a symplectic basis `(f_k, u_k)` of `F_2^{2m}` plus one
//! sign per image. The basis is drawn pair by pair: `u_k` uniformly among the
//! nonzero vectors of the symplectic complement left over by earlier pairs,
//! then `f_k` uniformly among vectors of that complement with
//! `ω(u_k, f_k) = 1`. The number of options at each step does not depend on
//! the earlier picks, so every symplectic matrix is equally likely.
//!
//! The remaining complement is carried as an explicit symplectic basis and
//! updated with at most two transvections per step, giving `O(m^2)` word
//! operations overall.

use rand::Rng;

use crate::gf2::words_for;
use crate::pauli::{PauliOperator, Sign};

/// A vector of `F_2^{2m}` in `(x | z)` form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct SymVec {
    pub x: Vec<u64>,
    pub z: Vec<u64>,
}

impl SymVec {
    fn zero(words: usize) -> Self {
        Self {
            x: vec![0; words],
            z: vec![0; words],
        }
    }

    fn unit_x(words: usize, q: usize) -> Self {
        let mut v = Self::zero(words);
        v.x[q / 64] |= 1 << (q % 64);
        v
    }

    fn unit_z(words: usize, q: usize) -> Self {
        let mut v = Self::zero(words);
        v.z[q / 64] |= 1 << (q % 64);
        v
    }

    #[inline]
    fn omega(&self, other: &SymVec) -> bool {
        crate::pauli::anticommutes(&self.x, &self.z, &other.x, &other.z)
    }

    #[inline]
    fn add(&mut self, other: &SymVec) {
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a ^= b;
        }
        for (a, b) in self.z.iter_mut().zip(&other.z) {
            *a ^= b;
        }
    }

    fn is_zero(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }
}

/// Image of one generator pair under a sampled Clifford.
#[derive(Clone, Debug)]
pub struct GeneratorImages {
    /// Image of `X_k`.
    pub x_image: PauliOperator,
    /// Image of `Z_k`.
    pub z_image: PauliOperator,
}

/// A uniformly random element of the `m`-qubit Clifford group, given as the
/// images of the generators `X_k`, `Z_k`.
#[derive(Clone, Debug)]
pub struct RandomClifford {
    m: usize,
    images: Vec<GeneratorImages>,
}

impl RandomClifford {
    pub fn sample<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        let basis = sample_symplectic_basis(m, rng);
        let images = basis
            .into_iter()
            .map(|(f, u)| GeneratorImages {
                x_image: PauliOperator::from_words(m, f.x, f.z, Sign::from_bit(rng.random_bool(0.5))),
                z_image: PauliOperator::from_words(m, u.x, u.z, Sign::from_bit(rng.random_bool(0.5))),
            })
            .collect();
        Self { m, images }
    }

    pub fn num_qubits(&self) -> usize {
        self.m
    }

    pub fn images(&self) -> &[GeneratorImages] {
        &self.images
    }
}

/// Applies `v <- v + ω(v, h) h` to every vector in `vs`.
fn transvect(vs: &mut [SymVec], h: &SymVec) {
    for v in vs.iter_mut() {
        if v.omega(h) {
            v.add(h);
        }
    }
}

/// Returns the pairs `(f_k, u_k)`, `ω(f_j, u_k) = δ_jk`, all other pairings 0.
pub(crate) fn sample_symplectic_basis<R: Rng + ?Sized>(
    m: usize,
    rng: &mut R,
) -> Vec<(SymVec, SymVec)> {
    let words = words_for(m);
    // Remaining complement as pairs (e_i, g_i) with ω(e_i, g_i) = 1. Layout:
    // es[i], gs[i].
    let mut es: Vec<SymVec> = (0..m).map(|q| SymVec::unit_z(words, q)).collect();
    let mut gs: Vec<SymVec> = (0..m).map(|q| SymVec::unit_x(words, q)).collect();
    let mut out = Vec::with_capacity(m);

    while !es.is_empty() {
        let j = es.len();
        // u = Σ a_i e_i + b_i g_i, nonzero.
        let (a, b) = loop {
            let a: Vec<bool> = (0..j).map(|_| rng.random_bool(0.5)).collect();
            let b: Vec<bool> = (0..j).map(|_| rng.random_bool(0.5)).collect();
            if a.iter().chain(&b).any(|&c| c) {
                break (a, b);
            }
        };
        let mut u = SymVec::zero(words);
        for i in 0..j {
            if a[i] {
                u.add(&es[i]);
            }
            if b[i] {
                u.add(&gs[i]);
            }
        }
        debug_assert!(!u.is_zero());

        // Map e_0 to u by transvections acting on the whole remaining basis.
        let x = es[0].clone();
        if u != x {
            if x.omega(&u) {
                let mut h = x.clone();
                h.add(&u);
                transvect(&mut es, &h);
                transvect(&mut gs, &h);
            } else {
                // Need w with ω(x, w) = ω(u, w) = 1. Here ω(e_0, u) = b_0 = 0.
                let mut w = gs[0].clone();
                if !a[0] {
                    let i = (1..j)
                        .find(|&i| a[i] || b[i])
                        .expect("u differs from e_0 and is nonzero");
                    if a[i] {
                        w.add(&gs[i]);
                    } else {
                        w.add(&es[i]);
                    }
                }
                let mut h1 = x.clone();
                h1.add(&w);
                let mut h2 = w;
                h2.add(&u);
                transvect(&mut es, &h1);
                transvect(&mut gs, &h1);
                transvect(&mut es, &h2);
                transvect(&mut gs, &h2);
            }
        }
        debug_assert_eq!(es[0], u);

        // f uniform over {f : ω(u, f) = 1} within the current complement.
        let mut f = gs[0].clone();
        if rng.random_bool(0.5) {
            f.add(&u);
        }
        for i in 1..j {
            if rng.random_bool(0.5) {
                f.add(&es[i]);
            }
            if rng.random_bool(0.5) {
                f.add(&gs[i]);
            }
        }

        es.swap_remove(0);
        gs.swap_remove(0);
        // Project the rest off span(u, f); they are already orthogonal to u.
        for v in es.iter_mut().chain(gs.iter_mut()) {
            if v.omega(&f) {
                v.add(&u);
            }
        }
        out.push((f, u));
    }
    out
}
