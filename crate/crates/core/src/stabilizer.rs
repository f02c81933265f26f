//! Stabilizer-state engine.
//!
//! The tableau is stored column-major: for every qubit `q` there is one bit
//! column over the `n` stabilizer rows for its X part and one for its Z part
//! (and likewise for the destabilizers). Clifford gates then act on whole
//! words of 64 rows at a time, and the stabilizer columns of a cut are exactly
//! the vectors whose span gives the entanglement entropy:
//!
//! `S_A = rank(stabilizers restricted to A) - |A|`.
//!
//! Destabilizers are kept up to sign: their phases never enter an observable,
//! so row products into destabilizer rows only update the Pauli bits.

use std::fmt::Write as _;

use rand::Rng;

use crate::clifford::RandomClifford;
use crate::error::{check_index, Error, Result};
use crate::gf2::{words_for, XorBasis};
use crate::pauli::{product_phase, Pauli, PauliOperator, Sign};

/// A subsystem, given as a set of qubit indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutSpec {
    qubits: Vec<usize>,
}

impl CutSpec {
    /// Validates that the indices are unique and below `n`.
    pub fn new(n: usize, qubits: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for q in qubits {
            check_index(q, n)?;
            if std::mem::replace(&mut seen[q], true) {
                return Err(Error::InvalidArgument(format!("qubit {q} repeated in cut")));
            }
            out.push(q);
        }
        Ok(Self { qubits: out })
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    /// The remaining qubits of an `n`-qubit system.
    pub fn complement(&self, n: usize) -> CutSpec {
        let mut inside = vec![false; n];
        for &q in &self.qubits {
            inside[q] = true;
        }
        CutSpec {
            qubits: (0..n).filter(|&q| !inside[q]).collect(),
        }
    }
}

/// Outcome of a Pauli measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Measurement {
    pub outcome: Sign,
    /// `true` when the state was already an eigenstate of the operator.
    pub deterministic: bool,
}

/// How the outcome of a non-deterministic measurement is chosen.
#[derive(Debug)]
pub enum OutcomeSource<'a, R: Rng + ?Sized> {
    Forced(Sign),
    Random(&'a mut R),
}

/// Stabilizer tableau with destabilizers, over `n` qubits.
#[derive(Clone)]
pub struct Tableau {
    n: usize,
    words: usize,
    sx: Vec<u64>,
    sz: Vec<u64>,
    dx: Vec<u64>,
    dz: Vec<u64>,
    sign: Vec<u64>,
    // Time each stabilizer row was last replaced by a measured operator; used
    // to prefer recently measured (low-weight) pivots.
    age: Vec<u64>,
    clock: u64,
    // Scratch buffers for measurement.
    smask: Vec<u64>,
    dmask: Vec<u64>,
    cnt0: Vec<u64>,
    cnt1: Vec<u64>,
}

/// Two tableaux are equal when their rows agree; pivot ages and scratch
/// space are ignored.
impl PartialEq for Tableau {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.sx == other.sx
            && self.sz == other.sz
            && self.dx == other.dx
            && self.dz == other.dz
            && self.sign == other.sign
    }
}

impl Eq for Tableau {}

impl std::fmt::Debug for Tableau {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.dump())
    }
}

#[inline]
fn bit(words: &[u64], i: usize) -> bool {
    (words[i / 64] >> (i % 64)) & 1 == 1
}

#[inline]
fn put_bit(words: &mut [u64], i: usize, v: bool) {
    let b = 1u64 << (i % 64);
    if v {
        words[i / 64] |= b;
    } else {
        words[i / 64] &= !b;
    }
}

impl Tableau {
    /// `|0...0>`: stabilizers `Z_i`, destabilizers `X_i`.
    pub fn new_computational_basis(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("tableau needs at least one qubit".into()));
        }
        let words = words_for(n);
        let mut t = Self {
            n,
            words,
            sx: vec![0; n * words],
            sz: vec![0; n * words],
            dx: vec![0; n * words],
            dz: vec![0; n * words],
            sign: vec![0; words],
            age: vec![0; n],
            clock: 0,
            smask: vec![0; words],
            dmask: vec![0; words],
            cnt0: vec![0; words],
            cnt1: vec![0; words],
        };
        for q in 0..n {
            put_bit(&mut t.sz[q * words..(q + 1) * words], q, true);
            put_bit(&mut t.dx[q * words..(q + 1) * words], q, true);
        }
        Ok(t)
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    fn col(&self, q: usize) -> std::ops::Range<usize> {
        q * self.words..(q + 1) * self.words
    }

    /// X and Z bit columns of qubit `q` over the stabilizer rows.
    pub fn stabilizer_columns(&self, q: usize) -> (&[u64], &[u64]) {
        let r = self.col(q);
        (&self.sx[r.clone()], &self.sz[r])
    }

    pub fn stabilizer(&self, i: usize) -> PauliOperator {
        self.row(i, &self.sx, &self.sz, Sign::from_bit(bit(&self.sign, i)))
    }

    /// Destabilizer `i`; its sign is not tracked and always reads `+`.
    pub fn destabilizer(&self, i: usize) -> PauliOperator {
        self.row(i, &self.dx, &self.dz, Sign::Plus)
    }

    fn row(&self, i: usize, xs: &[u64], zs: &[u64], sign: Sign) -> PauliOperator {
        let mut x = vec![0u64; self.words];
        let mut z = vec![0u64; self.words];
        for q in 0..self.n {
            let r = self.col(q);
            put_bit(&mut x, q, bit(&xs[r.clone()], i));
            put_bit(&mut z, q, bit(&zs[r], i));
        }
        PauliOperator::from_words(self.n, x, z, sign)
    }

    /// Negates stabilizer `i`. Only used to inject faults when exercising
    /// the validation suites.
    pub(crate) fn flip_stabilizer_sign(&mut self, i: usize) {
        self.sign[i / 64] ^= 1 << (i % 64);
    }

    #[cfg(test)]
    fn write_row(&mut self, stab: bool, i: usize, p: &PauliOperator) {
        let words = self.words;
        let (xs, zs) = if stab {
            (&mut self.sx, &mut self.sz)
        } else {
            (&mut self.dx, &mut self.dz)
        };
        for q in 0..self.n {
            let r = q * words..(q + 1) * words;
            let (px, pz) = p.get(q).bits();
            put_bit(&mut xs[r.clone()], i, px);
            put_bit(&mut zs[r], i, pz);
        }
        if stab {
            put_bit(&mut self.sign, i, p.sign().is_minus());
        }
    }

    pub fn apply_hadamard(&mut self, q: usize) -> Result<()> {
        check_index(q, self.n)?;
        self.hadamard_unchecked(q);
        Ok(())
    }

    pub(crate) fn hadamard_unchecked(&mut self, q: usize) {
        let r = self.col(q);
        for w in 0..self.words {
            let i = r.start + w;
            let (x, z) = (self.sx[i], self.sz[i]);
            self.sign[w] ^= x & z;
            self.sx[i] = z;
            self.sz[i] = x;
        }
        let (dx, dz) = (&mut self.dx[r.clone()], &mut self.dz[r]);
        dx.swap_with_slice(dz);
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        check_index(control, self.n)?;
        check_index(target, self.n)?;
        if control == target {
            return Err(Error::InvalidArgument(format!(
                "CNOT control and target are both {control}"
            )));
        }
        self.cnot_unchecked(control, target);
        Ok(())
    }

    pub(crate) fn cnot_unchecked(&mut self, c: usize, t: usize) {
        let (cb, tb) = (c * self.words, t * self.words);
        for w in 0..self.words {
            let (xc, zc, xt, zt) = (self.sx[cb + w], self.sz[cb + w], self.sx[tb + w], self.sz[tb + w]);
            self.sign[w] ^= xc & zt & !(xt ^ zc);
            self.sx[tb + w] = xt ^ xc;
            self.sz[cb + w] = zc ^ zt;
            let (dxc, dzt) = (self.dx[cb + w], self.dz[tb + w]);
            self.dx[tb + w] ^= dxc;
            self.dz[cb + w] ^= dzt;
        }
    }

    /// Projective measurement of `op`.
    ///
    /// If `op` commutes with every stabilizer the outcome is determined and
    /// the state is unchanged. Otherwise one anticommuting generator is
    /// replaced by `±op`, with the sign taken from `source`.
    pub fn measure_pauli<R: Rng + ?Sized>(
        &mut self,
        op: &PauliOperator,
        source: OutcomeSource<'_, R>,
    ) -> Result<Measurement> {
        if op.num_qubits() != self.n {
            return Err(Error::InvalidArgument(format!(
                "operator on {} qubits measured on {}-qubit tableau",
                op.num_qubits(),
                self.n
            )));
        }
        let terms: Vec<(usize, Pauli)> = op.support().into_iter().map(|q| (q, op.get(q))).collect();
        let (m, _) = self.measure_terms(&terms, op.sign(), source, true);
        Ok(m)
    }

    /// Measures `Z(control) X(target)` without computing determined outcomes.
    /// Returns `true` when the state changed.
    pub(crate) fn measure_zx<R: Rng + ?Sized>(
        &mut self,
        control: usize,
        target: usize,
        source: OutcomeSource<'_, R>,
    ) -> bool {
        let terms = [(control, Pauli::Z), (target, Pauli::X)];
        let (m, _) = self.measure_terms(&terms, Sign::Plus, source, false);
        !m.deterministic
    }

    /// Core measurement on a sparse Hermitian Pauli given as `(qubit, Pauli)`
    /// terms with distinct qubits. Returns the measurement and the pivot row
    /// used (if any). When `want_determined` is false the reported outcome
    /// of a deterministic measurement is meaningless.
    fn measure_terms<R: Rng + ?Sized>(
        &mut self,
        terms: &[(usize, Pauli)],
        op_sign: Sign,
        source: OutcomeSource<'_, R>,
        want_determined: bool,
    ) -> (Measurement, Option<usize>) {
        let words = self.words;
        self.smask.fill(0);
        self.dmask.fill(0);
        for &(q, p) in terms {
            let r = q * words;
            let (px, pz) = p.bits();
            for w in 0..words {
                // row anticommutes with op at q iff x_r z_op ^ z_r x_op
                let mut s = 0;
                let mut d = 0;
                if pz {
                    s ^= self.sx[r + w];
                    d ^= self.dx[r + w];
                }
                if px {
                    s ^= self.sz[r + w];
                    d ^= self.dz[r + w];
                }
                self.smask[w] ^= s;
                self.dmask[w] ^= d;
            }
        }

        // Pivot: the anticommuting stabilizer measured most recently.
        let mut pivot: Option<usize> = None;
        let mut best_age = 0u64;
        for (w, &m) in self.smask.iter().enumerate() {
            let mut bits = m;
            while bits != 0 {
                let i = w * 64 + bits.trailing_zeros() as usize;
                if pivot.is_none() || self.age[i] > best_age {
                    pivot = Some(i);
                    best_age = self.age[i];
                }
                bits &= bits - 1;
            }
        }

        let Some(p) = pivot else {
            let outcome = if want_determined {
                self.determined_outcome(terms, op_sign)
            } else {
                Sign::Plus
            };
            return (
                Measurement {
                    outcome,
                    deterministic: true,
                },
                None,
            );
        };

        let outcome = match source {
            OutcomeSource::Forced(s) => s,
            OutcomeSource::Random(rng) => Sign::from_bit(rng.random_bool(0.5)),
        };

        put_bit(&mut self.smask, p, false);
        self.cnt0.fill(0);
        self.cnt1.fill(0);
        let sign_p = if bit(&self.sign, p) { u64::MAX } else { 0 };

        // Row p, which is multiplied into every other anticommuting row.
        let mut row_p: Vec<(usize, Pauli)> = Vec::new();
        for q in 0..self.n {
            let r = self.col(q);
            let px = bit(&self.sx[r.clone()], p);
            let pz = bit(&self.sz[r], p);
            if px || pz {
                row_p.push((q, Pauli::from_bits(px, pz)));
            }
        }

        for &(q, pp) in &row_p {
            let base = q * words;
            let (px, pz) = pp.bits();
            for w in 0..words {
                let m = self.smask[w];
                let x = self.sx[base + w];
                let z = self.sz[base + w];
                // g(row_r, row_p) at this qubit, +1 / -1 cases.
                let (plus, minus) = match pp {
                    Pauli::X => (!x & z, x & z),
                    Pauli::Z => (x & z, x & !z),
                    Pauli::Y => (x & !z, !x & z),
                    Pauli::I => unreachable!(),
                };
                let (plus, minus) = (plus & m, minus & m);
                let carry = self.cnt0[w] & plus;
                self.cnt0[w] ^= plus;
                self.cnt1[w] ^= carry;
                let borrow = !self.cnt0[w] & minus;
                self.cnt0[w] ^= minus;
                self.cnt1[w] ^= borrow;
                if px {
                    self.sx[base + w] = x ^ m;
                    self.dx[base + w] ^= self.dmask[w];
                }
                if pz {
                    self.sz[base + w] = z ^ m;
                    self.dz[base + w] ^= self.dmask[w];
                }
            }
        }
        for w in 0..words {
            debug_assert_eq!(self.cnt0[w] & self.smask[w], 0, "stabilizers must commute");
            self.sign[w] ^= self.smask[w] & (self.cnt1[w] ^ sign_p);
        }

        // Destabilizer p <- old stabilizer p; stabilizer p <- outcome * op.
        for q in 0..self.n {
            let r = self.col(q);
            let x = bit(&self.sx[r.clone()], p);
            let z = bit(&self.sz[r.clone()], p);
            put_bit(&mut self.dx[r.clone()], p, x);
            put_bit(&mut self.dz[r.clone()], p, z);
            put_bit(&mut self.sx[r.clone()], p, false);
            put_bit(&mut self.sz[r], p, false);
        }
        for &(q, pp) in terms {
            let r = self.col(q);
            let (px, pz) = pp.bits();
            put_bit(&mut self.sx[r.clone()], p, px);
            put_bit(&mut self.sz[r], p, pz);
        }
        put_bit(&mut self.sign, p, (outcome * op_sign).is_minus());
        self.clock += 1;
        self.age[p] = self.clock;

        (
            Measurement {
                outcome,
                deterministic: false,
            },
            Some(p),
        )
    }

    /// Outcome of a measurement known to be deterministic: the product of the
    /// stabilizers whose destabilizers anticommute with the operator equals
    /// `±op`. Uses `self.dmask`.
    fn determined_outcome(&self, terms: &[(usize, Pauli)], op_sign: Sign) -> Sign {
        let mut exponent = 0u32;
        let mut negative = false;
        for (w, &m) in self.dmask.iter().enumerate() {
            negative ^= (m & self.sign[w]).count_ones() & 1 == 1;
        }
        for q in 0..self.n {
            let r = self.col(q);
            let (xs, zs) = (&self.sx[r.clone()], &self.sz[r]);
            let (mut ax, mut az) = (false, false);
            for (w, &m) in self.dmask.iter().enumerate() {
                let mut bits = m & (xs[w] | zs[w]);
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    let bx = (xs[w] >> b) & 1 == 1;
                    let bz = (zs[w] >> b) & 1 == 1;
                    exponent += product_phase(&[ax as u64], &[az as u64], &[bx as u64], &[bz as u64]);
                    ax ^= bx;
                    az ^= bz;
                    bits &= bits - 1;
                }
            }
            debug_assert_eq!(
                Pauli::from_bits(ax, az),
                terms.iter().find(|t| t.0 == q).map_or(Pauli::I, |t| t.1)
            );
        }
        debug_assert_eq!(exponent & 1, 0);
        negative ^= exponent & 3 == 2;
        Sign::from_bit(negative) * op_sign
    }

    /// Replaces the state on `qubits` by the image under a uniformly random
    /// Clifford on those qubits. When the qubits are unentangled with the rest
    /// (e.g. in a product state) their reduced state becomes a uniformly
    /// random stabilizer state.
    pub fn scramble_random_clifford<R: Rng + ?Sized>(
        &mut self,
        qubits: &[usize],
        rng: &mut R,
    ) -> Result<()> {
        if qubits.is_empty() {
            return Err(Error::InvalidArgument("cannot scramble an empty qubit set".into()));
        }
        CutSpec::new(self.n, qubits.iter().copied())?;
        let c = RandomClifford::sample(qubits.len(), rng);
        self.apply_clifford(qubits, &c);
        Ok(())
    }

    /// Conjugates every row by `c`, with `c`'s qubit `k` placed on
    /// `qubits[k]`.
    pub fn apply_clifford(&mut self, qubits: &[usize], c: &RandomClifford) {
        let m = qubits.len();
        assert_eq!(m, c.num_qubits());
        let mw = words_for(m);
        for stab in [true, false] {
            for i in 0..self.n {
                let mut nonzero = false;
                let mut local: Vec<Pauli> = Vec::with_capacity(m);
                for &q in qubits {
                    let r = self.col(q);
                    let (xs, zs) = if stab {
                        (&self.sx[r.clone()], &self.sz[r])
                    } else {
                        (&self.dx[r.clone()], &self.dz[r])
                    };
                    let p = Pauli::from_bits(bit(xs, i), bit(zs, i));
                    nonzero |= p != Pauli::I;
                    local.push(p);
                }
                if !nonzero {
                    continue;
                }
                // Image of the restricted row; Y = i X Z.
                let mut ax = vec![0u64; mw];
                let mut az = vec![0u64; mw];
                let mut exponent = 0u32;
                let mut negative = false;
                for (k, &p) in local.iter().enumerate() {
                    let img = &c.images()[k];
                    let factors: &[&PauliOperator] = match p {
                        Pauli::I => &[],
                        Pauli::X => &[&img.x_image],
                        Pauli::Z => &[&img.z_image],
                        Pauli::Y => {
                            exponent += 1;
                            &[&img.x_image, &img.z_image]
                        }
                    };
                    for f in factors {
                        exponent += product_phase(&ax, &az, f.x_words(), f.z_words());
                        negative ^= f.sign().is_minus();
                        for (a, b) in ax.iter_mut().zip(f.x_words()) {
                            *a ^= b;
                        }
                        for (a, b) in az.iter_mut().zip(f.z_words()) {
                            *a ^= b;
                        }
                    }
                }
                debug_assert_eq!(exponent & 1, 0, "conjugated Hermitian Pauli stays Hermitian");
                negative ^= exponent & 3 == 2;
                let words = self.words;
                let (xs, zs) = if stab {
                    (&mut self.sx, &mut self.sz)
                } else {
                    (&mut self.dx, &mut self.dz)
                };
                for (k, &q) in qubits.iter().enumerate() {
                    let r = q * words..(q + 1) * words;
                    put_bit(&mut xs[r.clone()], i, bit(&ax, k));
                    put_bit(&mut zs[r], i, bit(&az, k));
                }
                if stab && negative {
                    self.sign[i / 64] ^= 1 << (i % 64);
                }
            }
        }
    }

    /// Entanglement entropy (bits) of subsystem `cut`.
    pub fn entropy_of_cut(&self, cut: &CutSpec) -> usize {
        let mut basis = XorBasis::new(self.n);
        for &q in cut.qubits() {
            let r = self.col(q);
            basis.insert(&self.sx[r.clone()]);
            basis.insert(&self.sz[r]);
        }
        basis.rank() - cut.len()
    }

    /// Entropies of every prefix union of `groups` (including the empty
    /// prefix), in one pass. `groups` must partition all qubits.
    pub fn entropy_profile(&self, groups: &[Vec<usize>]) -> Result<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        for g in groups {
            for &q in g {
                check_index(q, self.n)?;
                if std::mem::replace(&mut seen[q], true) {
                    return Err(Error::InvalidArgument(format!(
                        "qubit {q} appears in more than one group"
                    )));
                }
                count += 1;
            }
        }
        if count != self.n {
            return Err(Error::InvalidArgument(format!(
                "groups cover {count} of {} qubits",
                self.n
            )));
        }
        let mut basis = XorBasis::new(self.n);
        let mut out = Vec::with_capacity(groups.len() + 1);
        out.push(0);
        let mut size = 0;
        for g in groups {
            for &q in g {
                let r = self.col(q);
                basis.insert(&self.sx[r.clone()]);
                basis.insert(&self.sz[r]);
            }
            size += g.len();
            out.push(basis.rank() - size);
        }
        Ok(out)
    }

    /// Text dump: a `destabilizers` block and a `stabilizers` block, one row
    /// per line as a sign followed by `I`/`X`/`Y`/`Z` per qubit.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        s.push_str("destabilizers\n");
        for i in 0..self.n {
            let _ = writeln!(s, "{}", self.destabilizer(i));
        }
        s.push_str("stabilizers\n");
        for i in 0..self.n {
            let _ = writeln!(s, "{}", self.stabilizer(i));
        }
        s
    }

    /// Checks the tableau invariants: stabilizers commute and are
    /// independent, and destabilizer `i` anticommutes only with stabilizer
    /// `i`. Quadratic in `n`; meant for tests.
    pub fn check_invariants(&self) -> Result<()> {
        let stabs: Vec<_> = (0..self.n).map(|i| self.stabilizer(i)).collect();
        let destabs: Vec<_> = (0..self.n).map(|i| self.destabilizer(i)).collect();
        for i in 0..self.n {
            for j in 0..self.n {
                if !stabs[i].commutes_with(&stabs[j]) {
                    return Err(Error::Analysis(format!("stabilizers {i} and {j} anticommute")));
                }
                if destabs[i].commutes_with(&stabs[j]) == (i == j) {
                    return Err(Error::Analysis(format!(
                        "destabilizer {i} / stabilizer {j} commutation is wrong"
                    )));
                }
            }
        }
        let mut basis = XorBasis::new(2 * self.n);
        for s in &stabs {
            let mut v = vec![0u64; words_for(2 * self.n)];
            for q in 0..self.n {
                let (x, z) = s.get(q).bits();
                put_bit(&mut v, 2 * q, x);
                put_bit(&mut v, 2 * q + 1, z);
            }
            basis.insert(&v);
        }
        if basis.rank() != self.n {
            return Err(Error::Analysis("stabilizers are not independent".into()));
        }
        Ok(())
    }
}
