//! Dense state-vector reference simulator for a handful of qubits.
//!
//! Qubit `q` is bit `q` of the basis index. The simulator makes no use of the
//! stabilizer formalism: gates are applied to amplitudes, measurements are
//! projections, and entropies come from the reduced density matrix.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliOperator, Sign};
use crate::stabilizer::Measurement;

const TOL: f64 = 1e-9;

/// Largest register the oracle accepts.
pub const MAX_QUBITS: usize = 14;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero_state(n: usize) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "state vector limited to {MAX_QUBITS} qubits, got {n}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidArgument(format!("{} amplitudes is not a power of two", amps.len())));
        }
        let n = amps.len().trailing_zeros() as usize;
        if n > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "state vector limited to {MAX_QUBITS} qubits, got {n}"
            )));
        }
        Ok(Self { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    fn check(&self, q: usize) -> Result<()> {
        crate::error::check_index(q, self.n)
    }

    pub fn apply_hadamard(&mut self, q: usize) -> Result<()> {
        self.check(q)?;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let b = 1 << q;
        for i in 0..self.amps.len() {
            if i & b == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | b]);
                self.amps[i] = (a0 + a1) * s;
                self.amps[i | b] = (a0 - a1) * s;
            }
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check(control)?;
        self.check(target)?;
        if control == target {
            return Err(Error::InvalidArgument("CNOT control equals target".into()));
        }
        let (c, t) = (1 << control, 1 << target);
        for i in 0..self.amps.len() {
            if i & c != 0 && i & t == 0 {
                self.amps.swap(i, i | t);
            }
        }
        Ok(())
    }

    /// `op |psi>`, with `Y = [[0, -i], [i, 0]]`.
    pub fn pauli_applied(&self, op: &PauliOperator) -> Result<Vec<Complex64>> {
        if op.num_qubits() != self.n {
            return Err(Error::InvalidArgument(format!(
                "operator on {} qubits applied to {}-qubit state",
                op.num_qubits(),
                self.n
            )));
        }
        let mut flip = 0usize;
        let mut zmask = 0usize;
        let mut ys = 0u32;
        for q in op.support() {
            match op.get(q) {
                Pauli::X => flip |= 1 << q,
                Pauli::Z => zmask |= 1 << q,
                Pauli::Y => {
                    flip |= 1 << q;
                    zmask |= 1 << q;
                    ys += 1;
                }
                Pauli::I => {}
            }
        }
        // Y = i X Z: acting on |b>, Z first gives (-1)^b, then X flips.
        let i_pow = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ][(ys % 4) as usize];
        let global = if op.sign().is_minus() { -i_pow } else { i_pow };
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (b, &a) in self.amps.iter().enumerate() {
            let s = if (b & zmask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[b ^ flip] = a * global * s;
        }
        Ok(out)
    }

    /// `<psi| op |psi>`.
    pub fn expectation(&self, op: &PauliOperator) -> Result<f64> {
        let v = self.pauli_applied(op)?;
        Ok(self.amps.iter().zip(&v).map(|(a, b)| (a.conj() * b).re).sum())
    }

    /// `true` when `op |psi> = |psi>`.
    pub fn is_stabilized_by(&self, op: &PauliOperator) -> Result<bool> {
        Ok((self.expectation(op)? - 1.0).abs() < 1e-7)
    }

    /// Projects onto the `forced` eigenspace of `op`, or onto the only
    /// eigenspace with weight if the outcome is determined.
    pub fn measure(&mut self, op: &PauliOperator, forced: Sign) -> Result<Measurement> {
        let e = self.expectation(op)?;
        let (outcome, deterministic) = if (e - 1.0).abs() < 1e-7 {
            (Sign::Plus, true)
        } else if (e + 1.0).abs() < 1e-7 {
            (Sign::Minus, true)
        } else {
            (forced, false)
        };
        if !deterministic {
            let v = self.pauli_applied(op)?;
            let s = outcome.value() as f64;
            for (a, b) in self.amps.iter_mut().zip(&v) {
                *a = (*a + b * s) * 0.5;
            }
            let norm = self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm < TOL {
                return Err(Error::InvalidArgument("projection annihilated the state".into()));
            }
            self.amps.iter_mut().for_each(|a| *a /= norm);
        }
        Ok(Measurement { outcome, deterministic })
    }

    /// The state as a `2^|A| x 2^|B|` matrix, `A` indexing rows.
    fn bipartite_matrix(&self, region: &[usize]) -> Result<(usize, usize, Vec<Complex64>)> {
        let mut in_a = vec![false; self.n];
        for &q in region {
            self.check(q)?;
            in_a[q] = true;
        }
        let a: Vec<usize> = (0..self.n).filter(|&q| in_a[q]).collect();
        let b: Vec<usize> = (0..self.n).filter(|&q| !in_a[q]).collect();
        let (ra, cb) = (1usize << a.len(), 1usize << b.len());
        let mut m = vec![Complex64::new(0.0, 0.0); ra * cb];
        for (idx, &amp) in self.amps.iter().enumerate() {
            let gather = |qs: &[usize]| qs.iter().enumerate().fold(0usize, |acc, (k, &q)| acc | ((idx >> q) & 1) << k);
            m[gather(&a) * cb + gather(&b)] = amp;
        }
        Ok((ra, cb, m))
    }

    /// Reduced density matrix of `region`, row-major `2^|A| x 2^|A|`.
    pub fn reduced_density_matrix(&self, region: &[usize]) -> Result<Vec<Complex64>> {
        let (ra, cb, m) = self.bipartite_matrix(region)?;
        let mut rho = vec![Complex64::new(0.0, 0.0); ra * ra];
        for i in 0..ra {
            for j in 0..ra {
                rho[i * ra + j] = (0..cb).map(|k| m[i * cb + k] * m[j * cb + k].conj()).sum();
            }
        }
        Ok(rho)
    }

    /// Second Renyi entropy `-log2 tr(rho_A^2)` in bits.
    pub fn renyi2_entropy(&self, region: &[usize]) -> Result<f64> {
        let rho = self.reduced_density_matrix(region)?;
        let purity: f64 = rho.iter().map(|z| z.norm_sqr()).sum();
        Ok(-purity.log2())
    }

    /// Schmidt rank across `region | complement`.
    pub fn schmidt_rank(&self, region: &[usize]) -> Result<usize> {
        let (rows, cols, mut m) = self.bipartite_matrix(region)?;
        let mut rank = 0;
        for col in 0..cols {
            if rank == rows {
                break;
            }
            let (piv, mag) = (rank..rows)
                .map(|r| (r, m[r * cols + col].norm()))
                .fold((rank, -1.0), |best, x| if x.1 > best.1 { x } else { best });
            if mag < TOL {
                continue;
            }
            for k in 0..cols {
                m.swap(rank * cols + k, piv * cols + k);
            }
            let p = m[rank * cols + col];
            for r in rank + 1..rows {
                let f = m[r * cols + col] / p;
                if f.norm() > 0.0 {
                    for k in col..cols {
                        let v = m[rank * cols + k];
                        m[r * cols + k] -= f * v;
                    }
                }
            }
            rank += 1;
        }
        Ok(rank)
    }

    /// Entanglement entropy of a stabilizer state in bits, checked to be an
    /// integer with a flat spectrum: `log2(Schmidt rank)` must equal the
    /// second Renyi entropy.
    pub fn stabilizer_entropy(&self, region: &[usize]) -> Result<usize> {
        let rank = self.schmidt_rank(region)?;
        let s0 = rank.trailing_zeros() as usize;
        let s2 = self.renyi2_entropy(region)?;
        if !rank.is_power_of_two() || (s2 - s0 as f64).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "spectrum is not flat: Schmidt rank {rank}, Renyi-2 entropy {s2}"
            )));
        }
        Ok(s0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn op(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    fn random_state(n: usize, rng: &mut impl Rng) -> StateVector {
        let mut amps: Vec<Complex64> = (0..1 << n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        StateVector::from_amplitudes(amps).unwrap()
    }

    fn close(a: &[Complex64], b: &[Complex64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-9)
    }

    #[test]
    fn single_qubit_paulis() {
        let mut s = StateVector::zero_state(1).unwrap();
        assert!(s.is_stabilized_by(&op("+Z")).unwrap());
        assert!(close(&s.pauli_applied(&op("+Y")).unwrap(), &[0.0.into(), Complex64::new(0.0, 1.0)]));
        s.apply_hadamard(0).unwrap();
        assert!(s.is_stabilized_by(&op("+X")).unwrap());
        assert!((s.expectation(&op("+Z")).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn bell_and_ghz_entropies() {
        let mut s = StateVector::zero_state(3).unwrap();
        s.apply_hadamard(0).unwrap();
        s.apply_cnot(0, 1).unwrap();
        assert_eq!(s.stabilizer_entropy(&[0]).unwrap(), 1);
        assert_eq!(s.stabilizer_entropy(&[2]).unwrap(), 0);
        s.apply_cnot(1, 2).unwrap();
        assert_eq!(s.stabilizer_entropy(&[0, 1]).unwrap(), 1);
        assert_eq!(s.stabilizer_entropy(&[]).unwrap(), 0);
        assert!(s.is_stabilized_by(&op("+ZZI")).unwrap());
        assert!(s.is_stabilized_by(&op("+XXX")).unwrap());
        assert!(s.is_stabilized_by(&op("-YYX")).unwrap());
    }

    #[test]
    fn measurement_projects() {
        let mut s = StateVector::zero_state(2).unwrap();
        let m = s.measure(&op("+ZX"), Sign::Plus).unwrap();
        assert!(!m.deterministic);
        assert!(s.is_stabilized_by(&op("+IX")).unwrap());
        assert_eq!(s.stabilizer_entropy(&[0]).unwrap(), 0);
        let again = s.measure(&op("-IX"), Sign::Plus).unwrap();
        assert_eq!(again, Measurement { outcome: Sign::Minus, deterministic: true });
        let mut plus = StateVector::zero_state(2).unwrap();
        plus.apply_hadamard(0).unwrap();
        plus.measure(&op("+ZX"), Sign::Minus).unwrap();
        assert_eq!(plus.stabilizer_entropy(&[0]).unwrap(), 1);
        assert!(plus.is_stabilized_by(&op("-ZX")).unwrap());
    }

    #[test]
    fn conjugation_rules_match_dense_gates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let letters = ['I', 'X', 'Y', 'Z'];
        for _ in 0..200 {
            let n = rng.random_range(2..=4);
            let sign = if rng.random::<bool>() { '+' } else { '-' };
            let text: String = std::iter::once(sign).chain((0..n).map(|_| letters[rng.random_range(0..4)])).collect();
            let p = op(&text);
            let psi = random_state(n, &mut rng);
            let c = rng.random_range(0..n);
            let t = (c + rng.random_range(1..n)) % n;
            // U P |psi> must equal P' U |psi> with P' = U P U^dagger.
            let mut lhs = StateVector::from_amplitudes(psi.pauli_applied(&p).unwrap()).unwrap();
            lhs.apply_cnot(c, t).unwrap();
            let mut rhs = psi.clone();
            rhs.apply_cnot(c, t).unwrap();
            let mut q = p.clone();
            q.conjugate_cnot(c, t).unwrap();
            assert!(close(lhs.amplitudes(), &rhs.pauli_applied(&q).unwrap()), "CNOT {c} {t} on {text}");
            let mut lhs = StateVector::from_amplitudes(psi.pauli_applied(&p).unwrap()).unwrap();
            lhs.apply_hadamard(c).unwrap();
            let mut rhs = psi.clone();
            rhs.apply_hadamard(c).unwrap();
            let mut q = p.clone();
            q.conjugate_hadamard(c).unwrap();
            assert!(close(lhs.amplitudes(), &rhs.pauli_applied(&q).unwrap()), "H {c} on {text}");
        }
    }

    #[test]
    fn product_phase_matches_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let letters = ['I', 'X', 'Y', 'Z'];
        for _ in 0..200 {
            let n = rng.random_range(1..=4);
            let mk = |rng: &mut ChaCha8Rng| {
                let text: String = std::iter::once('+').chain((0..n).map(|_| letters[rng.random_range(0..4)])).collect();
                op(&text)
            };
            let (a, b) = (mk(&mut rng), mk(&mut rng));
            if !a.commutes_with(&b) {
                continue;
            }
            let psi = random_state(n, &mut rng);
            let ab = StateVector::from_amplitudes(psi.pauli_applied(&b).unwrap())
                .unwrap()
                .pauli_applied(&a)
                .unwrap();
            let prod = a.multiply(&b).unwrap();
            assert!(close(&ab, &psi.pauli_applied(&prod).unwrap()), "{a} * {b} = {prod}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(StateVector::zero_state(MAX_QUBITS + 1).is_err());
        let mut s = StateVector::zero_state(2).unwrap();
        assert!(s.apply_cnot(1, 1).is_err());
        assert!(s.apply_hadamard(2).is_err());
        assert!(s.expectation(&op("+XXX")).is_err());
        assert!(StateVector::from_amplitudes(vec![Complex64::new(1.0, 0.0); 3]).is_err());
    }
}
