//! Signed Hermitian Pauli operators on `n` qubits.
//!
//! Bits follow the Hermitian convention: `(x, z) = (1, 1)` on a qubit means
//! `Y`, not `XZ`. Products of such operators pick up powers of `i`, tracked as
//! an exponent mod 4 by [`product_phase`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};
use crate::gf2::words_for;

/// Overall sign of a Hermitian Pauli operator or a measurement outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    #[inline]
    pub fn from_bit(minus: bool) -> Self {
        if minus {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    #[inline]
    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }

    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        Sign::from_bit(self.is_minus() ^ rhs.is_minus())
    }
}

impl std::ops::Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        Sign::from_bit(!self.is_minus())
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_minus() { "-" } else { "+" })
    }
}

/// Single-qubit Pauli.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    #[inline]
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    #[inline]
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Exponent `e` (mod 4) such that `P1 * P2 = i^e * P3`, where `P1`, `P2` are
/// the bare Hermitian Paulis given by the word slices and `P3` has bits
/// `(x1 ^ x2, z1 ^ z2)`.
#[inline]
pub fn product_phase(x1: &[u64], z1: &[u64], x2: &[u64], z2: &[u64]) -> u32 {
    let mut plus = 0u32;
    let mut minus = 0u32;
    for w in 0..x1.len() {
        let (a, b, c, d) = (x1[w], z1[w], x2[w], z2[w]);
        let x_1 = a & !b;
        let y_1 = a & b;
        let z_1 = !a & b;
        let x_2 = c & !d;
        let y_2 = c & d;
        let z_2 = !c & d;
        plus += ((x_1 & y_2) | (y_1 & z_2) | (z_1 & x_2)).count_ones();
        minus += ((x_1 & z_2) | (y_1 & x_2) | (z_1 & y_2)).count_ones();
    }
    (plus + 4 * minus - minus) & 3
}

/// Parity of the symplectic form between two Paulis: `true` iff they
/// anticommute.
#[inline]
pub fn anticommutes(x1: &[u64], z1: &[u64], x2: &[u64], z2: &[u64]) -> bool {
    let mut acc = 0u64;
    for w in 0..x1.len() {
        acc ^= (x1[w] & z2[w]) ^ (z1[w] & x2[w]);
    }
    acc.count_ones() & 1 == 1
}

/// An `n`-qubit Hermitian Pauli operator with sign ±1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    sign: Sign,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        let w = words_for(n);
        Self {
            n,
            x: vec![0; w],
            z: vec![0; w],
            sign: Sign::Plus,
        }
    }

    /// `P` on qubit `q`, identity elsewhere.
    pub fn single(n: usize, q: usize, p: Pauli) -> Result<Self> {
        let mut op = Self::identity(n);
        op.set(q, p)?;
        Ok(op)
    }

    /// Builds an operator from `(qubit, Pauli)` pairs.
    pub fn from_sparse(n: usize, terms: &[(usize, Pauli)], sign: Sign) -> Result<Self> {
        let mut op = Self::identity(n);
        for &(q, p) in terms {
            op.set(q, p)?;
        }
        op.sign = sign;
        Ok(op)
    }

    pub(crate) fn from_words(n: usize, x: Vec<u64>, z: Vec<u64>, sign: Sign) -> Self {
        debug_assert_eq!(x.len(), words_for(n));
        Self { n, x, z, sign }
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn set_sign(&mut self, sign: Sign) {
        self.sign = sign;
    }

    #[inline]
    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    #[inline]
    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    #[inline]
    pub fn get(&self, q: usize) -> Pauli {
        let (w, b) = (q / 64, q % 64);
        Pauli::from_bits((self.x[w] >> b) & 1 == 1, (self.z[w] >> b) & 1 == 1)
    }

    pub fn set(&mut self, q: usize, p: Pauli) -> Result<()> {
        check_index(q, self.n)?;
        let (w, b) = (q / 64, 1u64 << (q % 64));
        let (px, pz) = p.bits();
        self.x[w] = if px { self.x[w] | b } else { self.x[w] & !b };
        self.z[w] = if pz { self.z[w] | b } else { self.z[w] & !b };
        Ok(())
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    /// Qubits on which the operator acts non-trivially, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (w, (a, b)) in self.x.iter().zip(&self.z).enumerate() {
            let mut bits = a | b;
            while bits != 0 {
                out.push(w * 64 + bits.trailing_zeros() as usize);
                bits &= bits - 1;
            }
        }
        out
    }

    pub fn commutes_with(&self, other: &PauliOperator) -> bool {
        !anticommutes(&self.x, &self.z, &other.x, &other.z)
    }

    /// `self * other`. Fails when the product is anti-Hermitian, i.e. when
    /// the operators anticommute.
    pub fn multiply(&self, other: &PauliOperator) -> Result<PauliOperator> {
        if self.n != other.n {
            return Err(Error::InvalidArgument("qubit count mismatch".into()));
        }
        let e = product_phase(&self.x, &self.z, &other.x, &other.z);
        if e & 1 == 1 {
            return Err(Error::InvalidArgument(
                "product of anticommuting Paulis is not Hermitian".into(),
            ));
        }
        let x = self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect();
        let z = self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect();
        let sign = self.sign * other.sign * Sign::from_bit(e == 2);
        Ok(PauliOperator { n: self.n, x, z, sign })
    }

    /// Conjugation by a Hadamard on `q`: `X <-> Z`, `Y -> -Y`.
    pub fn conjugate_hadamard(&mut self, q: usize) -> Result<()> {
        check_index(q, self.n)?;
        let p = self.get(q);
        if p == Pauli::Y {
            self.sign = -self.sign;
        }
        let np = match p {
            Pauli::X => Pauli::Z,
            Pauli::Z => Pauli::X,
            other => other,
        };
        self.set(q, np)
    }

    /// Conjugation by `CNOT(control, target)`.
    pub fn conjugate_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        check_index(control, self.n)?;
        check_index(target, self.n)?;
        if control == target {
            return Err(Error::InvalidArgument("CNOT control equals target".into()));
        }
        let (xc, zc) = self.get(control).bits();
        let (xt, zt) = self.get(target).bits();
        if xc && zt && !(xt ^ zc) {
            self.sign = -self.sign;
        }
        self.set(target, Pauli::from_bits(xt ^ xc, zt))?;
        self.set(control, Pauli::from_bits(xc, zc ^ zt))
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.sign)?;
        for q in 0..self.n {
            write!(f, "{}", self.get(q).symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for PauliOperator {
    type Err = Error;

    /// Parses `"+XIZY"`, `"-ZZ"` or an unsigned `"XX"`. Imaginary prefixes
    /// (`"i"`, `"+i"`, `"-i"`) are rejected.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (sign, body) = match s.as_bytes().first() {
            Some(b'+') => (Sign::Plus, &s[1..]),
            Some(b'-') => (Sign::Minus, &s[1..]),
            _ => (Sign::Plus, s),
        };
        if body.starts_with('i') {
            return Err(Error::InvalidArgument(format!(
                "imaginary phase in Pauli string {s:?}"
            )));
        }
        let mut op = PauliOperator::identity(body.chars().count());
        for (q, c) in body.chars().enumerate() {
            let p = match c {
                'I' | '_' | '.' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "bad Pauli symbol {other:?} in {s:?}"
                    )))
                }
            };
            op.set(q, p)?;
        }
        op.sign = sign;
        Ok(op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    #[test]
    fn single_qubit_products() {
        // XY = iZ, YZ = iX, ZX = iY, and the reverses give -i.
        let cases = [("X", "Y", 1), ("Y", "Z", 1), ("Z", "X", 1), ("Y", "X", 3), ("Z", "Y", 3), ("X", "Z", 3), ("X", "X", 0), ("Y", "Y", 0)];
        for (a, b, e) in cases {
            let (a, b) = (p(a), p(b));
            assert_eq!(product_phase(a.x_words(), a.z_words(), b.x_words(), b.z_words()), e);
        }
    }

    #[test]
    fn multiply_commuting() {
        let xx = p("+XX");
        let zz = p("+ZZ");
        // XX * ZZ = (XZ)(XZ) = (-iY)(-iY) = -YY
        assert_eq!(xx.multiply(&zz).unwrap(), p("-YY"));
        assert!(p("XI").multiply(&p("ZI")).is_err());
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(p("-XIZY").to_string(), "-XIZY");
        assert_eq!(p("ZZ").to_string(), "+ZZ");
        assert!("iXZ".parse::<PauliOperator>().is_err());
        assert!("+iXZ".parse::<PauliOperator>().is_err());
        assert!("XQ".parse::<PauliOperator>().is_err());
    }

    #[test]
    fn conjugations() {
        let mut y = p("+Y");
        y.conjugate_hadamard(0).unwrap();
        assert_eq!(y, p("-Y"));
        let mut xc = p("+XI");
        xc.conjugate_cnot(0, 1).unwrap();
        assert_eq!(xc, p("+XX"));
        let mut zt = p("+IZ");
        zt.conjugate_cnot(0, 1).unwrap();
        assert_eq!(zt, p("+ZZ"));
        // Y_c Y_t -> -X_c Z_t under CNOT
        let mut yy = p("+YY");
        yy.conjugate_cnot(0, 1).unwrap();
        assert_eq!(yy, p("-XZ"));
    }
}
