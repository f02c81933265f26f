//! Self-checks of the simulator against brute-force references.
//!
//! Four suites run on randomly generated inputs, each trial with its own
//! seed derived from the master seed:
//!
//! * `state-vector`: random circuits of H, CNOT and Pauli-product
//!   measurements (forced `+1` outcomes) on at most `max_qubits` qubits,
//!   compared with [`StateVector`]: measurement outcomes, the signed
//!   stabilizers and the entropy of every bipartition.
//! * `layer-shuffle`: reordering the events inside each time step leaves the
//!   tableau unchanged at `p = 0` and the entropy profile unchanged at `p > 0`.
//! * `prefix-rank`: the incremental profile agrees with one rank computation
//!   per cut.
//! * `outcome-mode`: forced and sampled measurement outcomes give identical
//!   profiles.
//!
//! A failing trial is reported with its seed; for the state-vector suite the
//! circuit is also cut down to its shortest failing prefix.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{sample_realization, CircuitRealization, GateEvent, GateKind, OutcomeMode};
use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::lattice::{Boundary, LatticeSpec};
use crate::oracle::{StateVector, MAX_QUBITS};
use crate::pauli::{Pauli, PauliOperator, Sign};
use crate::seeding::{sample_seed, splitmix64, stream_rng, Stream};
use crate::stabilizer::{CutSpec, OutcomeSource, Tableau};

/// Deliberate defects for checking that the suites catch them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Every random measurement stores its stabilizer with the wrong sign.
    MeasurementSign,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidateOptions {
    pub max_qubits: usize,
    pub trials: usize,
    pub seed: u64,
    pub fault: Option<Fault>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            max_qubits: 8,
            trials: 1000,
            seed: 0,
            fault: None,
        }
    }
}

/// A failing trial.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub seed: u64,
    /// Shortest failing prefix of the generated operations, when the suite
    /// can shorten its input.
    pub prefix: Option<usize>,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "seed {:#018x}", self.seed)?;
        if let Some(k) = self.prefix {
            write!(f, ", shortest failing prefix {k} ops")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub trials: usize,
    pub failure: Option<Failure>,
    pub warning: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            None => write!(f, "PASS {} ({} trials)", self.name, self.trials)?,
            Some(e) => write!(f, "FAIL {} ({} trials): {e}", self.name, self.trials)?,
        }
        if let Some(w) = &self.warning {
            write!(f, " [warning: {w}]")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub suites: Vec<SuiteReport>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

pub fn run_all(options: &ValidateOptions) -> Result<ValidationReport> {
    Ok(ValidationReport {
        suites: vec![
            state_vector_suite(options)?,
            layer_shuffle_suite(options),
            prefix_rank_suite(options),
            outcome_mode_suite(options),
        ],
    })
}

fn trial_seeds(options: &ValidateOptions, suite: u64) -> impl Iterator<Item = u64> {
    let base = splitmix64(options.seed ^ suite);
    (0..options.trials as u64).map(move |i| sample_seed(base, i))
}

fn run_trials(
    name: &'static str,
    options: &ValidateOptions,
    suite: u64,
    mut trial: impl FnMut(u64) -> std::result::Result<(), Failure>,
) -> SuiteReport {
    let failure = trial_seeds(options, suite).find_map(|s| trial(s).err());
    SuiteReport {
        name,
        trials: options.trials,
        failure,
        warning: (options.trials == 0).then(|| "no trials were run, the suite passes vacuously".to_string()),
    }
}

/// An operation of a random oracle circuit.
#[derive(Clone, Debug, PartialEq)]
pub enum OracleOp {
    Hadamard(usize),
    Cnot(usize, usize),
    Measure(PauliOperator),
}

impl fmt::Display for OracleOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleOp::Hadamard(q) => write!(f, "H {q}"),
            OracleOp::Cnot(c, t) => write!(f, "CNOT {c} {t}"),
            OracleOp::Measure(p) => write!(f, "MEASURE {p}"),
        }
    }
}

/// A random circuit on `1..=max_qubits` qubits.
pub fn random_oracle_circuit(max_qubits: usize, seed: u64) -> (usize, Vec<OracleOp>) {
    let mut rng = stream_rng(seed, Stream::Disorder);
    let n = rng.random_range(1..=max_qubits);
    let len = rng.random_range(n..=6 * n);
    let letters = [Pauli::X, Pauli::Y, Pauli::Z];
    let ops = (0..len)
        .map(|_| {
            let r: f64 = rng.random();
            if r < 0.3 || (n == 1 && r < 0.65) {
                OracleOp::Hadamard(rng.random_range(0..n))
            } else if r < 0.65 {
                let c = rng.random_range(0..n);
                let t = (c + rng.random_range(1..n)) % n;
                OracleOp::Cnot(c, t)
            } else {
                let weight = rng.random_range(1..=n.min(3));
                let mut qubits: Vec<usize> = (0..n).collect();
                qubits.shuffle(&mut rng);
                let terms: Vec<(usize, Pauli)> =
                    qubits[..weight].iter().map(|&q| (q, letters[rng.random_range(0..3)])).collect();
                let sign = Sign::from_bit(rng.random());
                OracleOp::Measure(PauliOperator::from_sparse(n, &terms, sign).expect("valid sparse operator"))
            }
        })
        .collect();
    (n, ops)
}

/// Runs `ops` on a tableau and on a state vector and compares them.
pub fn compare_with_oracle(n: usize, ops: &[OracleOp], fault: Option<Fault>) -> std::result::Result<(), String> {
    let err = |e: Error| e.to_string();
    let mut tab = Tableau::new_computational_basis(n).map_err(err)?;
    let mut psi = StateVector::zero_state(n).map_err(err)?;
    for (k, op) in ops.iter().enumerate() {
        match op {
            OracleOp::Hadamard(q) => {
                tab.apply_hadamard(*q).map_err(err)?;
                psi.apply_hadamard(*q).map_err(err)?;
            }
            OracleOp::Cnot(c, t) => {
                tab.apply_cnot(*c, *t).map_err(err)?;
                psi.apply_cnot(*c, *t).map_err(err)?;
            }
            OracleOp::Measure(p) => {
                let got = tab
                    .measure_pauli(p, OutcomeSource::<ChaCha8Rng>::Forced(Sign::Plus))
                    .map_err(err)?;
                if fault == Some(Fault::MeasurementSign) && !got.deterministic {
                    inject_sign_fault(&mut tab, p);
                }
                let want = psi.measure(p, Sign::Plus).map_err(err)?;
                if got != want {
                    return Err(format!("op {k} ({op}): tableau gave {got:?}, state vector {want:?}"));
                }
            }
        }
    }
    for i in 0..n {
        let g = tab.stabilizer(i);
        if !psi.is_stabilized_by(&g).map_err(err)? {
            return Err(format!("stabilizer {i} ({g}) does not fix the state"));
        }
    }
    for mask in 0usize..1 << n {
        let region: Vec<usize> = (0..n).filter(|q| mask >> q & 1 == 1).collect();
        let cut = CutSpec::new(n, region.iter().copied()).map_err(err)?;
        let s_tab = tab.entropy_of_cut(&cut);
        let s_psi = psi.stabilizer_entropy(&region).map_err(err)?;
        if s_tab != s_psi {
            return Err(format!("entropy of {region:?}: tableau {s_tab}, state vector {s_psi}"));
        }
    }
    Ok(())
}

fn inject_sign_fault(tab: &mut Tableau, p: &PauliOperator) {
    let row = (0..tab.num_qubits()).find(|&i| {
        let g = tab.stabilizer(i);
        (0..g.num_qubits()).all(|q| g.get(q) == p.get(q))
    });
    if let Some(i) = row {
        tab.flip_stabilizer_sign(i);
    }
}

fn describe(ops: &[OracleOp]) -> String {
    ops.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub fn state_vector_suite(options: &ValidateOptions) -> Result<SuiteReport> {
    if options.max_qubits == 0 || options.max_qubits > MAX_QUBITS {
        return Err(Error::Config(format!(
            "max_qubits must lie in 1..={MAX_QUBITS}, got {}",
            options.max_qubits
        )));
    }
    Ok(run_trials("state-vector", options, 1, |seed| {
        let (n, ops) = random_oracle_circuit(options.max_qubits, seed);
        if compare_with_oracle(n, &ops, options.fault).is_ok() {
            return Ok(());
        }
        let k = (0..=ops.len())
            .find(|&k| compare_with_oracle(n, &ops[..k], options.fault).is_err())
            .unwrap_or(ops.len());
        let message = compare_with_oracle(n, &ops[..k], options.fault).err().unwrap_or_default();
        Err(Failure {
            seed,
            prefix: Some(k),
            message: format!("{message} [{n} qubits: {}]", describe(&ops[..k])),
        })
    }))
}

/// A small random lattice with an even extent on every periodic axis.
pub fn random_small_lattice(rng: &mut impl Rng) -> LatticeSpec {
    let d = rng.random_range(1..=3);
    let max = [8, 4, 4][d - 1];
    let mut extents = Vec::with_capacity(d);
    let mut boundary = Vec::with_capacity(d);
    for _ in 0..d {
        if rng.random::<bool>() {
            boundary.push(Boundary::Open);
            extents.push(rng.random_range(2..=max));
        } else {
            boundary.push(Boundary::Periodic);
            extents.push(2 * rng.random_range(1..=max / 2));
        }
    }
    LatticeSpec::new(extents, boundary).expect("generated lattice is valid")
}

fn scrambled_state(spec: &LatticeSpec, seed: u64) -> Tableau {
    let n = spec.num_sites();
    let mut t = Tableau::new_computational_basis(n).expect("non-empty lattice");
    let all: Vec<usize> = (0..n).collect();
    t.scramble_random_clifford(&all, &mut stream_rng(seed, Stream::Scramble))
        .expect("non-empty qubit set");
    t
}

/// Shuffles the two-qubit gates and the Hadamards of every step separately.
pub fn shuffle_layers(events: &[GateEvent], rng: &mut impl Rng) -> Vec<GateEvent> {
    let mut out = events.to_vec();
    let mut start = 0;
    while start < out.len() {
        let key = |e: &GateEvent| (e.time, matches!(e.kind, GateKind::Hadamard { .. }));
        let k = key(&out[start]);
        let end = start + out[start..].iter().take_while(|e| key(e) == k).count();
        out[start..end].shuffle(rng);
        start = end;
    }
    out
}

fn profile_of(t: &Tableau, spec: &LatticeSpec) -> Vec<usize> {
    t.entropy_profile(&spec.cut_prefix_groups()).expect("prefix groups partition the lattice")
}

pub fn layer_shuffle_suite(options: &ValidateOptions) -> SuiteReport {
    run_trials("layer-shuffle", options, 2, |seed| {
        let fail = |message: String| Failure {
            seed,
            prefix: None,
            message,
        };
        let mut rng = stream_rng(seed, Stream::Disorder);
        let spec = random_small_lattice(&mut rng);
        let steps = rng.random_range(1..=6);
        let p = if rng.random::<bool>() { 0.0 } else { rng.random_range(0.05..0.6) };
        let c = sample_realization(&spec, p, steps, seed).map_err(|e| fail(e.to_string()))?;
        let shuffled = CircuitRealization::from_events(spec.clone(), p, steps, seed, shuffle_layers(c.events(), &mut rng))
            .map_err(|e| fail(e.to_string()))?;
        let mut a = scrambled_state(&spec, seed);
        let mut b = a.clone();
        c.apply(&mut a, steps, OutcomeMode::Forced, |_, _| {}).map_err(|e| fail(e.to_string()))?;
        shuffled.apply(&mut b, steps, OutcomeMode::Forced, |_, _| {}).map_err(|e| fail(e.to_string()))?;
        if p == 0.0 && a != b {
            return Err(fail(format!("tableau changed under in-layer shuffle on {:?}", spec.extents())));
        }
        if profile_of(&a, &spec) != profile_of(&b, &spec) {
            return Err(fail(format!(
                "profile changed under in-layer shuffle on {:?} at p = {p}",
                spec.extents()
            )));
        }
        Ok(())
    })
}

/// `rank(stabilizers restricted to A) - |A|` from an explicit matrix.
fn entropy_by_matrix(t: &Tableau, region: &[usize]) -> usize {
    let n = t.num_qubits();
    let mut m = BitMatrix::zeros(n, 2 * region.len());
    for i in 0..n {
        let g = t.stabilizer(i);
        for (k, &q) in region.iter().enumerate() {
            let (x, z) = g.get(q).bits();
            m.set(i, 2 * k, x);
            m.set(i, 2 * k + 1, z);
        }
    }
    m.rank() - region.len()
}

pub fn prefix_rank_suite(options: &ValidateOptions) -> SuiteReport {
    run_trials("prefix-rank", options, 3, |seed| {
        let fail = |message: String| Failure {
            seed,
            prefix: None,
            message,
        };
        let mut rng = stream_rng(seed, Stream::Disorder);
        let spec = random_small_lattice(&mut rng);
        let steps = rng.random_range(1..=6);
        let p = rng.random_range(0.0..0.5);
        let c = sample_realization(&spec, p, steps, seed).map_err(|e| fail(e.to_string()))?;
        let mut t = scrambled_state(&spec, seed);
        c.apply(&mut t, steps, OutcomeMode::Forced, |_, _| {}).map_err(|e| fail(e.to_string()))?;
        let n = spec.num_sites();
        let groups = spec.cut_prefix_groups();
        let profile = profile_of(&t, &spec);
        let mut region = Vec::new();
        for k in 0..=groups.len() {
            if k > 0 {
                region.extend_from_slice(&groups[k - 1]);
            }
            let cut = CutSpec::new(n, region.iter().copied()).map_err(|e| fail(e.to_string()))?;
            let direct = t.entropy_of_cut(&cut);
            let dense = entropy_by_matrix(&t, &region);
            if profile[k] != direct || direct != dense {
                return Err(fail(format!(
                    "cut {k} of {:?}: prefix sweep {}, per-cut {direct}, dense {dense}",
                    spec.extents(),
                    profile[k]
                )));
            }
        }
        Ok(())
    })
}

pub fn outcome_mode_suite(options: &ValidateOptions) -> SuiteReport {
    run_trials("outcome-mode", options, 4, |seed| {
        let fail = |message: String| Failure {
            seed,
            prefix: None,
            message,
        };
        let mut rng = stream_rng(seed, Stream::Disorder);
        let spec = random_small_lattice(&mut rng);
        let steps = 2 * rng.random_range(1..=4);
        let p = rng.random_range(0.05..0.8);
        let c = sample_realization(&spec, p, steps, seed).map_err(|e| fail(e.to_string()))?;
        let record = |mode| -> std::result::Result<Vec<Vec<usize>>, Failure> {
            let mut t = scrambled_state(&spec, seed);
            let mut out = Vec::new();
            c.apply(&mut t, steps, mode, |_, tab| out.push(profile_of(tab, &spec)))
                .map_err(|e| fail(e.to_string()))?;
            Ok(out)
        };
        let forced = record(OutcomeMode::Forced)?;
        let sampled = record(OutcomeMode::Sampled)?;
        if let Some(i) = forced.iter().zip(&sampled).position(|(a, b)| a != b) {
            return Err(fail(format!(
                "profiles differ at t = {} on {:?} with p = {p}",
                2 * (i + 1),
                spec.extents()
            )));
        }
        Ok(())
    })
}
