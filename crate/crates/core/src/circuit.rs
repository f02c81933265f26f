//! Disorder realizations of the hyperdiamond circuit and their execution.
//!
//! At every step `t = 1..=T`, each site whose parity matches `t` acts as the
//! control of a two-qubit gate towards each of its targets `r + e_i`. With
//! probability `1 - p` that gate is a CNOT, otherwise a projective
//! measurement of `Z(control) X(target)`. Afterwards every site receives a
//! Hadamard with probability `p`. Draws are taken from the disorder stream in
//! exactly this order: time, then controls in index order, then axes, then the
//! Hadamard draws in index order.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{LatticeSpec, Parity};
use crate::pauli::{Pauli, PauliOperator, Sign};
use crate::seeding::{stream_rng, Stream};
use crate::stabilizer::{OutcomeSource, Tableau};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    Cnot { control: usize, target: usize },
    MeasZx { control: usize, target: usize },
    Hadamard { site: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GateEvent {
    pub time: usize,
    pub kind: GateKind,
}

impl fmt::Display for GateEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GateKind::Cnot { control, target } => write!(f, "{} CNOT {control} {target}", self.time),
            GateKind::MeasZx { control, target } => {
                write!(f, "{} MEAS_ZX {control} {target}", self.time)
            }
            GateKind::Hadamard { site } => write!(f, "{} H {site}", self.time),
        }
    }
}

/// How measurement outcomes are chosen while executing a realization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeMode {
    /// Every non-deterministic outcome is `+1`.
    #[default]
    Forced,
    /// Outcomes are drawn from the realization's outcome stream.
    Sampled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitRealization {
    spec: LatticeSpec,
    p: f64,
    steps: usize,
    seed: u64,
    events: Vec<GateEvent>,
}

fn check_rate(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("disorder rate {p} outside [0, 1]")))
    }
}

pub fn sample_realization(spec: &LatticeSpec, p: f64, steps: usize, seed: u64) -> Result<CircuitRealization> {
    check_rate(p)?;
    if steps == 0 {
        return Err(Error::InvalidArgument("a realization needs at least one step".into()));
    }
    let mut rng = stream_rng(seed, Stream::Disorder);
    let n = spec.num_sites();
    let targets = spec.target_table();
    let parity: Vec<Parity> = (0..n).map(|i| spec.parity_of_index(i).expect("in range")).collect();
    let mut events = Vec::new();
    for t in 1..=steps {
        let layer = Parity::of(t);
        for control in 0..n {
            if parity[control] != layer {
                continue;
            }
            for &target in &targets[control] {
                let kind = if rng.random::<f64>() < p {
                    GateKind::MeasZx { control, target }
                } else {
                    GateKind::Cnot { control, target }
                };
                events.push(GateEvent { time: t, kind });
            }
        }
        for site in 0..n {
            if rng.random::<f64>() < p {
                events.push(GateEvent {
                    time: t,
                    kind: GateKind::Hadamard { site },
                });
            }
        }
    }
    Ok(CircuitRealization {
        spec: spec.clone(),
        p,
        steps,
        seed,
        events,
    })
}

impl CircuitRealization {
    /// Builds a realization from an explicit event list, checking the
    /// structural invariants: times in `1..=steps` and non-decreasing, two-qubit
    /// gates between a control of parity `t` and one of its targets, and
    /// Hadamards after the two-qubit gates of their step.
    pub fn from_events(
        spec: LatticeSpec,
        p: f64,
        steps: usize,
        seed: u64,
        events: Vec<GateEvent>,
    ) -> Result<Self> {
        check_rate(p)?;
        let n = spec.num_sites();
        let targets = spec.target_table();
        let mut last = (0usize, false);
        for e in &events {
            let bad = |msg: &str| Error::InvalidArgument(format!("event `{e}`: {msg}"));
            if e.time == 0 || e.time > steps {
                return Err(bad("time out of range"));
            }
            let single = matches!(e.kind, GateKind::Hadamard { .. });
            if (e.time, single) < last {
                return Err(bad("events out of order"));
            }
            last = (e.time, single);
            match e.kind {
                GateKind::Cnot { control, target } | GateKind::MeasZx { control, target } => {
                    if control >= n || !targets[control].contains(&target) {
                        return Err(bad("target is not a neighbour of the control"));
                    }
                    if spec.parity_of_index(control)? != Parity::of(e.time) {
                        return Err(bad("control parity does not match the time step"));
                    }
                }
                GateKind::Hadamard { site } => crate::error::check_index(site, n)?,
            }
        }
        Ok(Self {
            spec,
            p,
            steps,
            seed,
            events,
        })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn events(&self) -> &[GateEvent] {
        &self.events
    }

    /// One event per line: `t kind site [site2]`.
    pub fn dump(&self) -> String {
        self.events.iter().map(|e| format!("{e}\n")).collect()
    }

    /// Applies all events with `time <= upto_time` in order. `observer` is
    /// called after every even step with the step number and the state.
    /// Sampled outcomes come from the outcome stream of the realization seed.
    pub fn apply<F>(&self, tableau: &mut Tableau, upto_time: usize, mode: OutcomeMode, mut observer: F) -> Result<()>
    where
        F: FnMut(usize, &Tableau),
    {
        if tableau.num_qubits() != self.spec.num_sites() {
            return Err(Error::InvalidArgument(format!(
                "tableau has {} qubits, lattice has {} sites",
                tableau.num_qubits(),
                self.spec.num_sites()
            )));
        }
        if upto_time > self.steps {
            return Err(Error::InvalidArgument(format!(
                "cannot run to step {upto_time} of a {}-step realization",
                self.steps
            )));
        }
        let mut outcomes = stream_rng(self.seed, Stream::Outcomes);
        let mut events = self.events.iter().peekable();
        for t in 1..=upto_time {
            while let Some(e) = events.next_if(|e| e.time == t) {
                match e.kind {
                    GateKind::Hadamard { site } => tableau.hadamard_unchecked(site),
                    GateKind::Cnot { control, target } => tableau.cnot_unchecked(control, target),
                    GateKind::MeasZx { control, target } => {
                        let source = match mode {
                            OutcomeMode::Forced => OutcomeSource::Forced(Sign::Plus),
                            OutcomeMode::Sampled => OutcomeSource::Random(&mut outcomes),
                        };
                        tableau.measure_zx(control, target, source);
                    }
                }
            }
            if t % 2 == 0 {
                observer(t, tableau);
            }
        }
        Ok(())
    }
}

/// Free function form of [`CircuitRealization::apply`].
pub fn apply_realization<F>(
    c: &CircuitRealization,
    tableau: &mut Tableau,
    upto_time: usize,
    mode: OutcomeMode,
    observer: F,
) -> Result<()>
where
    F: FnMut(usize, &Tableau),
{
    c.apply(tableau, upto_time, mode, observer)
}

/// Spread of a single-site Pauli under a realization.
#[derive(Clone, Debug, PartialEq)]
pub struct ButterflyProbe {
    /// Support radius after each full period, starting with period 0.
    pub radii: Vec<usize>,
    /// Least-squares slope of radius against period through the origin, over
    /// the periods up to the first one in which the support reaches the edge.
    pub velocity: f64,
}

/// Tracks `U P U^dagger` for a single-site Pauli `P` at `origin` under the
/// unitary gates of `c` (measurement events are skipped). The support radius
/// is the largest lattice distance from the origin, with minimum-image
/// distance along periodic axes.
pub fn butterfly_probe_realization(c: &CircuitRealization, origin: usize, pauli: Pauli) -> Result<ButterflyProbe> {
    let spec = c.spec();
    let n = spec.num_sites();
    let op_origin = spec.site_of(origin)?;
    let mut op = PauliOperator::single(n, origin, pauli)?;
    let coords: Vec<Vec<usize>> = (0..n).map(|i| spec.site_of(i).expect("in range").coords).collect();
    let distance = |i: usize| -> usize {
        coords[i]
            .iter()
            .zip(&op_origin.coords)
            .zip(spec.extents().iter().zip(spec.boundary()))
            .map(|((&a, &b), (&e, &bc))| {
                let d = a.abs_diff(b);
                match bc {
                    crate::lattice::Boundary::Open => d,
                    crate::lattice::Boundary::Periodic => d.min(e - d),
                }
            })
            .sum()
    };
    // Spreading is measured until the support first reaches an open edge
    // or the antipode of a periodic axis.
    let saturated = |op: &PauliOperator| {
        op.support().into_iter().any(|i| {
            coords[i]
                .iter()
                .zip(&op_origin.coords)
                .zip(spec.extents().iter().zip(spec.boundary()))
                .any(|((&a, &b), (&e, &bc))| match bc {
                    crate::lattice::Boundary::Open => a == 0 || a + 1 == e,
                    crate::lattice::Boundary::Periodic => {
                        let d = a.abs_diff(b);
                        d.min(e - d) >= e / 2
                    }
                })
        })
    };
    let radius = |op: &PauliOperator| op.support().into_iter().map(distance).max().unwrap_or(0);
    let mut radii = vec![radius(&op)];
    let mut usable_periods = if saturated(&op) { 0 } else { usize::MAX };
    let mut events = c.events().iter().peekable();
    for t in 1..=c.steps() {
        while let Some(e) = events.next_if(|e| e.time == t) {
            match e.kind {
                GateKind::Hadamard { site } => op.conjugate_hadamard(site)?,
                GateKind::Cnot { control, target } => op.conjugate_cnot(control, target)?,
                GateKind::MeasZx { .. } => {}
            }
        }
        if t % 2 == 0 {
            radii.push(radius(&op));
            if usable_periods == usize::MAX && saturated(&op) {
                usable_periods = t / 2;
            }
        }
    }
    let usable: Vec<(f64, f64)> = radii
        .iter()
        .enumerate()
        .skip(1)
        .take(usable_periods)
        .map(|(k, &r)| (k as f64, r as f64))
        .collect();
    let sxx: f64 = usable.iter().map(|(k, _)| k * k).sum();
    let sxy: f64 = usable.iter().map(|(k, r)| k * r).sum();
    let velocity = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    Ok(ButterflyProbe { radii, velocity })
}

/// Butterfly velocity (sites per period) of the disorder-free circuit on
/// `spec`, probed with a Pauli at the central site. `seed` picks the Pauli
/// type among X, Y, Z.
pub fn butterfly_probe(spec: &LatticeSpec, seed: u64) -> Result<ButterflyProbe> {
    let half: Vec<usize> = spec.extents().iter().map(|e| e / 2).collect();
    let origin = spec.site_index(&crate::lattice::Site::new(half))?;
    let pauli = [Pauli::X, Pauli::Y, Pauli::Z][(crate::seeding::splitmix64(seed) % 3) as usize];
    let steps = 2 * spec.extents().iter().max().copied().unwrap_or(1).max(1);
    let c = sample_realization(spec, 0.0, steps, seed)?;
    butterfly_probe_realization(&c, origin, pauli)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;
    use crate::stabilizer::CutSpec;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> LatticeSpec {
        LatticeSpec::protocol(2, 2).unwrap()
    }

    #[test]
    fn disorder_free_events_are_cnot_layers() {
        let spec = small();
        let c = sample_realization(&spec, 0.0, 4, 1).unwrap();
        let targets = spec.target_table();
        let mut expected = Vec::new();
        for t in 1..=4 {
            for i in 0..spec.num_sites() {
                if spec.parity_of_index(i).unwrap() == Parity::of(t) {
                    for &j in &targets[i] {
                        expected.push(GateEvent { time: t, kind: GateKind::Cnot { control: i, target: j } });
                    }
                }
            }
        }
        assert_eq!(c.events(), expected.as_slice());
    }

    #[test]
    fn full_rate_measures_everything() {
        let spec = small();
        let c = sample_realization(&spec, 1.0, 3, 1).unwrap();
        assert!(c.events().iter().all(|e| !matches!(e.kind, GateKind::Cnot { .. })));
        let h = c.events().iter().filter(|e| matches!(e.kind, GateKind::Hadamard { .. })).count();
        assert_eq!(h, 3 * spec.num_sites());
    }

    #[test]
    fn measurement_fraction_is_binomial() {
        let spec = LatticeSpec::protocol(3, 4).unwrap();
        let c = sample_realization(&spec, 0.1, 40, 9).unwrap();
        let two: Vec<_> = c.events().iter().filter(|e| !matches!(e.kind, GateKind::Hadamard { .. })).collect();
        let m = two.iter().filter(|e| matches!(e.kind, GateKind::MeasZx { .. })).count() as f64;
        let n = two.len() as f64;
        let sd = (n * 0.1 * 0.9).sqrt();
        assert!((m - 0.1 * n).abs() < 3.0 * sd, "{m} of {n}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let spec = small();
        assert!(sample_realization(&spec, 1.5, 2, 0).is_err());
        assert!(sample_realization(&spec, -0.1, 2, 0).is_err());
        assert!(sample_realization(&spec, 0.1, 0, 0).is_err());
        let c = sample_realization(&spec, 0.1, 2, 0).unwrap();
        let mut wrong = Tableau::new_computational_basis(3).unwrap();
        assert!(c.apply(&mut wrong, 2, OutcomeMode::Forced, |_, _| {}).is_err());
        let mut t = Tableau::new_computational_basis(spec.num_sites()).unwrap();
        assert!(c.apply(&mut t, 3, OutcomeMode::Forced, |_, _| {}).is_err());
    }

    #[test]
    fn from_events_validates() {
        let spec = small();
        let bad_target = vec![GateEvent { time: 1, kind: GateKind::Cnot { control: 1, target: 7 } }];
        assert!(CircuitRealization::from_events(spec.clone(), 0.0, 1, 0, bad_target).is_err());
        let bad_parity = vec![GateEvent { time: 2, kind: GateKind::Cnot { control: 1, target: 3 } }];
        assert!(CircuitRealization::from_events(spec.clone(), 0.0, 2, 0, bad_parity).is_err());
        let c = sample_realization(&spec, 0.3, 3, 5).unwrap();
        let again = CircuitRealization::from_events(spec, 0.3, 3, 5, c.events().to_vec()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn zero_steps_leave_state_and_observer_sees_even_times() {
        let spec = small();
        let c = sample_realization(&spec, 0.2, 5, 3).unwrap();
        let mut t = Tableau::new_computational_basis(spec.num_sites()).unwrap();
        let before = t.clone();
        c.apply(&mut t, 0, OutcomeMode::Forced, |_, _| panic!("no period elapsed")).unwrap();
        assert_eq!(t, before);
        let mut seen = Vec::new();
        c.apply(&mut t, 5, OutcomeMode::Forced, |s, _| seen.push(s)).unwrap();
        assert_eq!(seen, vec![2, 4]);
    }

    #[test]
    fn same_seed_same_state() {
        let spec = LatticeSpec::protocol(2, 4).unwrap();
        let run = || {
            let c = sample_realization(&spec, 0.1, 8, 11).unwrap();
            let mut t = Tableau::new_computational_basis(spec.num_sites()).unwrap();
            t.scramble_random_clifford(&[0, 1, 2, 3, 4, 5], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            c.apply(&mut t, 8, OutcomeMode::Sampled, |_, _| {}).unwrap();
            t
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn outcome_mode_does_not_change_entropies() {
        let spec = LatticeSpec::protocol(2, 2).unwrap();
        let n = spec.num_sites();
        let groups = spec.cut_prefix_groups();
        for seed in 0..20 {
            let c = sample_realization(&spec, 0.3, 8, seed).unwrap();
            let mut a = Tableau::new_computational_basis(n).unwrap();
            a.scramble_random_clifford(&(0..n).collect::<Vec<_>>(), &mut ChaCha8Rng::seed_from_u64(seed))
                .unwrap();
            let mut b = a.clone();
            c.apply(&mut a, 8, OutcomeMode::Forced, |_, _| {}).unwrap();
            c.apply(&mut b, 8, OutcomeMode::Sampled, |_, _| {}).unwrap();
            assert_eq!(a.entropy_profile(&groups).unwrap(), b.entropy_profile(&groups).unwrap());
        }
    }

    #[test]
    fn disorder_free_circuit_is_unitary() {
        let spec = LatticeSpec::protocol(3, 2).unwrap();
        let n = spec.num_sites();
        let c = sample_realization(&spec, 0.0, 4, 0).unwrap();
        let mut t = Tableau::new_computational_basis(n).unwrap();
        t.scramble_random_clifford(&(0..n / 2).collect::<Vec<_>>(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        c.apply(&mut t, 4, OutcomeMode::Forced, |_, _| {}).unwrap();
        t.check_invariants().unwrap();
        let all = CutSpec::new(n, 0..n).unwrap();
        assert_eq!(t.entropy_of_cut(&all), 0);
    }

    #[test]
    fn layer_shuffle_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..100 {
            let d = 1 + trial % 3;
            let extents: Vec<usize> = (0..d).map(|a| if a == 0 { 2 * rng.random_range(1..4) } else { 2 * rng.random_range(1..3) }).collect();
            let boundary: Vec<Boundary> = (0..d).map(|a| if a == 0 { Boundary::Open } else { Boundary::Periodic }).collect();
            let spec = LatticeSpec::new(extents, boundary).unwrap();
            let n = spec.num_sites();
            let c = sample_realization(&spec, 0.0, 4, trial as u64).unwrap();
            let mut events = c.events().to_vec();
            for t in 1..=4 {
                if let Some(lo) = events.iter().position(|e| e.time == t) {
                    let hi = events.iter().rposition(|e| e.time == t).unwrap() + 1;
                    events[lo..hi].shuffle(&mut rng);
                }
            }
            let shuffled = CircuitRealization::from_events(spec.clone(), 0.0, 4, 0, events).unwrap();
            let mut a = Tableau::new_computational_basis(n).unwrap();
            a.scramble_random_clifford(&(0..n).collect::<Vec<_>>(), &mut rng).unwrap();
            let mut b = a.clone();
            c.apply(&mut a, 4, OutcomeMode::Forced, |_, _| {}).unwrap();
            shuffled.apply(&mut b, 4, OutcomeMode::Forced, |_, _| {}).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn dump_format() {
        let spec = LatticeSpec::new(vec![2], vec![Boundary::Open]).unwrap();
        let c = sample_realization(&spec, 0.0, 2, 0).unwrap();
        assert_eq!(c.dump(), "2 CNOT 0 1\n");
        let events = vec![
            GateEvent { time: 1, kind: GateKind::MeasZx { control: 1, target: 2 } },
            GateEvent { time: 1, kind: GateKind::Hadamard { site: 0 } },
        ];
        let spec = LatticeSpec::new(vec![3], vec![Boundary::Open]).unwrap();
        let c = CircuitRealization::from_events(spec, 0.5, 1, 0, events).unwrap();
        assert_eq!(c.dump(), "1 MEAS_ZX 1 2\n1 H 0\n");
    }

    #[test]
    fn butterfly_examples() {
        let chain = LatticeSpec::protocol(1, 16).unwrap();
        let probe = butterfly_probe(&chain, 0).unwrap();
        assert!(probe.velocity > 0.5, "{probe:?}");
        let radii = &probe.radii;
        assert!(radii.windows(2).take(10).all(|w| w[1] >= w[0]));

        let empty = CircuitRealization::from_events(chain.clone(), 0.0, 8, 0, vec![]).unwrap();
        let still = butterfly_probe_realization(&empty, 20, Pauli::X).unwrap();
        assert_eq!(still.velocity, 0.0);

        let cube = LatticeSpec::protocol(3, 4).unwrap();
        let probe = butterfly_probe(&cube, 1).unwrap();
        assert!(probe.velocity > 0.0 && probe.velocity <= 6.0, "{probe:?}");
        for (k, &r) in probe.radii.iter().enumerate() {
            assert!(r <= 6 * k.max(1), "{probe:?}");
        }
    }
}
