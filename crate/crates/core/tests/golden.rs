//! Text dumps checked against hand-derived and stored references.

use std::path::PathBuf;

use hyperdiamond::circuit::sample_realization;
use hyperdiamond::lattice::LatticeSpec;
use hyperdiamond::stabilizer::Tableau;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against a stored file; set `HYPERDIAMOND_BLESS=1` to rewrite it.
fn check_stored(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("HYPERDIAMOND_BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} changed");
}

#[test]
fn bell_pair_tableau_dump() {
    let mut t = Tableau::new_computational_basis(2).unwrap();
    t.apply_hadamard(0).unwrap();
    t.apply_cnot(0, 1).unwrap();
    assert_eq!(t.dump(), "destabilizers\n+ZI\n+IX\nstabilizers\n+XX\n+ZZ\n");
}

#[test]
fn clean_honeycomb_event_dump() {
    let spec = LatticeSpec::protocol(1, 2).unwrap();
    let c = sample_realization(&spec, 0.0, 2, 99).unwrap();
    let expected = "1 CNOT 1 2\n1 CNOT 3 4\n1 CNOT 5 6\n2 CNOT 0 1\n2 CNOT 2 3\n2 CNOT 4 5\n2 CNOT 6 7\n";
    assert_eq!(c.dump(), expected);
}

#[test]
fn disordered_event_dump_is_stable() {
    let spec = LatticeSpec::protocol(2, 2).unwrap();
    let c = sample_realization(&spec, 0.3, 4, 7).unwrap();
    check_stored("events_d2_L2_p0.3_seed7.txt", &c.dump());
}

#[test]
fn protocol_tableau_dump_is_stable() {
    use hyperdiamond::experiment::{prepare_initial_state, ProtocolConfig};
    use hyperdiamond::seeding::{stream_rng, Stream};
    let config = ProtocolConfig::new(1, 2, 0.3);
    let mut t = prepare_initial_state(&config, &mut stream_rng(11, Stream::Scramble)).unwrap();
    let spec = config.lattice().unwrap();
    sample_realization(&spec, 0.3, 4, 11)
        .unwrap()
        .apply(&mut t, 4, Default::default(), |_, _| {})
        .unwrap();
    check_stored("tableau_d1_L2_p0.3_seed11.txt", &t.dump());
}
