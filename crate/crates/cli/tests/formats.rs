use std::fs;
use std::path::Path;

use urbanepi::io::{read_density_csv, read_mixing_csv, write_mixing_csv};
use urbanepi::CliError;
use urbanepi_core::network::MixingMatrix;

#[test]
fn shipped_mixing_file_is_the_default_matrix() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mixing_default.csv");
    assert_eq!(read_mixing_csv(&path).unwrap(), MixingMatrix::default_urban());
}

#[test]
fn mixing_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let m = MixingMatrix::new([[1.0, 2.0, 3.0, 4.0], [2.0, 5.0, 6.0, 7.0], [3.0, 6.0, 8.0, 9.0], [4.0, 7.0, 9.0, 0.5]]).unwrap();
    write_mixing_csv(&path, &m).unwrap();
    assert_eq!(read_mixing_csv(&path).unwrap(), m);
}

#[test]
fn malformed_inputs_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.csv");
    fs::write(&m, "group,children,young,adults,elderly\nchildren,1,2,3,4\n").unwrap();
    assert!(matches!(read_mixing_csv(&m), Err(CliError::Input(_))));
    let d = dir.path().join("d.csv");
    fs::write(&d, "row,col,population\n0,0,-3\n").unwrap();
    assert!(matches!(read_density_csv(&d), Err(CliError::Input(_))));
}

#[test]
fn example_config_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/example.toml");
    let cfg = urbanepi::ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.configurations().len(), 6);
    assert_eq!(cfg.scan.unwrap().grid().unwrap().len(), 31);
}
