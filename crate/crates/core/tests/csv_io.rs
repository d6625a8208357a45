use std::io::Write;

use eivreg::canonical::{canonicalize, load_csv, sufficient_stats, SufficientStats};
use eivreg::fixture;
use tempfile::NamedTempFile;

#[test]
fn fixture_survives_a_trip_through_disk() {
    let st = SufficientStats::new(2.0, 5.0, 9.0, 0.3, -1.0, 4.0, 7, 24, 4).unwrap();
    let sample = fixture::from_stats(&st).unwrap();
    let mut file = NamedTempFile::new().unwrap();
    fixture::write_csv(&sample, &mut file).unwrap();
    file.flush().unwrap();

    let back = load_csv(file.path()).unwrap();
    assert_eq!(back, sample);
    let got = sufficient_stats(&canonicalize(&back)).unwrap();
    assert!((got.s - 4.0).abs() < 1e-10);
    assert!((got.t_uz - 2.0).abs() < 1e-10);
    assert_eq!((got.p, got.m, got.r), (7, 24, 4));
}

#[test]
fn ragged_rows_are_rejected() {
    let mut file = NamedTempFile::new().unwrap();
    writeln!(file, "y,x1,x2\n1,2,3\n4,5\n6,7,8").unwrap();
    assert!(load_csv(file.path()).is_err());
}

#[test]
fn missing_file_is_an_error() {
    assert!(load_csv("/definitely/not/here.csv").is_err());
}
