//! Datasets with prescribed sufficient statistics.
//!
//! `U` lies along the first canonical axis and `Z` in the span of the first
//! two, so `‖U‖²`, `UᵗZ` and `‖Z‖²` are hit exactly; rotating back through
//! `Qᵗ` gives the group means. Within-group deviations are a rank-one
//! pattern scaled to give the requested `S`.

use std::io::Write;

use crate::canonical::{Helmert, RepeatedMeasuresSample, SufficientStats};
use crate::error::DataError;

/// Builds `(y, x)` whose canonical statistics equal `st` up to rounding.
///
/// Needs `p ≥ 3`, and `r ≥ 2` unless `S = 0`.
pub fn from_stats(st: &SufficientStats) -> Result<RepeatedMeasuresSample, DataError> {
    st.validate()?;
    let n = st.n() as usize;
    let p = n - 1;
    let r = st.r as usize;
    if p < 3 {
        return Err(DataError::InvalidStats("fixtures need p >= 3".into()));
    }
    if r < 2 && st.s > 0.0 {
        return Err(DataError::InvalidStats("positive S needs r >= 2".into()));
    }
    if st.m as usize != n * (r - 1) {
        return Err(DataError::InvalidStats(format!("m = {} does not equal n(r-1) = {}", st.m, n * (r - 1))));
    }
    let q = Helmert::new(n)?;
    let root_u = st.u_sq.sqrt();
    let along = st.t_uz / root_u;
    let across = (st.z_sq - along * along).max(0.0).sqrt();

    let mut w_u = vec![0.0; n];
    w_u[0] = st.u0;
    w_u[1] = root_u;
    let mut w_z = vec![0.0; n];
    w_z[0] = st.z0;
    w_z[1] = along;
    w_z[2] = across;
    let xbar = q.apply_transpose(&w_u);
    let y = q.apply_transpose(&w_z);

    // d_ij = c·h_i·e_j with unit h, unit zero-sum e and c² = rS.
    let c = (r as f64 * st.s).sqrt();
    let h = 1.0 / (n as f64).sqrt();
    let e: Vec<f64> = if r < 2 {
        vec![0.0; r]
    } else {
        let k = (r * (r - 1)) as f64;
        let mut e = vec![1.0 / k.sqrt(); r - 1];
        e.push(-((r - 1) as f64) / k.sqrt());
        e
    };
    let x = xbar.iter().map(|&m| e.iter().map(|&ej| m + c * h * ej).collect()).collect();
    RepeatedMeasuresSample::new(y, x)
}

/// Writes `sample` in the `y,x1,...,xr` layout read by [`crate::load_csv`],
/// values in shortest round-trip form.
pub fn write_csv(sample: &RepeatedMeasuresSample, out: impl Write) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| DataError::Csv(e.to_string());
    let mut header = vec!["y".to_string()];
    header.extend((1..=sample.r()).map(|j| format!("x{j}")));
    w.write_record(&header).map_err(csv_err)?;
    for (y, xs) in sample.y().iter().zip(sample.x()) {
        let mut rec = vec![y.to_string()];
        rec.extend(xs.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| DataError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{canonicalize, parse_csv, sufficient_stats};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-10 * (1.0 + b.abs())
    }

    #[test]
    fn round_trips_through_canonicalization() {
        for (p, r) in [(3u32, 2u32), (10, 2), (24, 3), (6, 5)] {
            let n = p + 1;
            let st = SufficientStats::new(3.1, 2.5, 7.0, -1.2, 4.4, 1.7, p, n * (r - 1), r).unwrap();
            let sample = from_stats(&st).unwrap();
            assert_eq!((sample.n(), sample.r()), (n as usize, r as usize));
            let back = sufficient_stats(&canonicalize(&sample)).unwrap();
            for (a, b) in [
                (back.t_uz, st.t_uz),
                (back.u_sq, st.u_sq),
                (back.z_sq, st.z_sq),
                (back.u0, st.u0),
                (back.z0, st.z0),
                (back.s, st.s),
            ] {
                assert!(close(a, b), "{a} vs {b} at p={p} r={r}");
            }
        }
    }

    #[test]
    fn unreplicated_fixture_has_zero_s() {
        let st = SufficientStats::new(1.0, 2.0, 3.0, 0.0, 0.0, 0.0, 5, 0, 1).unwrap();
        let back = sufficient_stats(&canonicalize(&from_stats(&st).unwrap())).unwrap();
        assert_eq!(back.s, 0.0);
        assert!(close(back.t_uz, 1.0));
    }

    #[test]
    fn rejects_inconsistent_requests() {
        let st = SufficientStats::new(1.0, 2.0, 3.0, 0.0, 0.0, 1.0, 5, 0, 1).unwrap();
        assert!(from_stats(&st).is_err());
        let st = SufficientStats::new(1.0, 2.0, 3.0, 0.0, 0.0, 1.0, 5, 7, 2).unwrap();
        assert!(from_stats(&st).is_err());
        let st = SufficientStats::new(1.0, 2.0, 3.0, 0.0, 0.0, 1.0, 1, 2, 2).unwrap();
        assert!(from_stats(&st).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let st = SufficientStats::new(3.1, 2.5, 7.0, -1.2, 4.4, 1.7, 10, 11, 2).unwrap();
        let sample = from_stats(&st).unwrap();
        let mut buf = Vec::new();
        write_csv(&sample, &mut buf).unwrap();
        assert_eq!(parse_csv(&buf[..]).unwrap(), sample);
    }
}
