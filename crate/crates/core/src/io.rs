//! CSV readers and writers for spectra, grids and series.
//!
//! Every writer's output is accepted by the matching reader. Numbers are
//! written in shortest round-trip form, so a write/read cycle is exact.

use std::io::{Read, Write};

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::phasematch::DispersionTable;
use crate::pump::Waveform;
use crate::specfit::SpectrumSample;
use crate::units::{detuning_to_wavelength_nm, make_grid, wavelength_detuning_to_omega, AngularFrequency, DetuningGrid, Grid2D};

pub const SPECTRUM_HEADER: [&str; 2] = ["wavelength_nm", "transmission"];
pub const GRID_HEADER: [&str; 5] = ["d_lambda_s_nm", "d_lambda_i_nm", "re", "im", "abs2"];
pub const WAVEFORM_HEADER: [&str; 4] = ["time_ps", "re", "im", "abs"];
pub const COMPLEX_SPECTRUM_HEADER: [&str; 4] = ["wavelength_nm", "re", "im", "abs2"];
pub const ADP_HEADER: [&str; 4] = ["d_omega_sum_rad_ps", "re", "im", "abs2"];
pub const DISPERSION_HEADER: [&str; 2] = ["lambda_nm", "k1_ps_per_um"];

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Reads a headed numeric CSV, checking the header and column count.
/// Returns rows with their 1-based source line numbers.
fn read_numeric<T: Real, R: Read>(reader: R, header: &[&str]) -> Result<Vec<(u64, Vec<T>)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(reader);
    let mut records = rdr.records();
    let first = match records.next() {
        None => return Err(parse_err(1, format!("empty file; expected header `{}`", header.join(",")))),
        Some(r) => r.map_err(|e| parse_err(1, e.to_string()))?,
    };
    let got: Vec<&str> = first.iter().collect();
    if got != header {
        return Err(parse_err(1, format!("expected header `{}`, found `{}`", header.join(","), got.join(","))));
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != header.len() {
            return Err(parse_err(line, format!("expected {} fields, found {}", header.len(), rec.len())));
        }
        let mut row = Vec::with_capacity(header.len());
        for (field, name) in rec.iter().zip(header) {
            let v: f64 = field.parse().map_err(|_| parse_err(line, format!("`{field}` is not a number ({name})")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite value in {name}")));
            }
            row.push(T::lit(v));
        }
        rows.push((line, row));
    }
    if rows.is_empty() {
        return Err(parse_err(2, "no data rows"));
    }
    Ok(rows)
}

fn writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(header)?;
    Ok(wtr)
}

fn write_row<W: Write, T: Real>(wtr: &mut csv::Writer<W>, row: &[T]) -> Result<()> {
    wtr.write_record(row.iter().map(|v| v.to_string()))?;
    Ok(())
}

pub fn read_spectrum<T: Real, R: Read>(reader: R) -> Result<Vec<SpectrumSample<T>>> {
    read_numeric(reader, &SPECTRUM_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            if r[1] < T::zero() {
                return Err(parse_err(line, "transmission must be non-negative"));
            }
            Ok(SpectrumSample { wavelength_nm: r[0], transmission: r[1] })
        })
        .collect()
}

pub fn write_spectrum<T: Real, W: Write>(w: W, samples: &[SpectrumSample<T>]) -> Result<()> {
    let mut wtr = writer(w, &SPECTRUM_HEADER)?;
    for s in samples {
        write_row(&mut wtr, &[s.wavelength_nm, s.transmission])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Complex values on a 2-D grid with wavelength-offset axes, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTable<T> {
    pub signal_nm: Vec<T>,
    pub idler_nm: Vec<T>,
    pub values: Array2<Complex<T>>,
}

impl<T: Real> GridTable<T> {
    pub fn from_grid(grid: &Grid2D<Complex<T>, T>) -> Self {
        Self {
            signal_nm: grid.signal_axis.wavelength_offsets_nm(),
            idler_nm: grid.idler_axis.wavelength_offsets_nm(),
            values: grid.values.clone(),
        }
    }

    /// Rebuilds angular-detuning axes about the given carriers. The samples
    /// must lie on a uniform frequency grid to within 1e-6 of a step.
    pub fn to_grid(&self, signal_center: AngularFrequency<T>, idler_center: AngularFrequency<T>) -> Result<Grid2D<Complex<T>, T>> {
        let axis = |center: AngularFrequency<T>, nm: &[T]| -> Result<DetuningGrid<T>> {
            let nu: Vec<T> = nm.iter().map(|&d| wavelength_detuning_to_omega(center, d)).collect();
            let (a, b) = (nu[0], nu[nu.len() - 1]);
            if !(b > a) {
                return Err(Error::Argument("grid axis must increase in frequency".into()));
            }
            let mid = (a + b) / T::lit(2.0);
            let step = (b - a) / T::usize(nu.len() - 1);
            let uniform: Vec<T> = make_grid(center, (b - a) / T::lit(2.0), nu.len())?.points().iter().map(|&u| u + mid).collect();
            if let Some(k) = nu.iter().zip(&uniform).position(|(&x, &u)| (x - u).abs() > T::lit(1e-6) * step) {
                return Err(Error::Argument(format!("grid axis is not uniform in frequency at index {k}")));
            }
            DetuningGrid::from_points(center, uniform)
        };
        Grid2D::new(axis(signal_center, &self.signal_nm)?, axis(idler_center, &self.idler_nm)?, self.values.clone())
    }
}

/// Writes a complex grid row-major (signal index outer).
pub fn write_grid<T: Real, W: Write>(w: W, grid: &Grid2D<Complex<T>, T>) -> Result<()> {
    let mut wtr = writer(w, &GRID_HEADER)?;
    let s_nm = grid.signal_axis.wavelength_offsets_nm();
    let i_nm = grid.idler_axis.wavelength_offsets_nm();
    for (r, &ls) in s_nm.iter().enumerate() {
        for (c, &li) in i_nm.iter().enumerate() {
            let v = grid.values[(r, c)];
            write_row(&mut wtr, &[ls, li, v.re, v.im, v.norm_sqr()])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Writes a real intensity grid in the complex-grid layout (`im` = 0).
pub fn write_intensity_grid<T: Real, W: Write>(w: W, grid: &Grid2D<T, T>) -> Result<()> {
    write_grid(w, &grid.map(|&v| Complex::new(v, T::zero())))
}

pub fn read_grid<T: Real, R: Read>(reader: R) -> Result<GridTable<T>> {
    let rows = read_numeric::<T, _>(reader, &GRID_HEADER)?;
    let first_s = rows[0].1[0];
    let n_idler = rows.iter().take_while(|(_, r)| r[0] == first_s).count();
    if rows.len() % n_idler != 0 {
        return Err(parse_err(rows[rows.len() - 1].0, format!("{} rows do not form a grid of width {n_idler}", rows.len())));
    }
    let n_signal = rows.len() / n_idler;
    let idler_nm: Vec<T> = rows[..n_idler].iter().map(|(_, r)| r[1]).collect();
    let mut signal_nm = Vec::with_capacity(n_signal);
    let mut values = Array2::zeros((n_signal, n_idler));
    for (k, (line, r)) in rows.iter().enumerate() {
        let (a, b) = (k / n_idler, k % n_idler);
        if b == 0 {
            signal_nm.push(r[0]);
        }
        if r[0] != signal_nm[a] || r[1] != idler_nm[b] {
            return Err(parse_err(*line, "grid rows are not in row-major order"));
        }
        values[(a, b)] = Complex::new(r[2], r[3]);
    }
    Ok(GridTable { signal_nm, idler_nm, values })
}

pub fn write_waveform<T: Real, W: Write>(w: W, wf: &Waveform<T>) -> Result<()> {
    let mut wtr = writer(w, &WAVEFORM_HEADER)?;
    for (&t, v) in wf.times.iter().zip(&wf.values) {
        write_row(&mut wtr, &[t, v.re, v.im, v.norm()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_waveform<T: Real, R: Read>(reader: R) -> Result<Waveform<T>> {
    let rows = read_numeric::<T, _>(reader, &WAVEFORM_HEADER)?;
    let (times, values) = rows.into_iter().map(|(_, r)| (r[0], Complex::new(r[1], r[2]))).unzip();
    Ok(Waveform { times, values })
}

/// Complex series keyed by one real abscissa, used for pump spectra
/// (`wavelength_nm`) and the sum-frequency distribution (`d_omega_sum_rad_ps`).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSeries<T> {
    pub x: Vec<T>,
    pub values: Vec<Complex<T>>,
}

fn write_series<T: Real, W: Write>(w: W, header: &[&str], s: &ComplexSeries<T>) -> Result<()> {
    let mut wtr = writer(w, header)?;
    for (&x, v) in s.x.iter().zip(&s.values) {
        write_row(&mut wtr, &[x, v.re, v.im, v.norm_sqr()])?;
    }
    wtr.flush()?;
    Ok(())
}

fn read_series<T: Real, R: Read>(reader: R, header: &[&str]) -> Result<ComplexSeries<T>> {
    let (x, values) = read_numeric::<T, _>(reader, header)?.into_iter().map(|(_, r)| (r[0], Complex::new(r[1], r[2]))).unzip();
    Ok(ComplexSeries { x, values })
}

pub fn write_complex_spectrum<T: Real, W: Write>(w: W, s: &ComplexSeries<T>) -> Result<()> {
    write_series(w, &COMPLEX_SPECTRUM_HEADER, s)
}

pub fn read_complex_spectrum<T: Real, R: Read>(reader: R) -> Result<ComplexSeries<T>> {
    read_series(reader, &COMPLEX_SPECTRUM_HEADER)
}

pub fn write_adp<T: Real, W: Write>(w: W, s: &ComplexSeries<T>) -> Result<()> {
    write_series(w, &ADP_HEADER, s)
}

pub fn read_adp<T: Real, R: Read>(reader: R) -> Result<ComplexSeries<T>> {
    read_series(reader, &ADP_HEADER)
}

pub fn read_dispersion<T: Real, R: Read>(reader: R) -> Result<DispersionTable<T>> {
    let (l, k) = read_numeric::<T, _>(reader, &DISPERSION_HEADER)?.into_iter().map(|(_, r)| (r[0], r[1])).unzip();
    DispersionTable::new(l, k)
}

pub fn write_dispersion<T: Real, W: Write>(w: W, table: &DispersionTable<T>) -> Result<()> {
    let mut wtr = writer(w, &DISPERSION_HEADER)?;
    for (&l, &k) in table.lambda_nm().iter().zip(table.k1_values()) {
        write_row(&mut wtr, &[l, k])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Absolute wavelengths (nm) of a detuning grid, for spectrum output.
pub fn grid_wavelengths_nm<T: Real>(grid: &DetuningGrid<T>) -> Result<Vec<T>> {
    let lambda0 = grid.center.wavelength_nm()?;
    Ok(grid.points().iter().map(|&d| lambda0 + detuning_to_wavelength_nm(grid.center, d)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize, m: usize, seed: f64) -> Grid2D<Complex<f64>, f64> {
        let s = make_grid(AngularFrequency(1217.85), 0.04, n).unwrap();
        let i = make_grid(AngularFrequency(1208.61), 0.04, m).unwrap();
        let values = Array2::from_shape_fn((n, m), |(a, b)| Complex::new((a as f64 * seed).sin(), (b as f64 + seed).cos() * 1e-7));
        Grid2D::new(s, i, values).unwrap()
    }

    #[test]
    fn empty_file_is_a_line_one_error() {
        let e = read_spectrum::<f64, _>(&b""[..]).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e}");
    }

    #[test]
    fn bad_number_reports_its_line() {
        let text = "wavelength_nm,transmission\n1550.0,0.9\n1550.1,abc\n";
        match read_spectrum::<f64, _>(text.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("abc"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_header_and_arity_are_rejected() {
        assert!(read_spectrum::<f64, _>("lambda,t\n1,2\n".as_bytes()).is_err());
        let e = read_spectrum::<f64, _>("wavelength_nm,transmission\n1,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(read_spectrum::<f64, _>("wavelength_nm,transmission\n1550,-0.1\n".as_bytes()).is_err());
    }

    #[test]
    fn grid_round_trip_is_exact() {
        let g = grid(7, 5, 0.37);
        let mut buf = Vec::new();
        write_grid(&mut buf, &g).unwrap();
        let t: GridTable<f64> = read_grid(&buf[..]).unwrap();
        assert_eq!(t, GridTable::from_grid(&g));
        let back = t.to_grid(g.signal_axis.center, g.idler_axis.center).unwrap();
        for (a, b) in back.signal_axis.points().iter().zip(g.signal_axis.points()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(back.values, g.values);
    }

    #[test]
    fn grid_reader_detects_ragged_rows() {
        let mut buf = Vec::new();
        write_grid(&mut buf, &grid(3, 3, 1.0)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text.lines().take(9).map(|l| format!("{l}\n")).collect();
        assert!(read_grid::<f64, _>(truncated.as_bytes()).is_err());
    }

    #[test]
    fn sample_dispersion_file_parses() {
        let t: DispersionTable<f64> = read_dispersion(&include_bytes!("../../../configs/data/dispersion_sample.csv")[..]).unwrap();
        assert!(t.k1_at(1552.61).is_ok());
        let mut buf = Vec::new();
        write_dispersion(&mut buf, &t).unwrap();
        assert_eq!(read_dispersion::<f64, _>(&buf[..]).unwrap().k1_values(), t.k1_values());
    }

    proptest! {
        #[test]
        fn spectrum_round_trip(vals in prop::collection::vec((1e-12f64..10.0, 0.0f64..2.0), 1..50)) {
            let mut acc = 1500.0;
            let samples: Vec<_> = vals.iter().map(|&(d, t)| { acc += d; SpectrumSample { wavelength_nm: acc, transmission: t } }).collect();
            let mut buf = Vec::new();
            write_spectrum(&mut buf, &samples).unwrap();
            prop_assert_eq!(read_spectrum::<f64, _>(&buf[..]).unwrap(), samples);
        }

        #[test]
        fn series_round_trip(vals in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3, -1e3f64..1e3), 1..50)) {
            let s = ComplexSeries { x: vals.iter().map(|v| v.0).collect(), values: vals.iter().map(|v| Complex::new(v.1, v.2)).collect() };
            let mut buf = Vec::new();
            write_adp(&mut buf, &s).unwrap();
            prop_assert_eq!(&read_adp::<f64, _>(&buf[..]).unwrap(), &s);
            let mut buf = Vec::new();
            write_complex_spectrum(&mut buf, &s).unwrap();
            prop_assert_eq!(&read_complex_spectrum::<f64, _>(&buf[..]).unwrap(), &s);
        }

        #[test]
        fn waveform_round_trip(vals in prop::collection::vec((-1e3f64..1e3, -1.0f64..1.0, -1.0f64..1.0), 1..50)) {
            let wf = Waveform { times: vals.iter().map(|v| v.0).collect(), values: vals.iter().map(|v| Complex::new(v.1, v.2)).collect() };
            let mut buf = Vec::new();
            write_waveform(&mut buf, &wf).unwrap();
            let back: Waveform<f64> = read_waveform(&buf[..]).unwrap();
            prop_assert_eq!(back.times, wf.times);
            prop_assert_eq!(back.values, wf.values);
        }
    }
}
