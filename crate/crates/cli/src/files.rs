//! CSV files exchanged between the subcommands.
//!
//! Every file has a header row. Floats are written with 17 significant digits, which is
//! enough for an exact `f64` round trip.

use std::fs;
use std::path::{Path, PathBuf};

use platform_ident::{pack9, unpack9, Fim, FimVec9, TargetState, TimeGrid, Vec2};

use crate::CliError;

pub const JOBS_CSV: &str = "jobs.csv";
pub const TARGET_CSV: &str = "target.csv";
pub const RESULT_CSV: &str = "result.csv";
pub const ZONES_CSV: &str = "zones.csv";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const RSPE_TRACE_CSV: &str = "rspe_trace.csv";
pub const GUESSES_CSV: &str = "guesses.csv";
pub const SENSITIVITY_CSV: &str = "sensitivity.csv";

/// The 9 independent entries followed by the full row-major matrix.
pub const JOBS_HEADER: [&str; 25] = [
    "j11", "j22", "j33", "j44", "j12", "j13", "j14", "j24", "j34", "m11", "m12", "m13", "m14",
    "m21", "m22", "m23", "m24", "m31", "m32", "m33", "m34", "m41", "m42", "m43", "m44",
];
pub const TARGET_HEADER: [&str; 4] = ["sample", "t", "xi_target", "eta_target"];

/// Agreement required between the two copies of the FIM in `jobs.csv`, relative to its largest entry.
const JOBS_CONSISTENCY_RTOL: f64 = 1e-12;
/// Allowed departure of the target track from a straight constant-velocity line, relative to its extent.
const TRACK_LINEARITY_RTOL: f64 = 1e-9;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn io_error(path: &Path, source: impl Into<std::io::Error>) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source: source.into(),
    }
}

/// Writes a CSV file through a temporary sibling and a rename, so readers never see a partial file.
pub fn write_csv<S: AsRef<str>>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<S>>,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| io_error(path, std::io::Error::other(e)))?;
    for row in rows {
        w.write_record(row.iter().map(AsRef::as_ref))
            .map_err(|e| io_error(path, std::io::Error::other(e)))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| io_error(path, std::io::Error::other(e.to_string())))?;

    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    let name = path.file_name().unwrap_or_default().to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| io_error(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_error(path, e))
}

fn bad_input(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {msg}", path.display()))
}

/// Reads a CSV file whose header must match `header`, returning the data rows.
fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => io_error(path, io),
        other => bad_input(path, format!("{other:?}")),
    })?;
    let found = r.headers().map_err(|e| bad_input(path, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(bad_input(
            path,
            format!(
                "expected header {}, found {}",
                header.join(","),
                found.as_slice()
            ),
        ));
    }
    r.records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| bad_input(path, e))
}

fn parse_field(path: &Path, row: usize, col: &str, text: &str) -> Result<f64, CliError> {
    let v: f64 = text.trim().parse().map_err(|_| {
        bad_input(
            path,
            format!("row {row}, column {col}: not a number: {text:?}"),
        )
    })?;
    if !v.is_finite() {
        return Err(bad_input(
            path,
            format!("row {row}, column {col}: not finite"),
        ));
    }
    Ok(v)
}

pub fn write_jobs(dir: &Path, fim: &Fim) -> Result<PathBuf, CliError> {
    let path = dir.join(JOBS_CSV);
    let v = pack9(fim).map_err(CliError::Synthesis)?;
    let row: Vec<String> = v
        .as_array()
        .iter()
        .chain(fim.to_row_major().iter())
        .map(|&x| num(x))
        .collect();
    write_csv(&path, &JOBS_HEADER, [row])?;
    Ok(path)
}

pub fn write_target(
    dir: &Path,
    target: &TargetState,
    grid: &TimeGrid,
) -> Result<PathBuf, CliError> {
    let path = dir.join(TARGET_CSV);
    let rows = grid
        .times()
        .iter()
        .zip(target.trajectory(grid))
        .enumerate()
        .map(|(i, (t, p))| vec![(i + 1).to_string(), num(*t), num(p.x), num(p.y)]);
    write_csv(&path, &TARGET_HEADER, rows)?;
    Ok(path)
}

/// Reads `jobs.csv`, checking that the 9-vector and the 4x4 matrix describe the same FIM.
pub fn read_jobs(dir: &Path) -> Result<FimVec9, CliError> {
    let path = dir.join(JOBS_CSV);
    let rows = read_csv(&path, &JOBS_HEADER)?;
    let [row] = rows.as_slice() else {
        return Err(bad_input(
            &path,
            format!("expected one data row, found {}", rows.len()),
        ));
    };
    let mut values = [0.0; 25];
    for (i, (v, col)) in values.iter_mut().zip(JOBS_HEADER).enumerate() {
        *v = parse_field(&path, 1, col, row.get(i).unwrap_or(""))?;
    }
    let mut j9 = [0.0; 9];
    j9.copy_from_slice(&values[..9]);
    let mut full = [0.0; 16];
    full.copy_from_slice(&values[9..]);

    let fim = Fim::from_row_major(&full).map_err(|e| bad_input(&path, e))?;
    let from_vec = unpack9(&FimVec9(j9));
    let scale = fim
        .rows()
        .iter()
        .flatten()
        .fold(0.0_f64, |a, v| a.max(v.abs()));
    if fim.frobenius_distance(&from_vec) > JOBS_CONSISTENCY_RTOL * scale {
        return Err(bad_input(
            &path,
            "the 9 independent entries disagree with the 4x4 matrix",
        ));
    }
    Ok(FimVec9(j9))
}

/// Reads `target.csv` and returns the sample instants with the constant-velocity track.
pub fn read_target(dir: &Path) -> Result<(Vec<f64>, TargetState), CliError> {
    let path = dir.join(TARGET_CSV);
    let rows = read_csv(&path, &TARGET_HEADER)?;
    if rows.len() < 3 {
        return Err(bad_input(
            &path,
            format!("need at least 3 samples, found {}", rows.len()),
        ));
    }
    let mut times = Vec::with_capacity(rows.len());
    let mut track = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let sample = row.get(0).unwrap_or("").trim();
        if sample.parse::<usize>().ok() != Some(i + 1) {
            return Err(bad_input(
                &path,
                format!("row {}: expected sample {}, found {sample:?}", i + 1, i + 1),
            ));
        }
        let field =
            |c: usize| parse_field(&path, i + 1, TARGET_HEADER[c], row.get(c).unwrap_or(""));
        times.push(field(1)?);
        track.push(Vec2::new(field(2)?, field(3)?));
    }

    let (p1, pn) = (track[0], track[track.len() - 1]);
    let (t1, tn) = (times[0], times[times.len() - 1]);
    if !(tn > t1) {
        return Err(bad_input(&path, "sample times must increase"));
    }
    let extent = (pn - p1).norm().max(1.0);
    for (i, (t, p)) in times.iter().zip(&track).enumerate() {
        let a = (t - t1) / (tn - t1);
        let expected = p1 * (1.0 - a) + pn * a;
        if (*p - expected).norm() > TRACK_LINEARITY_RTOL * extent {
            return Err(bad_input(
                &path,
                format!("row {}: track is not constant-velocity", i + 1),
            ));
        }
    }
    let target = TargetState::new(p1, pn).map_err(|e| bad_input(&path, e))?;
    Ok((times, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use platform_ident::{synthesize_observed, ConstrainedPlatformState};

    fn fixture() -> (TimeGrid, TargetState, Fim) {
        let grid = TimeGrid::uniform(0.0, 4.0, 201, 101).unwrap();
        let target =
            TargetState::from_velocity(Vec2::new(15e3, 35e3), Vec2::new(-10.0, 5.0), &grid)
                .unwrap();
        let truth = ConstrainedPlatformState::new(1e4, 2e4, 7.1, 2.356, 0.785).unwrap();
        let fim = synthesize_observed(&target, &truth, &grid, 2658.0).unwrap();
        (grid, target, fim)
    }

    #[test]
    fn numbers_round_trip_exactly() {
        for v in [
            0.1,
            1.0 / 3.0,
            -2658.0,
            1e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
        ] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(2658.0), "2.6580000000000000e3");
        assert_eq!(opt_num(None), "");
    }

    #[test]
    fn jobs_and_target_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (grid, target, fim) = fixture();
        write_jobs(dir.path(), &fim).unwrap();
        write_target(dir.path(), &target, &grid).unwrap();

        assert_eq!(read_jobs(dir.path()).unwrap(), pack9(&fim).unwrap());
        let (times, back) = read_target(dir.path()).unwrap();
        assert_eq!(times, grid.times());
        assert_eq!(back, target);
        assert!(!dir.path().join(".jobs.csv.tmp").exists());
    }

    #[test]
    fn inconsistent_jobs_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (_, _, fim) = fixture();
        write_jobs(dir.path(), &fim).unwrap();
        let path = dir.path().join(JOBS_CSV);
        let text = fs::read_to_string(&path).unwrap();
        let (header, row) = text.split_once('\n').unwrap();
        let mut fields: Vec<String> = row.trim().split(',').map(String::from).collect();
        fields[0] = num(fields[0].parse::<f64>().unwrap() * 1.001);
        fs::write(&path, format!("{header}\n{}\n", fields.join(","))).unwrap();
        let err = read_jobs(dir.path()).unwrap_err().to_string();
        assert!(err.contains("disagree"), "{err}");
    }

    #[test]
    fn wrong_header_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(TARGET_CSV), "n,t,x,y\n1,0,0,0\n").unwrap();
        let err = read_target(dir.path()).unwrap_err().to_string();
        assert!(err.contains("expected header"), "{err}");
    }

    #[test]
    fn bent_target_track_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (grid, target, _) = fixture();
        write_target(dir.path(), &target, &grid).unwrap();
        let path = dir.path().join(TARGET_CSV);
        let text = fs::read_to_string(&path).unwrap().replacen(
            &format!(",{}\n", num(target.trajectory(&grid)[50].y)),
            &format!(",{}\n", num(target.trajectory(&grid)[50].y + 5.0)),
            1,
        );
        fs::write(&path, text).unwrap();
        let err = read_target(dir.path()).unwrap_err().to_string();
        assert!(err.contains("row 51"), "{err}");
    }
}
