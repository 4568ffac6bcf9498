//! Plain-text artifact formats.
//!
//! Field file, one row per interior node in storage order, coordinates
//! first and then the `n` component values:
//!
//! ```text
//! # field dim=1 lengths=4 nodes=256 components=2
//! # x u1 u2
//! 1.5686274509803921e-2 3.1e-1 2.2e-1
//! ```
//!
//! Numbers use the shortest representation that parses back to the same
//! `f64`, so write → read is exact.
//!
//! A trajectory is a directory holding `manifest.txt`, one
//! `state_NNNNNN.txt` field per sample and, for projection runs,
//! `multiplier_NNNNNN.txt`. The manifest is `key = value` lines:
//!
//! ```text
//! format = trajectory-v1
//! samples = 3
//! steps = 20
//! dt = 5e-3
//! multipliers = false
//! meta.scheme = imex
//! time.000000 = 0e0
//! ```
//!
//! Wall-clock time goes to a separate `timing.txt`, so everything else is
//! byte-identical across reruns. A multiplier track is a directory of the
//! same shape with `format = multiplier-track-v1`, a `source` tag and
//! `h_NNNNNN.txt` fields.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::lagrange::{MultiplierSource, MultiplierTrack};
use crate::verify::report::{summary_table, EstimateReport};

const TRAJECTORY_FORMAT: &str = "trajectory-v1";
const TRACK_FORMAT: &str = "multiplier-track-v1";

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn join_f64(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",")
}

fn join_usize(values: &[usize]) -> String {
    values.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// `key = value` lines; blank lines and `#` comments are skipped. Returns
/// `(line number, key, value)` in file order; duplicate keys are an error.
pub fn parse_key_values(text: &str, path: &Path) -> Result<Vec<(usize, String, String)>> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_error(path, i + 1, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(parse_error(path, i + 1, "empty key"));
        }
        if let Some(first) = seen.insert(key.clone(), i + 1) {
            return Err(parse_error(path, i + 1, format!("duplicate key `{key}` (first on line {first})")));
        }
        out.push((i + 1, key, value.trim().to_string()));
    }
    Ok(out)
}

fn field_header(grid: &Grid, n: usize) -> String {
    let axes = ["x", "y"];
    let mut columns: Vec<String> = axes[..grid.dim()].iter().map(|a| a.to_string()).collect();
    columns.extend((1..=n).map(|c| format!("u{c}")));
    format!(
        "# field dim={} lengths={} nodes={} components={n}\n# {}\n",
        grid.dim(),
        join_f64(grid.lengths()),
        join_usize(grid.nodes()),
        columns.join(" ")
    )
}

pub fn field_to_string(f: &Field) -> String {
    let grid = f.grid();
    let mut out = field_header(grid, f.components());
    for (k, values) in f.nodes().enumerate() {
        let x = grid.coords(k);
        let row: Vec<String> = x[..grid.dim()].iter().chain(values).map(|v| format!("{v:e}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_field(path: &Path, f: &Field) -> Result<()> {
    Ok(fs::write(path, field_to_string(f))?)
}

fn parse_list<T: std::str::FromStr>(s: &str, path: &Path, what: &str) -> Result<Vec<T>> {
    s.split(',').map(|v| v.trim().parse().map_err(|_| parse_error(path, 1, format!("bad {what} `{v}`")))).collect()
}

/// Grid and component count from a field header line.
fn parse_field_header(line: &str, path: &Path) -> Result<(Grid, usize)> {
    let body = line.strip_prefix("# field").ok_or_else(|| parse_error(path, 1, "missing `# field` header"))?;
    let mut attrs = BTreeMap::new();
    for token in body.split_whitespace() {
        let (k, v) =
            token.split_once('=').ok_or_else(|| parse_error(path, 1, format!("bad header token `{token}`")))?;
        attrs.insert(k, v);
    }
    let get = |k: &str| attrs.get(k).copied().ok_or_else(|| parse_error(path, 1, format!("header lacks `{k}`")));
    let dim: usize = get("dim")?.parse().map_err(|_| parse_error(path, 1, "bad dim"))?;
    let lengths: Vec<f64> = parse_list(get("lengths")?, path, "length")?;
    let nodes: Vec<usize> = parse_list(get("nodes")?, path, "node count")?;
    let n: usize = get("components")?.parse().map_err(|_| parse_error(path, 1, "bad components"))?;
    Ok((Grid::new(dim, &lengths, &nodes)?, n))
}

fn parse_field_body(text: &str, path: &Path, grid: Arc<Grid>, n: usize) -> Result<Field> {
    let dim = grid.dim();
    let mut values = Vec::with_capacity(grid.interior_len() * n);
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let numbers: Vec<f64> = line
            .split_whitespace()
            .map(|v| v.parse().map_err(|_| parse_error(path, i + 1, format!("bad number `{v}`"))))
            .collect::<Result<_>>()?;
        if numbers.len() != dim + n {
            return Err(parse_error(path, i + 1, format!("expected {} columns, got {}", dim + n, numbers.len())));
        }
        values.extend_from_slice(&numbers[dim..]);
        rows += 1;
    }
    if rows != grid.interior_len() {
        return Err(parse_error(path, 0, format!("expected {} rows, got {rows}", grid.interior_len())));
    }
    Field::from_values(grid, n, values)
}

pub fn parse_field(text: &str, path: &Path) -> Result<Field> {
    let header = text.lines().next().unwrap_or_default();
    let (grid, n) = parse_field_header(header, path)?;
    parse_field_body(text, path, Arc::new(grid), n)
}

pub fn read_field(path: &Path) -> Result<Field> {
    parse_field(&fs::read_to_string(path)?, path)
}

/// Reads a field that must live on `grid`; the result shares it.
fn read_field_on(path: &Path, grid: &Arc<Grid>) -> Result<Field> {
    let text = fs::read_to_string(path)?;
    let (g, n) = parse_field_header(text.lines().next().unwrap_or_default(), path)?;
    if g != **grid {
        return Err(parse_error(path, 1, "grid differs from the first sample"));
    }
    parse_field_body(&text, path, grid.clone(), n)
}

fn sample_name(prefix: &str, k: usize) -> String {
    format!("{prefix}_{k:06}.txt")
}

fn write_manifest(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut out = String::new();
    for (k, v) in entries {
        writeln!(out, "{k} = {v}").expect("writing to a String");
    }
    Ok(fs::write(path, out)?)
}

fn read_manifest(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    Ok(parse_key_values(&text, path)?.into_iter().map(|(_, k, v)| (k, v)).collect())
}

fn manifest_get<'a>(m: &'a BTreeMap<String, String>, key: &str, path: &Path) -> Result<&'a str> {
    m.get(key).map(String::as_str).ok_or_else(|| parse_error(path, 0, format!("manifest lacks `{key}`")))
}

fn manifest_num<T: std::str::FromStr>(m: &BTreeMap<String, String>, key: &str, path: &Path) -> Result<T> {
    manifest_get(m, key, path)?.parse().map_err(|_| parse_error(path, 0, format!("bad value for `{key}`")))
}

fn manifest_times(m: &BTreeMap<String, String>, samples: usize, path: &Path) -> Result<Vec<f64>> {
    (0..samples).map(|k| manifest_num(m, &format!("time.{k:06}"), path)).collect()
}

pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut entries = vec![
        ("format".to_string(), TRAJECTORY_FORMAT.to_string()),
        ("samples".into(), traj.len().to_string()),
        ("steps".into(), traj.steps.to_string()),
        ("dt".into(), format!("{:e}", traj.dt)),
        ("multipliers".into(), traj.multipliers.is_some().to_string()),
    ];
    entries.extend(traj.metadata.iter().map(|(k, v)| (format!("meta.{k}"), v.clone())));
    entries.extend(traj.times.iter().enumerate().map(|(k, t)| (format!("time.{k:06}"), format!("{t:e}"))));
    write_manifest(&dir.join("manifest.txt"), &entries)?;
    for (k, state) in traj.states.iter().enumerate() {
        write_field(&dir.join(sample_name("state", k)), state)?;
    }
    if let Some(hs) = &traj.multipliers {
        for (k, h) in hs.iter().enumerate() {
            write_field(&dir.join(sample_name("multiplier", k)), h)?;
        }
    }
    fs::write(dir.join("timing.txt"), format!("wall_clock = {:e}\n", traj.wall_clock))?;
    Ok(())
}

pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let path = dir.join("manifest.txt");
    let m = read_manifest(&path)?;
    if manifest_get(&m, "format", &path)? != TRAJECTORY_FORMAT {
        return Err(parse_error(&path, 0, format!("expected format {TRAJECTORY_FORMAT}")));
    }
    let samples: usize = manifest_num(&m, "samples", &path)?;
    if samples == 0 {
        return Err(parse_error(&path, 0, "trajectory has no samples"));
    }
    let with_multipliers: bool = manifest_num(&m, "multipliers", &path)?;
    let metadata = m.iter().filter_map(|(k, v)| k.strip_prefix("meta.").map(|k| (k.to_string(), v.clone()))).collect();
    let mut traj = Trajectory::new(metadata, manifest_num(&m, "dt", &path)?);
    traj.steps = manifest_num(&m, "steps", &path)?;
    let times = manifest_times(&m, samples, &path)?;
    let first = read_field(&dir.join(sample_name("state", 0)))?;
    let grid = first.grid().clone();
    for (k, t) in times.into_iter().enumerate() {
        let state = if k == 0 { first.clone() } else { read_field_on(&dir.join(sample_name("state", k)), &grid)? };
        let h =
            if with_multipliers { Some(read_field_on(&dir.join(sample_name("multiplier", k)), &grid)?) } else { None };
        traj.push(t, state, h);
    }
    let timing = dir.join("timing.txt");
    if timing.exists() {
        traj.wall_clock = manifest_num(&read_manifest(&timing)?, "wall_clock", &timing)?;
    }
    Ok(traj)
}

pub fn write_multiplier_track(dir: &Path, track: &MultiplierTrack) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut entries = vec![
        ("format".to_string(), TRACK_FORMAT.to_string()),
        ("source".into(), track.source.to_string()),
        ("samples".into(), track.len().to_string()),
    ];
    entries.extend(track.times.iter().enumerate().map(|(k, t)| (format!("time.{k:06}"), format!("{t:e}"))));
    write_manifest(&dir.join("manifest.txt"), &entries)?;
    for (k, h) in track.fields.iter().enumerate() {
        write_field(&dir.join(sample_name("h", k)), h)?;
    }
    Ok(())
}

pub fn read_multiplier_track(dir: &Path) -> Result<MultiplierTrack> {
    let path = dir.join("manifest.txt");
    let m = read_manifest(&path)?;
    if manifest_get(&m, "format", &path)? != TRACK_FORMAT {
        return Err(parse_error(&path, 0, format!("expected format {TRACK_FORMAT}")));
    }
    let source: MultiplierSource =
        manifest_get(&m, "source", &path)?.parse().map_err(|e: String| parse_error(&path, 0, e))?;
    let samples: usize = manifest_num(&m, "samples", &path)?;
    let times = manifest_times(&m, samples, &path)?;
    let mut fields = Vec::with_capacity(samples);
    if samples > 0 {
        let first = read_field(&dir.join(sample_name("h", 0)))?;
        let grid = first.grid().clone();
        fields.push(first);
        for k in 1..samples {
            fields.push(read_field_on(&dir.join(sample_name("h", k)), &grid)?);
        }
    }
    MultiplierTrack::new(times, fields, source)
}

pub fn write_report(path: &Path, report: &EstimateReport) -> Result<()> {
    Ok(fs::write(path, report.to_record())?)
}

pub fn read_report(path: &Path) -> Result<EstimateReport> {
    EstimateReport::parse_record(&fs::read_to_string(path)?, path)
}

/// One record per report under `dir` (named by position, check and
/// parameters) plus `summary.tsv`. Runtimes go to `timing.txt` and are
/// zeroed in the records, keeping the records reproducible.
pub fn write_reports(dir: &Path, reports: &[EstimateReport]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(reports.len());
    let mut timing = String::new();
    for (i, r) in reports.iter().enumerate() {
        let label: String = format!("{}_{}", r.check, r.params_label())
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
            .collect();
        let path = dir.join(format!("{i:03}_{}.txt", label.trim_end_matches('_')));
        write_report(&path, &r.clone().runtime(0.0))?;
        writeln!(timing, "{} [{}] = {:e}", r.check, r.params_label(), r.runtime).expect("writing to a String");
        paths.push(path);
    }
    fs::write(dir.join("summary.tsv"), summary_table(reports))?;
    fs::write(dir.join("timing.txt"), timing)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::ConvexBody;
    use crate::dynamics::{Integrator, ReactionSpec};
    use crate::rng;

    #[test]
    fn field_round_trip_is_exact_in_1d_and_2d() {
        for grid in [Grid::interval(4.0, 17).unwrap(), Grid::rectangle(1.0, 2.0, 6, 11).unwrap()] {
            let g = Arc::new(grid);
            let f = rng::field_in_body(&g, &ConvexBody::simplex(3).unwrap(), &mut rng::stream(3, 0));
            let back = parse_field(&field_to_string(&f), Path::new("mem")).unwrap();
            assert_eq!(back, f);
        }
    }

    #[test]
    fn header_documents_columns() {
        let g = Arc::new(Grid::interval(1.0, 4).unwrap());
        let text = field_to_string(&Field::zeros(g, 2));
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# field dim=1 lengths=1e0 nodes=4 components=2"));
        assert_eq!(lines.next(), Some("# x u1 u2"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn malformed_field_reports_the_line() {
        let text = "# field dim=1 lengths=1 nodes=4 components=1\n# x u1\n0.25 1\n0.5 oops\n";
        match parse_field(text, Path::new("f.txt")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        assert!(parse_key_values("a = 1\n# c\n\nb = 2\n", Path::new("k")).is_ok());
        assert!(matches!(parse_key_values("a = 1\na = 2\n", Path::new("k")), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn trajectory_and_track_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Arc::new(Grid::interval(2.0, 9).unwrap());
        let body = ConvexBody::simplex(2).unwrap();
        let u0 = rng::field_in_body(&g, &body, &mut rng::stream(2, 0));
        let traj = Integrator::projected(g, body, ReactionSpec::LinearLambda(5.0), 0.01)
            .unwrap()
            .integrate(&u0, 0.05, 2)
            .unwrap();
        write_trajectory(&dir.path().join("t"), &traj).unwrap();
        let back = read_trajectory(&dir.path().join("t")).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.states, traj.states);
        assert_eq!(back.multipliers, traj.multipliers);
        assert_eq!(back.metadata, traj.metadata);
        assert_eq!((back.dt, back.steps), (traj.dt, traj.steps));

        let track = MultiplierTrack::from_projection(&traj).unwrap();
        write_multiplier_track(&dir.path().join("h"), &track).unwrap();
        assert_eq!(read_multiplier_track(&dir.path().join("h")).unwrap(), track);
    }

    #[test]
    fn reports_round_trip_without_runtime() {
        let dir = tempfile::tempdir().unwrap();
        let r =
            EstimateReport::new("contraction", 1.0, 1.05, 0.0).param("eps", "1e-3").constant("tol", 0.05).runtime(2.0);
        let paths = write_reports(dir.path(), std::slice::from_ref(&r)).unwrap();
        assert_eq!(read_report(&paths[0]).unwrap(), r.clone().runtime(0.0));
        assert!(fs::read_to_string(dir.path().join("summary.tsv")).unwrap().contains("contraction"));
    }
}
