//! Plain-text writers: convergence CSV, field snapshots, norm histories.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fracddg::meshbasis::Space;

use crate::study::ConvergenceRow;
use crate::{fmt17, CliError};

pub const SAMPLES_PER_CELL: usize = 8;
pub const CSV_HEADER: &str = "alpha,N,K,dt,l2_error,order,wall_time_ms";

/// `(cell, reference coordinate, x)` of the snapshot sample points:
/// `SAMPLES_PER_CELL` equispaced cell-interior points per cell.
pub fn sample_points(space: &Space) -> Vec<(usize, f64, f64)> {
    let mut out = Vec::with_capacity(space.mesh.num_cells() * SAMPLES_PER_CELL);
    for k in 0..space.mesh.num_cells() {
        for s in 0..SAMPLES_PER_CELL {
            let r = -1.0 + 2.0 * (s as f64 + 0.5) / SAMPLES_PER_CELL as f64;
            out.push((k, r, space.mesh.to_physical(k, r)));
        }
    }
    out
}

/// Values of the nodal field `u` at [`sample_points`].
pub fn sample_field(space: &Space, u: &[f64]) -> Vec<f64> {
    let np = space.n_local();
    sample_points(space)
        .into_iter()
        .map(|(k, r, _)| space.basis.eval_local(&u[k * np..(k + 1) * np], r))
        .collect()
}

/// Two columns `x value` for one real field, three columns `x re im` for
/// a complex field given as `[re, im]`.
pub fn render_snapshot(space: &Space, parts: &[&[f64]]) -> Result<String, CliError> {
    let header = match parts.len() {
        1 => "# x value\n",
        2 => "# x re im\n",
        n => return Err(CliError::Output(format!("snapshot of {n} parts"))),
    };
    let cols: Vec<Vec<f64>> = parts.iter().map(|u| sample_field(space, u)).collect();
    let mut s = String::from(header);
    for (i, (_, _, x)) in sample_points(space).into_iter().enumerate() {
        s.push_str(&fmt17(x));
        for c in &cols {
            s.push(' ');
            s.push_str(&fmt17(c[i]));
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

/// CSV table of `rows`, reporting the error of equation `eq`.
pub fn render_csv(rows: &[ConvergenceRow], eq: usize) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let order = r.orders[eq].map(fmt17).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt17(r.alpha),
            r.degree,
            r.cells,
            fmt17(r.dt),
            fmt17(r.errors[eq]),
            order,
            fmt17(r.wall_time_ms)
        );
    }
    s
}

/// Parses a CSV produced by [`render_csv`] into `(alpha, N, K, dt, error, order)`.
pub fn parse_csv(text: &str) -> Result<Vec<(f64, usize, usize, f64, f64, Option<f64>)>, CliError> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(CliError::Config("missing CSV header".into()));
    }
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let bad = || CliError::Config(format!("bad CSV line '{l}'"));
            if f.len() != 7 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad());
            let order = if f[5].is_empty() { None } else { Some(num(f[5])?) };
            Ok((num(f[0])?, int(f[1])?, int(f[2])?, num(f[3])?, num(f[4])?, order))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_shape() {
        let space = Space::uniform(0.0, 1.0, 3, 1).unwrap();
        let u = space.project(|x| 2.0 * x);
        let text = render_snapshot(&space, &[&u.values]).unwrap();
        let lines: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(lines.len(), 3 * SAMPLES_PER_CELL);
        for l in lines {
            let v: Vec<f64> = l.split(' ').map(|s| s.parse().unwrap()).collect();
            assert_eq!(v.len(), 2);
            assert!((v[1] - 2.0 * v[0]).abs() < 1e-13);
        }
        let text = render_snapshot(&space, &[&u.values, &u.values]).unwrap();
        assert_eq!(text.lines().nth(1).unwrap().split(' ').count(), 3);
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            ConvergenceRow {
                alpha: 1.1,
                degree: 2,
                cells: 16,
                dt: 1e-3,
                errors: vec![1e-2],
                orders: vec![None],
                wall_time_ms: 0.0,
            },
            ConvergenceRow {
                alpha: 1.1,
                degree: 2,
                cells: 32,
                dt: 5e-4,
                errors: vec![2.5e-3],
                orders: vec![Some(2.0)],
                wall_time_ms: 0.0,
            },
        ];
        let text = render_csv(&rows, 0);
        assert!(text.lines().nth(1).unwrap().contains(",,"));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back[1], (1.1, 2, 32, 5e-4, 2.5e-3, Some(2.0)));
        assert_eq!(back[0].5, None);
    }
}
