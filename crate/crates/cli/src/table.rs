//! Field dumps: `# crestfield v1`, then `x1[,x2],u1[,u2][,|H|]` per node in
//! row-major order.

use crestfield_core::{Field, Grid};

use crate::error::CliError;

pub const HEADER: &str = "# crestfield v1";

fn csv_err(path: &str, line: usize, msg: impl Into<String>) -> CliError {
    CliError::Csv {
        path: path.into(),
        line,
        msg: msg.into(),
    }
}

/// Field dump, with `|H|` as a trailing column when `abs_h` is given.
pub fn write_field(field: &Field, abs_h: Option<&[f64]>) -> String {
    let grid = field.grid();
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    for idx in 0..grid.len() {
        let x = grid.point(idx);
        let mut row: Vec<String> = x[..grid.dim()].iter().map(f64::to_string).collect();
        row.extend(field.node(idx).iter().map(f64::to_string));
        if let Some(h) = abs_h {
            row.push(h[idx].to_string());
        }
        w.write_record(&row).expect("writing to memory");
    }
    let body = String::from_utf8(w.into_inner().expect("writing to memory")).expect("ascii output");
    format!("{HEADER}\n{body}")
}

/// Reads a field dump for `grid` with `ncomp` components. A trailing `|H|`
/// column is accepted and ignored; node coordinates must match the grid.
pub fn read_field(text: &str, path: &str, grid: &Grid, ncomp: usize) -> Result<Field, CliError> {
    let first = text.lines().next().unwrap_or("");
    if first.trim_end() != HEADER {
        return Err(csv_err(path, 1, format!("expected header \"{HEADER}\"")));
    }
    let dim = grid.dim();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::with_capacity(grid.len() * ncomp);
    let mut idx = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            csv_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != dim + ncomp && rec.len() != dim + ncomp + 1 {
            return Err(csv_err(
                path,
                line,
                format!(
                    "expected {} or {} columns, got {}",
                    dim + ncomp,
                    dim + ncomp + 1,
                    rec.len()
                ),
            ));
        }
        if idx >= grid.len() {
            return Err(csv_err(
                path,
                line,
                format!("more rows than the {} grid nodes", grid.len()),
            ));
        }
        let nums = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| csv_err(path, line, format!("not a number: \"{s}\"")))
            })
            .collect::<Result<Vec<f64>, CliError>>()?;
        let x = grid.point(idx);
        for axis in 0..dim {
            if (nums[axis] - x[axis]).abs() > 1e-9 * (1.0 + x[axis].abs()) {
                return Err(csv_err(
                    path,
                    line,
                    format!(
                        "node {idx}: coordinate x{} = {} does not match the grid ({})",
                        axis + 1,
                        nums[axis],
                        x[axis]
                    ),
                ));
            }
        }
        values.extend_from_slice(&nums[dim..dim + ncomp]);
        idx += 1;
    }
    if idx != grid.len() {
        return Err(csv_err(
            path,
            0,
            format!("expected {} rows, got {idx}", grid.len()),
        ));
    }
    Field::new(*grid, ncomp, values).map_err(|e| csv_err(path, 0, e.to_string()))
}

/// `p,E_p,crest` rows; the crest column is empty when `E_1 = 0`.
pub fn write_sweep(p: &[f64], ep: &[f64], crest: Option<&[f64]>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["p", "E_p", "crest"])
        .expect("writing to memory");
    for (k, (p, e)) in p.iter().zip(ep).enumerate() {
        let c = crest.map_or(String::new(), |c| c[k].to_string());
        w.write_record([p.to_string(), e.to_string(), c])
            .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("ascii output")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_reads_back_bit_exact() {
        let g = Grid::unit(2, 9).unwrap();
        let f = Field::from_fn(g, 2, |x, o| {
            o[0] = (x[0] * 3.1).sin();
            o[1] = 1e-20 + x[1] / 3.0;
        })
        .unwrap();
        let text = write_field(&f, Some(&vec![0.25; g.len()]));
        assert!(text.starts_with("# crestfield v1\n0,0,"));
        let back = read_field(&text, "t.csv", &g, 2).unwrap();
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn mismatched_grid_is_rejected() {
        let g = Grid::unit(1, 8).unwrap();
        let f = Field::zeros(g, 1).unwrap();
        let text = write_field(&f, None);
        let other = Grid::unit(1, 9).unwrap();
        assert!(read_field(&text, "t.csv", &other, 1).is_err());
        let shifted = Grid::new_1d(0.0, 2.0, 8).unwrap();
        assert!(read_field(&text, "t.csv", &shifted, 1).is_err());
        assert!(read_field("x1,u1\n0,0\n", "t.csv", &g, 1).is_err());
    }
}
