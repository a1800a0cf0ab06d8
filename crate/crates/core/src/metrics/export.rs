use std::io::Write;

use serde::{Deserialize, Serialize};

use super::field::MatrixField;
use crate::error::{Error, Result};
use crate::polynomial::multi_indices;
use crate::polytope::LabelledPolytope;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub x: Vec<f64>,
    /// Upper triangle of `H(x)`, row-major.
    pub upper: Vec<f64>,
    /// `S(H)(x)`, NaN where it could not be evaluated.
    pub abreu: f64,
}

/// Evaluates `h` on the interior points of a barycentric grid of level `level`
/// on each simplex of the triangulation.
pub fn sample_field(h: &MatrixField, p: &LabelledPolytope, level: usize) -> Result<Vec<FieldSample>> {
    let k = p.dim();
    let level = level.max(k + 1);
    let mut out = Vec::new();
    for s in p.triangulate() {
        for e in multi_indices(k + 1, level as u32) {
            if e.iter().sum::<u32>() != level as u32 || e.contains(&0) {
                continue;
            }
            let x = s.at(&e.iter().map(|&c| c as f64 / level as f64).collect::<Vec<_>>());
            let m = h.eval(&x)?;
            let upper = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]).collect();
            let abreu = h.abreu(&x).unwrap_or(f64::NAN);
            out.push(FieldSample { x, upper, abreu });
        }
    }
    Ok(out)
}

/// CSV with columns `x0.., h00, h01, .., S`.
pub fn write_field_csv<W: Write>(samples: &[FieldSample], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let n = samples.first().map(|s| s.x.len()).unwrap_or(0);
    let mut header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    header.extend((0..n).flat_map(|i| (i..n).map(move |j| format!("h{i}{j}"))));
    header.push("S".into());
    w.write_record(&header).map_err(io)?;
    for s in samples {
        let row: Vec<String> = s.x.iter().chain(&s.upper).chain([&s.abreu]).map(|v| v.to_string()).collect();
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("csv: {e}")))
}
