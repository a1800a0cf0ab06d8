//! Crease-function stability tests.
//!
//! `L` is evaluated exactly on piecewise-linear convex functions by splitting
//! the polytope into the regions where a single affine piece is maximal. The
//! scan sweeps crease functions `max(0, <u, x> + c)` normalized at a basepoint
//! and reports the smallest ratio `L(f) / ∫_{∂P} f σ`; a negative ratio is a
//! destabilizing witness, a positive minimum only says the sample is positive.

use std::cmp::Ordering;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremal::{extremal_affine, AffineFunction};
use crate::linalg::{dot, norm};
use crate::polytope::{BoundaryMeasure, Halfspace, LabelledPolytope};
use crate::quadrature::{integrate_poly_bulk, integrate_poly_facet};

pub const TOL_STAB: f64 = 1e-8;

/// `x ↦ max_i piece_i(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PLConvexFunction {
    pub pieces: Vec<AffineFunction>,
}

impl PLConvexFunction {
    pub fn new(pieces: Vec<AffineFunction>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::InvalidInput("a PL function needs at least one piece".into()));
        };
        if pieces.iter().any(|p| p.dim() != first.dim()) {
            return Err(Error::InvalidInput("pieces have different dimensions".into()));
        }
        Ok(Self { pieces })
    }

    /// `max(0, l)`.
    pub fn crease(l: AffineFunction) -> Self {
        Self { pieces: vec![AffineFunction::zero(l.dim()), l] }
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.pieces.iter().map(|p| p.eval(x)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Lowest-index piece attaining the maximum at `x` (up to `tol`).
    pub fn active_piece(&self, x: &[f64], tol: f64) -> usize {
        let m = self.eval(x);
        self.pieces.iter().position(|p| p.eval(x) >= m - tol).unwrap()
    }

    pub fn add_affine(&self, a: &AffineFunction) -> Self {
        Self { pieces: self.pieces.iter().map(|p| p.add(a)).collect() }
    }

    pub fn scale(&self, t: f64) -> Self {
        assert!(t > 0.0, "only positive scalings preserve convexity");
        Self { pieces: self.pieces.iter().map(|p| p.scale(t)).collect() }
    }

    /// Drops pieces that are nowhere strictly maximal on `p`.
    pub fn pruned(&self, p: &LabelledPolytope) -> Self {
        let keep: Vec<usize> = regions(p, self).into_iter().map(|r| r.piece).collect();
        Self { pieces: keep.into_iter().map(|i| self.pieces[i].clone()).collect() }
    }
}

/// A PL convex function with `f(p0) = 0` and `f >= 0` on the closed polytope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPL {
    pub function: PLConvexFunction,
    pub basepoint: Vec<f64>,
}

/// Subtracts the supporting affine function at `p0`.
pub fn normalize(f: &PLConvexFunction, p0: &[f64]) -> NormalizedPL {
    let active = f.pieces[f.active_piece(p0, 0.0)].clone();
    NormalizedPL { function: f.add_affine(&active.scale(-1.0)), basepoint: p0.to_vec() }
}

/// A sub-polytope on which `piece` is the maximal affine piece.
#[derive(Clone, Debug)]
pub struct Region {
    pub polytope: LabelledPolytope,
    pub piece: usize,
    /// For each facet of the region, the facet of the parent it lies on (`None` for cuts).
    pub origin: Vec<Option<usize>>,
}

/// Partition of `p` by the maximal piece of `f`. Ties go to the lower index.
pub fn regions(p: &LabelledPolytope, f: &PLConvexFunction) -> Vec<Region> {
    let mut out = Vec::new();
    'pieces: for (i, pi) in f.pieces.iter().enumerate() {
        let mut cur = p.clone();
        let mut origin: Vec<Option<usize>> = (0..p.num_facets()).map(Some).collect();
        for (j, pj) in f.pieces.iter().enumerate() {
            if i == j {
                continue;
            }
            let diff = pi.sub(pj);
            let scale = 1.0 + diff.constant.abs();
            if diff.gradient.iter().all(|g| g.abs() <= 1e-14 * scale) {
                // parallel pieces: one dominates everywhere
                if diff.constant < 0.0 || (diff.constant == 0.0 && j < i) {
                    continue 'pieces;
                }
                continue;
            }
            let h = Halfspace { normal: diff.gradient, offset: diff.constant };
            let Some(clipped) = cur.clip_tracked(&h) else {
                continue 'pieces;
            };
            origin = clipped.origin.iter().map(|o| o.and_then(|k| origin[k])).collect();
            cur = clipped.polytope;
        }
        out.push(Region { polytope: cur, piece: i, origin });
    }
    out
}

/// Numerator `L(f)` and denominator `∫_{∂P} f σ`, given `ζ`.
pub(crate) fn l_pl_parts(
    p: &LabelledPolytope,
    sigma: &BoundaryMeasure,
    zeta: &AffineFunction,
    f: &PLConvexFunction,
) -> Result<(f64, f64)> {
    let zq = zeta.to_polynomial();
    let mut boundary = 0.0;
    let mut bulk = 0.0;
    for r in regions(p, f) {
        let piece = &f.pieces[r.piece];
        if piece.constant == 0.0 && piece.gradient.iter().all(|&g| g == 0.0) {
            continue;
        }
        let q = piece.to_polynomial();
        for (t, o) in r.origin.iter().enumerate() {
            if let Some(s) = *o {
                boundary += sigma.weight(s) * integrate_poly_facet(&r.polytope, t, &q)?;
            }
        }
        bulk += integrate_poly_bulk(&r.polytope, &(&q * &zq))?.value;
    }
    Ok((boundary - 0.5 * bulk, boundary))
}

/// `L(f)` for a PL convex `f`, exact.
pub fn l_pl(p: &LabelledPolytope, sigma: &BoundaryMeasure, f: &PLConvexFunction) -> Result<f64> {
    let zeta = extremal_affine(p, sigma)?;
    Ok(l_pl_parts(p, sigma, &zeta, f)?.0)
}

/// `∫_{∂P} f σ` for a PL convex `f`, exact.
pub fn boundary_pl(p: &LabelledPolytope, sigma: &BoundaryMeasure, f: &PLConvexFunction) -> Result<f64> {
    let zeta = AffineFunction::zero(p.dim());
    Ok(l_pl_parts(p, sigma, &zeta, f)?.1)
}

/// `L(f) / ∫_{∂P} f σ`, or `None` when the denominator vanishes.
pub fn ratio(p: &LabelledPolytope, sigma: &BoundaryMeasure, f: &PLConvexFunction) -> Result<Option<f64>> {
    let zeta = extremal_affine(p, sigma)?;
    let (num, den) = l_pl_parts(p, sigma, &zeta, f)?;
    Ok(nonzero_ratio(num, den, p))
}

fn nonzero_ratio(num: f64, den: f64, p: &LabelledPolytope) -> Option<f64> {
    let scale = p.volume().max(f64::MIN_POSITIVE);
    (den > 1e-12 * scale).then(|| num / den)
}

/// `f = max(0, <direction, x> + offset)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crease {
    pub direction: Vec<f64>,
    pub offset: f64,
}

impl Crease {
    pub fn to_pl(&self) -> PLConvexFunction {
        PLConvexFunction::crease(AffineFunction::new(self.offset, self.direction.clone()))
    }

    fn lex_cmp(&self, other: &Crease) -> Ordering {
        for (a, b) in self.direction.iter().zip(&other.direction) {
            match a.total_cmp(b) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        self.offset.total_cmp(&other.offset)
    }

    /// Crease through the point `<u, x> = <u, p0> + t (max_v <u, v> - <u, p0>)`.
    pub fn swept(p: &LabelledPolytope, p0: &[f64], u: &[f64], t: f64) -> Crease {
        let (lo, hi) = sweep_range(p, p0, u);
        Crease { direction: u.to_vec(), offset: -(lo + t * (hi - lo)) }
    }

    /// Inverse of [`Crease::swept`] for the direction of `self`.
    pub fn sweep_parameter(&self, p: &LabelledPolytope, p0: &[f64]) -> f64 {
        let (lo, hi) = sweep_range(p, p0, &self.direction);
        (-self.offset - lo) / (hi - lo)
    }
}

fn sweep_range(p: &LabelledPolytope, p0: &[f64], u: &[f64]) -> (f64, f64) {
    let lo = dot(u, p0);
    let hi = p.vertices().iter().map(|v| dot(u, &v.point)).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// A crease with negative ratio was found (and re-confirmed).
    Destabilized,
    /// Every sampled ratio is nonnegative; not a proof of stability.
    PositiveOnSample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Direction mesh size (ignored for `n = 1`, which uses `±1`).
    pub directions: usize,
    /// Crease positions per direction, sweeping from the basepoint outward.
    pub offsets: usize,
    /// Defaults to the barycenter.
    pub basepoint: Option<Vec<f64>>,
    pub tol_stab: f64,
    /// Seed for random direction meshes in dimension `>= 4`.
    pub seed: u64,
}

impl ScanOptions {
    pub fn for_dim(n: usize) -> Self {
        let directions = match n {
            1 => 2,
            2 => 64,
            3 => 512,
            _ => 256 * n,
        };
        Self { directions, offsets: 64, basepoint: None, tol_stab: TOL_STAB, seed: 0x5eed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub crease: Crease,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub min_ratio: f64,
    pub argmin: PLConvexFunction,
    pub argmin_crease: Crease,
    pub samples_evaluated: usize,
    pub verdict: Verdict,
    pub lambda_estimate: f64,
    pub basepoint: Vec<f64>,
    pub tol_stab: f64,
    /// The scan only samples crease functions.
    pub test_family: String,
}

impl StabilityReport {
    fn from_min(best: &ScanSample, samples: usize, basepoint: Vec<f64>, tol_stab: f64) -> Self {
        let verdict = if best.ratio < -tol_stab { Verdict::Destabilized } else { Verdict::PositiveOnSample };
        Self {
            min_ratio: best.ratio,
            argmin: best.crease.to_pl(),
            argmin_crease: best.crease.clone(),
            samples_evaluated: samples,
            verdict,
            lambda_estimate: best.ratio.max(0.0),
            basepoint,
            tol_stab,
            test_family: "creases max(0, <u,x> + c) normalized at the basepoint".into(),
        }
    }
}

/// Unit directions used by the scan.
pub fn direction_mesh(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            let mut out: Vec<Vec<f64>> = Vec::with_capacity(count + 2 * n);
            for i in 0..n {
                for sgn in [1.0, -1.0] {
                    let mut e = vec![0.0; n];
                    e[i] = sgn;
                    out.push(e);
                }
            }
            if n == 3 {
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                for k in 0..count {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * k as f64;
                    out.push(vec![r * th.cos(), r * th.sin(), z]);
                }
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                while out.len() < count + 2 * n {
                    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let l = norm(&v);
                    // rejection from the cube gives uniform directions
                    if l > 1e-6 && l <= 1.0 {
                        out.push(v.iter().map(|x| x / l).collect());
                    }
                }
            }
            out
        }
    }
}

fn better(a: &ScanSample, b: &ScanSample) -> bool {
    match a.ratio.total_cmp(&b.ratio) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.crease.lex_cmp(&b.crease) == Ordering::Less,
    }
}

fn evaluate(
    p: &LabelledPolytope,
    sigma: &BoundaryMeasure,
    zeta: &AffineFunction,
    crease: Crease,
) -> Result<Option<ScanSample>> {
    let (num, den) = l_pl_parts(p, sigma, zeta, &crease.to_pl())?;
    Ok(nonzero_ratio(num, den, p).map(|ratio| ScanSample { crease, numerator: num, denominator: den, ratio }))
}

/// Evaluates the ratio on the crease grid; returns the report and every sample.
pub fn crease_scan(
    p: &LabelledPolytope,
    sigma: &BoundaryMeasure,
    opts: &ScanOptions,
) -> Result<(StabilityReport, Vec<ScanSample>)> {
    let n = p.dim();
    if n >= 2 && opts.directions < 2 * n {
        return Err(Error::InvalidInput(format!("need at least {} directions", 2 * n)));
    }
    if opts.offsets == 0 {
        return Err(Error::InvalidInput("need at least one crease offset".into()));
    }
    let p0 = opts.basepoint.clone().unwrap_or_else(|| p.barycenter());
    if p0.len() != n || !p.is_interior(&p0) {
        return Err(Error::InvalidInput(format!("basepoint {p0:?} is not interior")));
    }
    let zeta = extremal_affine(p, sigma)?;
    let grid: Vec<Crease> = direction_mesh(n, opts.directions, opts.seed)
        .iter()
        .flat_map(|u| {
            let p0 = &p0;
            (0..opts.offsets).map(move |k| Crease::swept(p, p0, u, k as f64 / opts.offsets as f64))
        })
        .collect();
    let evaluated: Vec<Option<ScanSample>> =
        grid.into_par_iter().map(|c| evaluate(p, sigma, &zeta, c)).collect::<Result<_>>()?;
    let samples: Vec<ScanSample> = evaluated.into_iter().flatten().collect();
    let mut best = samples
        .iter()
        .fold(None::<&ScanSample>, |acc, s| match acc {
            Some(b) if !better(s, b) => Some(b),
            _ => Some(s),
        })
        .cloned()
        .ok_or_else(|| Error::InvalidInput("no crease had a nonzero boundary integral".into()))?;
    if best.ratio < -opts.tol_stab {
        best.ratio = confirm_witness(p, sigma, &zeta, &best)?;
    }
    let report = StabilityReport::from_min(&best, samples.len(), p0, opts.tol_stab);
    Ok((report, samples))
}

/// Re-evaluates a negative witness with its crease shifted by twice the
/// geometric tolerance either way; keeps the least negative value.
fn confirm_witness(
    p: &LabelledPolytope,
    sigma: &BoundaryMeasure,
    zeta: &AffineFunction,
    w: &ScanSample,
) -> Result<f64> {
    let mut worst = w.ratio;
    for shift in [-2.0 * p.tol_geom(), 2.0 * p.tol_geom()] {
        let c = Crease { direction: w.crease.direction.clone(), offset: w.crease.offset + shift };
        match evaluate(p, sigma, zeta, c)? {
            Some(s) => worst = worst.max(s.ratio),
            None => return Ok(0.0),
        }
    }
    Ok(worst)
}

/// Writes scan samples as CSV: direction components, offset, numerator, denominator, ratio.
pub fn write_samples_csv<W: Write>(samples: &[ScanSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = samples.first().map(|s| s.crease.direction.len()).unwrap_or(0);
    let mut header: Vec<String> = (0..n).map(|i| format!("u{i}")).collect();
    header.extend(["offset", "numerator", "denominator", "ratio"].map(String::from));
    let io = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
    w.write_record(&header).map_err(io)?;
    for s in samples {
        let mut row: Vec<String> = s.crease.direction.iter().map(|x| x.to_string()).collect();
        row.extend([s.crease.offset, s.numerator, s.denominator, s.ratio].map(|x| x.to_string()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineStart {
    Given,
    /// The given start had a vanishing denominator.
    ScanArgmin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineResult {
    pub crease: Crease,
    pub ratio: f64,
    pub iterations: usize,
    pub max_iter_reached: bool,
    pub start: RefineStart,
    /// Best ratio after each iteration; non-increasing.
    pub history: Vec<f64>,
}

/// Nelder–Mead descent of the ratio over (direction, sweep parameter).
///
/// Starts from `start` when it has a nonzero denominator, otherwise from the
/// scan argmin in `report`. Hitting `max_iter` is flagged, not an error.
pub fn refine(
    p: &LabelledPolytope,
    sigma: &BoundaryMeasure,
    report: &StabilityReport,
    start: Option<&Crease>,
    max_iter: usize,
) -> Result<RefineResult> {
    let n = p.dim();
    let p0 = report.basepoint.clone();
    let zeta = extremal_affine(p, sigma)?;
    let objective = |x: &[f64]| -> f64 {
        let u = &x[..n];
        let l = norm(u);
        if l < 1e-9 {
            return f64::INFINITY;
        }
        let u: Vec<f64> = u.iter().map(|v| v / l).collect();
        let t = x[n].clamp(0.0, 1.0 - 1e-9);
        match evaluate(p, sigma, &zeta, Crease::swept(p, &p0, &u, t)) {
            Ok(Some(s)) => s.ratio,
            _ => f64::INFINITY,
        }
    };
    let to_params = |c: &Crease| -> Vec<f64> {
        let l = norm(&c.direction);
        let unit = Crease { direction: c.direction.iter().map(|v| v / l).collect(), offset: c.offset / l };
        let mut x = unit.direction.clone();
        x.push(unit.sweep_parameter(p, &p0));
        x
    };
    let (x0, kind) = match start {
        Some(c) if norm(&c.direction) > 0.0 && objective(&to_params(c)).is_finite() => {
            (to_params(c), RefineStart::Given)
        }
        _ => (to_params(&report.argmin_crease), RefineStart::ScanArgmin),
    };
    let nm = nelder_mead(&objective, &x0, 0.05, max_iter, 1e-13);
    let u0 = &nm.x[..n];
    let l = norm(u0);
    let u: Vec<f64> = u0.iter().map(|v| v / l).collect();
    let crease = Crease::swept(p, &p0, &u, nm.x[n].clamp(0.0, 1.0 - 1e-9));
    Ok(RefineResult {
        crease,
        ratio: nm.fx,
        iterations: nm.iterations,
        max_iter_reached: nm.max_iter_reached,
        start: kind,
        history: nm.history,
    })
}

struct NmResult {
    x: Vec<f64>,
    fx: f64,
    iterations: usize,
    max_iter_reached: bool,
    history: Vec<f64>,
}

fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iter: usize, ftol: f64) -> NmResult {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f(x0))];
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let mut history = Vec::new();
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };
    let mut iterations = 0;
    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        history.push(simplex[0].1);
        let spread = simplex[d].1 - simplex[0].1;
        if spread.is_finite() && spread.abs() <= ftol {
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> =
            (0..d).map(|j| simplex[..d].iter().map(|(x, _)| x[j]).sum::<f64>() / d as f64).collect();
        let worst = simplex[d].clone();
        let xr = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = lerp(&centroid, &xr, 0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = lerp(&centroid, &worst.0, 0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    v.0 = lerp(&best, &v.0, 0.5);
                    v.1 = f(&v.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    history.push(simplex[0].1);
    let (x, fx) = simplex.swap_remove(0);
    NmResult { x, fx, iterations, max_iter_reached: iterations >= max_iter, history }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::shapes::*;

    fn square_crease(t: f64) -> PLConvexFunction {
        PLConvexFunction::crease(AffineFunction::new(-t, vec![1.0, 0.0]))
    }

    #[test]
    fn region_examples() {
        let sq = unit_square();
        let r = regions(&sq, &square_crease(0.5));
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(|r| (r.polytope.volume() - 0.5).abs() < 1e-14));

        let f = PLConvexFunction::new(vec![
            AffineFunction::zero(2),
            AffineFunction::new(-0.5, vec![1.0, 0.0]),
            AffineFunction::new(-0.5, vec![0.0, 1.0]),
        ])
        .unwrap();
        let r = regions(&sq, &f);
        assert_eq!(r.len(), 3);
        let vols: Vec<f64> = r.iter().map(|r| r.polytope.volume()).collect();
        assert!((vols[0] - 0.25).abs() < 1e-14 && (vols[1] - 0.375).abs() < 1e-14 && (vols[2] - 0.375).abs() < 1e-14);
        for reg in &r {
            assert!(reg
                .polytope
                .vertices()
                .iter()
                .any(|v| (v.point[0] - 0.5).abs() < 1e-12 && (v.point[1] - 0.5).abs() < 1e-12));
        }

        let single = PLConvexFunction::new(vec![AffineFunction::new(1.0, vec![2.0, 3.0])]).unwrap();
        let r = regions(&sq, &single);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].polytope.vertices().len(), 4);
    }

    #[test]
    fn l_pl_examples() {
        let sq = unit_square();
        let s = sq.boundary_measure();
        assert!((l_pl(&sq, &s, &square_crease(0.5)).unwrap() - 0.25).abs() < 1e-13);
        let i = interval(0.0, 1.0, 1.0, 1.0);
        let f = PLConvexFunction::crease(AffineFunction::new(-0.5, vec![1.0]));
        let si = i.boundary_measure();
        assert!((l_pl(&i, &si, &f).unwrap() - 0.25).abs() < 1e-13);
        assert!((ratio(&i, &si, &f).unwrap().unwrap() - 0.5).abs() < 1e-13);
        let aff = PLConvexFunction::new(vec![AffineFunction::new(0.7, vec![-1.0, 0.4])]).unwrap();
        assert!(l_pl(&sq, &s, &aff).unwrap().abs() < 1e-13);
    }

    #[test]
    fn square_crease_ratio_matches_closed_form() {
        let sq = unit_square();
        let s = sq.boundary_measure();
        for k in 0..10 {
            let t = 0.5 + 0.05 * k as f64;
            let r = ratio(&sq, &s, &square_crease(t)).unwrap().unwrap();
            assert!((r - t / (2.0 - t)).abs() < 1e-12, "t = {t}: {r}");
        }
    }

    #[test]
    fn normalize_examples() {
        let f = square_crease(0.5);
        let n = normalize(&f, &[0.25, 0.25]);
        assert_eq!(n.function, f);

        let x = PLConvexFunction::new(vec![AffineFunction::new(0.0, vec![1.0])]).unwrap();
        let n = normalize(&x, &[0.5]);
        assert!(n.function.pieces.iter().all(|p| p.constant == 0.0 && p.gradient[0] == 0.0));

        let v = PLConvexFunction::new(vec![AffineFunction::new(0.0, vec![1.0]), AffineFunction::new(0.0, vec![-1.0])])
            .unwrap();
        let n = normalize(&v, &[0.1]);
        assert_eq!(n.function.eval(&[0.1]), 0.0);
        for k in 0..=100 {
            let x = -1.0 + 0.02 * k as f64;
            assert!(n.function.eval(&[x]) >= 0.0);
            assert!((n.function.eval(&[x]) - (-2.0 * x).max(0.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn scans() {
        let i = interval(0.0, 1.0, 1.0, 1.0);
        let (r, _) = crease_scan(&i, &i.boundary_measure(), &ScanOptions::for_dim(1)).unwrap();
        assert!((r.min_ratio - 0.5).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::PositiveOnSample);

        let sq = unit_square();
        let (r, samples) = crease_scan(&sq, &sq.boundary_measure(), &ScanOptions::for_dim(2)).unwrap();
        assert!((r.min_ratio - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.samples_evaluated, samples.len());
        assert!((r.lambda_estimate - r.min_ratio).abs() == 0.0);
    }

    #[test]
    fn heavy_bottom_trapezoid_is_destabilized() {
        let p = trapezoid(0.5).rescale_labels(&[1.0, 0.02, 1.0, 1.0]).unwrap();
        let s = p.boundary_measure();
        let (rep, samples) = crease_scan(&p, &s, &ScanOptions::for_dim(2)).unwrap();
        assert_eq!(rep.verdict, Verdict::Destabilized);
        assert!(rep.min_ratio < -0.5, "{}", rep.min_ratio);
        let direct = ratio(&p, &s, &rep.argmin).unwrap().unwrap();
        assert!(direct <= rep.min_ratio + 1e-9);
        assert!(samples.iter().all(|x| x.ratio >= direct - 1e-9));
        let out = refine(&p, &s, &rep, None, 200).unwrap();
        assert!(out.ratio <= rep.min_ratio + 1e-12);

        let mild = trapezoid(0.5);
        let (rep, _) = crease_scan(&mild, &mild.boundary_measure(), &ScanOptions::for_dim(2)).unwrap();
        assert_eq!(rep.verdict, Verdict::PositiveOnSample);
    }

    #[test]
    fn refine_examples() {
        let sq = unit_square();
        let s = sq.boundary_measure();
        let (rep, _) =
            crease_scan(&sq, &s, &ScanOptions { offsets: 8, directions: 8, ..ScanOptions::for_dim(2) }).unwrap();
        let start = Crease::swept(&sq, &[0.5, 0.5], &[0.995f64.sqrt(), 0.005f64.sqrt()], 0.1);
        let out = refine(&sq, &s, &rep, Some(&start), 400).unwrap();
        assert_eq!(out.start, RefineStart::Given);
        assert!((out.ratio - 1.0 / 3.0).abs() < 1e-6, "{}", out.ratio);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));

        let i = interval(0.0, 1.0, 1.0, 1.0);
        let si = i.boundary_measure();
        let (rep, _) = crease_scan(&i, &si, &ScanOptions { offsets: 4, ..ScanOptions::for_dim(1) }).unwrap();
        let corner = Crease { direction: vec![1.0], offset: -0.9 };
        let out = refine(&i, &si, &rep, Some(&corner), 400).unwrap();
        assert!((out.ratio - 0.5).abs() < 1e-6);

        let degenerate = Crease { direction: vec![1.0], offset: -1.0 };
        let out = refine(&i, &si, &rep, Some(&degenerate), 50).unwrap();
        assert_eq!(out.start, RefineStart::ScanArgmin);
    }

    #[test]
    fn csv_rows() {
        let i = interval(0.0, 1.0, 1.0, 1.0);
        let (_, samples) =
            crease_scan(&i, &i.boundary_measure(), &ScanOptions { offsets: 3, ..ScanOptions::for_dim(1) }).unwrap();
        let mut buf = Vec::new();
        write_samples_csv(&samples, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), samples.len() + 1);
        assert!(text.starts_with("u0,offset,numerator,denominator,ratio"));
    }
}
