//! Analytical eigenpairs of the Laplacian for fixed strings, fixed rectangular
//! membranes and simply supported rectangular plates, plus projection between
//! physical and modal coordinates.
//!
//! All three cases share sine (or sine-product) shapes. The plate's biharmonic
//! eigenvalue is the square of the Laplacian one, so a single basis serves
//! membranes and plates alike.
//!
//! Shapes are L2-normalised by default (`||Phi|| = 1`); the raw norms
//! (`L/2`, `Lx Ly / 4`) remain available through [`ModeBasis::raw_norm_sq`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Geometry;
use crate::quadrature::trapezoid_weights;

/// Minimum grid points per shortest half-wavelength accepted by quadrature.
pub const MIN_POINTS_PER_HALF_WAVE: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Line { length: f64 },
    Rect { lx: f64, ly: f64 },
}

impl From<&Geometry> for Domain {
    fn from(g: &Geometry) -> Self {
        match *g {
            Geometry::String { length, .. } => Domain::Line { length },
            Geometry::RectMembrane { lx, ly, .. } | Geometry::RectPlate { lx, ly, .. } => {
                Domain::Rect { lx, ly }
            }
        }
    }
}

impl Domain {
    fn contains(&self, p: Point) -> bool {
        let tol = 1e-12;
        match *self {
            Domain::Line { length } => p.x >= -tol * length && p.x <= length * (1.0 + tol),
            Domain::Rect { lx, ly } => {
                p.x >= -tol * lx && p.x <= lx * (1.0 + tol) && p.y >= -tol * ly && p.y <= ly * (1.0 + tol)
            }
        }
    }
}

/// Mode index: `(m, 0)` for strings, `(m, n)` for rectangles. Ordering is
/// lexicographic, which is also the eigenvalue tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeLabel(pub usize, pub usize);

impl std::fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.1 == 0 {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{}-{}", self.0, self.1)
        }
    }
}

/// A spatial position. `y` is ignored on a line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    #[serde(default)]
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn on_line(x: f64) -> Self {
        Self { x, y: 0.0 }
    }
}

/// Value and partial derivatives of one mode shape at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ShapeDerivatives {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dyy: f64,
    pub dxy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeBasis {
    domain: Domain,
    labels: Vec<ModeLabel>,
    eigenvalues: Vec<f64>,
    raw_norms: Vec<f64>,
    unit_normalised: bool,
}

impl ModeBasis {
    /// Fixed-fixed string: `Phi_m = sin(m pi x / L)`, `lambda_m = (m pi / L)²`.
    pub fn string(length: f64, count: usize) -> Result<Self> {
        if !(length > 0.0) || count == 0 {
            return Err(Error::arg("string basis needs length > 0 and at least one mode"));
        }
        let labels: Vec<_> = (1..=count).map(|m| ModeLabel(m, 0)).collect();
        let eigenvalues = labels.iter().map(|l| (l.0 as f64 * PI / length).powi(2)).collect();
        Ok(Self {
            domain: Domain::Line { length },
            labels,
            eigenvalues,
            raw_norms: vec![0.5 * length; count],
            unit_normalised: true,
        })
    }

    /// The `count` smallest sine-product modes of an `lx` by `ly` rectangle.
    pub fn rect(lx: f64, ly: f64, count: usize) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0) || count == 0 {
            return Err(Error::arg("rect basis needs positive sides and at least one mode"));
        }
        // The modes (1..=count, 1) already give `count` candidates, so no
        // index beyond `count` can be among the smallest.
        let mut candidates = Vec::with_capacity(count * count);
        for m in 1..=count {
            for n in 1..=count {
                candidates.push((rect_eigenvalue(lx, ly, m, n), ModeLabel(m, n)));
            }
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        candidates.truncate(count);
        Ok(Self {
            domain: Domain::Rect { lx, ly },
            labels: candidates.iter().map(|c| c.1).collect(),
            eigenvalues: candidates.iter().map(|c| c.0).collect(),
            raw_norms: vec![0.25 * lx * ly; count],
            unit_normalised: true,
        })
    }

    pub fn for_geometry(geometry: &Geometry, count: usize) -> Result<Self> {
        match Domain::from(geometry) {
            Domain::Line { length } => Self::string(length, count),
            Domain::Rect { lx, ly } => Self::rect(lx, ly, count),
        }
    }

    /// Same modes with unnormalised shapes (`sin` products of unit amplitude).
    pub fn unnormalised(mut self) -> Self {
        self.unit_normalised = false;
        self
    }

    pub fn is_unit_normalised(&self) -> bool {
        self.unit_normalised
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `||Phi||²` of the unscaled sine shape.
    pub fn raw_norm_sq(&self, idx: usize) -> f64 {
        self.raw_norms[idx]
    }

    /// `||Phi||²` of the shape as evaluated by this basis.
    pub fn norm_sq(&self, idx: usize) -> f64 {
        if self.unit_normalised {
            1.0
        } else {
            self.raw_norms[idx]
        }
    }

    pub fn norms_sq(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.norm_sq(i)).collect()
    }

    fn amplitude(&self, idx: usize) -> f64 {
        if self.unit_normalised {
            1.0 / self.raw_norms[idx].sqrt()
        } else {
            1.0
        }
    }

    /// Wavenumbers `(m pi / Lx, n pi / Ly)`; the second is zero on a line.
    pub fn wavenumbers(&self, idx: usize) -> (f64, f64) {
        let ModeLabel(m, n) = self.labels[idx];
        match self.domain {
            Domain::Line { length } => (m as f64 * PI / length, 0.0),
            Domain::Rect { lx, ly } => (m as f64 * PI / lx, n as f64 * PI / ly),
        }
    }

    /// Largest label index along each axis.
    pub fn max_indices(&self) -> (usize, usize) {
        self.labels.iter().fold((0, 0), |acc, l| (acc.0.max(l.0), acc.1.max(l.1)))
    }

    /// Shape value and derivatives without domain checks.
    pub fn derivatives(&self, idx: usize, p: Point) -> ShapeDerivatives {
        let a = self.amplitude(idx);
        let (kx, ky) = self.wavenumbers(idx);
        match self.domain {
            Domain::Line { .. } => {
                let (s, c) = (kx * p.x).sin_cos();
                ShapeDerivatives {
                    value: a * s,
                    dx: a * kx * c,
                    dxx: -a * kx * kx * s,
                    ..Default::default()
                }
            }
            Domain::Rect { .. } => {
                let (sx, cx) = (kx * p.x).sin_cos();
                let (sy, cy) = (ky * p.y).sin_cos();
                ShapeDerivatives {
                    value: a * sx * sy,
                    dx: a * kx * cx * sy,
                    dy: a * ky * sx * cy,
                    dxx: -a * kx * kx * sx * sy,
                    dyy: -a * ky * ky * sx * sy,
                    dxy: a * kx * ky * cx * cy,
                }
            }
        }
    }

    pub fn shape(&self, idx: usize, p: Point) -> f64 {
        self.derivatives(idx, p).value
    }

    /// Mode shape at a point inside the domain.
    pub fn evaluate(&self, idx: usize, p: Point) -> Result<f64> {
        if idx >= self.len() {
            return Err(Error::arg(format!("mode index {idx} out of range ({} modes)", self.len())));
        }
        if !self.domain.contains(p) {
            return Err(Error::arg(format!("point ({}, {}) lies outside the domain", p.x, p.y)));
        }
        Ok(self.shape(idx, p))
    }

    /// Modal gains of a unit point force: `Phi_mu(p) / ||Phi_mu||²`.
    pub fn project_point_excitation(&self, p: Point) -> Result<Vec<f64>> {
        (0..self.len()).map(|i| Ok(self.evaluate(i, p)? / self.norm_sq(i))).collect()
    }

    /// Readout weights mapping modal amplitudes to displacement at `p`.
    pub fn readout(&self, p: Point) -> Result<PointReadout> {
        let weights = (0..self.len()).map(|i| self.evaluate(i, p)).collect::<Result<_>>()?;
        Ok(PointReadout { weights })
    }

    /// Uniform grid over the domain with `points_per_axis` points per axis.
    pub fn grid(&self, points_per_axis: usize) -> Grid {
        match self.domain {
            Domain::Line { length } => Grid::line(length, points_per_axis),
            Domain::Rect { lx, ly } => Grid::rect(lx, ly, points_per_axis, points_per_axis),
        }
    }

    /// Smallest grid size per axis meeting the half-wavelength rule.
    pub fn required_points(&self) -> (usize, usize) {
        let (mx, my) = self.max_indices();
        let need = |m: usize| (MIN_POINTS_PER_HALF_WAVE * m as f64).ceil() as usize + 1;
        (need(mx), if my == 0 { 1 } else { need(my) })
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        let domain_matches = match (self.domain, grid.ny) {
            (Domain::Line { length }, 1) => (grid.lx - length).abs() <= 1e-12 * length,
            (Domain::Rect { lx, ly }, ny) if ny > 1 => {
                (grid.lx - lx).abs() <= 1e-12 * lx && (grid.ly - ly).abs() <= 1e-12 * ly
            }
            _ => false,
        };
        if !domain_matches {
            return Err(Error::arg("grid does not cover the basis domain"));
        }
        let (rx, ry) = self.required_points();
        if grid.nx < rx || grid.ny < ry {
            return Err(Error::arg(format!(
                "grid under-resolved: need at least {rx} x {ry} points ({} per shortest half-wavelength), got {} x {}",
                MIN_POINTS_PER_HALF_WAVE, grid.nx, grid.ny
            )));
        }
        Ok(())
    }

    /// Modal coordinates `<f, Phi_mu> / ||Phi_mu||²` of a sampled field by
    /// trapezoidal quadrature. Samples are row-major `[iy][ix]`.
    pub fn project_function(&self, samples: &[f64], grid: &Grid) -> Result<Vec<f64>> {
        self.check_grid(grid)?;
        if samples.len() != grid.len() {
            return Err(Error::arg(format!(
                "expected {} samples for the grid, got {}",
                grid.len(),
                samples.len()
            )));
        }
        let weights = grid.quadrature_weights();
        Ok((0..self.len())
            .map(|i| {
                let mut acc = 0.0;
                for (k, (&f, &w)) in samples.iter().zip(&weights).enumerate() {
                    acc += w * f * self.shape(i, grid.point(k));
                }
                acc / self.norm_sq(i)
            })
            .collect())
    }

    /// Physical field `sum_mu q_mu Phi_mu` sampled on a grid.
    pub fn reconstruct(&self, q: &[f64], grid: &Grid) -> Vec<f64> {
        (0..grid.len())
            .map(|k| {
                let p = grid.point(k);
                q.iter().enumerate().map(|(i, &qi)| qi * self.shape(i, p)).sum()
            })
            .collect()
    }
}

fn rect_eigenvalue(lx: f64, ly: f64, m: usize, n: usize) -> f64 {
    PI * PI * ((m * m) as f64 / (lx * lx) + (n * n) as f64 / (ly * ly))
}

/// Per-mode weights mapping modal amplitudes to a scalar output signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReadout {
    pub weights: Vec<f64>,
}

impl PointReadout {
    pub fn apply(&self, q: &[f64]) -> f64 {
        self.weights.iter().zip(q).map(|(w, q)| w * q).sum()
    }
}

/// Uniform sampling grid including the boundary. Lines use `ny == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Grid {
    pub fn line(length: f64, n: usize) -> Self {
        Self { nx: n, ny: 1, lx: length, ly: 0.0 }
    }

    pub fn rect(lx: f64, ly: f64, nx: usize, ny: usize) -> Self {
        Self { nx, ny, lx, ly }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        self.lx / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        if self.ny > 1 {
            self.ly / (self.ny - 1) as f64
        } else {
            0.0
        }
    }

    pub fn point(&self, k: usize) -> Point {
        let (ix, iy) = (k % self.nx, k / self.nx);
        Point::new(ix as f64 * self.dx(), iy as f64 * self.dy())
    }

    pub fn quadrature_weights(&self) -> Vec<f64> {
        let wx = trapezoid_weights(self.nx, self.lx);
        if self.ny == 1 {
            return wx;
        }
        let wy = trapezoid_weights(self.ny, self.ly);
        wy.iter().flat_map(|&b| wx.iter().map(move |&a| a * b)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_eigenvalues() {
        let b = ModeBasis::string(1.0, 1).unwrap();
        assert!((b.eigenvalues()[0] - PI * PI).abs() < 1e-14);
        assert_eq!(b.raw_norm_sq(0), 0.5);

        let b = ModeBasis::string(2.0, 3).unwrap();
        let want = [PI * PI / 4.0, PI * PI, 9.0 * PI * PI / 4.0];
        for (a, w) in b.eigenvalues().iter().zip(want) {
            assert!((a - w).abs() < 1e-13);
        }
        assert_eq!(ModeBasis::string(1.0, 40).unwrap().len(), 40);
    }

    #[test]
    fn rect_first_mode_and_tie_break() {
        let b = ModeBasis::rect(1.0, 1.0, 3).unwrap();
        assert!((b.eigenvalues()[0] - 2.0 * PI * PI).abs() < 1e-13);
        assert_eq!(b.labels()[1], ModeLabel(1, 2));
        assert_eq!(b.labels()[2], ModeLabel(2, 1));
        assert_eq!(b.eigenvalues()[1], b.eigenvalues()[2]);
        assert_eq!(b.raw_norm_sq(0), 0.25);
    }

    #[test]
    fn rect_matches_exhaustive_lattice() {
        let b = ModeBasis::rect(2.0, 1.0, 10).unwrap();
        let mut all = Vec::new();
        for m in 1..=50usize {
            for n in 1..=50usize {
                let lam = PI * PI * ((m * m) as f64 / 4.0 + (n * n) as f64);
                all.push((lam, (m, n)));
            }
        }
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        for (i, (lam, (m, n))) in all.iter().take(10).enumerate() {
            assert_eq!(b.labels()[i], ModeLabel(*m, *n));
            assert!((b.eigenvalues()[i] - lam).abs() < 1e-12 * lam);
        }
    }

    #[test]
    fn evaluation_examples() {
        let s = ModeBasis::string(1.0, 2).unwrap();
        assert!((s.evaluate(0, Point::on_line(0.5)).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        let raw = s.clone().unnormalised();
        assert!((raw.evaluate(0, Point::on_line(0.5)).unwrap() - 1.0).abs() < 1e-15);
        assert!(raw.evaluate(1, Point::on_line(1.0)).unwrap().abs() < 1e-15);
        assert!(s.evaluate(0, Point::on_line(1.5)).is_err());

        let p = ModeBasis::rect(1.0, 1.0, 4).unwrap().unnormalised();
        assert!((p.evaluate(0, Point::new(0.5, 0.5)).unwrap() - 1.0).abs() < 1e-15);
        for i in 0..4 {
            assert!(p.evaluate(i, Point::new(0.0, 0.3)).unwrap().abs() < 1e-15);
            assert!(p.evaluate(i, Point::new(0.4, 1.0)).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn point_excitation_symmetry() {
        let b = ModeBasis::string(1.0, 8).unwrap();
        let g = b.project_point_excitation(Point::on_line(0.5)).unwrap();
        for m in (1..8).step_by(2) {
            assert!(g[m].abs() < 1e-14, "mode {} gain {}", m + 1, g[m]);
        }
        let raw = b.unnormalised();
        let g = raw.project_point_excitation(Point::on_line(0.5)).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn projecting_a_mode_gives_unit_vector() {
        let b = ModeBasis::rect(1.0, 1.3, 6).unwrap();
        let grid = b.grid(129);
        let samples: Vec<f64> = (0..grid.len()).map(|k| b.shape(2, grid.point(k))).collect();
        let q = b.project_function(&samples, &grid).unwrap();
        for (i, v) in q.iter().enumerate() {
            let want = if i == 2 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-6, "{i}: {v}");
        }
    }

    #[test]
    fn triangular_pluck_matches_fourier_series() {
        let b = ModeBasis::string(1.0, 12).unwrap();
        let grid = Grid::line(1.0, 2001);
        let x0 = 0.3;
        let samples: Vec<f64> = (0..grid.len())
            .map(|k| {
                let x = grid.point(k).x;
                if x <= x0 { x / x0 } else { (1.0 - x) / (1.0 - x0) }
            })
            .collect();
        let q = b.project_function(&samples, &grid).unwrap();
        for (i, qi) in q.iter().enumerate() {
            let m = (i + 1) as f64;
            // Fourier sine coefficient of the unit sine; unit-norm shapes are sqrt(2) sin.
            let bm = 2.0 * (m * PI * x0).sin() / (m * m * PI * PI * x0 * (1.0 - x0));
            let want = bm / 2f64.sqrt();
            assert!((qi - want).abs() < 1e-6, "mode {m}: {qi} vs {want}");
        }
    }

    #[test]
    fn under_resolved_grid_rejected() {
        let b = ModeBasis::string(1.0, 10).unwrap();
        let grid = Grid::line(1.0, 50);
        let err = b.project_function(&vec![0.0; 50], &grid).unwrap_err().to_string();
        assert!(err.contains("need at least 81"), "{err}");
    }

    #[test]
    fn orthogonality_on_512_grid() {
        let b = ModeBasis::rect(1.0, 0.7, 12).unwrap();
        let grid = b.grid(512);
        let w = grid.quadrature_weights();
        let shapes: Vec<Vec<f64>> = (0..b.len())
            .map(|i| (0..grid.len()).map(|k| b.shape(i, grid.point(k))).collect())
            .collect();
        for i in 0..b.len() {
            for j in 0..b.len() {
                let ip: f64 = (0..grid.len()).map(|k| w[k] * shapes[i][k] * shapes[j][k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-8, "({i},{j}) {ip}");
            }
        }
    }

    #[test]
    fn finite_difference_laplacian_converges_at_second_order() {
        let b = ModeBasis::rect(1.0, 0.8, 5).unwrap();
        let idx = 4;
        let lam = b.eigenvalues()[idx];
        let p = Point::new(0.37, 0.29);
        let err = |h: f64| {
            let f = |dx: f64, dy: f64| b.shape(idx, Point::new(p.x + dx, p.y + dy));
            let lap = (f(h, 0.0) + f(-h, 0.0) + f(0.0, h) + f(0.0, -h) - 4.0 * f(0.0, 0.0)) / (h * h);
            (lap + lam * f(0.0, 0.0)).abs()
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }
}
