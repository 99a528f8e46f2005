//! Nonlinear modal forces.
//!
//! Two models are supported:
//!
//! * tension modulation (Kirchhoff–Carrier strings, Berger membranes), where
//!   the deformation raises the effective tension uniformly:
//!   `f_mu = tau lambda_mu q_mu sum_nu lambda_nu q_nu²`;
//! * von Kármán plates, where transverse modes couple through the Airy stress
//!   function via the third-order tensors `H` and `C`.
//!
//! Tensor entries are integrals of products of sine/cosine factors over the
//! rectangle. They are evaluated with a composite Gauss–Legendre
//! tensor-product rule using analytic mode derivatives. Because every
//! integrand is a product of an x-factor and a y-factor, the 2D rule
//! factorises into tables of 1D integrals, which keeps construction cheap for
//! a hundred modes or more.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use modal_core::error::{Error, Result};
use modal_core::modes::{Domain, Grid, ModeBasis, ShapeDerivatives};
use modal_core::quadrature::CompositeRule;

/// Default Gauss nodes per shortest half-wavelength.
pub const DEFAULT_RESOLUTION: usize = 16;
/// Minimum accepted nodes per shortest half-wavelength.
pub const MIN_RESOLUTION: usize = 8;
/// Entries below this fraction of the largest magnitude are zeroed before
/// simulation.
pub const SPARSITY_THRESHOLD: f64 = 1e-12;

/// Values on a uniform grid, row-major `[iy][ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if grid.nx < 3 || grid.ny < 3 {
            return Err(Error::arg("grid fields need at least 3 points per axis"));
        }
        if values.len() != grid.len() {
            return Err(Error::arg("grid field size mismatch"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|k| {
            let p = grid.point(k);
            f(p.x, p.y)
        });
        Self::new(grid, values.collect())
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.nx + ix]
    }
}

/// Second derivatives of a field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Hessian {
    pub grid: Grid,
    pub xx: Vec<f64>,
    pub yy: Vec<f64>,
    pub xy: Vec<f64>,
}

impl Hessian {
    /// From an analytic evaluator returning `(f_xx, f_yy, f_xy)`.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> (f64, f64, f64)) -> Self {
        let n = grid.len();
        let (mut xx, mut yy, mut xy) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for k in 0..n {
            let p = grid.point(k);
            let (a, b, c) = f(p.x, p.y);
            xx.push(a);
            yy.push(b);
            xy.push(c);
        }
        Self { grid, xx, yy, xy }
    }

    /// Second-order finite differences, one-sided along the boundary.
    pub fn from_samples(field: &GridField) -> Self {
        let g = field.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (hx, hy) = (g.dx(), g.dy());
        let f = |i: usize, j: usize| field.at(i, j);
        // Second derivative stencil along one axis at index i of n.
        let d2 = |get: &dyn Fn(usize) -> f64, i: usize, n: usize, h: f64| -> f64 {
            if i == 0 {
                (2.0 * get(0) - 5.0 * get(1) + 4.0 * get(2) - get(3)) / (h * h)
            } else if i == n - 1 {
                (2.0 * get(n - 1) - 5.0 * get(n - 2) + 4.0 * get(n - 3) - get(n - 4)) / (h * h)
            } else {
                (get(i + 1) - 2.0 * get(i) + get(i - 1)) / (h * h)
            }
        };
        let d1 = |get: &dyn Fn(usize) -> f64, i: usize, n: usize, h: f64| -> f64 {
            if i == 0 {
                (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * get(n - 1) - 4.0 * get(n - 2) + get(n - 3)) / (2.0 * h)
            } else {
                (get(i + 1) - get(i - 1)) / (2.0 * h)
            }
        };
        let mut xx = vec![0.0; g.len()];
        let mut yy = vec![0.0; g.len()];
        let mut xy = vec![0.0; g.len()];
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                xx[k] = if nx >= 4 { d2(&|a| f(a, j), i, nx, hx) } else { 0.0 };
                yy[k] = if ny >= 4 { d2(&|b| f(i, b), j, ny, hy) } else { 0.0 };
                // d/dy of d/dx
                xy[k] = d1(&|b| d1(&|a| f(a, b), i, nx, hx), j, ny, hy);
            }
        }
        Self { grid: g, xx, yy, xy }
    }
}

/// Pointwise von Kármán operator `f_xx g_yy + f_yy g_xx - 2 f_xy g_xy`.
#[inline]
pub fn vk_pointwise(f: &ShapeDerivatives, g: &ShapeDerivatives) -> f64 {
    f.dxx * g.dyy + f.dyy * g.dxx - 2.0 * f.dxy * g.dxy
}

/// `L(f, g) = Lap f Lap g - grad grad f : grad grad g` on a grid.
pub fn vk_operator(f: &Hessian, g: &Hessian) -> Result<GridField> {
    if f.grid != g.grid {
        return Err(Error::arg("von Karman operator needs both fields on the same grid"));
    }
    let values = (0..f.xx.len())
        .map(|k| f.xx[k] * g.yy[k] + f.yy[k] * g.xx[k] - 2.0 * f.xy[k] * g.xy[k])
        .collect();
    Ok(GridField { grid: f.grid, values })
}

/// Tables of 1D integrals of sine/cosine triple products over one axis,
/// indexed by half-wave numbers `1..=max`.
struct AxisTables {
    max: usize,
    /// `int sin(a) sin(b) sin(c)`
    sss: Vec<f64>,
    /// `int sin(a) cos(b) cos(c)`
    scc: Vec<f64>,
}

impl AxisTables {
    fn new(length: f64, max: usize, resolution: usize) -> Self {
        // Triple products oscillate with at most 3 * max half-waves; one panel
        // per highest-mode half-wavelength with `resolution` nodes each.
        let rule = CompositeRule::new(length, max, resolution);
        let k = |a: usize| a as f64 * std::f64::consts::PI / length;
        let sines: Vec<Vec<f64>> =
            (0..=max).map(|a| rule.nodes.iter().map(|&x| (k(a) * x).sin()).collect()).collect();
        let cosines: Vec<Vec<f64>> =
            (0..=max).map(|a| rule.nodes.iter().map(|&x| (k(a) * x).cos()).collect()).collect();
        let n = max + 1;
        let mut sss = vec![0.0; n * n * n];
        let mut scc = vec![0.0; n * n * n];
        for a in 1..=max {
            for b in 1..=max {
                for c in 1..=max {
                    let mut s1 = 0.0;
                    let mut s2 = 0.0;
                    for (q, w) in rule.weights.iter().enumerate() {
                        s1 += w * sines[a][q] * sines[b][q] * sines[c][q];
                        s2 += w * sines[a][q] * cosines[b][q] * cosines[c][q];
                    }
                    let idx = (a * n + b) * n + c;
                    sss[idx] = s1;
                    scc[idx] = s2;
                }
            }
        }
        Self { max, sss, scc }
    }

    fn idx(&self, a: usize, b: usize, c: usize) -> usize {
        let n = self.max + 1;
        (a * n + b) * n + c
    }
}

struct RectQuadrature {
    x: AxisTables,
    y: AxisTables,
}

impl RectQuadrature {
    fn new(lx: f64, ly: f64, max: (usize, usize), resolution: usize) -> Self {
        Self { x: AxisTables::new(lx, max.0, resolution), y: AxisTables::new(ly, max.1, resolution) }
    }

    /// `int_S A L(B, C) dS / (|A| |B| |C|)` for sine-product modes.
    fn integral(&self, a: ModeRef<'_>, b: ModeRef<'_>, c: ModeRef<'_>) -> f64 {
        let (la, lb, lc) = (a.label(), b.label(), c.label());
        let (bkx, bky) = b.basis.wavenumbers(b.idx);
        let (ckx, cky) = c.basis.wavenumbers(c.idx);
        let ix = self.x.idx(la.0, lb.0, lc.0);
        let iy = self.y.idx(la.1, lb.1, lc.1);
        let sin_part = (bkx * bkx * cky * cky + bky * bky * ckx * ckx) * self.x.sss[ix] * self.y.sss[iy];
        let cos_part = 2.0 * bkx * bky * ckx * cky * self.x.scc[ix] * self.y.scc[iy];
        let amp = a.amplitude() * b.amplitude() * c.amplitude();
        let norms = (a.norm_sq() * b.norm_sq() * c.norm_sq()).sqrt();
        amp * (sin_part - cos_part) / norms
    }
}

#[derive(Clone, Copy)]
struct ModeRef<'a> {
    basis: &'a ModeBasis,
    idx: usize,
}

impl ModeRef<'_> {
    fn label(&self) -> modal_core::modes::ModeLabel {
        self.basis.labels()[self.idx]
    }

    fn norm_sq(&self) -> f64 {
        self.basis.norm_sq(self.idx)
    }

    fn amplitude(&self) -> f64 {
        if self.basis.is_unit_normalised() {
            1.0 / self.basis.raw_norm_sq(self.idx).sqrt()
        } else {
            1.0
        }
    }
}

fn rect_sides(phi: &ModeBasis, psi: &ModeBasis) -> Result<(f64, f64)> {
    match (phi.domain(), psi.domain()) {
        (Domain::Rect { lx, ly }, Domain::Rect { lx: lx2, ly: ly2 })
            if (lx - lx2).abs() <= 1e-12 * lx && (ly - ly2).abs() <= 1e-12 * ly =>
        {
            Ok((lx, ly))
        }
        (Domain::Rect { .. }, Domain::Rect { .. }) => {
            Err(Error::arg("transverse and in-plane bases cover different rectangles"))
        }
        _ => Err(Error::arg("coupling tensors need rectangular bases")),
    }
}

fn quadrature_for(phi: &ModeBasis, psi: &ModeBasis, resolution: usize) -> Result<RectQuadrature> {
    let (lx, ly) = rect_sides(phi, psi)?;
    if resolution < MIN_RESOLUTION {
        return Err(Error::arg(format!(
            "quadrature resolution {resolution} is below {MIN_RESOLUTION} points per shortest half-wavelength"
        )));
    }
    let (a, b) = (phi.max_indices(), psi.max_indices());
    Ok(RectQuadrature::new(lx, ly, (a.0.max(b.0), a.1.max(b.1)), resolution))
}

/// `H[k][i][j] = int Psi_k L(Phi_i, Phi_j) dS / (|Psi_k| |Phi_i| |Phi_j|)`,
/// flat row-major with shape `(n_psi, n_phi, n_phi)`.
pub fn compute_h(phi: &ModeBasis, psi: &ModeBasis, resolution: usize) -> Result<Vec<f64>> {
    let quad = quadrature_for(phi, psi, resolution)?;
    let (np, ns) = (phi.len(), psi.len());
    let slices: Vec<Vec<f64>> = (0..ns)
        .into_par_iter()
        .map(|k| {
            let mut slice = vec![0.0; np * np];
            for i in 0..np {
                for j in i..np {
                    let v = quad.integral(
                        ModeRef { basis: psi, idx: k },
                        ModeRef { basis: phi, idx: i },
                        ModeRef { basis: phi, idx: j },
                    );
                    slice[i * np + j] = v;
                    slice[j * np + i] = v;
                }
            }
            slice
        })
        .collect();
    Ok(slices.concat())
}

/// `C[s][i][j] = int Phi_s L(Phi_i, Psi_j) dS / (|Phi_s| |Phi_i| |Psi_j|)`,
/// flat row-major with shape `(n_phi, n_phi, n_psi)`.
pub fn compute_c(phi: &ModeBasis, psi: &ModeBasis, resolution: usize) -> Result<Vec<f64>> {
    let quad = quadrature_for(phi, psi, resolution)?;
    let (np, ns) = (phi.len(), psi.len());
    let slices: Vec<Vec<f64>> = (0..np)
        .into_par_iter()
        .map(|s| {
            let mut slice = vec![0.0; np * ns];
            for i in 0..np {
                for j in 0..ns {
                    slice[i * ns + j] = quad.integral(
                        ModeRef { basis: phi, idx: s },
                        ModeRef { basis: phi, idx: i },
                        ModeRef { basis: psi, idx: j },
                    );
                }
            }
            slice
        })
        .collect();
    Ok(slices.concat())
}

/// Builds `C` from `H` with the simply supported identity
/// `H[k][i][j] = C[j][i][k]`. Both bases must be sine-product families on
/// the same rectangle (they may be truncated differently).
pub fn derive_c_from_h(h: &[f64], phi: &ModeBasis, psi: &ModeBasis) -> Result<Vec<f64>> {
    rect_sides(phi, psi)?;
    if phi.is_unit_normalised() != psi.is_unit_normalised() {
        return Err(Error::arg("derive_c_from_h needs identically normalised bases"));
    }
    let (np, ns) = (phi.len(), psi.len());
    if h.len() != ns * np * np {
        return Err(Error::arg("H has the wrong shape for these bases"));
    }
    Ok(c_from_h(h, np, ns))
}

/// `derive_c_from_h` without the basis checks; `h` is `[ns][np][np]`.
pub fn c_from_h(h: &[f64], np: usize, ns: usize) -> Vec<f64> {
    let mut c = vec![0.0; np * np * ns];
    for s in 0..np {
        for i in 0..np {
            for j in 0..ns {
                c[(s * np + i) * ns + j] = h[(j * np + i) * np + s];
            }
        }
    }
    c
}

/// Von Kármán coupling tensors and Airy eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTensors {
    pub n_phi: usize,
    pub n_psi: usize,
    /// Shape `(n_psi, n_phi, n_phi)`.
    pub h: Vec<f64>,
    /// Shape `(n_phi, n_phi, n_psi)`.
    pub c: Vec<f64>,
    /// Airy eigenvalues `zeta⁴`, one per in-plane mode.
    pub zeta4: Vec<f64>,
}

impl CouplingTensors {
    /// Simply supported plate: the Airy basis is the same sine-product family
    /// (`zeta⁴ = lambda²`), `H` by quadrature and `C` from the identity.
    pub fn simply_supported(phi: &ModeBasis, psi: &ModeBasis, resolution: usize) -> Result<Self> {
        let h = compute_h(phi, psi, resolution)?;
        let c = derive_c_from_h(&h, phi, psi)?;
        let zeta4 = psi.eigenvalues().iter().map(|l| l * l).collect();
        let mut t = Self { n_phi: phi.len(), n_psi: psi.len(), h, c, zeta4 };
        t.sparsify(SPARSITY_THRESHOLD);
        Ok(t)
    }

    /// Both tensors by direct quadrature.
    pub fn by_quadrature(phi: &ModeBasis, psi: &ModeBasis, resolution: usize) -> Result<Self> {
        let h = compute_h(phi, psi, resolution)?;
        let c = compute_c(phi, psi, resolution)?;
        let zeta4 = psi.eigenvalues().iter().map(|l| l * l).collect();
        Ok(Self { n_phi: phi.len(), n_psi: psi.len(), h, c, zeta4 })
    }

    pub fn from_parts(n_phi: usize, n_psi: usize, h: Vec<f64>, c: Vec<f64>, zeta4: Vec<f64>) -> Result<Self> {
        let t = Self { n_phi, n_psi, h, c, zeta4 };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<()> {
        let (np, ns) = (self.n_phi, self.n_psi);
        if self.h.len() != ns * np * np || self.c.len() != np * np * ns || self.zeta4.len() != ns {
            return Err(Error::arg("coupling tensor dimensions are inconsistent"));
        }
        if self.zeta4.iter().any(|z| !(*z > 0.0)) {
            return Err(Error::arg("Airy eigenvalues must be positive"));
        }
        if self.h.iter().chain(&self.c).any(|v| !v.is_finite()) {
            return Err(Error::arg("coupling tensors contain non-finite entries"));
        }
        Ok(())
    }

    #[inline]
    pub fn h_at(&self, k: usize, i: usize, j: usize) -> f64 {
        self.h[(k * self.n_phi + i) * self.n_phi + j]
    }

    #[inline]
    pub fn c_at(&self, s: usize, i: usize, j: usize) -> f64 {
        self.c[(s * self.n_phi + i) * self.n_psi + j]
    }

    /// Zeroes entries below `threshold` times the largest magnitude.
    pub fn sparsify(&mut self, threshold: f64) {
        for t in [&mut self.h, &mut self.c] {
            let max = t.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let cut = threshold * max;
            for v in t.iter_mut() {
                if v.abs() < cut {
                    *v = 0.0;
                }
            }
        }
    }

    /// Writes a binary file: magic, endianness tag, dims, then `H`, `C` and
    /// `zeta4` as row-major doubles.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            w.write_all(TENSOR_MAGIC)?;
            w.write_all(&[b'L', 1])?;
            w.write_all(&(self.n_phi as u64).to_le_bytes())?;
            w.write_all(&(self.n_psi as u64).to_le_bytes())?;
            for v in self.h.iter().chain(&self.c).chain(&self.zeta4) {
                w.write_all(&v.to_le_bytes())?;
            }
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
        let bad = || Error::arg(format!("{}: not a coupling tensor file", path.display()));
        if bytes.len() < 26 || &bytes[..8] != TENSOR_MAGIC {
            return Err(bad());
        }
        let little = match bytes[8] {
            b'L' => true,
            b'B' => false,
            _ => return Err(bad()),
        };
        let u64_at = |o: usize| {
            let b: [u8; 8] = bytes[o..o + 8].try_into().unwrap();
            if little { u64::from_le_bytes(b) } else { u64::from_be_bytes(b) }
        };
        let (np, ns) = (u64_at(10) as usize, u64_at(18) as usize);
        let count = 2 * ns * np * np + ns;
        if bytes.len() != 26 + 8 * count {
            return Err(bad());
        }
        let vals: Vec<f64> = (0..count)
            .map(|i| {
                let b: [u8; 8] = bytes[26 + 8 * i..34 + 8 * i].try_into().unwrap();
                if little { f64::from_le_bytes(b) } else { f64::from_be_bytes(b) }
            })
            .collect();
        let nh = ns * np * np;
        Self::from_parts(np, ns, vals[..nh].to_vec(), vals[nh..2 * nh].to_vec(), vals[2 * nh..].to_vec())
    }

    /// Long-format CSV (`tensor,a,b,c,value`), nonzero entries only.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tensor,a,b,c,value\n");
        for k in 0..self.n_psi {
            for i in 0..self.n_phi {
                for j in 0..self.n_phi {
                    let v = self.h_at(k, i, j);
                    if v != 0.0 {
                        out.push_str(&format!("H,{k},{i},{j},{v:e}\n"));
                    }
                }
            }
        }
        for s in 0..self.n_phi {
            for i in 0..self.n_phi {
                for j in 0..self.n_psi {
                    let v = self.c_at(s, i, j);
                    if v != 0.0 {
                        out.push_str(&format!("C,{s},{i},{j},{v:e}\n"));
                    }
                }
            }
        }
        for (k, z) in self.zeta4.iter().enumerate() {
            out.push_str(&format!("zeta4,{k},0,0,{z:e}\n"));
        }
        out
    }
}

const TENSOR_MAGIC: &[u8; 8] = b"MODALCPL";

/// Tension-modulation force
/// `f_mu = tau lambda_mu q_mu sum_nu lambda_nu |Phi_nu|² q_nu² / |Phi_mu|²`,
/// which for unit-normalised shapes is the Kirchhoff–Carrier form.
pub fn tension_nl_force(q: &[f64], basis: &ModeBasis, tau: f64) -> Vec<f64> {
    let lam = basis.eigenvalues();
    let norms = basis.norms_sq();
    let s: f64 = q.iter().zip(lam).zip(&norms).map(|((q, l), n)| l * n * q * q).sum();
    q.iter().zip(lam).zip(&norms).map(|((q, l), n)| tau * l * q * s / n).collect()
}

/// Von Kármán modal force by the two-stage contraction
/// `eta_n = sum_qr H[n][q][r] q_q q_r / zeta⁴_n`,
/// `f_s = E/(2 rho) sum_pn C[s][p][n] q_p eta_n`.
pub fn vk_nl_force(q: &[f64], ct: &CouplingTensors, youngs: f64, rho: f64) -> Result<Vec<f64>> {
    if q.len() != ct.n_phi {
        return Err(Error::arg(format!("expected {} modal amplitudes, got {}", ct.n_phi, q.len())));
    }
    let kappa = youngs / (2.0 * rho);
    let (np, ns) = (ct.n_phi, ct.n_psi);
    let eta: Vec<f64> = (0..ns)
        .map(|n| {
            let slice = &ct.h[n * np * np..(n + 1) * np * np];
            let mut acc = 0.0;
            for a in 0..np {
                let row = &slice[a * np..(a + 1) * np];
                acc += q[a] * row.iter().zip(q).map(|(h, q)| h * q).sum::<f64>();
            }
            acc / ct.zeta4[n]
        })
        .collect();
    Ok((0..np)
        .map(|s| {
            let slice = &ct.c[s * np * ns..(s + 1) * np * ns];
            let mut acc = 0.0;
            for p in 0..np {
                let row = &slice[p * ns..(p + 1) * ns];
                acc += q[p] * row.iter().zip(&eta).map(|(c, e)| c * e).sum::<f64>();
            }
            kappa * acc
        })
        .collect())
}

/// Sparse form of the von Kármán contraction used inside time stepping.
#[derive(Debug, Clone)]
pub struct VkContraction {
    pub n_phi: usize,
    pub n_psi: usize,
    pub kappa: f64,
    inv_zeta4: Vec<f64>,
    h_ptr: Vec<usize>,
    h_idx: Vec<(u32, u32)>,
    h_val: Vec<f64>,
    c_ptr: Vec<usize>,
    c_idx: Vec<(u32, u32)>,
    c_val: Vec<f64>,
}

impl VkContraction {
    pub fn new(ct: &CouplingTensors, kappa: f64) -> Self {
        let (np, ns) = (ct.n_phi, ct.n_psi);
        let mut h_ptr = vec![0];
        let (mut h_idx, mut h_val) = (Vec::new(), Vec::new());
        for n in 0..ns {
            for a in 0..np {
                for b in 0..np {
                    let v = ct.h_at(n, a, b);
                    if v != 0.0 {
                        h_idx.push((a as u32, b as u32));
                        h_val.push(v);
                    }
                }
            }
            h_ptr.push(h_val.len());
        }
        let mut c_ptr = vec![0];
        let (mut c_idx, mut c_val) = (Vec::new(), Vec::new());
        for s in 0..np {
            for p in 0..np {
                for n in 0..ns {
                    let v = ct.c_at(s, p, n);
                    if v != 0.0 {
                        c_idx.push((p as u32, n as u32));
                        c_val.push(v);
                    }
                }
            }
            c_ptr.push(c_val.len());
        }
        Self {
            n_phi: np,
            n_psi: ns,
            kappa,
            inv_zeta4: ct.zeta4.iter().map(|z| 1.0 / z).collect(),
            h_ptr,
            h_idx,
            h_val,
            c_ptr,
            c_idx,
            c_val,
        }
    }

    pub fn nonzeros(&self) -> usize {
        self.h_val.len() + self.c_val.len()
    }

    /// Writes the force into `out`; `eta` is scratch of length `n_psi`.
    pub fn force(&self, q: &[f64], eta: &mut [f64], out: &mut [f64]) {
        for n in 0..self.n_psi {
            let mut acc = 0.0;
            for e in self.h_ptr[n]..self.h_ptr[n + 1] {
                let (a, b) = self.h_idx[e];
                acc += self.h_val[e] * q[a as usize] * q[b as usize];
            }
            eta[n] = acc * self.inv_zeta4[n];
        }
        for s in 0..self.n_phi {
            let mut acc = 0.0;
            for e in self.c_ptr[s]..self.c_ptr[s + 1] {
                let (p, n) = self.c_idx[e];
                acc += self.c_val[e] * q[p as usize] * eta[n as usize];
            }
            out[s] = self.kappa * acc;
        }
    }

    /// Vector-Jacobian product: accumulates `J(q)^T g` into `grad_q`.
    /// `eta` must hold the stage-one values for `q` (as left by [`Self::force`]).
    pub fn vjp(&self, q: &[f64], eta: &[f64], g: &[f64], xi: &mut [f64], grad_q: &mut [f64]) {
        xi.iter_mut().for_each(|v| *v = 0.0);
        for s in 0..self.n_phi {
            let gs = self.kappa * g[s];
            if gs == 0.0 {
                continue;
            }
            for e in self.c_ptr[s]..self.c_ptr[s + 1] {
                let (p, n) = self.c_idx[e];
                let c = self.c_val[e] * gs;
                grad_q[p as usize] += c * eta[n as usize];
                xi[n as usize] += c * q[p as usize];
            }
        }
        for n in 0..self.n_psi {
            let x = xi[n] * self.inv_zeta4[n];
            if x == 0.0 {
                continue;
            }
            for e in self.h_ptr[n]..self.h_ptr[n + 1] {
                let (a, b) = self.h_idx[e];
                let v = self.h_val[e] * x;
                grad_q[a as usize] += v * q[b as usize];
                grad_q[b as usize] += v * q[a as usize];
            }
        }
    }
}
