//! Uniform grids on an interval or rectangle with homogeneous Dirichlet
//! boundary values, grid functions `Ω_h → ℝⁿ`, and the norm suite.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A uniform grid. `nodes` counts boundary nodes too; only the interior
/// nodes carry unknowns, boundary values are identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    lengths: [f64; 2],
    nodes: [usize; 2],
}

impl Grid {
    pub fn interval(length: f64, nodes: usize) -> Result<Self> {
        Self::new(1, &[length], &[nodes])
    }

    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(2, &[lx, ly], &[nx, ny])
    }

    pub fn new(dim: usize, lengths: &[f64], nodes: &[usize]) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::config("domain.dim", format!("must be 1 or 2, got {dim}")));
        }
        if lengths.len() != dim || nodes.len() != dim {
            return Err(Error::config("domain", "lengths and nodes must have one entry per axis"));
        }
        if nodes.iter().any(|&k| k < 3) {
            return Err(Error::config("domain.nodes", "need at least 3 nodes per axis"));
        }
        if lengths.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::config("domain.lengths", "lengths must be positive"));
        }
        let mut g = Grid { dim, lengths: [1.0; 2], nodes: [3; 2] };
        g.lengths[..dim].copy_from_slice(&lengths[..dim]);
        g.nodes[..dim].copy_from_slice(&nodes[..dim]);
        if dim == 2 {
            let (hx, hy) = (g.spacing_axis(0), g.spacing_axis(1));
            if (hx - hy).abs() > 1e-12 * hx.max(hy) {
                return Err(Error::config("domain", "2D grids must have equal spacing on both axes"));
            }
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes[..self.dim]
    }

    fn spacing_axis(&self, axis: usize) -> f64 {
        self.lengths[axis] / (self.nodes[axis] - 1) as f64
    }

    pub fn spacing(&self) -> f64 {
        self.spacing_axis(0)
    }

    /// Interior node counts per axis.
    pub fn interior(&self) -> [usize; 2] {
        let mx = self.nodes[0] - 2;
        let my = if self.dim == 2 { self.nodes[1] - 2 } else { 1 };
        [mx, my]
    }

    pub fn interior_len(&self) -> usize {
        let [mx, my] = self.interior();
        mx * my
    }

    /// Quadrature weight `h^dim`.
    pub fn weight(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `|Ω|`.
    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    /// Coordinates of interior node `k` (x fastest).
    pub fn coords(&self, k: usize) -> [f64; 2] {
        let h = self.spacing();
        let [mx, _] = self.interior();
        let ix = k % mx;
        let iy = k / mx;
        [(ix + 1) as f64 * h, if self.dim == 2 { (iy + 1) as f64 * h } else { 0.0 }]
    }

    /// Smallest eigenvalue of `−Δ_h` with Dirichlet data.
    pub fn first_eigenvalue(&self) -> f64 {
        let h = self.spacing();
        (0..self.dim)
            .map(|a| {
                let m = self.nodes[a] - 1;
                4.0 / (h * h) * (std::f64::consts::PI / (2 * m) as f64).sin().powi(2)
            })
            .sum()
    }

    pub fn sine_basis(&self) -> Result<SineBasis> {
        SineBasis::new(self)
    }
}

/// Which norm to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L1,
    L2,
    Linf,
    H1_0,
    /// Discrete `H^{-s}` through the sine eigenbasis (1D only).
    Hneg(u32),
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::L1 => write!(f, "L1"),
            NormKind::L2 => write!(f, "L2"),
            NormKind::Linf => write!(f, "Linf"),
            NormKind::H1_0 => write!(f, "H1_0"),
            NormKind::Hneg(s) => write!(f, "H^-{s}"),
        }
    }
}

/// A grid function with `n` components per interior node, stored node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    n: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Arc<Grid>, n: usize) -> Self {
        let len = grid.interior_len() * n;
        Field { grid, n, values: vec![0.0; len] }
    }

    pub fn from_values(grid: Arc<Grid>, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.interior_len() * n {
            return Err(Error::ShapeMismatch(format!(
                "expected {} values, got {}",
                grid.interior_len() * n,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(format!("non-finite value {bad}")));
        }
        Ok(Field { grid, n, values })
    }

    /// Samples `f(x, y)` at every interior node.
    pub fn from_fn(grid: Arc<Grid>, n: usize, mut f: impl FnMut([f64; 2]) -> Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(grid.interior_len() * n);
        for k in 0..grid.interior_len() {
            let v = f(grid.coords(k));
            assert_eq!(v.len(), n, "sampling function returned the wrong number of components");
            values.extend(v);
        }
        Field { grid, n, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.n
    }

    pub fn len_nodes(&self) -> usize {
        self.values.len() / self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    pub fn node_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.n..(k + 1) * self.n]
    }

    pub fn nodes(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.n)
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.n == other.n && *self.grid == *other.grid
    }

    pub(crate) fn check_shape(&self, other: &Field) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "fields differ: {} components on {:?} vs {} on {:?}",
                self.n,
                self.grid.nodes(),
                other.n,
                other.grid.nodes()
            )))
        }
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Field { grid: self.grid.clone(), n: self.n, values })
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field { grid: self.grid.clone(), n: self.n, values: self.values.iter().map(|v| v * s).collect() }
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &Field) -> Result<()> {
        self.check_shape(other)?;
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += a * y;
        }
        Ok(())
    }

    /// Discrete `L²` inner product `h^dim Σ (u, v)`.
    pub fn dot(&self, other: &Field) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self.grid.weight() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>())
    }

    /// Componentwise second-order Laplacian with zero ghost values.
    pub fn laplacian(&self) -> Field {
        let mut out = Field::zeros(self.grid.clone(), self.n);
        laplacian_into(&self.grid, self.n, &self.values, &mut out.values);
        out
    }

    /// `Σ_edges |u_{next} − u|² / h² · h^dim`, including the edges to the
    /// boundary nodes.
    pub fn grad_sq(&self) -> f64 {
        let h = self.grid.spacing();
        let [mx, my] = self.grid.interior();
        let n = self.n;
        let v = &self.values;
        let at = |ix: isize, iy: isize, c: usize| -> f64 {
            if ix < 0 || iy < 0 || ix >= mx as isize || iy >= my as isize {
                0.0
            } else {
                v[(iy as usize * mx + ix as usize) * n + c]
            }
        };
        let mut s = 0.0;
        for c in 0..n {
            for iy in 0..my as isize {
                for ix in -1..mx as isize {
                    let d = at(ix + 1, iy, c) - at(ix, iy, c);
                    s += d * d;
                }
            }
            if self.grid.dim() == 2 {
                for iy in -1..my as isize {
                    for ix in 0..mx as isize {
                        let d = at(ix, iy + 1, c) - at(ix, iy, c);
                        s += d * d;
                    }
                }
            }
        }
        s / (h * h) * self.grid.weight()
    }

    /// Discrete `(∇_h u, ∇_h v)` by polarization of [`Field::grad_sq`].
    pub fn grad_dot(&self, other: &Field) -> Result<f64> {
        self.check_shape(other)?;
        let mut plus = self.clone();
        plus.axpy(1.0, other)?;
        let minus = self.sub(other)?;
        Ok(0.25 * (plus.grad_sq() - minus.grad_sq()))
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        let w = self.grid.weight();
        Ok(match kind {
            NormKind::L1 => w * self.nodes().map(euclid).sum::<f64>(),
            NormKind::L2 => (w * self.values.iter().map(|x| x * x).sum::<f64>()).sqrt(),
            NormKind::Linf => self.nodes().map(euclid).fold(0.0, f64::max),
            NormKind::H1_0 => self.grad_sq().sqrt(),
            NormKind::Hneg(s) => {
                if self.grid.dim() != 1 {
                    return Err(Error::UnsupportedNorm(kind.to_string()));
                }
                self.grid.sine_basis()?.neg_norm(self, s)?
            }
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn laplacian_into(grid: &Grid, n: usize, v: &[f64], out: &mut [f64]) {
    let h2 = grid.spacing().powi(2);
    let [mx, my] = grid.interior();
    for iy in 0..my {
        for ix in 0..mx {
            let k = iy * mx + ix;
            for c in 0..n {
                let centre = v[k * n + c];
                let left = if ix > 0 { v[(k - 1) * n + c] } else { 0.0 };
                let right = if ix + 1 < mx { v[(k + 1) * n + c] } else { 0.0 };
                let mut acc = left + right - 2.0 * centre;
                if grid.dim() == 2 {
                    let down = if iy > 0 { v[(k - mx) * n + c] } else { 0.0 };
                    let up = if iy + 1 < my { v[(k + mx) * n + c] } else { 0.0 };
                    acc += down + up - 2.0 * centre;
                }
                out[k * n + c] = acc / h2;
            }
        }
    }
}

/// The `L²_h`-orthonormal sine eigenbasis of the 1D Dirichlet Laplacian.
#[derive(Debug, Clone)]
pub struct SineBasis {
    m: usize,
    weight: f64,
    /// `table[k * m + i] = √(2/L) sin((k+1)π(i+1)/(m+1))`
    table: Vec<f64>,
    eigenvalues: Vec<f64>,
}

impl SineBasis {
    pub fn new(grid: &Grid) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::UnsupportedDim(grid.dim()));
        }
        let m = grid.interior()[0];
        let h = grid.spacing();
        let scale = (2.0 / grid.lengths()[0]).sqrt();
        let mut table = Vec::with_capacity(m * m);
        for k in 0..m {
            for i in 0..m {
                let a = std::f64::consts::PI * ((k + 1) * (i + 1)) as f64 / (m + 1) as f64;
                table.push(scale * a.sin());
            }
        }
        let eigenvalues = (0..m)
            .map(|k| 4.0 / (h * h) * (std::f64::consts::PI * (k + 1) as f64 / (2 * (m + 1)) as f64).sin().powi(2))
            .collect();
        Ok(SineBasis { m, weight: h, table, eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Mode `k` (0-based) as nodal values.
    pub fn mode(&self, k: usize) -> &[f64] {
        &self.table[k * self.m..(k + 1) * self.m]
    }

    /// `(Σ_k μ_k^{-s} |c_k|²)^{1/2}` summed over components.
    pub fn neg_norm(&self, f: &Field, s: u32) -> Result<f64> {
        if f.grid().dim() != 1 || f.grid().interior()[0] != self.m {
            return Err(Error::ShapeMismatch("field does not live on this sine basis".into()));
        }
        let n = f.components();
        let v = f.values();
        let mut total = 0.0;
        for (k, mu) in self.eigenvalues.iter().enumerate() {
            let row = self.mode(k);
            let damp = mu.powi(-(s as i32));
            for c in 0..n {
                let coeff = self.weight * row.iter().enumerate().map(|(i, r)| r * v[i * n + c]).sum::<f64>();
                total += damp * coeff * coeff;
            }
        }
        Ok(total.sqrt())
    }
}

/// Trapezoidal `∫ f dt` over a sampled series.
pub fn time_integral(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() < 2 || values.len() != times.len() {
        return Err(Error::EmptySeries);
    }
    Ok(times.windows(2).zip(values.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum())
}
