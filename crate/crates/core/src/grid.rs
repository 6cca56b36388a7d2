//! Truncated half-space grid, sampled fields, traces and sup-norm functionals.
//!
//! Lateral axis: uniform lattice on `[-R', R']` with the origin as a node.
//! Depth axis: explicit node list starting at `x_N = 0`; the default layout is a
//! uniform core followed by a geometric stretch out to `L`.

use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::kernels::Dim;

#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceGrid {
    pub dim: Dim,
    pub r_prime: f64,
    pub l: f64,
    pub n_prime: usize,
    pub n_depth: usize,
    lateral: Vec<f64>,
    depth: Vec<f64>,
}

impl HalfSpaceGrid {
    /// Grid with equally spaced depth nodes.
    pub fn uniform(dim: Dim, r_prime: f64, l: f64, n_prime: usize, n_depth: usize) -> Result<Self> {
        if n_depth < 2 {
            return domain("n_depth must be >= 2");
        }
        if !(l > 0.0) {
            return domain("depth L must be positive");
        }
        let h = l / (n_depth - 1) as f64;
        let mut depth: Vec<f64> = (0..n_depth).map(|k| k as f64 * h).collect();
        depth[n_depth - 1] = l;
        Self::from_depth_nodes(dim, r_prime, n_prime, depth)
    }

    /// Uniform core `[0, core_depth]` with `core_cells` cells, then geometric growth to `l`.
    /// Falls back to a uniform grid when `l` is reachable without stretching.
    pub fn stretched(
        dim: Dim,
        r_prime: f64,
        l: f64,
        n_prime: usize,
        n_depth: usize,
        core_depth: f64,
        core_cells: usize,
    ) -> Result<Self> {
        if n_depth < 2 || core_cells == 0 || !(core_depth > 0.0) || !(l > 0.0) {
            return domain("stretched grid needs n_depth >= 2, core_cells >= 1, positive depths");
        }
        let h = core_depth / core_cells as f64;
        if core_cells + 1 >= n_depth || l <= h * (n_depth - 1) as f64 * (1.0 + 1e-12) {
            return Self::uniform(dim, r_prime, l, n_prime, n_depth);
        }
        let rest = n_depth - 1 - core_cells;
        let target = (l - core_depth) / h;
        // solve sum_{i=1}^{rest} r^i = target for r > 1
        let sum = |r: f64| (1..=rest).map(|i| r.powi(i as i32)).sum::<f64>();
        let (mut lo, mut hi) = (1.0, 2.0);
        while sum(hi) < target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sum(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        let mut depth = Vec::with_capacity(n_depth);
        for k in 0..=core_cells {
            depth.push(k as f64 * h);
        }
        let mut y = core_depth;
        let mut step = h;
        for _ in 0..rest {
            step *= r;
            y += step;
            depth.push(y);
        }
        depth[core_cells] = core_depth;
        depth[n_depth - 1] = l;
        Self::from_depth_nodes(dim, r_prime, n_prime, depth)
    }

    pub fn from_depth_nodes(dim: Dim, r_prime: f64, n_prime: usize, depth: Vec<f64>) -> Result<Self> {
        if dim.get() != 2 {
            return domain("sampled fields are implemented for N = 2 (use semigroups::radial for N = 3)");
        }
        if !(r_prime > 0.0) {
            return domain("R' must be positive");
        }
        if n_prime < 3 || n_prime % 2 == 0 {
            return domain(format!("n_prime must be odd and >= 3, got {n_prime}"));
        }
        if depth.len() < 2 || depth[0] != 0.0 {
            return domain("depth axis needs >= 2 nodes starting at 0");
        }
        if depth.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("depth nodes must be strictly increasing");
        }
        let c = (n_prime - 1) / 2;
        let h = r_prime / c as f64;
        let lateral = (0..n_prime).map(|i| (i as f64 - c as f64) * h).collect();
        Ok(HalfSpaceGrid {
            dim,
            r_prime,
            l: *depth.last().unwrap(),
            n_prime,
            n_depth: depth.len(),
            lateral,
            depth,
        })
    }

    pub fn lateral(&self) -> &[f64] {
        &self.lateral
    }

    pub fn depth(&self) -> &[f64] {
        &self.depth
    }

    pub fn lateral_spacing(&self) -> f64 {
        self.lateral[1] - self.lateral[0]
    }

    pub fn len(&self) -> usize {
        self.n_prime * self.n_depth
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, k: usize) -> usize {
        k * self.n_prime + i
    }

    pub fn coords(&self, i: usize, k: usize) -> (f64, f64) {
        (self.lateral[i], self.depth[k])
    }

    pub fn nearest_node(&self, x_prime: f64, x_n: f64) -> (usize, usize) {
        let h = self.lateral_spacing();
        let c = ((self.n_prime - 1) / 2) as f64;
        let i = ((x_prime / h + c).round()).clamp(0.0, (self.n_prime - 1) as f64) as usize;
        let k = match self.depth.binary_search_by(|y| y.partial_cmp(&x_n).unwrap()) {
            Ok(k) => k,
            Err(0) => 0,
            Err(k) if k >= self.n_depth => self.n_depth - 1,
            Err(k) => {
                if x_n - self.depth[k - 1] <= self.depth[k] - x_n {
                    k - 1
                } else {
                    k
                }
            }
        };
        (i, k)
    }
}

/// Sampled function on the grid, depth-major (`values[k * n' + i]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Arc<HalfSpaceGrid>,
    pub values: Vec<f64>,
}

/// Sampled function on the boundary lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    pub grid: Arc<HalfSpaceGrid>,
    pub values: Vec<f64>,
}

fn check_finite(values: &[f64]) -> Result<()> {
    if let Some(p) = values.iter().position(|v| !v.is_finite()) {
        return domain(format!("non-finite value at index {p}"));
    }
    Ok(())
}

impl Field {
    pub fn new(grid: Arc<HalfSpaceGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return domain("value count does not match grid");
        }
        check_finite(&values)?;
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: &Arc<HalfSpaceGrid>) -> Self {
        Field {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Arc<HalfSpaceGrid>, c: f64) -> Self {
        Field {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: &Arc<HalfSpaceGrid>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for &y in grid.depth() {
            for &x in grid.lateral() {
                values.push(f(x, y));
            }
        }
        Field::new(grid.clone(), values)
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.grid.n_prime;
        &self.values[k * n..(k + 1) * n]
    }

    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.grid.n_prime;
        &mut self.values[k * n..(k + 1) * n]
    }

    pub fn at(&self, i: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, k)]
    }

    pub fn trace(&self) -> BoundaryField {
        BoundaryField {
            grid: self.grid.clone(),
            values: self.row(0).to_vec(),
        }
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid {
            Ok(())
        } else {
            domain("fields live on different grids")
        }
    }

    pub fn axpy(&mut self, a: f64, other: &Field) {
        debug_assert_eq!(self.values.len(), other.values.len());
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn add(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn scaled(&self, a: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl BoundaryField {
    pub fn new(grid: Arc<HalfSpaceGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_prime {
            return domain("value count does not match boundary lattice");
        }
        check_finite(&values)?;
        Ok(BoundaryField { grid, values })
    }

    pub fn zeros(grid: &Arc<HalfSpaceGrid>) -> Self {
        BoundaryField {
            grid: grid.clone(),
            values: vec![0.0; grid.n_prime],
        }
    }

    pub fn constant(grid: &Arc<HalfSpaceGrid>, c: f64) -> Self {
        BoundaryField {
            grid: grid.clone(),
            values: vec![c; grid.n_prime],
        }
    }

    pub fn from_fn(grid: &Arc<HalfSpaceGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.lateral().iter().map(|&x| f(x)).collect();
        BoundaryField::new(grid.clone(), values)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn axpy(&mut self, a: f64, other: &BoundaryField) {
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
    }
}

pub trait SupNorm {
    fn node_values(&self) -> &[f64];
}

impl SupNorm for Field {
    fn node_values(&self) -> &[f64] {
        &self.values
    }
}

impl SupNorm for BoundaryField {
    fn node_values(&self) -> &[f64] {
        &self.values
    }
}

pub fn sup_norm(f: &impl SupNorm) -> Result<f64> {
    let v = f.node_values();
    if v.is_empty() {
        return domain("sup norm of an empty field");
    }
    Ok(v.iter().fold(0.0, |m, x| m.max(x.abs())))
}

/// Max over nodes with `x_N < l_strip`.
pub fn strip_sup_norm(f: &Field, l_strip: f64) -> Result<f64> {
    if !(l_strip > 0.0) || l_strip > f.grid.l {
        return domain(format!("strip depth {l_strip} outside (0, L]"));
    }
    let mut m: f64 = 0.0;
    for (k, &y) in f.grid.depth().iter().enumerate() {
        if y >= l_strip {
            break;
        }
        m = f.row(k).iter().fold(m, |m, v| m.max(v.abs()));
    }
    Ok(m)
}

/// One-sided three-point derivative at `x_N = 0` (the general-spacing form of
/// `(-3f0 + 4f1 - f2) / 2h`).
pub fn boundary_normal_derivative(f: &Field) -> Result<BoundaryField> {
    let g = &f.grid;
    if g.n_depth < 4 {
        return domain("boundary derivative needs n_depth >= 4");
    }
    let [c0, c1, c2] = three_point_weights(g.depth());
    let values = (0..g.n_prime)
        .map(|i| c0 * f.at(i, 0) + c1 * f.at(i, 1) + c2 * f.at(i, 2))
        .collect();
    BoundaryField::new(g.clone(), values)
}

pub(crate) fn three_point_weights(depth: &[f64]) -> [f64; 3] {
    let h1 = depth[1];
    let h2 = depth[2] - depth[1];
    [
        -(2.0 * h1 + h2) / (h1 * (h1 + h2)),
        (h1 + h2) / (h1 * h2),
        -h1 / (h2 * (h1 + h2)),
    ]
}

pub fn write_csv(f: &Field, mut out: impl Write) -> Result<()> {
    let g = &f.grid;
    writeln!(out, "{},{},{},{},{}", g.dim.get(), g.r_prime, g.l, g.n_prime, g.n_depth)?;
    for (k, &y) in g.depth().iter().enumerate() {
        for (i, &x) in g.lateral().iter().enumerate() {
            writeln!(out, "{},{},{}", x, y, f.at(i, k))?;
        }
    }
    Ok(())
}

pub fn read_csv(input: impl BufRead) -> Result<Field> {
    let bad = |m: &str| Error::Domain(format!("field csv: {m}"));
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| bad("empty input"))??;
    let h: Vec<&str> = header.split(',').collect();
    if h.len() != 5 {
        return Err(bad("header must have 5 entries"));
    }
    let parse_f = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("bad number"));
    let parse_u = |s: &str| s.trim().parse::<usize>().map_err(|_| bad("bad count"));
    let dim = Dim::new(parse_u(h[0])?)?;
    let r_prime = parse_f(h[1])?;
    let n_prime = parse_u(h[3])?;
    let n_depth = parse_u(h[4])?;
    let mut depth = Vec::with_capacity(n_depth);
    let mut values = Vec::with_capacity(n_prime * n_depth);
    for (j, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(bad("rows need 3 columns"));
        }
        if j % n_prime == 0 {
            depth.push(parse_f(cols[1])?);
        }
        values.push(parse_f(cols[2])?);
    }
    if depth.len() != n_depth {
        return Err(bad("depth row count mismatch"));
    }
    let grid = HalfSpaceGrid::from_depth_nodes(dim, r_prime, n_prime, depth)?;
    if grid.l != parse_f(h[2])? {
        return Err(bad("header depth disagrees with rows"));
    }
    Field::new(Arc::new(grid), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n_prime: usize, l: f64, n_depth: usize) -> Arc<HalfSpaceGrid> {
        Arc::new(HalfSpaceGrid::uniform(Dim::new(2).unwrap(), 2.0, l, n_prime, n_depth).unwrap())
    }

    #[test]
    fn rejects_even_lateral_count() {
        assert!(HalfSpaceGrid::uniform(Dim::new(2).unwrap(), 1.0, 1.0, 4, 5).is_err());
        assert!(HalfSpaceGrid::uniform(Dim::new(3).unwrap(), 1.0, 1.0, 5, 5).is_err());
    }

    #[test]
    fn origin_is_a_node() {
        let grid = g(9, 1.0, 5);
        assert_eq!(grid.lateral()[4], 0.0);
        assert_eq!(grid.depth()[0], 0.0);
    }

    #[test]
    fn stretched_grid_hits_core_and_end() {
        let grid =
            HalfSpaceGrid::stretched(Dim::new(2).unwrap(), 6.0, 134.0, 9, 65, 1.0, 16).unwrap();
        assert_eq!(grid.depth()[16], 1.0);
        assert_eq!(grid.depth()[64], 134.0);
        assert!((grid.depth()[1] - 1.0 / 16.0).abs() < 1e-15);
        let uni = HalfSpaceGrid::stretched(Dim::new(2).unwrap(), 6.0, 4.0, 9, 65, 1.0, 16).unwrap();
        assert!((uni.depth()[1] - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn strip_norm_of_linear_field() {
        let grid = g(5, 1.0, 5);
        let f = Field::from_fn(&grid, |_, y| y).unwrap();
        assert_eq!(strip_sup_norm(&f, 0.5).unwrap(), 0.25);
        assert!(strip_sup_norm(&f, 1.5).is_err());
    }

    #[test]
    fn boundary_derivative_exact_on_quadratics() {
        let grid = g(5, 1.0, 9);
        let lin = Field::from_fn(&grid, |_, y| y).unwrap();
        let quad = Field::from_fn(&grid, |_, y| y * y).unwrap();
        for v in boundary_normal_derivative(&lin).unwrap().values {
            assert!((v - 1.0).abs() < 1e-13);
        }
        for v in boundary_normal_derivative(&quad).unwrap().values {
            assert!(v.abs() < 1e-13);
        }
        assert!(boundary_normal_derivative(&Field::zeros(&g(5, 1.0, 3))).is_err());
    }

    #[test]
    fn sup_norm_examples() {
        let grid = g(3, 1.0, 2);
        let b = BoundaryField::new(grid.clone(), vec![-3.0, 2.0, 0.0]).unwrap();
        assert_eq!(sup_norm(&b).unwrap(), 3.0);
        assert_eq!(sup_norm(&Field::zeros(&grid)).unwrap(), 0.0);
        assert!(BoundaryField::new(grid, vec![f64::NAN, 0.0, 0.0]).is_err());
    }
}
