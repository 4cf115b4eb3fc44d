//! Structured vertex-centred grids on intervals and rectangles.
//!
//! Nodes are numbered `k = i + j * nx`. Quadrature is the (tensor-product)
//! trapezoidal rule, so interior nodes carry weight `hx * hy` and boundary
//! nodes a half or a quarter of it.

use std::io::{self, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::report::fmt_num;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("bad grid spec: {0}")]
    BadGridSpec(String),
    #[error("field has {got} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value {value} at node {node}")]
    NonFinite { node: usize, value: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    fn bit(self) -> u8 {
        match self {
            Side::Left => 1,
            Side::Right => 2,
            Side::Bottom => 4,
            Side::Top => 8,
        }
    }

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }
}

/// Which sides of the domain a node lies on. Empty for interior nodes,
/// two sides for corners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BoundaryTag(u8);

impl BoundaryTag {
    pub fn is_interior(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, side: Side) -> bool {
        self.0 & side.bit() != 0
    }

    pub fn sides(self) -> impl Iterator<Item = Side> {
        Side::ALL.into_iter().filter(move |s| self.contains(*s))
    }

    fn with(self, side: Side) -> Self {
        Self(self.0 | side.bit())
    }
}

/// Extents and node counts. `y` is `None` for a 1D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub x: (f64, f64),
    pub nx: usize,
    pub y: Option<((f64, f64), usize)>,
}

impl GridSpec {
    pub fn interval(x0: f64, x1: f64, nx: usize) -> Self {
        Self {
            x: (x0, x1),
            nx,
            y: None,
        }
    }

    pub fn rectangle(x: (f64, f64), nx: usize, y: (f64, f64), ny: usize) -> Self {
        Self {
            x,
            nx,
            y: Some((y, ny)),
        }
    }

    pub fn unit_square(n: usize) -> Self {
        Self::rectangle((0.0, 1.0), n, (0.0, 1.0), n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    tags: Vec<BoundaryTag>,
}

pub fn build_grid(spec: &GridSpec) -> Result<Arc<Grid>, MeshError> {
    Grid::new(spec).map(Arc::new)
}

impl Grid {
    pub fn new(spec: &GridSpec) -> Result<Self, MeshError> {
        let (x0, x1) = spec.x;
        check_extent("x", x0, x1, spec.nx)?;
        let (dim, (y0, y1), ny) = match spec.y {
            Some(((y0, y1), ny)) => {
                check_extent("y", y0, y1, ny)?;
                (2, (y0, y1), ny)
            }
            None => (1, (0.0, 0.0), 1),
        };
        let nx = spec.nx;
        let hx = (x1 - x0) / (nx - 1) as f64;
        let hy = if dim == 2 { (y1 - y0) / (ny - 1) as f64 } else { 1.0 };
        let mut tags = vec![BoundaryTag::default(); nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let mut t = BoundaryTag::default();
                if i == 0 {
                    t = t.with(Side::Left);
                }
                if i == nx - 1 {
                    t = t.with(Side::Right);
                }
                if dim == 2 && j == 0 {
                    t = t.with(Side::Bottom);
                }
                if dim == 2 && j == ny - 1 {
                    t = t.with(Side::Top);
                }
                tags[i + j * nx] = t;
            }
        }
        Ok(Self {
            dim,
            x0,
            x1,
            y0,
            y1,
            nx,
            ny,
            hx,
            hy,
            tags,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    /// 1 on a 1D grid.
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn hx(&self) -> f64 {
        self.hx
    }
    /// Meaningless (1.0) on a 1D grid.
    pub fn hy(&self) -> f64 {
        self.hy
    }
    pub fn x_extent(&self) -> (f64, f64) {
        (self.x0, self.x1)
    }
    pub fn y_extent(&self) -> Option<(f64, f64)> {
        (self.dim == 2).then_some((self.y0, self.y1))
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest spacing.
    pub fn h(&self) -> f64 {
        if self.dim == 2 {
            self.hx.max(self.hy)
        } else {
            self.hx
        }
    }

    pub fn spacing(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.hx,
            Axis::Y => self.hy,
        }
    }

    pub fn count(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.nx,
            Axis::Y => self.ny,
        }
    }

    pub fn axes(&self) -> &'static [Axis] {
        if self.dim == 2 {
            &[Axis::X, Axis::Y]
        } else {
            &[Axis::X]
        }
    }

    /// Domain measure (length or area).
    pub fn measure(&self) -> f64 {
        let lx = self.x1 - self.x0;
        if self.dim == 2 {
            lx * (self.y1 - self.y0)
        } else {
            lx
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + j * self.nx
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    /// Node coordinates; `y` is `None` in 1D.
    pub fn coord(&self, k: usize) -> (f64, Option<f64>) {
        let (i, j) = self.ij(k);
        let x = self.x0 + i as f64 * self.hx;
        if self.dim == 2 {
            (x, Some(self.y0 + j as f64 * self.hy))
        } else {
            (x, None)
        }
    }

    pub fn tag(&self, k: usize) -> BoundaryTag {
        self.tags[k]
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        !self.tags[k].is_interior()
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&k| self.is_boundary(k))
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&k| !self.is_boundary(k))
    }

    fn axis_weight(n: usize, h: f64, i: usize) -> f64 {
        if i == 0 || i == n - 1 {
            0.5 * h
        } else {
            h
        }
    }

    /// Trapezoidal quadrature weight of node `k`.
    pub fn weight(&self, k: usize) -> f64 {
        let (i, j) = self.ij(k);
        let wx = Self::axis_weight(self.nx, self.hx, i);
        if self.dim == 2 {
            wx * Self::axis_weight(self.ny, self.hy, j)
        } else {
            wx
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.weight(k)).collect()
    }

    /// Boundary quadrature weight of node `k`: trapezoid along each side the
    /// node belongs to (corners collect from both sides). In 1D every
    /// endpoint has weight one.
    pub fn boundary_weight(&self, k: usize) -> f64 {
        let (i, j) = self.ij(k);
        let tag = self.tags[k];
        if self.dim == 1 {
            return if tag.is_interior() { 0.0 } else { 1.0 };
        }
        tag.sides()
            .map(|side| match side {
                Side::Left | Side::Right => Self::axis_weight(self.ny, self.hy, j),
                Side::Bottom | Side::Top => Self::axis_weight(self.nx, self.hx, i),
            })
            .sum()
    }

    /// Neighbour along `axis`, offset by `step` nodes.
    #[inline]
    pub fn shift(&self, k: usize, axis: Axis, step: isize) -> usize {
        match axis {
            Axis::X => (k as isize + step) as usize,
            Axis::Y => (k as isize + step * self.nx as isize) as usize,
        }
    }

    /// Position of node `k` along `axis`.
    #[inline]
    pub fn pos(&self, k: usize, axis: Axis) -> usize {
        let (i, j) = self.ij(k);
        match axis {
            Axis::X => i,
            Axis::Y => j,
        }
    }
}

fn check_extent(name: &str, lo: f64, hi: f64, n: usize) -> Result<(), MeshError> {
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(MeshError::BadGridSpec(format!(
            "{name} extent [{lo}, {hi}] is degenerate"
        )));
    }
    if n < 3 {
        return Err(MeshError::BadGridSpec(format!("n{name} = {n}, need at least 3")));
    }
    Ok(())
}

fn check_finite(values: &[f64]) -> Result<(), MeshError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(node) => Err(MeshError::NonFinite {
            node,
            value: values[node],
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self, MeshError> {
        if values.len() != grid.len() {
            return Err(MeshError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<Grid>, value: f64) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![value; n],
        }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64, Option<f64>) -> f64) -> Result<Self, MeshError> {
        let values = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.coord(k);
                f(x, y)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn try_from_fn<E>(
        grid: Arc<Grid>,
        f: impl Fn(f64, Option<f64>) -> Result<f64, E>,
    ) -> Result<Result<Self, MeshError>, E> {
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            let (x, y) = grid.coord(k);
            values.push(f(x, y)?);
        }
        Ok(Self::new(grid, values))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, MeshError> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self, MeshError> {
        self.same_grid(other)?;
        Self::new(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Result<Self, MeshError> {
        self.map(|v| s * v)
    }

    pub fn same_grid(&self, other: &Self) -> Result<(), MeshError> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(MeshError::GridMismatch)
        }
    }

    /// Writes `x[,y],value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let two_d = self.grid.dim() == 2;
        writeln!(out, "{}", if two_d { "x,y,value" } else { "x,value" })?;
        for (k, v) in self.values.iter().enumerate() {
            let (x, y) = self.grid.coord(k);
            match y {
                Some(y) => writeln!(out, "{},{},{}", fmt_num(x), fmt_num(y), fmt_num(*v))?,
                None => writeln!(out, "{},{}", fmt_num(x), fmt_num(*v))?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Arc<Grid>,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: Arc<Grid>, components: Vec<Vec<f64>>) -> Result<Self, MeshError> {
        if components.len() != grid.dim() {
            return Err(MeshError::BadGridSpec(format!(
                "{} components for a {}D grid",
                components.len(),
                grid.dim()
            )));
        }
        for c in &components {
            if c.len() != grid.len() {
                return Err(MeshError::LengthMismatch {
                    expected: grid.len(),
                    got: c.len(),
                });
            }
            check_finite(c)?;
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let components = vec![vec![0.0; grid.len()]; grid.dim()];
        Self { grid, components }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn component(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::X => &self.components[0],
            Axis::Y => &self.components[1],
        }
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn at(&self, k: usize) -> [f64; 2] {
        let y = if self.grid.dim() == 2 { self.components[1][k] } else { 0.0 };
        [self.components[0][k], y]
    }

    pub fn negated(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            components: self
                .components
                .iter()
                .map(|c| c.iter().map(|v| -v).collect())
                .collect(),
        }
    }

    /// Largest Euclidean norm over nodes.
    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|k| {
                let [a, b] = self.at(k);
                a.hypot(b)
            })
            .fold(0.0, f64::max)
    }

    /// Largest absolute component value.
    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn dot(&self, other: &VectorField) -> Result<ScalarField, MeshError> {
        let values = (0..self.grid.len())
            .map(|k| {
                self.components
                    .iter()
                    .zip(&other.components)
                    .map(|(a, b)| a[k] * b[k])
                    .sum()
            })
            .collect();
        ScalarField::new(self.grid.clone(), values)
    }

    /// Writes `x[,y],V1[,V2]` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let two_d = self.grid.dim() == 2;
        writeln!(out, "{}", if two_d { "x,y,V1,V2" } else { "x,V1" })?;
        for k in 0..self.grid.len() {
            let (x, y) = self.grid.coord(k);
            let [v1, v2] = self.at(k);
            match y {
                Some(y) => writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_num(x),
                    fmt_num(y),
                    fmt_num(v1),
                    fmt_num(v2)
                )?,
                None => writeln!(out, "{},{}", fmt_num(x), fmt_num(v1))?,
            }
        }
        Ok(())
    }
}

pub fn integrate(f: &ScalarField) -> f64 {
    let g = f.grid();
    f.values().iter().enumerate().map(|(k, v)| g.weight(k) * v).sum()
}

/// Weighted inner product `∫ f g`.
pub fn inner(f: &ScalarField, g: &ScalarField) -> f64 {
    weighted_dot(f.grid(), f.values(), g.values())
}

pub(crate) fn weighted_dot(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(k, (x, y))| grid.weight(k) * x * y)
        .sum()
}

pub fn boundary_integrate(f: &ScalarField) -> f64 {
    let g = f.grid();
    g.boundary_nodes().map(|k| g.boundary_weight(k) * f.values()[k]).sum()
}

/// Trapezoidal integral over one side (an endpoint value in 1D).
pub fn boundary_integrate_side(f: &ScalarField, side: Side) -> f64 {
    let g = f.grid();
    g.boundary_nodes()
        .filter(|&k| g.tag(k).contains(side))
        .map(|k| {
            let (i, j) = g.ij(k);
            let w = match (g.dim(), side) {
                (1, _) => 1.0,
                (_, Side::Left | Side::Right) => Grid::axis_weight(g.ny(), g.hy(), j),
                _ => Grid::axis_weight(g.nx(), g.hx(), i),
            };
            w * f.values()[k]
        })
        .sum()
}

/// Difference stencil used for first derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// Central in the interior, three-point one-sided at the ends; second
    /// order everywhere.
    SecondOrder,
    /// Central in the interior, two-point one-sided at the ends. Together
    /// with trapezoidal weights it satisfies summation by parts, which is
    /// what makes the discrete advection operator exactly skew-adjoint.
    Sbp,
}

impl Stencil {
    /// Coefficients `(offset, weight)` of the derivative at position `p` of
    /// `n` along an axis with spacing `h`.
    pub fn coefficients(self, p: usize, n: usize, h: f64) -> Vec<(isize, f64)> {
        let inv = 1.0 / h;
        if p > 0 && p + 1 < n {
            return vec![(-1, -0.5 * inv), (1, 0.5 * inv)];
        }
        let sign = if p == 0 { 1.0 } else { -1.0 };
        let dir = if p == 0 { 1 } else { -1 };
        match self {
            Stencil::SecondOrder => vec![
                (0, -1.5 * inv * sign),
                (dir, 2.0 * inv * sign),
                (2 * dir, -0.5 * inv * sign),
            ],
            Stencil::Sbp => vec![(0, -inv * sign), (dir, inv * sign)],
        }
    }
}

/// Partial derivative of nodal values along `axis`.
pub fn diff(grid: &Grid, values: &[f64], axis: Axis, stencil: Stencil) -> Vec<f64> {
    let n = grid.count(axis);
    let h = grid.spacing(axis);
    (0..grid.len())
        .map(|k| {
            stencil
                .coefficients(grid.pos(k, axis), n, h)
                .into_iter()
                .map(|(off, w)| w * values[grid.shift(k, axis, off)])
                .sum()
        })
        .collect()
}

fn gradient(f: &ScalarField, stencil: Stencil) -> VectorField {
    let g = f.grid();
    let components = g.axes().iter().map(|&ax| diff(g, f.values(), ax, stencil)).collect();
    VectorField {
        grid: g.clone(),
        components,
    }
}

/// Second-order gradient.
pub fn grad(f: &ScalarField) -> VectorField {
    gradient(f, Stencil::SecondOrder)
}

/// Gradient with the summation-by-parts stencil; the operator's advection
/// term and stream-function flows are built from it.
pub fn sbp_grad(f: &ScalarField) -> VectorField {
    gradient(f, Stencil::Sbp)
}
