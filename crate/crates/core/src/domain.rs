//! Dirichlet eigenpairs of `−Δ + V` on planar domains sampled on a uniform
//! cell-centred grid.
//!
//! Interior cells carry the unknowns. Every face between an interior and an
//! exterior cell is a Dirichlet face, with the boundary placed a fraction `θ`
//! of the way from the interior centre to the exterior centre: `θ = ½` for
//! masks (the staircase of cell faces) and the level-set crossing for
//! analytic shapes. Eliminating the boundary value keeps the 5-point operator
//! symmetric; its diagonal picks up `1/(θh²)` per Dirichlet face.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PpwError, Result};
use crate::numerics::brent;
use crate::potentials::RadialPotential;

pub const MAX_K: usize = 4;
const NONE: u32 = u32::MAX;
const MIN_FRACTION: f64 = 1e-3;
const EXTRA_VECTORS: usize = 3;
const MAX_OUTER: usize = 400;
const MAX_INNER: usize = 5000;

/// Face directions in the order used by the per-cell arrays.
const W: usize = 0;
const E: usize = 1;
const S: usize = 2;
const N: usize = 3;

/// Analytic planar shapes, described by a level set negative inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Disk { cx: f64, cy: f64, radius: f64 },
    Ellipse { cx: f64, cy: f64, a: f64, b: f64 },
    Rectangle { cx: f64, cy: f64, width: f64, height: f64 },
    /// The square of side `size` with its upper right quadrant removed.
    LShape { cx: f64, cy: f64, size: f64 },
}

impl Shape {
    pub fn disk(radius: f64) -> Self {
        Shape::Disk { cx: 0.0, cy: 0.0, radius }
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Shape::Ellipse { cx: 0.0, cy: 0.0, a, b }
    }

    pub fn square(side: f64) -> Self {
        Shape::Rectangle { cx: 0.0, cy: 0.0, width: side, height: side }
    }

    pub fn rectangle(width: f64, height: f64) -> Self {
        Shape::Rectangle { cx: 0.0, cy: 0.0, width, height }
    }

    pub fn l_shape(size: f64) -> Self {
        Shape::LShape { cx: 0.0, cy: 0.0, size }
    }

    pub fn centered_at(self, x: f64, y: f64) -> Self {
        match self {
            Shape::Disk { radius, .. } => Shape::Disk { cx: x, cy: y, radius },
            Shape::Ellipse { a, b, .. } => Shape::Ellipse { cx: x, cy: y, a, b },
            Shape::Rectangle { width, height, .. } => {
                Shape::Rectangle { cx: x, cy: y, width, height }
            }
            Shape::LShape { size, .. } => Shape::LShape { cx: x, cy: y, size },
        }
    }

    pub fn center(&self) -> (f64, f64) {
        match *self {
            Shape::Disk { cx, cy, .. }
            | Shape::Ellipse { cx, cy, .. }
            | Shape::Rectangle { cx, cy, .. }
            | Shape::LShape { cx, cy, .. } => (cx, cy),
        }
    }

    pub fn half_extent(&self) -> (f64, f64) {
        match *self {
            Shape::Disk { radius, .. } => (radius, radius),
            Shape::Ellipse { a, b, .. } => (a, b),
            Shape::Rectangle { width, height, .. } => (0.5 * width, 0.5 * height),
            Shape::LShape { size, .. } => (0.5 * size, 0.5 * size),
        }
    }

    pub fn area(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Shape::Disk { radius, .. } => PI * radius * radius,
            Shape::Ellipse { a, b, .. } => PI * a * b,
            Shape::Rectangle { width, height, .. } => width * height,
            Shape::LShape { size, .. } => 0.75 * size * size,
        }
    }

    fn validate(&self) -> Result<()> {
        let sizes: &[f64] = match self {
            Shape::Disk { radius, .. } => &[*radius],
            Shape::Ellipse { a, b, .. } => &[*a, *b],
            Shape::Rectangle { width, height, .. } => &[*width, *height],
            Shape::LShape { size, .. } => &[*size],
        };
        if sizes.iter().all(|s| *s > 0.0 && s.is_finite()) {
            Ok(())
        } else {
            Err(PpwError::Range(format!("shape dimensions must be positive: {self}")))
        }
    }

    /// Level set: negative inside, positive outside.
    pub fn level(&self, x: f64, y: f64) -> f64 {
        let (cx, cy) = self.center();
        let (dx, dy) = (x - cx, y - cy);
        match *self {
            Shape::Disk { radius, .. } => dx.hypot(dy) - radius,
            Shape::Ellipse { a, b, .. } => (dx / a).hypot(dy / b) - 1.0,
            Shape::Rectangle { width, height, .. } => {
                (dx.abs() - 0.5 * width).max(dy.abs() - 0.5 * height)
            }
            Shape::LShape { size, .. } => {
                let square = (dx.abs() - 0.5 * size).max(dy.abs() - 0.5 * size);
                square.max(dx.min(dy))
            }
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (cx, cy) = self.center();
        let centre = if cx == 0.0 && cy == 0.0 { String::new() } else { format!(",cx={cx},cy={cy}") };
        match *self {
            Shape::Disk { radius, .. } => write!(f, "disk:r={radius}{centre}"),
            Shape::Ellipse { a, b, .. } => write!(f, "ellipse:a={a},b={b}{centre}"),
            Shape::Rectangle { width, height, .. } => write!(f, "rect:w={width},h={height}{centre}"),
            Shape::LShape { size, .. } => write!(f, "lshape:s={size}{centre}"),
        }
    }
}

impl FromStr for Shape {
    type Err = PpwError;

    /// `disk:r=1`, `ellipse:a=1,b=0.6`, `rect:w=2,h=1`, `square:s=1`,
    /// `lshape:s=1`; each optionally followed by `,cx=..,cy=..`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = std::collections::BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| PpwError::Parse(format!("expected key=value in `{part}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| PpwError::Parse(format!("bad number `{value}` in shape `{s}`")))?;
            params.insert(key.trim().to_string(), value);
        }
        let get = |key: &str| {
            params
                .get(key)
                .copied()
                .ok_or_else(|| PpwError::Parse(format!("shape `{s}` is missing `{key}`")))
        };
        let cx = params.get("cx").copied().unwrap_or(0.0);
        let cy = params.get("cy").copied().unwrap_or(0.0);
        let shape = match kind.trim() {
            "disk" => Shape::disk(get("r")?),
            "ellipse" => Shape::ellipse(get("a")?, get("b")?),
            "rect" => Shape::rectangle(get("w")?, get("h")?),
            "square" => Shape::square(get("s")?),
            "lshape" => Shape::l_shape(get("s")?),
            other => return Err(PpwError::Parse(format!("unknown shape `{other}`"))),
        }
        .centered_at(cx, cy);
        shape.validate()?;
        Ok(shape)
    }
}

/// A masked uniform grid of square cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainGrid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    /// Lower left corner of cell `(0, 0)`.
    pub x0: f64,
    pub y0: f64,
    /// Point from which the potential's radius is measured.
    pub origin: (f64, f64),
    /// Row-major, `mask[j·nx + i]`, `true` for interior cells.
    pub mask: Vec<bool>,
    pub shape: Option<Shape>,
    /// Boundary fractions `θ` per cell in the order W, E, S, N; `None` means
    /// every Dirichlet face sits halfway between centres.
    fractions: Option<Vec<[f64; 4]>>,
}

impl DomainGrid {
    /// Grid from an explicit mask, with cell `(i, j)` centred at
    /// `((i+½)h, (j+½)h)`.
    pub fn new(nx: usize, ny: usize, h: f64, origin: (f64, f64), mask: Vec<bool>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(PpwError::Range("grid must have at least one cell".into()));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(PpwError::Range(format!("cell size must be positive, got {h}")));
        }
        if mask.len() != nx * ny {
            return Err(PpwError::Contract(format!(
                "mask has {} cells, expected {nx}×{ny}",
                mask.len()
            )));
        }
        if !mask.iter().any(|&m| m) {
            return Err(PpwError::Contract("mask has no interior cells".into()));
        }
        Ok(DomainGrid { nx, ny, h, x0: 0.0, y0: 0.0, origin, mask, shape: None, fractions: None })
    }

    /// Rasterizes `shape` with spacing `h` on a box centred on the shape
    /// with one exterior layer of padding. The potential origin is the
    /// shape's centre.
    pub fn from_shape(shape: Shape, h: f64) -> Result<Self> {
        shape.validate()?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(PpwError::Range(format!("cell size must be positive, got {h}")));
        }
        let (ex, ey) = shape.half_extent();
        let (cx, cy) = shape.center();
        let hx = (ex / h - 1e-9).ceil() as usize + 1;
        let hy = (ey / h - 1e-9).ceil() as usize + 1;
        Self::from_shape_in_box(
            shape,
            cx - hx as f64 * h,
            cy - hy as f64 * h,
            2 * hx,
            2 * hy,
            h,
            (cx, cy),
        )
    }

    pub fn from_shape_in_box(
        shape: Shape,
        x0: f64,
        y0: f64,
        nx: usize,
        ny: usize,
        h: f64,
        origin: (f64, f64),
    ) -> Result<Self> {
        shape.validate()?;
        let mut mask = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let (x, y) = (x0 + (i as f64 + 0.5) * h, y0 + (j as f64 + 0.5) * h);
                mask[j * nx + i] = shape.level(x, y) < 0.0;
            }
        }
        if !mask.iter().any(|&m| m) {
            return Err(PpwError::Contract(format!("shape {shape} contains no cell centres at h = {h}")));
        }
        let mut grid =
            DomainGrid { nx, ny, h, x0, y0, origin, mask, shape: Some(shape), fractions: None };
        grid.fractions = Some(grid.level_set_fractions(&shape)?);
        Ok(grid)
    }

    fn level_set_fractions(&self, shape: &Shape) -> Result<Vec<[f64; 4]>> {
        let mut out = vec![[0.5; 4]; self.nx * self.ny];
        for j in 0..self.ny {
            for i in 0..self.nx {
                let idx = j * self.nx + i;
                if !self.mask[idx] {
                    continue;
                }
                let (x, y) = self.cell_center(i, j);
                for (dir, (dx, dy)) in [(-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0)]
                    .into_iter()
                    .enumerate()
                {
                    if self.neighbor(i, j, dir).is_some_and(|n| self.mask[n]) {
                        continue;
                    }
                    let f = |t: f64| Ok(shape.level(x + t * dx * self.h, y + t * dy * self.h));
                    let end = f(1.0)?;
                    let theta = if end <= 0.0 { 1.0 } else { brent(f, 0.0, 1.0, 1e-14, 200)? };
                    out[idx][dir] = theta.max(MIN_FRACTION);
                }
            }
        }
        Ok(out)
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x0 + (i as f64 + 0.5) * self.h, self.y0 + (j as f64 + 0.5) * self.h)
    }

    /// Distance of a cell centre from the potential origin.
    pub fn radius_at(&self, i: usize, j: usize) -> f64 {
        let (x, y) = self.cell_center(i, j);
        (x - self.origin.0).hypot(y - self.origin.1)
    }

    fn neighbor(&self, i: usize, j: usize, dir: usize) -> Option<usize> {
        match dir {
            W if i > 0 => Some(j * self.nx + i - 1),
            E if i + 1 < self.nx => Some(j * self.nx + i + 1),
            S if j > 0 => Some((j - 1) * self.nx + i),
            N if j + 1 < self.ny => Some((j + 1) * self.nx + i),
            _ => None,
        }
    }

    /// Boundary fraction of the face of cell `idx` in direction `dir`.
    pub fn face_fraction(&self, idx: usize, dir: usize) -> f64 {
        self.fractions.as_ref().map_or(0.5, |f| f[idx][dir])
    }

    pub fn interior_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Measure of the union of interior cells.
    pub fn area(&self) -> f64 {
        self.interior_count() as f64 * self.h * self.h
    }

    /// Row-major indices of the interior cells.
    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.nx * self.ny).filter(|&k| self.mask[k]).collect()
    }

    pub fn with_origin(mut self, x: f64, y: f64) -> Self {
        self.origin = (x, y);
        self
    }

    /// Number of 4-connected components of the interior.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.mask.len()];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.mask.len() {
            if !self.mask[start] || seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(k) = queue.pop_front() {
                let (i, j) = (k % self.nx, k / self.nx);
                for dir in 0..4 {
                    if let Some(nb) = self.neighbor(i, j, dir) {
                        if self.mask[nb] && !seen[nb] {
                            seen[nb] = true;
                            queue.push_back(nb);
                        }
                    }
                }
            }
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// The same domain at half the spacing on the same box: shapes are
    /// rasterized again, masks split every cell into four.
    pub fn refine(&self) -> Result<Self> {
        let h = 0.5 * self.h;
        let (nx, ny) = (2 * self.nx, 2 * self.ny);
        if let Some(shape) = self.shape {
            return Self::from_shape_in_box(shape, self.x0, self.y0, nx, ny, h, self.origin);
        }
        if self.fractions.is_some() {
            return Err(PpwError::Contract(
                "grid carries boundary fractions without a shape and cannot be refined".into(),
            ));
        }
        let mut mask = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                mask[j * nx + i] = self.mask[(j / 2) * self.nx + i / 2];
            }
        }
        Ok(DomainGrid { nx, ny, h, x0: self.x0, y0: self.y0, origin: self.origin, mask, shape: None, fractions: None })
    }

    /// Whether `fine` is this domain at half the spacing on the same box.
    pub fn is_refinement(&self, fine: &DomainGrid) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        if fine.nx != 2 * self.nx
            || fine.ny != 2 * self.ny
            || !close(fine.h * 2.0, self.h)
            || !close(fine.x0, self.x0)
            || !close(fine.y0, self.y0)
            || !close(fine.origin.0, self.origin.0)
            || !close(fine.origin.1, self.origin.1)
            || fine.shape != self.shape
        {
            return false;
        }
        if self.shape.is_some() {
            return true;
        }
        (0..fine.ny).all(|j| {
            (0..fine.nx).all(|i| fine.mask[j * fine.nx + i] == self.mask[(j / 2) * self.nx + i / 2])
        })
    }

    /// Rotation by a quarter turn counterclockwise about the box; the
    /// result keeps the boundary fractions but not the shape.
    pub fn rotate90(&self) -> Self {
        let (nx, ny) = (self.ny, self.nx);
        let mut mask = vec![false; nx * ny];
        let mut fractions = self.fractions.as_ref().map(|_| vec![[0.5; 4]; nx * ny]);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (ni, nj) = (self.ny - 1 - j, i);
                let old = j * self.nx + i;
                let new = nj * nx + ni;
                mask[new] = self.mask[old];
                if let (Some(dst), Some(src)) = (fractions.as_mut(), self.fractions.as_ref()) {
                    let f = src[old];
                    dst[new] = [f[N], f[S], f[W], f[E]];
                }
            }
        }
        // (x, y) ↦ (x0' + (y_top − y), x0' ...) about the box corner.
        let height = self.ny as f64 * self.h;
        let (ox, oy) = self.origin;
        let origin = (height - (oy - self.y0), ox - self.x0);
        DomainGrid { nx, ny, h: self.h, x0: 0.0, y0: 0.0, origin, mask, shape: None, fractions }
    }

    /// Parses the plain-text mask format: a header `nx ny h cx cy` followed
    /// by `ny` rows of `nx` characters `0`/`1`, the first row being `j = 0`.
    pub fn parse_mask(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| PpwError::Parse("empty mask file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(PpwError::Parse(format!(
                "mask header must be `nx ny h cx cy`, got `{header}`"
            )));
        }
        let int = |s: &str| {
            s.parse::<usize>().map_err(|_| PpwError::Parse(format!("bad integer `{s}` in mask header")))
        };
        let real = |s: &str| {
            s.parse::<f64>().map_err(|_| PpwError::Parse(format!("bad number `{s}` in mask header")))
        };
        let (nx, ny) = (int(fields[0])?, int(fields[1])?);
        let (h, cx, cy) = (real(fields[2])?, real(fields[3])?, real(fields[4])?);
        let mut mask = Vec::with_capacity(nx * ny);
        let mut rows = 0;
        for (line_no, line) in lines.enumerate() {
            let row = line.trim_end_matches('\r');
            if row.is_empty() && rows == ny {
                continue;
            }
            if rows == ny {
                return Err(PpwError::Parse(format!("mask has more than {ny} rows")));
            }
            if row.len() != nx {
                return Err(PpwError::Parse(format!(
                    "mask row {} has {} characters, expected {nx}",
                    line_no + 1,
                    row.len()
                )));
            }
            for c in row.chars() {
                mask.push(match c {
                    '1' => true,
                    '0' => false,
                    other => {
                        return Err(PpwError::Parse(format!("unexpected character `{other}` in mask")))
                    }
                });
            }
            rows += 1;
        }
        if rows != ny {
            return Err(PpwError::Parse(format!("mask has {rows} rows, expected {ny}")));
        }
        DomainGrid::new(nx, ny, h, (cx, cy), mask)
    }

    pub fn read_mask(path: &Path) -> Result<Self> {
        Self::parse_mask(&std::fs::read_to_string(path)?)
    }

    /// The mask file contents; coordinates print in shortest round-trip form.
    pub fn to_mask_string(&self) -> String {
        let mut s = format!("{} {} {} {} {}\n", self.nx, self.ny, self.h, self.origin.0 - self.x0, self.origin.1 - self.y0);
        for j in 0..self.ny {
            for i in 0..self.nx {
                s.push(if self.mask[j * self.nx + i] { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn write_mask(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_mask_string())?;
        Ok(())
    }
}

/// Potential on a grid: a radial profile about the grid origin, or explicit
/// per-cell values (row-major over the whole box).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DomainPotential {
    Radial(RadialPotential),
    Cells(Vec<f64>),
}

impl DomainPotential {
    /// Values at every cell of the box (exterior cells included).
    pub fn sample(&self, grid: &DomainGrid) -> Result<Vec<f64>> {
        match self {
            DomainPotential::Radial(v) => {
                let mut out = vec![0.0; grid.nx * grid.ny];
                for j in 0..grid.ny {
                    for i in 0..grid.nx {
                        let k = j * grid.nx + i;
                        if grid.mask[k] {
                            out[k] = v.eval(grid.radius_at(i, j))?.0;
                        }
                    }
                }
                Ok(out)
            }
            DomainPotential::Cells(values) => {
                if values.len() != grid.nx * grid.ny {
                    return Err(PpwError::Contract(format!(
                        "per-cell potential has {} values, grid has {} cells",
                        values.len(),
                        grid.nx * grid.ny
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(PpwError::Range("per-cell potential must be finite".into()));
                }
                Ok(values.clone())
            }
        }
    }

    /// The potential on `grid.refine()`.
    pub fn refine(&self, grid: &DomainGrid) -> Self {
        match self {
            DomainPotential::Radial(v) => DomainPotential::Radial(v.clone()),
            DomainPotential::Cells(values) => {
                let nx = 2 * grid.nx;
                let ny = 2 * grid.ny;
                let mut out = vec![0.0; nx * ny];
                for j in 0..ny {
                    for i in 0..nx {
                        out[j * nx + i] = values[(j / 2) * grid.nx + i / 2];
                    }
                }
                DomainPotential::Cells(out)
            }
        }
    }
}

impl From<RadialPotential> for DomainPotential {
    fn from(v: RadialPotential) -> Self {
        DomainPotential::Radial(v)
    }
}

/// The discrete operator restricted to interior cells.
struct Operator {
    /// Grid index of each unknown.
    cells: Vec<usize>,
    diag: Vec<f64>,
    /// Neighbouring unknowns W, E, S, N, or `NONE`.
    nb: Vec<[u32; 4]>,
    /// Magnitude of the off-diagonal coupling, `1/h²`.
    off: f64,
}

impl Operator {
    fn assemble(grid: &DomainGrid, potential: &[f64]) -> Self {
        let cells = grid.interior_indices();
        let mut number = vec![NONE; grid.nx * grid.ny];
        for (k, &c) in cells.iter().enumerate() {
            number[c] = k as u32;
        }
        let off = 1.0 / (grid.h * grid.h);
        let mut diag = Vec::with_capacity(cells.len());
        let mut nb = Vec::with_capacity(cells.len());
        for &c in &cells {
            let (i, j) = (c % grid.nx, c / grid.nx);
            let mut d = potential[c];
            let mut links = [NONE; 4];
            for (dir, link) in links.iter_mut().enumerate() {
                match grid.neighbor(i, j, dir) {
                    Some(n) if grid.mask[n] => {
                        *link = number[n];
                        d += off;
                    }
                    _ => d += off / grid.face_fraction(c, dir),
                }
            }
            diag.push(d);
            nb.push(links);
        }
        Operator { cells, diag, nb, off }
    }

    fn len(&self) -> usize {
        self.cells.len()
    }

    /// `y = (A − σ) x`
    fn apply(&self, sigma: f64, x: &[f64], y: &mut [f64]) {
        for k in 0..self.len() {
            let mut s = 0.0;
            for &l in &self.nb[k] {
                if l != NONE {
                    s += x[l as usize];
                }
            }
            y[k] = (self.diag[k] - sigma) * x[k] - self.off * s;
        }
    }
}

/// Modified incomplete Cholesky factor of `A − σ` for the 5-point pattern.
struct Mic {
    inv_sqrt: Vec<f64>,
}

impl Mic {
    const TAU: f64 = 0.97;
    const SAFETY: f64 = 0.25;

    fn new(op: &Operator, sigma: f64) -> Self {
        let n = op.len();
        let c = op.off;
        let mut p = vec![0.0; n];
        for k in 0..n {
            let d = op.diag[k] - sigma;
            let mut e = d;
            let [w, _, s, _] = op.nb[k];
            if w != NONE {
                let pw = p[w as usize];
                e -= (c * pw).powi(2);
                if op.nb[w as usize][N] != NONE {
                    e -= Self::TAU * c * c * pw * pw;
                }
            }
            if s != NONE {
                let ps = p[s as usize];
                e -= (c * ps).powi(2);
                if op.nb[s as usize][E] != NONE {
                    e -= Self::TAU * c * c * ps * ps;
                }
            }
            if e < Self::SAFETY * d {
                e = d;
            }
            p[k] = 1.0 / e.sqrt();
        }
        Mic { inv_sqrt: p }
    }

    fn solve(&self, op: &Operator, r: &[f64], z: &mut [f64]) {
        let n = op.len();
        let p = &self.inv_sqrt;
        let c = op.off;
        for k in 0..n {
            let [w, _, s, _] = op.nb[k];
            let mut t = r[k];
            if w != NONE {
                t += c * p[w as usize] * z[w as usize];
            }
            if s != NONE {
                t += c * p[s as usize] * z[s as usize];
            }
            z[k] = t * p[k];
        }
        for k in (0..n).rev() {
            let [_, e, _, nn] = op.nb[k];
            let mut t = z[k];
            if e != NONE {
                t += c * p[k] * z[e as usize];
            }
            if nn != NONE {
                t += c * p[k] * z[nn as usize];
            }
            z[k] = t * p[k];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Preconditioned conjugate gradients on `(A − σ) x = b`, starting from `x`.
fn pcg(op: &Operator, mic: &Mic, sigma: f64, b: &[f64], x: &mut [f64], rtol: f64) -> Result<usize> {
    let n = op.len();
    let target = rtol * norm(b);
    let mut r = vec![0.0; n];
    op.apply(sigma, x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    if norm(&r) <= target {
        return Ok(0);
    }
    let mut z = vec![0.0; n];
    mic.solve(op, &r, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=MAX_INNER {
        op.apply(sigma, &p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(PpwError::Numeric(format!(
                "shifted operator lost positive definiteness (shift {sigma})"
            )));
        }
        let alpha = rz / pq;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * q[k];
        }
        if norm(&r) <= target {
            return Ok(it);
        }
        mic.solve(op, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(PpwError::Numeric(format!(
        "inner conjugate gradient stalled after {MAX_INNER} iterations (residual {:e})",
        norm(&r) / norm(b).max(f64::MIN_POSITIVE)
    )))
}

/// Modified Gram–Schmidt, applied twice. Vectors that collapse are replaced
/// by fresh random directions.
fn orthonormalize(x: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    for i in 0..x.len() {
        for _pass in 0..2 {
            for j in 0..i {
                let (head, tail) = x.split_at_mut(i);
                let c = dot(&head[j], &tail[0]);
                for (v, u) in tail[0].iter_mut().zip(&head[j]) {
                    *v -= c * u;
                }
            }
        }
        let nrm = norm(&x[i]);
        if nrm < 1e-10 {
            for v in x[i].iter_mut() {
                *v = rng.random::<f64>() - 0.5;
            }
            for j in 0..i {
                let (head, tail) = x.split_at_mut(i);
                let c = dot(&head[j], &tail[0]);
                for (v, u) in tail[0].iter_mut().zip(&head[j]) {
                    *v -= c * u;
                }
            }
        }
        let nrm = norm(&x[i]);
        for v in x[i].iter_mut() {
            *v /= nrm;
        }
    }
}

/// Lowest Dirichlet eigenpairs on a grid.
#[derive(Debug, Clone)]
pub struct DomainSpectrum {
    pub lambdas: Vec<f64>,
    /// `‖Au − λu‖ / λ` for each returned pair.
    pub residuals: Vec<f64>,
    /// Eigenfunctions on the whole box (zero outside), normalized so that
    /// `Σ u² h² = 1`; the first is positive.
    pub vectors: Vec<Vec<f64>>,
    pub grid: DomainGrid,
    pub potential: DomainPotential,
    pub disconnected: bool,
    /// The second and third eigenvalues agree to 1e−6 relative.
    pub near_double: bool,
    pub estimated_discretization_error: Option<f64>,
    pub outer_iterations: usize,
    /// All Ritz pairs of the final block, in unknown ordering.
    ritz_values: Vec<f64>,
    ritz_vectors: Vec<Vec<f64>>,
}

impl DomainSpectrum {
    pub fn lambda1(&self) -> f64 {
        self.lambdas[0]
    }

    pub fn lambda2(&self) -> f64 {
        self.lambdas[1]
    }

    pub fn u1(&self) -> &[f64] {
        &self.vectors[0]
    }

    pub fn u2(&self) -> &[f64] {
        &self.vectors[1]
    }

    /// Third Ritz value of the final block, useful to inspect clustering.
    pub fn ritz_values(&self) -> &[f64] {
        &self.ritz_values
    }
}

pub const DEFAULT_TOL: f64 = 1e-10;

pub fn solve_domain(
    grid: &DomainGrid,
    potential: &DomainPotential,
    k: usize,
    tol: f64,
) -> Result<DomainSpectrum> {
    solve_domain_from(grid, potential, k, tol, None)
}

/// As [`solve_domain`], starting the iteration from the eigenvectors of a
/// coarser solve when `coarse.grid` is refined by `grid`.
pub fn solve_domain_from(
    grid: &DomainGrid,
    potential: &DomainPotential,
    k: usize,
    tol: f64,
    coarse: Option<&DomainSpectrum>,
) -> Result<DomainSpectrum> {
    if k == 0 || k > MAX_K {
        return Err(PpwError::Range(format!("number of eigenpairs must be in 1..={MAX_K}, got {k}")));
    }
    if !(tol > 0.0 && tol < 1e-2) {
        return Err(PpwError::Range(format!("tolerance must be in (0, 1e-2), got {tol}")));
    }
    let values = potential.sample(grid)?;
    let op = Operator::assemble(grid, &values);
    let n = op.len();
    if n < k + 1 {
        return Err(PpwError::Contract(format!("{n} interior cells cannot carry {k} eigenpairs")));
    }
    let p = (k + EXTRA_VECTORS).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_d0a1);

    let mut x: Vec<Vec<f64>> = match coarse {
        Some(c) if c.grid.is_refinement(grid) => prolong(c, grid, &op),
        _ => Vec::new(),
    };
    x.truncate(p);
    let lx = grid.nx as f64 * grid.h;
    let ly = grid.ny as f64 * grid.h;
    let modes = [(1, 1), (2, 1), (1, 2), (2, 2), (3, 1), (1, 3), (3, 2), (2, 3)];
    for &(a, b) in modes.iter().skip(x.len()).take(p - x.len()) {
        let v: Vec<f64> = op
            .cells
            .iter()
            .map(|&c| {
                let (cx, cy) = grid.cell_center(c % grid.nx, c / grid.nx);
                let sx = (std::f64::consts::PI * a as f64 * (cx - grid.x0) / lx).sin();
                let sy = (std::f64::consts::PI * b as f64 * (cy - grid.y0) / ly).sin();
                sx * sy + 1e-3 * (rng.random::<f64>() - 0.5)
            })
            .collect();
        x.push(v);
    }
    orthonormalize(&mut x, &mut rng);

    let v_min = op.cells.iter().map(|&c| values[c]).fold(f64::INFINITY, f64::min);
    let mut sigma = v_min.min(0.0);
    let mut mic = Mic::new(&op, sigma);
    let mut shifted = false;
    let res_tol = (tol.sqrt() * 1e-2).max(1e-12);

    let mut ax = vec![vec![0.0; n]; p];
    let mut theta = vec![0.0; p];
    let mut res = vec![f64::INFINITY; p];
    let mut outer = 0;
    loop {
        // Rayleigh–Ritz on the current block.
        ax.par_iter_mut().zip(x.par_iter()).for_each(|(y, v)| op.apply(0.0, v, y));
        let g = DMatrix::from_fn(p, p, |i, j| dot(&x[i], &ax[j]));
        let g = 0.5 * (&g + g.transpose());
        let eig = SymmetricEigen::new(g);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let rotate = |vs: &[Vec<f64>]| -> Vec<Vec<f64>> {
            order
                .iter()
                .map(|&col| {
                    let mut out = vec![0.0; n];
                    for (r, v) in vs.iter().enumerate() {
                        let c = eig.eigenvectors[(r, col)];
                        for (o, vi) in out.iter_mut().zip(v) {
                            *o += c * vi;
                        }
                    }
                    out
                })
                .collect()
        };
        x = rotate(&x);
        ax = rotate(&ax);
        for i in 0..p {
            theta[i] = eig.eigenvalues[order[i]];
            let r: f64 = ax[i]
                .iter()
                .zip(&x[i])
                .map(|(a, v)| (a - theta[i] * v).powi(2))
                .sum::<f64>()
                .sqrt();
            res[i] = r / theta[i].abs().max(f64::MIN_POSITIVE);
        }
        let worst = res[..k].iter().fold(0.0f64, |a, &b| a.max(b));
        if worst <= res_tol {
            break;
        }
        outer += 1;
        if outer > MAX_OUTER {
            return Err(PpwError::Numeric(format!(
                "subspace iteration did not converge in {MAX_OUTER} steps (residual {worst:e})"
            )));
        }

        if !shifted && res[0] < 1e-2 && p > 1 {
            let gap = theta[1] - theta[0];
            let r0 = res[0] * theta[0];
            if gap > r0 {
                let candidate = theta[0] - (0.1 * gap).max(10.0 * r0);
                if candidate > sigma {
                    sigma = candidate;
                    mic = Mic::new(&op, sigma);
                }
                shifted = true;
            }
        }

        // Shift-invert step; converged leading vectors are locked.
        let locked = res.iter().take(k).take_while(|&&r| r <= res_tol).count();
        let inner_tol = (1e-3 * worst).clamp(1e-14, 1e-4);
        let results: Vec<Result<Vec<f64>>> = x
            .par_iter()
            .zip(theta.par_iter())
            .enumerate()
            .map(|(i, (v, &t))| {
                if i < locked {
                    return Ok(v.clone());
                }
                let mut y: Vec<f64> = v.iter().map(|a| a / (t - sigma)).collect();
                pcg(&op, &mic, sigma, v, &mut y, inner_tol)?;
                Ok(y)
            })
            .collect();
        x = results.into_iter().collect::<Result<Vec<_>>>()?;
        orthonormalize(&mut x, &mut rng);
    }

    let h2 = grid.h * grid.h;
    let mut vectors = Vec::with_capacity(k);
    for (i, v) in x.iter().take(k).enumerate() {
        let scale = 1.0 / (norm(v) * grid.h);
        let sum: f64 = v.iter().sum();
        let sign = if i == 0 && sum < 0.0 { -1.0 } else { 1.0 };
        let mut full = vec![0.0; grid.nx * grid.ny];
        for (&c, &vi) in op.cells.iter().zip(v) {
            full[c] = sign * scale * vi;
        }
        debug_assert!((full.iter().map(|u| u * u).sum::<f64>() * h2 - 1.0).abs() < 1e-10);
        vectors.push(full);
    }
    let near_double = p > 2 && (theta[2] - theta[1]).abs() <= 1e-6 * theta[1].abs();
    Ok(DomainSpectrum {
        lambdas: theta[..k].to_vec(),
        residuals: res[..k].to_vec(),
        vectors,
        grid: grid.clone(),
        potential: potential.clone(),
        disconnected: !grid.is_connected(),
        near_double,
        estimated_discretization_error: None,
        outer_iterations: outer,
        ritz_values: theta.clone(),
        ritz_vectors: x,
    })
}

/// Coarse Ritz vectors injected into the fine grid cell by cell.
fn prolong(coarse: &DomainSpectrum, fine: &DomainGrid, op: &Operator) -> Vec<Vec<f64>> {
    let cg = &coarse.grid;
    let cells = cg.interior_indices();
    let mut full = vec![0.0; cg.nx * cg.ny];
    coarse
        .ritz_vectors
        .iter()
        .map(|v| {
            for (&c, &vi) in cells.iter().zip(v) {
                full[c] = vi;
            }
            op.cells
                .iter()
                .map(|&f| {
                    let (i, j) = (f % fine.nx, f / fine.nx);
                    full[(j / 2) * cg.nx + i / 2]
                })
                .collect()
        })
        .collect()
}

/// Richardson-extrapolated eigenvalues from a grid and its refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub lambdas: Vec<f64>,
    /// `|λ_{h/2} − λ_h| / 3`
    pub errors: Vec<f64>,
}

impl Extrapolation {
    pub fn lambda1(&self) -> f64 {
        self.lambdas[0]
    }

    pub fn lambda2(&self) -> f64 {
        self.lambdas[1]
    }
}

pub fn richardson(coarse: &DomainSpectrum, fine: &DomainSpectrum) -> Result<Extrapolation> {
    if coarse.potential != fine.potential && !matches!(coarse.potential, DomainPotential::Cells(_)) {
        return Err(PpwError::Contract("spectra were computed with different potentials".into()));
    }
    let m = coarse.lambdas.len().min(fine.lambdas.len());
    if coarse.grid == fine.grid {
        return Ok(Extrapolation { lambdas: fine.lambdas[..m].to_vec(), errors: vec![0.0; m] });
    }
    if !coarse.grid.is_refinement(&fine.grid) {
        return Err(PpwError::Contract(
            "extrapolation needs the same domain at spacings h and h/2".into(),
        ));
    }
    let lambdas = (0..m).map(|i| (4.0 * fine.lambdas[i] - coarse.lambdas[i]) / 3.0).collect();
    let errors = (0..m).map(|i| (fine.lambdas[i] - coarse.lambdas[i]).abs() / 3.0).collect();
    Ok(Extrapolation { lambdas, errors })
}

/// Solves on `grid` and on its refinement, returning both spectra and the
/// extrapolated eigenvalues. The fine spectrum carries the error estimate
/// of its second eigenvalue (first when `k = 1`).
pub fn solve_extrapolated(
    grid: &DomainGrid,
    potential: &DomainPotential,
    k: usize,
    tol: f64,
) -> Result<(DomainSpectrum, DomainSpectrum, Extrapolation)> {
    let coarse = solve_domain(grid, potential, k, tol)?;
    let fine_grid = grid.refine()?;
    let fine_potential = potential.refine(grid);
    let mut fine = solve_domain_from(&fine_grid, &fine_potential, k, tol, Some(&coarse))?;
    let ex = richardson(&coarse, &fine)?;
    fine.estimated_discretization_error = Some(ex.errors.iter().fold(0.0, |a: f64, &b| a.max(b)));
    Ok((coarse, fine, ex))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{solve_sector, BallProblem};
    use std::f64::consts::PI;

    fn zero() -> DomainPotential {
        DomainPotential::Radial(RadialPotential::Zero)
    }

    fn full_square(cells: usize) -> DomainGrid {
        let h = 1.0 / cells as f64;
        DomainGrid::new(cells, cells, h, (0.5, 0.5), vec![true; cells * cells]).unwrap()
    }

    #[test]
    fn square_matches_closed_form() {
        let s = solve_domain(&full_square(64), &zero(), 3, 1e-10).unwrap();
        let h2 = (1.0f64 / 64.0).powi(2);
        assert!((s.lambda1() - 2.0 * PI * PI).abs() < 3.0 * h2 * 2.0 * PI * PI);
        assert!((s.lambda2() - 5.0 * PI * PI).abs() < 3.0 * h2 * 5.0 * PI * PI);
        assert!(s.near_double, "second and third eigenvalues of the square coincide");
        assert!(s.u1().iter().zip(&s.grid.mask).all(|(u, &m)| !m || *u > 0.0));
    }

    #[test]
    fn discrete_square_spectrum_is_separable() {
        // The 1-D operator with θ = ½ Dirichlet faces has eigenvalues
        // (4/h²) sin²(kπh/2) on a unit interval of m cells.
        let m = 32;
        let h = 1.0 / m as f64;
        let mu = |k: f64| 4.0 / (h * h) * (k * PI * h / 2.0).sin().powi(2);
        let s = solve_domain(&full_square(m), &zero(), 2, 1e-12).unwrap();
        assert!((s.lambda1() - 2.0 * mu(1.0)).abs() < 1e-9 * s.lambda1());
        assert!((s.lambda2() - (mu(1.0) + mu(2.0))).abs() < 1e-9 * s.lambda2());
    }

    #[test]
    fn disk_matches_radial_solver() {
        let h = 1.0 / 64.0;
        let grid = DomainGrid::from_shape(Shape::disk(1.0), h).unwrap();
        for v in [RadialPotential::Zero, RadialPotential::harmonic()] {
            let s = solve_domain(&grid, &DomainPotential::Radial(v.clone()), 2, 1e-10).unwrap();
            let ball = BallProblem::new(2, 1.0, 0, v.clone()).unwrap();
            let l1 = solve_sector(&ball, 1, 1e-10).unwrap().lambda;
            let l2 = solve_sector(&ball.with_sector(1), 1, 1e-10).unwrap().lambda;
            assert!((s.lambda1() - l1).abs() <= 3.0 * h * h * l1, "{} vs {l1}", s.lambda1());
            assert!((s.lambda2() - l2).abs() <= 3.0 * h * h * l2, "{} vs {l2}", s.lambda2());
        }
    }

    #[test]
    fn extrapolated_disk_is_close_to_bessel_value() {
        let grid = DomainGrid::from_shape(Shape::disk(1.0), 1.0 / 32.0).unwrap();
        let (_, fine, ex) = solve_extrapolated(&grid, &zero(), 1, 1e-10).unwrap();
        let j2 = 2.404_825_557_695_773f64.powi(2);
        assert!((ex.lambda1() - j2).abs() < 1e-3 * j2);
        assert!(fine.estimated_discretization_error.is_some());
    }

    #[test]
    fn richardson_of_identical_inputs_is_the_common_value() {
        let s = solve_domain(&full_square(16), &zero(), 2, 1e-10).unwrap();
        let ex = richardson(&s, &s).unwrap();
        assert_eq!(ex.lambdas, s.lambdas);
        assert_eq!(ex.errors, vec![0.0, 0.0]);
    }

    #[test]
    fn richardson_rejects_mismatched_geometry() {
        let a = solve_domain(&full_square(16), &zero(), 1, 1e-10).unwrap();
        let b = solve_domain(&full_square(24), &zero(), 1, 1e-10).unwrap();
        assert!(matches!(richardson(&a, &b), Err(PpwError::Contract(_))));
    }

    #[test]
    fn rotation_leaves_spectrum_unchanged() {
        let grid = DomainGrid::from_shape(Shape::l_shape(1.0), 1.0 / 24.0).unwrap();
        let pot = DomainPotential::Radial(RadialPotential::harmonic());
        let a = solve_domain(&grid, &pot, 2, 1e-12).unwrap();
        let b = solve_domain(&grid.rotate90(), &pot, 2, 1e-12).unwrap();
        for i in 0..2 {
            assert!((a.lambdas[i] - b.lambdas[i]).abs() <= 1e-12 * a.lambdas[i]);
        }
    }

    #[test]
    fn adding_cells_never_raises_ground_state() {
        let m = 24;
        let h = 1.0 / m as f64;
        let mut small = vec![false; m * m];
        for j in 2..m - 2 {
            for i in 2..m - 2 {
                small[j * m + i] = true;
            }
        }
        let a = solve_domain(&DomainGrid::new(m, m, h, (0.5, 0.5), small).unwrap(), &zero(), 1, 1e-10)
            .unwrap();
        let b = solve_domain(&full_square(m), &zero(), 1, 1e-10).unwrap();
        assert!(b.lambda1() <= a.lambda1());
    }

    #[test]
    fn disconnected_masks_are_flagged() {
        let text = "6 3 0.25 0.75 0.375\n110011\n110011\n110011\n";
        let grid = DomainGrid::parse_mask(text).unwrap();
        assert_eq!(grid.component_count(), 2);
        let s = solve_domain(&grid, &zero(), 2, 1e-10).unwrap();
        assert!(s.disconnected);
        // Two congruent pieces: the lowest eigenvalue is double.
        assert!((s.lambda1() - s.lambda2()).abs() < 1e-8 * s.lambda1());
    }

    #[test]
    fn mask_round_trip_is_exact() {
        let text = "4 3 0.1 0.2 0.15000000000000002\n0110\n1111\n0100\n";
        let grid = DomainGrid::parse_mask(text).unwrap();
        assert_eq!(grid.to_mask_string(), text);
        assert!(grid.mask[1] && !grid.mask[0]);
        assert_eq!(grid.cell_center(1, 2), (0.15000000000000002, 0.25));
    }

    #[test]
    fn malformed_masks_are_rejected() {
        for text in ["", "2 2 0.5 0 0\n11\n", "2 2 0.5 0 0\n11\n1x\n", "2 1 0.5 0\n11\n", "2 1 0.5 0 0\n00\n"] {
            assert!(DomainGrid::parse_mask(text).is_err(), "{text:?}");
        }
    }

    #[test]
    fn refinement_doubles_the_box() {
        let g = DomainGrid::from_shape(Shape::ellipse(1.0, 0.6), 0.1).unwrap();
        let f = g.refine().unwrap();
        assert!(g.is_refinement(&f));
        assert_eq!((f.nx, f.ny), (2 * g.nx, 2 * g.ny));
        let area = Shape::ellipse(1.0, 0.6).area();
        assert!((f.area() - area).abs() < (g.area() - area).abs() + 0.05);
    }

    #[test]
    fn shape_strings_round_trip() {
        for s in ["disk:r=1", "ellipse:a=1,b=0.6", "rect:w=2,h=1", "lshape:s=1,cx=0.5,cy=-1"] {
            let shape: Shape = s.parse().unwrap();
            assert_eq!(shape.to_string(), s);
        }
        assert!("disk:r=-1".parse::<Shape>().is_err());
        assert!("blob:r=1".parse::<Shape>().is_err());
    }

    #[test]
    fn square_faces_sit_halfway() {
        let g = DomainGrid::from_shape(Shape::square(1.0), 1.0 / 8.0).unwrap();
        assert_eq!(g.interior_count(), 64);
        let idx = g.interior_indices()[0];
        assert!((g.face_fraction(idx, W) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bad_requests_are_errors() {
        let g = full_square(8);
        assert!(solve_domain(&g, &zero(), 0, 1e-10).is_err());
        assert!(solve_domain(&g, &zero(), 5, 1e-10).is_err());
        assert!(solve_domain(&g, &DomainPotential::Cells(vec![0.0; 3]), 1, 1e-10).is_err());
    }
}
