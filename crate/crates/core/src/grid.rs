//! Uniform grids over a box in R^n, dyadic cubes, and grid quadrature.
//!
//! Grid point `(i_1, ..., i_n)` sits at `x = -L + h i` with `h = 2L / N`.
//! Dyadic cubes `Q_{jk} = 2^{-j}([0,1)^n + k)` are anchored at the origin,
//! not at the box corner.

use std::io::{Read, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

const MAGIC: &[u8; 4] = b"PLAB";
const FORMAT_VERSION: u32 = 1;

/// Box `[-L, L)^n` sampled with `N` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    dim: usize,
    half_width: f64,
    samples: usize,
}

impl BoxDomain {
    pub fn new(dim: usize, half_width: f64, samples: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Parameter(format!("dimension {dim} not supported (1 or 2)")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Parameter(format!("half width {half_width} must be positive")));
        }
        if samples < 2 || !samples.is_power_of_two() {
            return Err(Error::Parameter(format!("samples per axis {samples} must be a power of two")));
        }
        Ok(Self { dim, half_width, samples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Grid spacing `h = 2L / N`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.samples as f64
    }

    /// Total number of grid points `N^n`.
    pub fn len(&self) -> usize {
        self.samples.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Box volume `(2L)^n`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Coordinate of axis index `i`.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + self.spacing() * i as f64
    }

    /// Multi-index of a flat row-major index (second slot 0 in 1-d).
    #[inline]
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.samples, idx % self.samples]
        }
    }

    #[inline]
    pub fn flatten(&self, i: [usize; 2]) -> usize {
        if self.dim == 1 {
            i[0]
        } else {
            i[0] * self.samples + i[1]
        }
    }

    /// Point of a flat index (second slot 0 in 1-d).
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let i = self.unflatten(idx);
        if self.dim == 1 {
            [self.coord(i[0]), 0.0]
        } else {
            [self.coord(i[0]), self.coord(i[1])]
        }
    }

    /// Finest dyadic level with at least two grid points per cell side.
    pub fn finest_level(&self) -> i32 {
        (1.0 / (2.0 * self.spacing())).log2().floor() as i32
    }

    /// Coarsest level whose cubes (one per orthant) cover the box.
    pub fn cover_level(&self) -> i32 {
        -(self.half_width.log2().ceil() as i32)
    }

    /// Axis index range `[lo, hi)` of grid points with coordinate in `[a, b)`.
    pub fn axis_range(&self, a: f64, b: f64) -> Range<usize> {
        let h = self.spacing();
        let lo = ((a + self.half_width) / h).ceil().max(0.0) as usize;
        let hi = ((b + self.half_width) / h).ceil().max(0.0) as usize;
        lo.min(self.samples)..hi.min(self.samples)
    }

    /// Per-axis index ranges of the grid points inside `cube`.
    pub fn cube_ranges(&self, cube: &DyadicCube) -> [Range<usize>; 2] {
        let s = cube.side();
        let r0 = self.axis_range(s * cube.k[0] as f64, s * (cube.k[0] + 1) as f64);
        let r1 = if self.dim == 2 {
            self.axis_range(s * cube.k[1] as f64, s * (cube.k[1] + 1) as f64)
        } else {
            0..1
        };
        [r0, r1]
    }
}

/// Finite range `[j_min, j_max]` of dyadic levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleWindow {
    pub j_min: i32,
    pub j_max: i32,
}

impl ScaleWindow {
    pub fn new(j_min: i32, j_max: i32) -> Result<Self> {
        if j_min > j_max {
            return Err(Error::Parameter(format!("window [{j_min}, {j_max}] is empty")));
        }
        Ok(Self { j_min, j_max })
    }

    /// Inhomogeneous window `[0, J]`.
    pub fn inhomogeneous(j_max: i32) -> Self {
        Self { j_min: 0, j_max: j_max.max(0) }
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> + Clone {
        self.j_min..=self.j_max
    }

    pub fn len(&self) -> usize {
        (self.j_max - self.j_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, j: i32) -> bool {
        (self.j_min..=self.j_max).contains(&j)
    }

    /// Checks the window against the grid resolution.
    pub fn validate_for(&self, domain: &BoxDomain) -> Result<()> {
        let fin = domain.finest_level();
        if self.j_max > fin {
            return Err(Error::Resolution(format!(
                "level {} needs at least 2 grid points per dyadic cell; finest admissible level is {fin}",
                self.j_max
            )));
        }
        Ok(())
    }
}

/// Dyadic cube `2^{-j}([0,1)^n + k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub j: i32,
    pub k: [i64; 2],
    pub dim: u8,
}

/// Corner, side length and center of a dyadic cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubeGeometry {
    pub corner: [f64; 2],
    pub side: f64,
    pub center: [f64; 2],
}

impl DyadicCube {
    pub fn new(j: i32, k: &[i64]) -> Self {
        let dim = k.len().clamp(1, 2) as u8;
        let k2 = [k[0], if dim == 2 { k[1] } else { 0 }];
        Self { j, k: k2, dim }
    }

    /// Side length `2^{-j}`.
    pub fn side(&self) -> f64 {
        (-self.j as f64).exp2()
    }

    /// Volume `2^{-jn}`.
    pub fn volume(&self) -> f64 {
        self.side().powi(self.dim as i32)
    }

    pub fn geometry(&self) -> CubeGeometry {
        let s = self.side();
        let mut corner = [0.0; 2];
        let mut center = [0.0; 2];
        for a in 0..self.dim as usize {
            corner[a] = s * self.k[a] as f64;
            center[a] = s * (self.k[a] as f64 + 0.5);
        }
        CubeGeometry { corner, side: s, center }
    }

    /// Recovers `(j, k)` from a corner and side length.
    pub fn from_geometry(corner: &[f64], side: f64) -> Result<Self> {
        let jf = -side.log2();
        if (jf - jf.round()).abs() > 1e-9 {
            return Err(Error::Parameter(format!("side {side} is not a power of two")));
        }
        let j = jf.round() as i32;
        let k: Vec<i64> = corner.iter().map(|c| (c / side).round() as i64).collect();
        Ok(Self::new(j, &k))
    }

    /// `j_Q = -log2 l(Q)`.
    pub fn level(&self) -> i32 {
        self.j
    }

    /// Whether the cube contains the point.
    pub fn contains(&self, x: &[f64]) -> bool {
        let s = self.side();
        (0..self.dim as usize).all(|a| {
            let lo = s * self.k[a] as f64;
            x[a] >= lo && x[a] < lo + s
        })
    }
}

/// Free-function form of [`DyadicCube::geometry`].
pub fn cube_geometry(q: &DyadicCube) -> CubeGeometry {
    q.geometry()
}

/// All dyadic cubes of levels in `window` meeting the box in positive volume,
/// ordered lexicographically in `(j, k)`.
pub fn enumerate_cubes(domain: &BoxDomain, window: &ScaleWindow) -> Result<Vec<DyadicCube>> {
    window.validate_for(domain)?;
    let mut out = Vec::new();
    for j in window.levels() {
        out.extend(cubes_at_level(domain, j));
    }
    Ok(out)
}

/// Cubes of level `j` meeting the box, lexicographic in `k`.
pub fn cubes_at_level(domain: &BoxDomain, j: i32) -> Vec<DyadicCube> {
    let s = (-j as f64).exp2();
    let l = domain.half_width();
    let kmin = (-l / s).floor() as i64;
    let kmax = (l / s).ceil() as i64 - 1;
    let mut out = Vec::new();
    if domain.dim() == 1 {
        for k in kmin..=kmax {
            out.push(DyadicCube::new(j, &[k]));
        }
    } else {
        for k0 in kmin..=kmax {
            for k1 in kmin..=kmax {
                out.push(DyadicCube::new(j, &[k0, k1]));
            }
        }
    }
    out
}

/// Sampled complex function on a box grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub domain: BoxDomain,
    pub values: Vec<C64>,
}

impl GridFunction {
    pub fn new(domain: BoxDomain, values: Vec<C64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::Parameter(format!(
                "expected {} values, got {}",
                domain.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Parameter("non-finite sample".into()));
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: BoxDomain) -> Self {
        Self { domain, values: vec![C64::new(0.0, 0.0); domain.len()] }
    }

    pub fn from_fn<F: Fn([f64; 2]) -> C64>(domain: BoxDomain, f: F) -> Self {
        let values = (0..domain.len()).map(|i| f(domain.point(i))).collect();
        Self { domain, values }
    }

    pub fn from_real_fn<F: Fn([f64; 2]) -> f64>(domain: BoxDomain, f: F) -> Self {
        Self::from_fn(domain, |x| C64::new(f(x), 0.0))
    }

    pub fn from_real(domain: BoxDomain, values: &[f64]) -> Result<Self> {
        Self::new(domain, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    /// Pointwise moduli.
    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { domain: self.domain, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Self { domain: self.domain, values }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Self { domain: self.domain, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Riemann-sum L^2 norm.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.domain.cell_volume()).sqrt()
    }

    /// Writes the binary grid format: magic, version, dim, N, L, then
    /// little-endian `(re, im)` pairs.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.domain.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.domain.samples() as u32).to_le_bytes())?;
        w.write_all(&self.domain.half_width().to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 16);
        for v in &self.values {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let mut u = [0u8; 4];
        r.read_exact(&mut u)?;
        let version = u32::from_le_bytes(u);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        r.read_exact(&mut u)?;
        let dim = u32::from_le_bytes(u) as usize;
        r.read_exact(&mut u)?;
        let samples = u32::from_le_bytes(u) as usize;
        let mut f = [0u8; 8];
        r.read_exact(&mut f)?;
        let half_width = f64::from_le_bytes(f);
        let domain = BoxDomain::new(dim, half_width, samples)?;
        let mut raw = vec![0u8; domain.len() * 16];
        r.read_exact(&mut raw)?;
        let values = raw
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                C64::new(re, im)
            })
            .collect();
        Self::new(domain, values)
    }

    /// CSV export: columns `x_1..x_n, re, im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.domain.dim();
        let head: Vec<String> = (1..=n).map(|a| format!("x_{a}")).collect();
        writeln!(w, "{},re,im", head.join(","))?;
        for (i, v) in self.values.iter().enumerate() {
            let p = self.domain.point(i);
            let coords: Vec<String> = p[..n].iter().map(|c| format!("{c}")).collect();
            writeln!(w, "{},{},{}", coords.join(","), v.re, v.im)?;
        }
        Ok(())
    }
}

/// Power mean `(avg |f|^u)^{1/u}` over grid points in the closed ball
/// `B(x, r)`; `u = inf` gives the maximum.
pub fn ball_average(f: &GridFunction, x: &[f64], r: f64, u: f64) -> Result<f64> {
    let d = &f.domain;
    let h = d.spacing();
    if r < h {
        return Err(Error::DegenerateBall(format!("radius {r} below grid spacing {h}")));
    }
    let ranges: Vec<Range<usize>> = (0..d.dim()).map(|a| d.axis_range(x[a] - r, x[a] + r + h)).collect();
    let r2 = r * r;
    let mut count = 0usize;
    let mut acc = 0.0f64;
    let mut visit = |idx: usize| {
        let p = d.point(idx);
        let dist2: f64 = (0..d.dim()).map(|a| (p[a] - x[a]).powi(2)).sum();
        if dist2 <= r2 {
            let v = f.values[idx].norm();
            count += 1;
            if u.is_infinite() {
                acc = acc.max(v);
            } else {
                acc += v.powf(u);
            }
        }
    };
    if d.dim() == 1 {
        for i in ranges[0].clone() {
            visit(i);
        }
    } else {
        for i in ranges[0].clone() {
            for k in ranges[1].clone() {
                visit(d.flatten([i, k]));
            }
        }
    }
    if count == 0 {
        return Err(Error::DegenerateBall("ball contains no grid point".into()));
    }
    Ok(if u.is_infinite() { acc } else { (acc / count as f64).powf(1.0 / u) })
}
