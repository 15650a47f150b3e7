//! Nonuniform tensor grids, cell-average fields and initialization quadrature.
//!
//! A [`Grid1D`] is stored edge-first: the edges are accumulated from the
//! widths once at construction and every derived quantity (centers,
//! interface spacings) is cached, so repeated runs see bit-identical
//! geometry.

use crate::error::{Error, Result};

/// Relative tolerance on `sum(widths) == b - a` accepted by [`Grid1D::from_widths`].
pub const WIDTH_SUM_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    edges: Vec<f64>,
    centers: Vec<f64>,
    widths: Vec<f64>,
    half_widths: Vec<f64>,
    uniform: bool,
}

impl Grid1D {
    /// Builds a grid on `[a, b]` from positive cell widths (at least two).
    pub fn from_widths(a: f64, b: f64, widths: &[f64]) -> Result<Self> {
        Self::build(a, b, widths, 2)
    }

    /// Like [`Grid1D::from_widths`] but accepts a single cell, for one
    /// direction of a [`Grid2D`] strip.
    pub fn axis(a: f64, b: f64, widths: &[f64]) -> Result<Self> {
        Self::build(a, b, widths, 1)
    }

    fn build(a: f64, b: f64, widths: &[f64], min_cells: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidGrid(format!("bad interval [{a}, {b}]")));
        }
        if widths.len() < min_cells {
            return Err(Error::InvalidGrid(format!(
                "at least {min_cells} cells required, got {}",
                widths.len()
            )));
        }
        if let Some((j, &h)) = widths
            .iter()
            .enumerate()
            .find(|(_, h)| !(h.is_finite() && **h > 0.0))
        {
            return Err(Error::InvalidGrid(format!("width {h} of cell {j} is not positive")));
        }
        let total: f64 = widths.iter().sum();
        if ((total - (b - a)) / (b - a)).abs() > WIDTH_SUM_RTOL {
            return Err(Error::InvalidGrid(format!(
                "widths sum to {total}, expected {}",
                b - a
            )));
        }

        let n = widths.len();
        let mut edges = Vec::with_capacity(n + 1);
        edges.push(a);
        let mut x = a;
        for &h in widths {
            x += h;
            edges.push(x);
        }
        let centers = widths
            .iter()
            .zip(&edges)
            .map(|(&h, &left)| left + 0.5 * h)
            .collect();
        let half_widths = widths.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let uniform = widths.iter().all(|&h| h == widths[0]);

        Ok(Self {
            edges,
            centers,
            widths: widths.to_vec(),
            half_widths,
            uniform,
        })
    }

    /// `n` equal cells of width `(b - a) / n`.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("at least two cells required, got {n}")));
        }
        let h = (b - a) / n as f64;
        Self::from_widths(a, b, &vec![h; n])
    }

    /// `n >= 1` equal cells; see [`Grid1D::axis`].
    pub fn uniform_axis(a: f64, b: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("at least one cell required".into()));
        }
        let h = (b - a) / n as f64;
        Self::axis(a, b, &vec![h; n])
    }

    pub fn len(&self) -> usize {
        self.widths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.widths.is_empty()
    }

    /// `x_{1/2}, ..., x_{N+1/2}`
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Interior interfaces `x_{3/2}, ..., x_{N-1/2}`.
    pub fn interfaces(&self) -> &[f64] {
        &self.edges[1..self.edges.len() - 1]
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Center-to-center spacings `h_{j+1/2} = (h_j + h_{j+1}) / 2`, length `N - 1`.
    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn lower(&self) -> f64 {
        self.edges[0]
    }

    pub fn upper(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    /// True when every width is bitwise identical.
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Largest ratio `h_i / h_j`.
    pub fn mesh_ratio(&self) -> f64 {
        let max = self.widths.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.widths.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    }
}

/// Cartesian product of two 1D partitions. Cells are numbered row-major
/// with `x` fastest: `p = j * nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub gx: Grid1D,
    pub gy: Grid1D,
}

impl Grid2D {
    pub fn new(gx: Grid1D, gy: Grid1D) -> Self {
        Self { gx, gy }
    }

    /// Either direction may have a single cell.
    pub fn uniform(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        Ok(Self::new(
            Grid1D::uniform_axis(x.0, x.1, nx)?,
            Grid1D::uniform_axis(y.0, y.1, ny)?,
        ))
    }

    pub fn nx(&self) -> usize {
        self.gx.len()
    }

    pub fn ny(&self) -> usize {
        self.gy.len()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    pub fn area(&self, i: usize, j: usize) -> f64 {
        self.gx.widths()[i] * self.gy.widths()[j]
    }

    /// Cell areas in row-major order.
    pub fn areas(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for &hy in self.gy.widths() {
            for &hx in self.gx.widths() {
                out.push(hx * hy);
            }
        }
        out
    }

    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        (self.gx.centers()[i], self.gy.centers()[j])
    }
}

/// Cell averages over a grid. The grid itself is passed alongside; shape
/// agreement is checked wherever the two meet.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((j, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                location: format!("cell {j}"),
                value: v,
            });
        }
        Ok(Self { values })
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            values: vec![value; n],
        }
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

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest absolute entry, used as the scale for rounding tolerances.
    pub fn scale(&self) -> f64 {
        self.values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    pub(crate) fn expect_len(&self, n: usize) -> Result<()> {
        if self.values.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                found: self.values.len(),
            });
        }
        Ok(())
    }
}

impl From<Field> for Vec<f64> {
    fn from(f: Field) -> Self {
        f.values
    }
}

/// Gauss–Legendre rules on `[-1, 1]`, stored as (node, weight / 2) so the
/// weights of each rule sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// Two points, exact through cubics. Used for initial data.
    Gauss2,
    /// Five points, exact through degree nine. Used for reference averages.
    Gauss5,
}

impl Quadrature {
    fn rule(self) -> &'static [(f64, f64)] {
        const G2: [(f64, f64); 2] = [
            (-0.577_350_269_189_625_8, 0.5),
            (0.577_350_269_189_625_8, 0.5),
        ];
        const G5: [(f64, f64); 5] = [
            (-0.906_179_845_938_664, 0.118_463_442_528_094_54),
            (-0.538_469_310_105_683_1, 0.239_314_335_249_683_23),
            (0.0, 0.284_444_444_444_444_44),
            (0.538_469_310_105_683_1, 0.239_314_335_249_683_23),
            (0.906_179_845_938_664, 0.118_463_442_528_094_54),
        ];
        match self {
            Quadrature::Gauss2 => &G2,
            Quadrature::Gauss5 => &G5,
        }
    }
}

/// Per-cell averages of `f` using the two-point Gauss rule.
pub fn cell_average_init_1d<F: Fn(f64) -> f64>(f: F, grid: &Grid1D) -> Result<Field> {
    cell_average_1d(f, grid, Quadrature::Gauss2)
}

pub fn cell_average_1d<F: Fn(f64) -> f64>(f: F, grid: &Grid1D, rule: Quadrature) -> Result<Field> {
    let nodes = rule.rule();
    let mut out = Vec::with_capacity(grid.len());
    for (&xc, &h) in grid.centers().iter().zip(grid.widths()) {
        let mut acc = 0.0;
        for &(s, w) in nodes {
            let x = xc + 0.5 * h * s;
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    location: format!("x = {x}"),
                    value: v,
                });
            }
            acc += w * v;
        }
        out.push(acc);
    }
    Ok(Field { values: out })
}

/// Tensor-product two-point Gauss averages, row-major.
pub fn cell_average_init_2d<F: Fn(f64, f64) -> f64>(f: F, grid: &Grid2D) -> Result<Field> {
    cell_average_2d(f, grid, Quadrature::Gauss2)
}

pub fn cell_average_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    grid: &Grid2D,
    rule: Quadrature,
) -> Result<Field> {
    let nodes = rule.rule();
    let mut out = Vec::with_capacity(grid.len());
    for (&yc, &hy) in grid.gy.centers().iter().zip(grid.gy.widths()) {
        for (&xc, &hx) in grid.gx.centers().iter().zip(grid.gx.widths()) {
            let mut acc = 0.0;
            for &(t, wy) in nodes {
                let y = yc + 0.5 * hy * t;
                for &(s, wx) in nodes {
                    let x = xc + 0.5 * hx * s;
                    let v = f(x, y);
                    if !v.is_finite() {
                        return Err(Error::NonFinite {
                            location: format!("(x, y) = ({x}, {y})"),
                            value: v,
                        });
                    }
                    acc += wx * wy * v;
                }
            }
            out.push(acc);
        }
    }
    Ok(Field { values: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_uniform_cells() {
        let g = Grid1D::from_widths(0.0, 1.0, &[0.5, 0.5]).unwrap();
        assert_eq!(g.centers(), &[0.25, 0.75]);
        assert_eq!(g.half_widths(), &[0.5]);
        assert!(g.is_uniform());
    }

    #[test]
    fn nonuniform_two_cells() {
        let g = Grid1D::from_widths(0.0, 1.0, &[0.25, 0.75]).unwrap();
        assert_eq!(g.half_widths(), &[0.5]);
        assert_eq!(g.centers(), &[0.125, 0.625]);
        assert_eq!(g.interfaces(), &[0.25]);
        assert!(!g.is_uniform());
    }

    #[test]
    fn rejects_bad_widths() {
        assert!(matches!(
            Grid1D::from_widths(0.0, 1.0, &[0.5, -0.5]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(Grid1D::from_widths(0.0, 1.0, &[0.5, 0.6]).is_err());
        assert!(Grid1D::from_widths(0.0, 1.0, &[1.0]).is_err());
        assert!(Grid1D::uniform(0.0, 1.0, 1).is_err());
        assert!(Grid1D::axis(0.0, 1.0, &[1.0]).is_ok());
        assert!(Grid1D::uniform_axis(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn rebuild_is_bit_identical() {
        let g = Grid1D::from_widths(-1.0, 2.0, &[0.3, 0.9, 1.1, 0.7]).unwrap();
        let h = Grid1D::from_widths(g.lower(), 2.0, g.widths()).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn uniform_helper_width() {
        let g = Grid1D::uniform(-std::f64::consts::PI, std::f64::consts::PI, 40).unwrap();
        let h = 2.0 * std::f64::consts::PI / 40.0;
        assert!(g.widths().iter().all(|&w| w == h));
        let total: f64 = g.widths().iter().sum();
        assert!((total - 2.0 * std::f64::consts::PI).abs() < 1e-14 * 2.0 * std::f64::consts::PI);
    }

    #[test]
    fn averages_of_low_degree_polynomials() {
        let g = Grid1D::uniform(0.0, 1.0, 2).unwrap();
        assert_eq!(cell_average_init_1d(|_| 1.0, &g).unwrap().values(), &[1.0, 1.0]);
        let lin = cell_average_init_1d(|x| x, &g).unwrap();
        assert!((lin.values()[0] - 0.25).abs() < 1e-15);
        assert!((lin.values()[1] - 0.75).abs() < 1e-15);

        let one = Grid1D::axis(0.0, 1.0, &[1.0]).unwrap();
        let q = cell_average_init_1d(|x| x * x, &one).unwrap();
        assert!((q.values()[0] - 1.0 / 3.0).abs() < 1e-15);
        let g = Grid1D::from_widths(0.0, 1.0, &[0.5, 0.5]).unwrap();
        let q = cell_average_init_1d(|x| x * x, &g).unwrap();
        assert!((q.values()[0] - 1.0 / 12.0).abs() < 1e-15);
        assert!((q.values()[1] - 7.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn averages_2d() {
        let g = Grid2D::uniform((0.0, 1.0), (0.0, 1.0), 2, 2).unwrap();
        let ones = cell_average_init_2d(|_, _| 1.0, &g).unwrap();
        assert!(ones.values().iter().all(|&v| v == 1.0));
        let sum = cell_average_init_2d(|x, y| x + y, &g).unwrap();
        for (v, e) in sum.values().iter().zip([0.5, 1.0, 1.0, 1.5]) {
            assert!((v - e).abs() < 1e-15);
        }
        let one = Grid2D::uniform((0.0, 1.0), (0.0, 1.0), 1, 1).unwrap();
        let xy = cell_average_init_2d(|x, y| x * y, &one).unwrap();
        assert!((xy.values()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let g = Grid1D::uniform(0.0, 1.0, 4).unwrap();
        assert!(matches!(
            cell_average_init_1d(|_| f64::NAN, &g),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn field_rejects_nan() {
        assert!(Field::new(vec![1.0, f64::INFINITY]).is_err());
    }
}
