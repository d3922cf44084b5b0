//! Cell-centred five-point Laplacian on a rectangle with a Robin outer boundary.
//!
//! Cells have size `dx x dy` with the unknown at the cell centre. Interior faces
//! carry the usual `1/dx^2` (`1/dy^2`) coupling. An outer face carries the Robin
//! condition `d_nu u = beta - rho (u - u_out)` through a half-cell ghost value,
//! which adds `rho / (delta (1 + rho delta / 2))` to the diagonal (`delta` the cell
//! width normal to the face). Faces towards a hole are insulated.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Bottom,
    Top,
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub rho: f64,
    /// Row-major (`iy * nx + ix`) mask, `true` marks a removed cell.
    #[serde(default)]
    pub holes: Option<Vec<bool>>,
}

#[derive(Debug, Clone)]
pub struct Grid2d {
    spec: GridSpec,
    dx: f64,
    dy: f64,
    /// Unknown index of each cell, `None` for holes.
    index: Vec<Option<usize>>,
    cells: Vec<(usize, usize)>,
    diag: Vec<f64>,
    /// Off-diagonal couplings per row: `(column, value)`.
    offdiag: Vec<Vec<(usize, f64)>>,
    bandwidth: usize,
}

impl Grid2d {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let GridSpec { nx, ny, lx, ly, rho, .. } = spec;
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGeometry(format!("need nx, ny >= 2, got {nx} x {ny}")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidGeometry(format!("side lengths must be positive, got {lx} x {ly}")));
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::InvalidGeometry(format!("rho must be non-negative, got {rho}")));
        }
        if let Some(h) = &spec.holes {
            if h.len() != nx * ny {
                return Err(Error::InvalidGeometry(format!("hole mask has {} entries, need {}", h.len(), nx * ny)));
            }
        }
        let dx = lx / nx as f64;
        let dy = ly / ny as f64;
        let is_hole = |ix: usize, iy: usize| spec.holes.as_ref().is_some_and(|h| h[iy * nx + ix]);

        let mut index = vec![None; nx * ny];
        let mut cells = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                if !is_hole(ix, iy) {
                    index[iy * nx + ix] = Some(cells.len());
                    cells.push((ix, iy));
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::InvalidGeometry("every cell is a hole".into()));
        }

        let robin_x = rho / (dx * (1.0 + 0.5 * rho * dx));
        let robin_y = rho / (dy * (1.0 + 0.5 * rho * dy));
        let (cx, cy) = (1.0 / (dx * dx), 1.0 / (dy * dy));
        let mut diag = vec![0.0; cells.len()];
        let mut offdiag = vec![Vec::with_capacity(4); cells.len()];
        let mut bandwidth = 0;
        for (row, &(ix, iy)) in cells.iter().enumerate() {
            let neighbours = [
                (ix.checked_sub(1).map(|x| (x, iy)), cx, robin_x),
                ((ix + 1 < nx).then_some((ix + 1, iy)), cx, robin_x),
                (iy.checked_sub(1).map(|y| (ix, y)), cy, robin_y),
                ((iy + 1 < ny).then_some((ix, iy + 1)), cy, robin_y),
            ];
            for (nb, coupling, robin) in neighbours {
                match nb {
                    None => diag[row] += robin,
                    Some((jx, jy)) => {
                        if let Some(col) = index[jy * nx + jx] {
                            diag[row] += coupling;
                            offdiag[row].push((col, -coupling));
                            bandwidth = bandwidth.max(row.abs_diff(col));
                        }
                    }
                }
            }
        }
        Ok(Grid2d { spec, dx, dy, index, cells, diag, offdiag, bandwidth })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.cells.len()
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.dx, self.dy)
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Unknown index of cell `(ix, iy)`.
    pub fn index_of(&self, ix: usize, iy: usize) -> Option<usize> {
        self.index.get(iy * self.spec.nx + ix).copied().flatten()
    }

    pub fn cell(&self, row: usize) -> (usize, usize) {
        self.cells[row]
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn row_offdiag(&self, row: usize) -> &[(usize, f64)] {
        &self.offdiag[row]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        self.offdiag[i].iter().find(|(c, _)| *c == j).map_or(0.0, |&(_, v)| v)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dimension())
            .map(|i| self.diag[i] * v[i] + self.offdiag[i].iter().map(|&(j, a)| a * v[j]).sum::<f64>())
            .collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dimension();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for &(j, a) in &self.offdiag[i] {
                m[(i, j)] = a;
            }
        }
        m
    }

    /// Load vector of a unit boundary flux on the given outer sides.
    ///
    /// Entry `i` is `sum 1 / (delta (1 + rho delta / 2))` over the faces of cell `i`
    /// lying on a selected side, so a flux `beta` on those sides contributes
    /// `beta * w` to the right-hand side.
    pub fn boundary_load(&self, sides: &[Side]) -> Vec<f64> {
        let GridSpec { nx, ny, rho, .. } = self.spec;
        let wx = 1.0 / (self.dx * (1.0 + 0.5 * rho * self.dx));
        let wy = 1.0 / (self.dy * (1.0 + 0.5 * rho * self.dy));
        self.cells
            .iter()
            .map(|&(ix, iy)| {
                let mut w = 0.0;
                for side in sides {
                    w += match side {
                        Side::Left if ix == 0 => wx,
                        Side::Right if ix + 1 == nx => wx,
                        Side::Bottom if iy == 0 => wy,
                        Side::Top if iy + 1 == ny => wy,
                        _ => 0.0,
                    };
                }
                w
            })
            .collect()
    }
}
