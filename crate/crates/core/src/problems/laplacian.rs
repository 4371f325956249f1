use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{Pencil, SparseMatrix};

const GRID_TOL: f64 = 1e-9;

/// A vertical slit `{x} × [y0, y1]` on which the solution vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slit {
    pub x: f64,
    pub y0: f64,
    pub y1: f64,
}

/// Rectangle `[0, width] × [0, height]` with Dirichlet slits, discretized by
/// the five-point stencil with mesh size `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlitRectangleSpec {
    pub width: f64,
    pub height: f64,
    pub h: f64,
    #[serde(default)]
    pub slits: Vec<Slit>,
}

impl SlitRectangleSpec {
    /// The two short slits on `[0, 1.5] × [0, 1]`.
    pub fn two_short_slits(h: f64) -> Self {
        Self {
            width: 1.5,
            height: 1.0,
            h,
            slits: vec![
                Slit {
                    x: 0.5,
                    y0: 0.45,
                    y1: 0.55,
                },
                Slit {
                    x: 1.0,
                    y0: 0.45,
                    y1: 0.55,
                },
            ],
        }
    }

    /// The two long slits on `[0, 1.5] × [0, 1]` that nearly split the
    /// domain into three cells and produce eigenvalue clusters.
    pub fn two_long_slits(h: f64) -> Self {
        Self {
            width: 1.5,
            height: 1.0,
            h,
            slits: vec![
                Slit {
                    x: 0.5,
                    y0: 0.1,
                    y1: 0.9,
                },
                Slit {
                    x: 1.0,
                    y0: 0.1,
                    y1: 0.9,
                },
            ],
        }
    }

    pub fn unit_square(h: f64) -> Self {
        Self {
            width: 1.0,
            height: 1.0,
            h,
            slits: Vec::new(),
        }
    }

    fn cells(len: f64, h: f64, what: &str) -> Result<usize> {
        let c = len / h;
        let r = c.round();
        if !(h > 0.0) || !c.is_finite() || (c - r).abs() > GRID_TOL * r.max(1.0) {
            return Err(Error::InvalidSpec(format!(
                "{what} {len} is not an integer multiple of h = {h}"
            )));
        }
        Ok(r as usize)
    }

    /// Number of interior grid points along x and y.
    pub fn interior_counts(&self) -> Result<(usize, usize)> {
        let cx = Self::cells(self.width, self.h, "width")?;
        let cy = Self::cells(self.height, self.h, "height")?;
        if cx < 2 || cy < 2 {
            return Err(Error::InvalidSpec("grid has no interior nodes".into()));
        }
        Ok((cx - 1, cy - 1))
    }

    /// `(x index, first y index, last y index)` of each slit, 1-based grid
    /// indices, inclusive on both ends.
    fn slit_nodes(&self) -> Result<Vec<(usize, usize, usize)>> {
        let (nx, ny) = self.interior_counts()?;
        let mut out = Vec::new();
        for s in &self.slits {
            let ix = Self::cells(s.x, self.h, "slit x")?;
            if ix == 0 || ix > nx {
                return Err(Error::InvalidSpec(format!("slit x = {} is not interior", s.x)));
            }
            if !(s.y0 > 0.0 && s.y1 < self.height && s.y0 <= s.y1) {
                return Err(Error::InvalidSpec(format!(
                    "slit y-range [{}, {}] must lie within (0, {})",
                    s.y0, s.y1, self.height
                )));
            }
            let lo = (s.y0 / self.h - GRID_TOL).ceil().max(1.0) as usize;
            let hi = ((s.y1 / self.h + GRID_TOL).floor() as usize).min(ny);
            if lo <= hi {
                out.push((ix, lo, hi));
            }
        }
        Ok(out)
    }
}

/// Interior grid node to matrix index, `y` varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridIndexMap {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    index: Vec<Option<usize>>,
    nodes: Vec<(usize, usize)>,
}

impl GridIndexMap {
    /// Matrix index of interior node `(ix, iy)` with 1-based grid indices.
    pub fn index_of(&self, ix: usize, iy: usize) -> Option<usize> {
        if ix == 0 || iy == 0 || ix > self.nx || iy > self.ny {
            return None;
        }
        self.index[(ix - 1) * self.ny + (iy - 1)]
    }

    /// Grid indices of matrix row `k`.
    pub fn node(&self, k: usize) -> (usize, usize) {
        self.nodes[k]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn removed(&self) -> usize {
        self.nx * self.ny - self.nodes.len()
    }

    /// SHA-256 over the grid shape and the ordered node list; identifies the
    /// row ordering of the generated matrix.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.nx as u64).to_le_bytes());
        hasher.update((self.ny as u64).to_le_bytes());
        for &(ix, iy) in &self.nodes {
            hasher.update((ix as u64).to_le_bytes());
            hasher.update((iy as u64).to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }

    /// Physical coordinates of matrix row `k`.
    pub fn coordinates(&self, k: usize) -> (f64, f64) {
        let (ix, iy) = self.nodes[k];
        (ix as f64 * self.h, iy as f64 * self.h)
    }
}

/// Five-point Laplacian on the slit rectangle with `S = I`.
pub fn build_slit_laplacian(spec: &SlitRectangleSpec) -> Result<(Pencil, GridIndexMap)> {
    let (nx, ny) = spec.interior_counts()?;
    let mut removed = vec![false; nx * ny];
    for (ix, lo, hi) in spec.slit_nodes()? {
        for iy in lo..=hi {
            removed[(ix - 1) * ny + (iy - 1)] = true;
        }
    }
    let mut index = vec![None; nx * ny];
    let mut nodes = Vec::new();
    for ix in 1..=nx {
        for iy in 1..=ny {
            let flat = (ix - 1) * ny + (iy - 1);
            if !removed[flat] {
                index[flat] = Some(nodes.len());
                nodes.push((ix, iy));
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::InvalidSpec("every interior node lies on a slit".into()));
    }
    let map = GridIndexMap {
        nx,
        ny,
        h: spec.h,
        index,
        nodes,
    };

    let inv_h2 = 1.0 / (spec.h * spec.h);
    let mut triplets = Vec::with_capacity(5 * map.len());
    for (k, &(ix, iy)) in map.nodes.iter().enumerate() {
        triplets.push((k, k, 4.0 * inv_h2));
        let neighbours = [(ix - 1, iy), (ix + 1, iy), (ix, iy - 1), (ix, iy + 1)];
        for (jx, jy) in neighbours {
            if let Some(m) = map.index_of(jx, jy) {
                triplets.push((k, m, -inv_h2));
            }
        }
    }
    let h = SparseMatrix::from_triplets(map.len(), &triplets)?;
    Ok((Pencil::standard(h)?, map))
}

/// The `count` smallest eigenvalues of the five-point Laplacian on a
/// rectangle without slits:
/// `λ_{p,q} = (4/h²)(sin²(pπh/(2W)) + sin²(qπh/(2H)))`.
pub fn analytic_rectangle_eigs(spec: &SlitRectangleSpec, count: usize) -> Result<Vec<f64>> {
    if !spec.slits.is_empty() {
        return Err(Error::InvalidSpec(
            "closed-form eigenvalues need a slit-free rectangle".into(),
        ));
    }
    let (nx, ny) = spec.interior_counts()?;
    let h = spec.h;
    let fx: Vec<f64> = (1..=nx)
        .map(|p| (p as f64 * std::f64::consts::PI * h / (2.0 * spec.width)).sin().powi(2))
        .collect();
    let fy: Vec<f64> = (1..=ny)
        .map(|q| {
            (q as f64 * std::f64::consts::PI * h / (2.0 * spec.height))
                .sin()
                .powi(2)
        })
        .collect();
    let scale = 4.0 / (h * h);
    let mut all: Vec<f64> = fx
        .iter()
        .flat_map(|a| fy.iter().map(move |b| scale * (a + b)))
        .collect();
    all.sort_by(f64::total_cmp);
    all.truncate(count);
    Ok(all)
}
