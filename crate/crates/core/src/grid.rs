//! Anisotropic rectangular grids and scalar fields on them.
//!
//! A grid covers the box `[-L_xy, L_xy]^{2n} × [-L_tau, L_tau]` with `N_xy`
//! nodes per horizontal axis and `N_tau` along the center direction. Node
//! counts are odd so the group identity sits exactly on a node; coordinates
//! are computed as `(i - mid) · h`, which makes the lattice symmetric about
//! the origin to the last bit. Quadrature assigns every node the uniform
//! cell volume `h_xy^{2n} · h_tau` (midpoint rule on the node lattice).
//!
//! Storage is a flat row-major array: the `2n` horizontal indices vary
//! slowest (x before y), the τ index fastest, so each "row" is a contiguous
//! τ-slice. That layout keeps the τ-coupled stencil terms and the τ-only
//! interpolation of group convolution cache-friendly.

use crate::error::{CoreError, Result};
use crate::heisenberg::{gauge_coords, GroupParams, GroupPoint};
use serde::{Deserialize, Serialize};

/// Geometry of an anisotropic grid over `H_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub params: GroupParams,
    pub l_xy: f64,
    pub l_tau: f64,
    pub n_xy: usize,
    pub n_tau: usize,
}

impl GridSpec {
    /// Validates counts and extents. `L_tau >= L_xy²` is recommended (the
    /// gauge ball is that anisotropic); violating it only logs a warning.
    pub fn new(params: GroupParams, l_xy: f64, l_tau: f64, n_xy: usize, n_tau: usize) -> Result<Self> {
        for (name, n) in [("N_xy", n_xy), ("N_tau", n_tau)] {
            if n < 5 {
                return Err(CoreError::InvalidParameter(format!(
                    "{name} = {n}: need at least 5 nodes per axis"
                )));
            }
            if n % 2 == 0 {
                return Err(CoreError::InvalidParameter(format!(
                    "{name} = {n}: node count must be odd so the origin is a node"
                )));
            }
        }
        if !(l_xy > 0.0) || !(l_tau > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "box half-widths must be positive, got L_xy = {l_xy}, L_tau = {l_tau}"
            )));
        }
        if l_tau < l_xy * l_xy {
            log::warn!(
                "L_tau = {l_tau} < L_xy² = {}: box is thinner than the gauge ball",
                l_xy * l_xy
            );
        }
        Ok(GridSpec { params, l_xy, l_tau, n_xy, n_tau })
    }

    /// Reference grid used throughout the kernel checks: `n = 1`,
    /// `[-4, 4]² × [-16, 16]` at 65³.
    pub fn reference(n_xy: usize, n_tau: usize) -> Result<Self> {
        GridSpec::new(GroupParams::new(1)?, 4.0, 16.0, n_xy, n_tau)
    }

    pub fn h_xy(&self) -> f64 {
        2.0 * self.l_xy / (self.n_xy as f64 - 1.0)
    }

    pub fn h_tau(&self) -> f64 {
        2.0 * self.l_tau / (self.n_tau as f64 - 1.0)
    }

    /// Number of horizontal multi-indices (τ-slices), `N_xy^{2n}`.
    pub fn rows(&self) -> usize {
        self.n_xy.pow(2 * self.params.n as u32)
    }

    pub fn len(&self) -> usize {
        self.rows() * self.n_tau
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.h_xy().powi(2 * self.params.n as i32) * self.h_tau()
    }

    pub fn coord_xy(&self, i: usize) -> f64 {
        (i as f64 - (self.n_xy as f64 - 1.0) / 2.0) * self.h_xy()
    }

    pub fn coord_tau(&self, k: usize) -> f64 {
        (k as f64 - (self.n_tau as f64 - 1.0) / 2.0) * self.h_tau()
    }

    /// Flat index of the origin node.
    pub fn origin_index(&self) -> usize {
        let mid_xy = (self.n_xy - 1) / 2;
        let mut row = 0;
        for _ in 0..2 * self.params.n {
            row = row * self.n_xy + mid_xy;
        }
        row * self.n_tau + (self.n_tau - 1) / 2
    }

    /// Decodes a row index into its `2n` horizontal axis indices
    /// (x₁..x_n then y₁..y_n, slowest first).
    pub fn decode_row(&self, mut row: usize, digits: &mut [usize]) {
        debug_assert_eq!(digits.len(), 2 * self.params.n);
        for d in digits.iter_mut().rev() {
            *d = row % self.n_xy;
            row /= self.n_xy;
        }
    }

    /// Horizontal coordinates of a row, written into `coords`.
    pub fn row_coords(&self, row: usize, digits: &mut [usize], coords: &mut [f64]) {
        self.decode_row(row, digits);
        for (c, &i) in coords.iter_mut().zip(digits.iter()) {
            *c = self.coord_xy(i);
        }
    }

    /// The group point at a flat node index. Not for hot loops.
    pub fn node_point(&self, flat: usize) -> GroupPoint {
        let n = self.params.n;
        let row = flat / self.n_tau;
        let k = flat % self.n_tau;
        let mut digits = vec![0usize; 2 * n];
        self.decode_row(row, &mut digits);
        let x = digits[..n].iter().map(|&i| self.coord_xy(i)).collect();
        let y = digits[n..].iter().map(|&i| self.coord_xy(i)).collect();
        GroupPoint { x, y, tau: self.coord_tau(k) }
    }

    /// True when the point lies inside the node hull of the grid.
    pub fn contains(&self, xy: &[f64], tau: f64) -> bool {
        let lo_xy = self.coord_xy(0);
        let hi_xy = self.coord_xy(self.n_xy - 1);
        if xy.iter().any(|&c| c < lo_xy || c > hi_xy) {
            return false;
        }
        tau >= self.coord_tau(0) && tau <= self.coord_tau(self.n_tau - 1)
    }

    /// Memory footprint of one field on this grid, in bytes.
    pub fn field_bytes(&self) -> usize {
        self.len() * std::mem::size_of::<f64>()
    }
}

/// Neumaier-compensated sum; quadrature and mass bookkeeping run through
/// this so million-node reductions keep ~2 ulp accuracy deterministically.
pub fn compensated_sum(xs: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for &x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// A scalar field sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        ScalarField { values: vec![0.0; grid.len()], grid }
    }

    /// Samples `f(xy_coords, tau)` at every node. `xy_coords` holds the
    /// `2n` horizontal coordinates `x₁..x_n, y₁..y_n`.
    pub fn sample<F>(grid: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(&[f64], f64) -> f64,
    {
        let n2 = 2 * grid.params.n;
        let mut values = vec![0.0; grid.len()];
        let mut digits = vec![0usize; n2];
        let mut coords = vec![0.0f64; n2];
        for row in 0..grid.rows() {
            grid.row_coords(row, &mut digits, &mut coords);
            for k in 0..grid.n_tau {
                let tau = grid.coord_tau(k);
                let v = f(&coords, tau);
                if !v.is_finite() {
                    return Err(CoreError::Numerical(format!(
                        "sampled non-finite value {v} at node {:?}, tau = {tau}",
                        coords
                    )));
                }
                values[row * grid.n_tau + k] = v;
            }
        }
        Ok(ScalarField { grid, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Midpoint-rule integral: uniform cell volume times the compensated
    /// node sum. Exact for constants by construction.
    pub fn integrate(&self) -> f64 {
        self.grid.cell_volume() * compensated_sum(&self.values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn has_non_finite(&self) -> bool {
        self.values.iter().any(|v| !v.is_finite())
    }

    /// Largest |u| over the outermost node shell (all six box faces for
    /// `n = 1`). The boundary-contamination monitor compares this against
    /// the sup-norm.
    pub fn boundary_max(&self) -> f64 {
        let g = &self.grid;
        let n2 = 2 * g.params.n;
        let mut digits = vec![0usize; n2];
        let mut worst = 0.0f64;
        for row in 0..g.rows() {
            g.decode_row(row, &mut digits);
            let on_xy_face = digits.iter().any(|&i| i == 0 || i == g.n_xy - 1);
            let base = row * g.n_tau;
            if on_xy_face {
                for k in 0..g.n_tau {
                    worst = worst.max(self.values[base + k].abs());
                }
            } else {
                worst = worst.max(self.values[base].abs());
                worst = worst.max(self.values[base + g.n_tau - 1].abs());
            }
        }
        worst
    }

    /// Weighted sup-norm `sup (1 + t + |η|²_H)^{κ/2} |u(η)|`, the building
    /// block of the space-time norms used by the mild-solution machinery.
    pub fn weighted_sup_norm(&self, t: f64, kappa: f64) -> f64 {
        let g = &self.grid;
        let n2 = 2 * g.params.n;
        let mut digits = vec![0usize; n2];
        let mut coords = vec![0.0f64; n2];
        let mut worst = 0.0f64;
        for row in 0..g.rows() {
            g.row_coords(row, &mut digits, &mut coords);
            let r2: f64 = coords.iter().map(|c| c * c).sum();
            let base = row * g.n_tau;
            for k in 0..g.n_tau {
                let tau = g.coord_tau(k);
                let gauge = gauge_coords(r2, tau);
                let w = (1.0 + t + gauge * gauge).powf(0.5 * kappa);
                worst = worst.max(w * self.values[base + k].abs());
            }
        }
        worst
    }

    /// Multilinear interpolation at an arbitrary point; zero outside the
    /// node hull. Exact at the nodes.
    pub fn interpolate(&self, xy: &[f64], tau: f64) -> f64 {
        let g = &self.grid;
        let n2 = 2 * g.params.n;
        debug_assert_eq!(xy.len(), n2);

        // Locate the cell along each axis: index of the lower node plus the
        // fractional offset in [0, 1].
        let ndims = n2 + 1;
        let mut idx = [0usize; 16];
        let mut frac = [0.0f64; 16];
        debug_assert!(ndims <= 16, "interpolation supports n <= 7");

        let mid_xy = (g.n_xy as f64 - 1.0) / 2.0;
        for (d, &c) in xy.iter().enumerate() {
            let u = c / g.h_xy() + mid_xy;
            if u < 0.0 || u > g.n_xy as f64 - 1.0 {
                return 0.0;
            }
            let mut i = u.floor() as usize;
            let mut f = u - i as f64;
            if i >= g.n_xy - 1 {
                i = g.n_xy - 2;
                f = 1.0;
            }
            idx[d] = i;
            frac[d] = f;
        }
        let mid_tau = (g.n_tau as f64 - 1.0) / 2.0;
        let u = tau / g.h_tau() + mid_tau;
        if u < 0.0 || u > g.n_tau as f64 - 1.0 {
            return 0.0;
        }
        let mut i = u.floor() as usize;
        let mut f = u - i as f64;
        if i >= g.n_tau - 1 {
            i = g.n_tau - 2;
            f = 1.0;
        }
        idx[n2] = i;
        frac[n2] = f;

        // Accumulate over the 2^(2n+1) cell corners.
        let mut acc = 0.0;
        for corner in 0..(1usize << ndims) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for d in 0..n2 {
                let hi = (corner >> d) & 1;
                w *= if hi == 1 { frac[d] } else { 1.0 - frac[d] };
                flat = flat * g.n_xy + idx[d] + hi;
            }
            let hi = (corner >> n2) & 1;
            w *= if hi == 1 { frac[n2] } else { 1.0 - frac[n2] };
            flat = flat * g.n_tau + idx[n2] + hi;
            if w != 0.0 {
                acc += w * self.values[flat];
            }
        }
        acc
    }

    /// `self += a · other`; grids must match.
    pub fn add_scaled(&mut self, a: f64, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(CoreError::GridMismatch(
                "add_scaled requires identical grids".into(),
            ));
        }
        for (u, v) in self.values.iter_mut().zip(&other.values) {
            *u += a * v;
        }
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        for u in self.values.iter_mut() {
            *u *= a;
        }
    }
}
