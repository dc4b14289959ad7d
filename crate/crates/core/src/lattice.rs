//! Dense arrays over sup-norm boxes [−R, R]^d of Z^d.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numeric::compensated_sum;

/// Row-major indexing of the box [−radius, radius]^d, last axis fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxGeometry {
    pub d: usize,
    pub radius: usize,
}

impl BoxGeometry {
    pub fn new(d: usize, radius: usize) -> Self {
        assert!(d >= 1, "dimension must be positive");
        Self { d, radius }
    }

    #[inline]
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    /// Number of sites, or `None` on overflow.
    pub fn checked_volume(&self) -> Option<usize> {
        let side = self.side();
        (0..self.d).try_fold(1usize, |acc, _| acc.checked_mul(side))
    }

    pub fn volume(&self) -> usize {
        self.checked_volume().expect("box volume overflows usize")
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        let r = self.radius as i64;
        x.iter().all(|&c| c.abs() <= r)
    }

    pub fn index(&self, x: &[i64]) -> Option<usize> {
        debug_assert_eq!(x.len(), self.d);
        if !self.contains(x) {
            return None;
        }
        let side = self.side();
        let r = self.radius as i64;
        Some(x.iter().fold(0usize, |acc, &c| acc * side + (c + r) as usize))
    }

    pub fn coords_into(&self, mut index: usize, out: &mut [i64]) {
        let side = self.side();
        let r = self.radius as i64;
        for slot in out.iter_mut().rev() {
            *slot = (index % side) as i64 - r;
            index /= side;
        }
    }

    pub fn coords(&self, index: usize) -> Vec<i64> {
        let mut out = vec![0; self.d];
        self.coords_into(index, &mut out);
        out
    }

    pub fn origin_index(&self) -> usize {
        self.index(&vec![0; self.d]).expect("origin lies in every box")
    }

    /// Iterates over (index, coordinates) pairs in lexicographic order.
    pub fn sites(&self) -> impl Iterator<Item = (usize, Vec<i64>)> + '_ {
        (0..self.volume()).map(move |i| (i, self.coords(i)))
    }
}

/// A function on a box of Z^d at time `t`, e.g. a two-point function φ_t.
/// Fields built with `from_values` are nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    pub t: usize,
    geometry: BoxGeometry,
    values: Vec<f64>,
    mass: f64,
    /// Mass lost through the box boundary so far (fixed-box evolution).
    pub leak: f64,
}

impl LatticeField {
    pub fn zeros(d: usize, radius: usize, t: usize) -> Self {
        let geometry = BoxGeometry::new(d, radius);
        Self { t, geometry, values: vec![0.0; geometry.volume()], mass: 0.0, leak: 0.0 }
    }

    /// δ_{x,o} at time 0.
    pub fn delta(d: usize) -> Self {
        let mut f = Self::zeros(d, 0, 0);
        f.values[0] = 1.0;
        f.mass = 1.0;
        f
    }

    pub fn from_values(d: usize, radius: usize, t: usize, values: Vec<f64>) -> Result<Self> {
        let geometry = BoxGeometry::new(d, radius);
        if values.len() != geometry.volume() {
            return Err(invalid(format!(
                "field of radius {radius} in d = {d} needs {} values, got {}",
                geometry.volume(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(invalid(format!("field values must be finite and nonnegative, found {v}")));
        }
        let mass = compensated_sum(values.iter().copied());
        Ok(Self { t, geometry, values, mass, leak: 0.0 })
    }

    /// Like `from_values` but allows negative entries, for signed
    /// coefficient fields such as lace kernels.
    pub fn from_signed(d: usize, radius: usize, t: usize, values: Vec<f64>) -> Result<Self> {
        let geometry = BoxGeometry::new(d, radius);
        if values.len() != geometry.volume() {
            return Err(invalid(format!("field of radius {radius} in d = {d} needs {} values", geometry.volume())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("field values must be finite"));
        }
        Ok(Self::from_parts(geometry, t, values, 0.0))
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.geometry.d
    }

    #[inline]
    pub fn box_radius(&self) -> usize {
        self.geometry.radius
    }

    #[inline]
    pub fn geometry(&self) -> BoxGeometry {
        self.geometry
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Value at `x`; zero outside the box.
    pub fn get(&self, x: &[i64]) -> f64 {
        self.geometry.index(x).map_or(0.0, |i| self.values[i])
    }

    /// Iterates over (coordinates, value) for every site in the box.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        self.geometry.sites().map(move |(i, x)| (x, self.values[i]))
    }

    /// Copies the field into a box of larger radius.
    pub fn embed(&self, radius: usize) -> LatticeField {
        assert!(radius >= self.box_radius());
        if radius == self.box_radius() {
            return self.clone();
        }
        let mut out = LatticeField::zeros(self.d(), radius, self.t);
        let mut x = vec![0; self.d()];
        for (i, &v) in self.values.iter().enumerate() {
            if v != 0.0 {
                self.geometry.coords_into(i, &mut x);
                let j = out.geometry.index(&x).expect("embedding box is larger");
                out.values[j] = v;
            }
        }
        out.mass = self.mass;
        out.leak = self.leak;
        out
    }

    /// sup_x |self(x) − other(x)| over the union of both boxes.
    pub fn sup_distance(&self, other: &LatticeField) -> f64 {
        assert_eq!(self.d(), other.d());
        let r = self.box_radius().max(other.box_radius());
        let a = self.embed(r);
        let b = other.embed(r);
        a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Largest |φ(x) − φ(gx)| over all signed coordinate permutations g,
    /// checked at every site of the box.
    pub fn symmetry_defect(&self) -> f64 {
        let d = self.d();
        let perms = permutations(d);
        let mut worst = 0.0f64;
        let mut y = vec![0; d];
        for (i, x) in self.geometry.sites() {
            let v = self.values[i];
            for perm in &perms {
                for signs in 0..(1u32 << d) {
                    for (k, &p) in perm.iter().enumerate() {
                        let s = if signs >> k & 1 == 1 { -1 } else { 1 };
                        y[k] = s * x[p];
                    }
                    worst = worst.max((v - self.get(&y)).abs());
                }
            }
        }
        worst
    }

    pub(crate) fn from_parts(geometry: BoxGeometry, t: usize, values: Vec<f64>, leak: f64) -> Self {
        debug_assert_eq!(values.len(), geometry.volume());
        let mass = compensated_sum(values.iter().copied());
        Self { t, geometry, values, mass, leak }
    }
}

/// Packs a site with |x_i| < 2^31 and d ≤ 4 into one hashable word.
#[inline]
pub(crate) fn pack_site(x: &[i64]) -> u128 {
    debug_assert!(x.len() <= 4);
    x.iter().fold(0u128, |acc, &c| (acc << 32) | (c as i32 as u32) as u128)
}

#[inline]
pub(crate) fn unpack_site(key: u128, d: usize) -> Vec<i64> {
    (0..d).rev().map(|i| (key >> (32 * i)) as u32 as i32 as i64).collect()
}

pub(crate) fn permutations(d: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; d], &mut out);
    out
}
