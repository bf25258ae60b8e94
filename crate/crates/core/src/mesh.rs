//! Uniform mesh of G = [−R_ext, R_ext] with interior-first node numbering.
//!
//! Unknowns are the nodes in the closed interval [−R_int, R_int]; nodes outside carry zero.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementTag {
    Interior,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    Identical,
    VertexSharing,
    Disjoint,
}

/// x = offset + jacobian·x̂ on the reference interval [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub offset: f64,
    pub jacobian: f64,
}

impl AffineMap {
    pub fn apply(&self, xhat: f64) -> f64 {
        self.offset + self.jacobian * xhat
    }
}

#[derive(Debug, Clone)]
pub struct Mesh1D {
    r_int: f64,
    r_ext: f64,
    level: u32,
    h: f64,
    /// Elements per unit length, 2^level.
    scale: usize,
    n_elements: usize,
    /// Node ids in geometric (left-to-right) order.
    geo_to_id: Vec<usize>,
    id_to_geo: Vec<usize>,
    n_unknowns: usize,
}

/// Serialized mesh summary.
#[derive(Debug, Clone, Serialize)]
pub struct MeshInfo {
    pub r_int: f64,
    pub r_ext: f64,
    pub level: u32,
    pub h: f64,
    pub n: usize,
    pub n_all: usize,
    pub unknowns: &'static str,
}

fn multiple_of(value: f64, scale: usize, name: &str, level: u32) -> Result<usize> {
    let k = value * scale as f64;
    if !(value > 0.0) || !k.is_finite() || (k - k.round()).abs() > 1e-9 * k.abs().max(1.0) {
        return Err(Error::config(format!(
            "{name} = {value} is not a positive integer multiple of h = 2^-{level}"
        )));
    }
    Ok(k.round() as usize)
}

impl Mesh1D {
    pub fn build_uniform(r_int: f64, r_ext: f64, level: u32) -> Result<Self> {
        if level > 24 {
            return Err(Error::config(format!("domain.level = {level} is too large")));
        }
        let scale = 1usize << level;
        let ki = multiple_of(r_int, scale, "domain.r_int", level)?;
        let ke = multiple_of(r_ext, scale, "domain.r_ext", level)?;
        if ke <= ki {
            return Err(Error::config(format!(
                "domain.r_ext = {r_ext} must exceed domain.r_int = {r_int}"
            )));
        }
        let n_elements = 2 * ke;
        let n_nodes = n_elements + 1;
        let first_unknown = ke - ki;
        let last_unknown = ke + ki;
        let n_unknowns = last_unknown - first_unknown + 1;
        let mut geo_to_id = vec![0; n_nodes];
        let mut next_ext = n_unknowns;
        for (g, id) in geo_to_id.iter_mut().enumerate() {
            if (first_unknown..=last_unknown).contains(&g) {
                *id = g - first_unknown;
            } else {
                *id = next_ext;
                next_ext += 1;
            }
        }
        let mut id_to_geo = vec![0; n_nodes];
        for (g, &id) in geo_to_id.iter().enumerate() {
            id_to_geo[id] = g;
        }
        Ok(Self {
            r_int,
            r_ext,
            level,
            h: 1.0 / scale as f64,
            scale,
            n_elements,
            geo_to_id,
            id_to_geo,
            n_unknowns,
        })
    }

    pub fn r_int(&self) -> f64 {
        self.r_int
    }

    pub fn r_ext(&self) -> f64 {
        self.r_ext
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn n_nodes(&self) -> usize {
        self.n_elements + 1
    }

    /// Number of unknowns N.
    pub fn n_unknowns(&self) -> usize {
        self.n_unknowns
    }

    pub fn info(&self) -> MeshInfo {
        MeshInfo {
            r_int: self.r_int,
            r_ext: self.r_ext,
            level: self.level,
            h: self.h,
            n: self.n_unknowns,
            n_all: self.n_nodes(),
            unknowns: "closed interval [-r_int, r_int]",
        }
    }

    fn geo_coord(&self, g: usize) -> f64 {
        // Exact in binary floating point: h is a power of two.
        -self.r_ext + g as f64 * self.h
    }

    /// Coordinate of the node with the given id.
    pub fn node_coord(&self, id: usize) -> f64 {
        self.geo_coord(self.id_to_geo[id])
    }

    /// Coordinates of the unknowns, ascending.
    pub fn unknown_coords(&self) -> Vec<f64> {
        (0..self.n_unknowns).map(|i| self.node_coord(i)).collect()
    }

    /// Node ids (left, right) of element `e`; elements are ordered left to right.
    pub fn element_nodes(&self, e: usize) -> [usize; 2] {
        [self.geo_to_id[e], self.geo_to_id[e + 1]]
    }

    /// Unknown index of a node id, if it is an unknown.
    pub fn unknown_index(&self, id: usize) -> Option<usize> {
        (id < self.n_unknowns).then_some(id)
    }

    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        (self.geo_coord(e), self.geo_coord(e + 1))
    }

    pub fn element_tag(&self, e: usize) -> ElementTag {
        let (a, b) = self.element_bounds(e);
        if a >= -self.r_int && b <= self.r_int {
            ElementTag::Interior
        } else {
            ElementTag::Exterior
        }
    }

    /// True if the element touches at least one unknown.
    pub fn element_has_unknown(&self, e: usize) -> bool {
        self.element_nodes(e).iter().any(|&n| n < self.n_unknowns)
    }

    /// Interior elements, left to right.
    pub fn interior_elements(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_elements).filter(|&e| self.element_tag(e) == ElementTag::Interior)
    }

    /// T_e(x̂) = x_left + h·x̂.
    pub fn element_map(&self, e: usize) -> AffineMap {
        AffineMap { offset: self.geo_coord(e), jacobian: self.h }
    }

    /// T_e(x̂) = x_right − h·x̂, so that 0 maps to the right endpoint.
    pub fn reversed_map(&self, e: usize) -> AffineMap {
        AffineMap { offset: self.geo_coord(e + 1), jacobian: -self.h }
    }

    pub fn classify_pair(&self, e1: usize, e2: usize) -> PairKind {
        match e1.abs_diff(e2) {
            0 => PairKind::Identical,
            1 => PairKind::VertexSharing,
            _ => PairKind::Disjoint,
        }
    }

    /// Piecewise-linear hat function of node `id` evaluated at x.
    pub fn hat_eval(&self, id: usize, x: f64) -> f64 {
        let xi = self.node_coord(id);
        let t = 1.0 - (x - xi).abs() / self.h;
        t.max(0.0)
    }

    /// Index of the node nearest to x among the unknowns, with its coordinate.
    pub fn nearest_unknown(&self, x: f64) -> Option<(usize, f64)> {
        if !(x >= -self.r_int && x <= self.r_int) {
            return None;
        }
        let k = ((x + self.r_int) * self.scale as f64).round() as usize;
        let k = k.min(self.n_unknowns - 1);
        Some((k, self.node_coord(k)))
    }
}
