//! Quasi-uniform triangulations of the disk `B_r(0)`.
//!
//! Meshes start from a regular hexagon fan (origin plus six rim nodes) and are
//! refined uniformly by edge bisection. Midpoints of boundary edges are pushed
//! radially onto the circle so the polygonal domain converges to the disk with
//! an `O(h^2)` area defect.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Refinement cap; level 9 already has 1.5M triangles.
pub const MAX_LEVEL: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    pub nodes: Vec<[T; 2]>,
    /// Counter-clockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    pub level: usize,
    pub radius: T,
}

pub fn build_disk_mesh<T: Scalar>(radius: T, level: usize) -> Result<Mesh<T>> {
    if !(radius > T::zero()) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    if level > MAX_LEVEL {
        return Err(Error::InvalidArgument(format!("refinement level {level} exceeds cap {MAX_LEVEL}")));
    }
    let mut nodes = vec![[T::zero(), T::zero()]];
    let third_pi = T::lit(std::f64::consts::PI / 3.0);
    for k in 0..6 {
        let theta = third_pi * T::from_usize_lossy(k);
        nodes.push([radius * theta.cos(), radius * theta.sin()]);
    }
    let triangles = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
    let mut boundary = vec![true; 7];
    boundary[0] = false;
    let mut mesh = Mesh { nodes, triangles, boundary, level: 0, radius };
    for _ in 0..level {
        mesh = refine(&mesh)?;
    }
    Ok(mesh)
}

/// Uniform red refinement. Parent nodes keep their indices; new edge nodes follow
/// in sorted parent-edge order.
pub fn refine<T: Scalar>(mesh: &Mesh<T>) -> Result<Mesh<T>> {
    if mesh.level >= MAX_LEVEL {
        return Err(Error::InvalidArgument(format!("refinement level {} exceeds cap {MAX_LEVEL}", mesh.level + 1)));
    }
    let edges = mesh.edge_counts();
    let n = mesh.nodes.len();
    let mut nodes = mesh.nodes.clone();
    let mut boundary = mesh.boundary.clone();
    let mut midpoint = HashMap::with_capacity(edges.len());
    let half = T::lit(0.5);
    for (k, (&(a, b), &count)) in edges.iter().enumerate() {
        let pa = mesh.nodes[a];
        let pb = mesh.nodes[b];
        let mut m = [half * (pa[0] + pb[0]), half * (pa[1] + pb[1])];
        let on_boundary = count == 1;
        if on_boundary {
            let r = (m[0] * m[0] + m[1] * m[1]).sqrt();
            m = [m[0] * mesh.radius / r, m[1] * mesh.radius / r];
        }
        nodes.push(m);
        boundary.push(on_boundary);
        midpoint.insert((a, b), n + k);
    }
    let mid = |a: usize, b: usize| midpoint[&(a.min(b), a.max(b))];
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    Ok(Mesh { nodes, triangles, boundary, level: mesh.level + 1, radius: mesh.radius })
}

impl<T: Scalar> Mesh<T> {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_boundary(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    pub fn num_interior(&self) -> usize {
        self.nodes.len() - self.num_boundary()
    }

    pub fn signed_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        T::lit(0.5) * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn total_area(&self) -> T {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// Sorted undirected edges with the number of triangles containing each.
    pub fn edge_counts(&self) -> std::collections::BTreeMap<(usize, usize), usize> {
        let mut edges = std::collections::BTreeMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }

    pub fn num_edges(&self) -> usize {
        self.edge_counts().len()
    }

    fn edge_len(&self, a: usize, b: usize) -> T {
        let (pa, pb) = (self.nodes[a], self.nodes[b]);
        ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt()
    }

    /// Diameter of triangle `t` (its longest edge).
    pub fn diameter(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t];
        self.edge_len(a, b).max(self.edge_len(b, c)).max(self.edge_len(c, a))
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_degrees(&self) -> T {
        let mut min = T::infinity();
        for &[a, b, c] in &self.triangles {
            let (la, lb, lc) = (self.edge_len(b, c), self.edge_len(c, a), self.edge_len(a, b));
            for (opp, s1, s2) in [(la, lb, lc), (lb, lc, la), (lc, la, lb)] {
                let cos = (s1 * s1 + s2 * s2 - opp * opp) / (T::lit(2.0) * s1 * s2);
                let angle = cos.max(-T::one()).min(T::one()).acos().to_degrees();
                min = min.min(angle);
            }
        }
        min
    }

    /// Checks positive orientation, boundary placement and conformity.
    pub fn validate(&self) -> Result<()> {
        if self.boundary.len() != self.nodes.len() {
            return Err(Error::DimensionMismatch { expected: self.nodes.len(), found: self.boundary.len() });
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= self.nodes.len()) {
                return Err(Error::InvalidArgument(format!("triangle {t} references a missing node")));
            }
            let area = self.signed_area(t);
            if !(area > T::zero()) {
                return Err(Error::DegenerateTriangle { index: t, area: area.as_f64() });
            }
        }
        let tol = T::lit(1e-12) * self.radius;
        for (i, p) in self.nodes.iter().enumerate() {
            if self.boundary[i] {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if (r - self.radius).abs() > tol {
                    return Err(Error::InvalidArgument(format!(
                        "boundary node {i} at distance {r} from origin, radius {}",
                        self.radius
                    )));
                }
            }
        }
        // Conforming and consistently oriented: every directed edge appears at most once.
        let mut directed = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                if let Some(prev) = directed.insert((tri[k], tri[(k + 1) % 3]), t) {
                    return Err(Error::InvalidArgument(format!(
                        "edge ({}, {}) used with the same orientation by triangles {prev} and {t}",
                        tri[k],
                        tri[(k + 1) % 3]
                    )));
                }
            }
        }
        for (&(a, b), &count) in &self.edge_counts() {
            if count > 2 {
                return Err(Error::InvalidArgument(format!("edge ({a}, {b}) shared by {count} triangles")));
            }
            if count == 1 && !(self.boundary[a] && self.boundary[b]) {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}) lies on the hull but is not marked as boundary"
                )));
            }
        }
        Ok(())
    }

    /// Plain-text export: header `N M`, `N` lines `x y b`, then `M` lines `i j k`.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.nodes.len(), self.triangles.len())?;
        for (p, &b) in self.nodes.iter().zip(&self.boundary) {
            writeln!(w, "{:.17e} {:.17e} {}", p[0].as_f64(), p[1].as_f64(), u8::from(b))?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    pub fn read_text(text: &str, level: usize, radius: T) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let parse_err = |msg: &str| Error::Parse(format!("mesh text: {msg}"));
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(|| parse_err("missing header"))?
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| parse_err("bad header")))
            .collect::<Result<_>>()?;
        let [n, m] = header[..] else { return Err(parse_err("header must be `N M`")) };
        let mut nodes = Vec::with_capacity(n);
        let mut boundary = Vec::with_capacity(n);
        for _ in 0..n {
            let line = lines.next().ok_or_else(|| parse_err("truncated node block"))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(parse_err("node line must be `x y b`"));
            }
            let x: f64 = f[0].parse().map_err(|_| parse_err("bad x"))?;
            let y: f64 = f[1].parse().map_err(|_| parse_err("bad y"))?;
            nodes.push([T::lit(x), T::lit(y)]);
            boundary.push(f[2] == "1");
        }
        let mut triangles = Vec::with_capacity(m);
        for _ in 0..m {
            let line = lines.next().ok_or_else(|| parse_err("truncated triangle block"))?;
            let idx: Vec<usize> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| parse_err("bad index")))
                .collect::<Result<_>>()?;
            let [i, j, k] = idx[..] else { return Err(parse_err("triangle line must be `i j k`")) };
            triangles.push([i, j, k]);
        }
        Ok(Mesh { nodes, triangles, boundary, level, radius })
    }

    /// Legacy ASCII VTK unstructured grid with nodal point data.
    pub fn write_vtk<W: Write>(&self, mut w: W, fields: &[(&str, &[T])]) -> Result<()> {
        for (name, values) in fields {
            crate::error::check_len(self.nodes.len(), values.len())
                .map_err(|_| Error::InvalidArgument(format!("field `{name}` is not nodal")))?;
        }
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "gradstate level {}", self.level)?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {} double", self.nodes.len())?;
        for p in &self.nodes {
            writeln!(w, "{:.17e} {:.17e} 0", p[0].as_f64(), p[1].as_f64())?;
        }
        let m = self.triangles.len();
        writeln!(w, "CELLS {} {}", m, 4 * m)?;
        for t in &self.triangles {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(w, "CELL_TYPES {m}")?;
        for _ in 0..m {
            writeln!(w, "5")?;
        }
        if !fields.is_empty() {
            writeln!(w, "POINT_DATA {}", self.nodes.len())?;
            for (name, values) in fields {
                writeln!(w, "SCALARS {name} double 1")?;
                writeln!(w, "LOOKUP_TABLE default")?;
                for v in values.iter() {
                    writeln!(w, "{:.17e}", v.as_f64())?;
                }
            }
        }
        Ok(())
    }
}

/// Mesh size `h = max_T diam(T)`.
pub fn mesh_size<T: Scalar>(mesh: &Mesh<T>) -> T {
    (0..mesh.triangles.len()).fold(T::zero(), |h, t| h.max(mesh.diameter(t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hexagon_fan_counts() {
        let m = build_disk_mesh(1.0, 0).unwrap();
        assert_eq!(m.num_nodes(), 7);
        assert_eq!(m.triangles.len(), 6);
        assert_eq!(m.num_boundary(), 6);
        m.validate().unwrap();
    }

    #[test]
    fn scaled_fan_boundary_on_circle() {
        let m = build_disk_mesh(2.0f64, 0).unwrap();
        for (p, &b) in m.nodes.iter().zip(&m.boundary) {
            if b {
                assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 2.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn level_two_area() {
        // Oracle: inscribed 24-gon area (24/2) sin(2pi/24) = 3.1058285...
        let m = build_disk_mesh(1.0, 2).unwrap();
        let polygon = 12.0 * (2.0 * PI / 24.0).sin();
        let area = m.total_area();
        assert!((area - polygon).abs() < 1e-12, "{area} vs {polygon}");
        assert!(area > PI - 0.3 && area < PI);
    }

    #[test]
    fn refine_splits_into_four_and_doubles_boundary() {
        let m0 = build_disk_mesh(1.0, 0).unwrap();
        let m1 = refine(&m0).unwrap();
        assert_eq!(m1.triangles.len(), 24);
        assert_eq!(m1.num_boundary(), 12);
        assert_eq!(m1.num_nodes(), m0.num_nodes() + m0.num_edges());
    }

    #[test]
    fn unit_fan_mesh_size() {
        let m = build_disk_mesh(1.0f64, 0).unwrap();
        assert!((mesh_size(&m) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn right_triangle_mesh_size() {
        let m = Mesh {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            boundary: vec![false; 3],
            level: 0,
            radius: 1.0,
        };
        assert!((mesh_size(&m) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn level_one_diameter() {
        // The longest level-1 edge joins a spoke midpoint (0.5, 0) to the projected rim
        // midpoint at angle 30 degrees: sqrt(1 + 1/4 - cos 30deg) = 0.6197...
        let h0 = mesh_size(&build_disk_mesh(1.0, 0).unwrap());
        let h1 = mesh_size(&build_disk_mesh(1.0, 1).unwrap());
        let oracle = (1.25 - (PI / 6.0).cos()).sqrt();
        assert!((h1 - oracle).abs() < 1e-14, "{h1} vs {oracle}");
        assert!(h1 < h0);
        // Boundary projection perturbs the halving at coarse levels only.
        let h4 = mesh_size(&build_disk_mesh(1.0f64, 4).unwrap());
        let h5 = mesh_size(&build_disk_mesh(1.0, 5).unwrap());
        assert!((h5 / h4 - 0.5).abs() < 0.05, "{}", h5 / h4);
    }

    #[test]
    fn invariants_through_level_five() {
        let mut m = build_disk_mesh(2.0, 0).unwrap();
        for level in 0..=5 {
            m.validate().unwrap();
            assert_eq!(m.level, level);
            assert!(m.min_angle_degrees() >= 20.0, "level {level}: {}", m.min_angle_degrees());
            let h = mesh_size(&m);
            let area = m.total_area();
            assert!(area <= PI * 4.0);
            // Circular-segment defect is bounded by (pi r^2) - area <= 2 h^2 here.
            assert!(PI * 4.0 - area <= 2.0 * h * h, "level {level}");
            if level < 5 {
                let next = refine(&m).unwrap();
                assert_eq!(next.num_nodes(), m.num_nodes() + m.num_edges());
                assert_eq!(next.num_boundary(), 2 * m.num_boundary());
                assert!(mesh_size(&next) < h);
                m = next;
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_disk_mesh(0.0, 1).is_err());
        assert!(build_disk_mesh(-1.0, 1).is_err());
        assert!(build_disk_mesh(1.0, MAX_LEVEL + 1).is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = build_disk_mesh(1.5, 2).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(&format!("{} {}\n", m.num_nodes(), m.triangles.len())));
        let back = Mesh::read_text(&text, 2, 1.5).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn deterministic_numbering() {
        assert_eq!(build_disk_mesh(1.0, 3).unwrap(), build_disk_mesh(1.0, 3).unwrap());
    }

    #[test]
    fn generic_over_f32() {
        let m = build_disk_mesh(1.0f32, 2).unwrap();
        assert_eq!(m.triangles.len(), 96);
        assert!(m.total_area() > 3.0);
    }
}
