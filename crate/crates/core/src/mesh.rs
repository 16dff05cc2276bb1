//! Triangulations of the unit disk.
//!
//! Level 0 is a center node, a ring of 8 nodes at radius 1/2 and 16 boundary
//! nodes on the unit circle. Each refinement splits every triangle into four
//! at its edge midpoints; midpoints of boundary edges are pushed out onto the
//! circle, so level `L` has `16 * 2^L` equally spaced boundary nodes and the
//! mesh is exactly the inscribed polygon.

use crate::error::{Error, Result};
use crate::scalar::Real;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

/// Levels above this are refused; level 7 already has ~260k nodes.
pub const MAX_MESH_LEVEL: u32 = 7;

const BASE_BOUNDARY_NODES: usize = 16;
const BASE_RING_NODES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct DiskMesh<T> {
    nodes: Vec<[T; 2]>,
    triangles: Vec<[usize; 3]>,
    /// Node indices ordered counter-clockwise; entry `k` sits at angle `2πk/n`.
    boundary_nodes: Vec<usize>,
    level: u32,
}

/// Boundary node count at a refinement level.
pub fn boundary_node_count(level: u32) -> usize {
    BASE_BOUNDARY_NODES << level
}

pub fn build_disk_mesh<T: Real>(level: u32) -> Result<DiskMesh<T>> {
    if level > MAX_MESH_LEVEL {
        return Err(Error::MeshLevel(level, MAX_MESH_LEVEL));
    }
    let two_pi = T::two_pi();
    let mut nodes: Vec<[T; 2]> = Vec::new();
    // Angle index on the current boundary resolution, `None` for interior nodes.
    let mut boundary_slot: Vec<Option<usize>> = Vec::new();

    nodes.push([T::zero(), T::zero()]);
    boundary_slot.push(None);
    let half = T::lit(0.5);
    for i in 0..BASE_RING_NODES {
        let a = two_pi * T::from_count(i) / T::from_count(BASE_RING_NODES);
        nodes.push([half * a.cos(), half * a.sin()]);
        boundary_slot.push(None);
    }
    for j in 0..BASE_BOUNDARY_NODES {
        let a = two_pi * T::from_count(j) / T::from_count(BASE_BOUNDARY_NODES);
        nodes.push([a.cos(), a.sin()]);
        boundary_slot.push(Some(j));
    }

    let ring = |i: usize| 1 + i % BASE_RING_NODES;
    let outer = |j: usize| 1 + BASE_RING_NODES + j % BASE_BOUNDARY_NODES;
    let mut triangles = Vec::with_capacity(4 * BASE_RING_NODES);
    for i in 0..BASE_RING_NODES {
        triangles.push([0, ring(i), ring(i + 1)]);
    }
    for i in 0..BASE_RING_NODES {
        triangles.push([ring(i), outer(2 * i), outer(2 * i + 1)]);
        triangles.push([ring(i), outer(2 * i + 1), ring(i + 1)]);
        triangles.push([ring(i + 1), outer(2 * i + 1), outer(2 * i + 2)]);
    }

    let mut n_boundary = BASE_BOUNDARY_NODES;
    for _ in 0..level {
        n_boundary = refine(&mut nodes, &mut triangles, &mut boundary_slot, n_boundary);
    }

    let mut boundary_nodes = vec![usize::MAX; n_boundary];
    for (node, slot) in boundary_slot.iter().enumerate() {
        if let Some(k) = *slot {
            boundary_nodes[k] = node;
        }
    }
    let mesh = DiskMesh {
        nodes,
        triangles,
        boundary_nodes,
        level,
    };
    debug_assert!(mesh.validate().is_ok());
    Ok(mesh)
}

fn refine<T: Real>(
    nodes: &mut Vec<[T; 2]>,
    triangles: &mut Vec<[usize; 3]>,
    boundary_slot: &mut Vec<Option<usize>>,
    n_boundary: usize,
) -> usize {
    let fine = 2 * n_boundary;
    for slot in boundary_slot.iter_mut().flatten() {
        *slot *= 2;
    }
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<[T; 2]>, slots: &mut Vec<Option<usize>>| {
        let key = (a.min(b), a.max(b));
        if let Some(&m) = midpoints.get(&key) {
            return m;
        }
        let on_circle = match (slots[a], slots[b]) {
            (Some(ka), Some(kb)) if (ka + 2) % fine == kb => Some(ka + 1),
            (Some(ka), Some(kb)) if (kb + 2) % fine == ka => Some(kb + 1),
            _ => None,
        };
        let p = match on_circle {
            Some(k) => {
                let angle = T::two_pi() * T::from_count(k) / T::from_count(fine);
                [angle.cos(), angle.sin()]
            }
            None => {
                let half = T::lit(0.5);
                [
                    half * (nodes[a][0] + nodes[b][0]),
                    half * (nodes[a][1] + nodes[b][1]),
                ]
            }
        };
        nodes.push(p);
        slots.push(on_circle);
        let m = nodes.len() - 1;
        midpoints.insert(key, m);
        m
    };

    let coarse = std::mem::take(triangles);
    triangles.reserve(4 * coarse.len());
    for [a, b, c] in coarse {
        let ab = midpoint(a, b, nodes, boundary_slot);
        let bc = midpoint(b, c, nodes, boundary_slot);
        let ca = midpoint(c, a, nodes, boundary_slot);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    fine
}

impl<T: Real> DiskMesh<T> {
    pub fn nodes(&self) -> &[[T; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn refinement_level(&self) -> u32 {
        self.level
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary_nodes.len()
    }

    /// Angle of the `k`-th boundary node.
    pub fn boundary_angle(&self, k: usize) -> T {
        T::two_pi() * T::from_count(k) / T::from_count(self.n_boundary())
    }

    pub fn signed_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        T::lit(0.5) * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn total_area(&self) -> T {
        (0..self.n_triangles()).fold(T::zero(), |acc, t| acc + self.signed_area(t))
    }

    pub fn centroid(&self, t: usize) -> [T; 2] {
        let [a, b, c] = self.triangles[t];
        let third = T::lit(1.0 / 3.0);
        [
            (self.nodes[a][0] + self.nodes[b][0] + self.nodes[c][0]) * third,
            (self.nodes[a][1] + self.nodes[b][1] + self.nodes[c][1]) * third,
        ]
    }

    /// Longest triangle edge.
    pub fn max_edge_length(&self) -> T {
        let mut h = T::zero();
        for tri in &self.triangles {
            for e in 0..3 {
                let (p, q) = (self.nodes[tri[e]], self.nodes[tri[(e + 1) % 3]]);
                let d = ((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1])).sqrt();
                h = h.max(d);
            }
        }
        h
    }

    /// Checks positive orientation, boundary placement and that boundary
    /// edges close into one polygon.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.n_triangles() {
            if self.signed_area(t) <= T::zero() {
                return Err(Error::InvalidInput(format!("triangle {t} has nonpositive area")));
            }
        }
        let tol = T::lit(1e-12).max(T::default_epsilon() * T::lit(16.0));
        for &b in &self.boundary_nodes {
            let [x, y] = self.nodes[b];
            if ((x * x + y * y).sqrt() - T::one()).abs() > tol {
                return Err(Error::InvalidInput(format!("boundary node {b} is off the unit circle")));
            }
        }
        // Edges used by exactly one triangle are boundary edges; orient them and walk.
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut next: HashMap<usize, usize> = HashMap::new();
        for tri in &self.triangles {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                if count[&(a.min(b), a.max(b))] == 1 && next.insert(a, b).is_some() {
                    return Err(Error::InvalidInput(format!("node {a} starts two boundary edges")));
                }
            }
        }
        if next.len() != self.n_boundary() {
            return Err(Error::InvalidInput(format!(
                "{} boundary edges for {} boundary nodes",
                next.len(),
                self.n_boundary()
            )));
        }
        let start = self.boundary_nodes[0];
        let mut cur = start;
        for k in 1..=self.n_boundary() {
            cur = *next
                .get(&cur)
                .ok_or_else(|| Error::InvalidInput("open boundary polygon".into()))?;
            let expected = self.boundary_nodes[k % self.n_boundary()];
            if cur != expected {
                return Err(Error::InvalidInput(format!(
                    "boundary walk reached node {cur}, expected {expected}"
                )));
            }
        }
        Ok(())
    }

    /// Plain-text cache: header `diskmesh v1 <level> <n_nodes> <n_tris>`, one
    /// `x y` line per node, one `a b c` line per triangle, then
    /// `boundary <n>` followed by the ordered boundary node indices.
    pub fn to_cache_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "diskmesh v1 {} {} {}",
            self.level,
            self.n_nodes(),
            self.n_triangles()
        );
        for p in &self.nodes {
            let _ = writeln!(s, "{:e} {:e}", p[0].as_f64(), p[1].as_f64());
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "boundary {}", self.n_boundary());
        for b in &self.boundary_nodes {
            let _ = writeln!(s, "{b}");
        }
        s
    }

    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_cache_string().as_bytes())?;
        Ok(())
    }

    pub fn read_cache(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let mut next_line = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse("unexpected end of mesh file".into()))?
                .map_err(Error::from)
        };
        let header = next_line()?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "diskmesh" || fields[1] != "v1" {
            return Err(Error::Parse(format!("bad mesh header: {header:?}")));
        }
        let level: u32 = parse(fields[2])?;
        let n_nodes: usize = parse(fields[3])?;
        let n_tris: usize = parse(fields[4])?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            let line = next_line()?;
            let v: Vec<f64> = line.split_whitespace().map(parse).collect::<Result<_>>()?;
            if v.len() != 2 {
                return Err(Error::Parse(format!("bad node line: {line:?}")));
            }
            nodes.push([T::lit(v[0]), T::lit(v[1])]);
        }
        let mut triangles = Vec::with_capacity(n_tris);
        for _ in 0..n_tris {
            let line = next_line()?;
            let v: Vec<usize> = line.split_whitespace().map(parse).collect::<Result<_>>()?;
            if v.len() != 3 || v.iter().any(|&i| i >= n_nodes) {
                return Err(Error::Parse(format!("bad triangle line: {line:?}")));
            }
            triangles.push([v[0], v[1], v[2]]);
        }
        let line = next_line()?;
        let n_boundary: usize = match line.split_whitespace().collect::<Vec<_>>()[..] {
            ["boundary", n] => parse(n)?,
            _ => return Err(Error::Parse(format!("bad boundary header: {line:?}"))),
        };
        let mut boundary_nodes = Vec::with_capacity(n_boundary);
        for _ in 0..n_boundary {
            let i: usize = parse(next_line()?.trim())?;
            if i >= n_nodes {
                return Err(Error::Parse(format!("boundary index {i} out of range")));
            }
            boundary_nodes.push(i);
        }
        let mesh = DiskMesh {
            nodes,
            triangles,
            boundary_nodes,
            level,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Reads `diskmesh_L<level>.txt` from `dir`, generating and writing it
    /// first when absent.
    pub fn load_or_build(dir: &Path, level: u32) -> Result<Self> {
        let path = cache_path(dir, level);
        if path.exists() {
            let mesh = Self::read_cache(&path)?;
            if mesh.level == level {
                return Ok(mesh);
            }
        }
        let mesh = build_disk_mesh(level)?;
        std::fs::create_dir_all(dir)?;
        mesh.write_cache(&path)?;
        Ok(mesh)
    }
}

pub fn cache_path(dir: &Path, level: u32) -> PathBuf {
    dir.join(format!("diskmesh_L{level}.txt"))
}

fn parse<V: std::str::FromStr>(s: &str) -> Result<V> {
    s.parse::<V>()
        .map_err(|_| Error::Parse(format!("cannot parse {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn level_zero_is_valid() {
        let mesh: DiskMesh<f64> = build_disk_mesh(0).unwrap();
        assert_eq!(mesh.n_nodes(), 25);
        assert_eq!(mesh.n_triangles(), 32);
        assert_eq!(mesh.n_boundary(), 16);
        mesh.validate().unwrap();
        for &b in mesh.boundary_nodes() {
            let [x, y] = mesh.nodes()[b];
            assert!(((x * x + y * y).sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn counts_per_level() {
        for level in 0..4 {
            let mesh: DiskMesh<f64> = build_disk_mesh(level).unwrap();
            assert_eq!(mesh.n_triangles(), 32 << (2 * level));
            assert_eq!(mesh.n_boundary(), boundary_node_count(level));
            // Euler: V - E + F = 1 for a disk; E = (3F + B) / 2.
            let edges = (3 * mesh.n_triangles() + mesh.n_boundary()) / 2;
            assert_eq!(mesh.n_nodes() + mesh.n_triangles(), edges + 1);
            mesh.validate().unwrap();
        }
    }

    #[test]
    fn area_matches_inscribed_polygon() {
        for level in 0..5 {
            let mesh: DiskMesh<f64> = build_disk_mesh(level).unwrap();
            let n = mesh.n_boundary() as f64;
            let polygon = 0.5 * n * (2.0 * PI / n).sin();
            assert!((mesh.total_area() - polygon).abs() < 1e-12);
            // Leading-order deficit (2π³/3)/n².
            let deficit = PI - mesh.total_area();
            let predicted = 2.0 * PI.powi(3) / (3.0 * n * n);
            assert!((deficit / predicted - 1.0).abs() < 0.02, "level {level}");
        }
    }

    #[test]
    fn edge_length_halves() {
        let h: Vec<f64> = (0..5)
            .map(|l| build_disk_mesh::<f64>(l).unwrap().max_edge_length())
            .collect();
        for w in h.windows(2) {
            let ratio = w[1] / w[0];
            assert!((0.4..=0.6).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn level_cap() {
        assert!(matches!(
            build_disk_mesh::<f64>(MAX_MESH_LEVEL + 1),
            Err(Error::MeshLevel(..))
        ));
    }

    #[test]
    fn deterministic() {
        let a: DiskMesh<f64> = build_disk_mesh(3).unwrap();
        let b: DiskMesh<f64> = build_disk_mesh(3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cache_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mesh: DiskMesh<f64> = DiskMesh::load_or_build(dir.path(), 2).unwrap();
        let text = std::fs::read_to_string(cache_path(dir.path(), 2)).unwrap();
        assert!(text.starts_with(&format!(
            "diskmesh v1 2 {} {}\n",
            mesh.n_nodes(),
            mesh.n_triangles()
        )));
        let again: DiskMesh<f64> = DiskMesh::load_or_build(dir.path(), 2).unwrap();
        assert_eq!(mesh, again);
    }

    #[test]
    fn rejects_corrupt_cache() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "diskmesh v2 0 1 1\n").unwrap();
        assert!(matches!(DiskMesh::<f64>::read_cache(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn single_precision_mesh() {
        let mesh: DiskMesh<f32> = build_disk_mesh(2).unwrap();
        assert!(mesh.signed_area(0) > 0.0);
        assert!((mesh.total_area() - std::f32::consts::PI).abs() < 0.05);
    }
}
