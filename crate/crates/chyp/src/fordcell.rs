//! Cell structure of the standard Ford polytope `D_n`.
//!
//! The boundary of its ideal boundary is a 2-sphere tiled by polygons that
//! lie on the ideal spheres `∂I(2 pi k / n)`. Faces are given by their edge
//! label sequences; vertices are synthesised by gluing polygon corners along
//! shared edges.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use petgraph::algo::is_isomorphic_matching;
use petgraph::graph::UnGraph;

use crate::cproj::{cayley_matrix, FormKind, ProjectivePoint};
use crate::ellip::{normalising_matrix, pushed_circle_point, TorusPoint};
use crate::heis::{heis_mul, CyganSphere, HoroPoint};
use crate::isect::{omega_from_psi, standard_sphere_side, w_coefficients, DiskCoords};
use crate::{Error, Result, C64};

/// Edge `e_{j,k}` (or `e'_{j,k}`) on the ideal circle of `I(θ_j) ∩ I(θ_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeLabel {
    pub j: usize,
    pub k: usize,
    pub primed: bool,
}

impl EdgeLabel {
    pub fn new(j: usize, k: usize, primed: bool) -> Self {
        EdgeLabel {
            j: j.min(k),
            k: j.max(k),
            primed,
        }
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = if self.primed { "'" } else { "" };
        write!(f, "e{p}_{{{},{}}}", self.j, self.k)
    }
}

/// Face `f_k` (or `f'_k`) on the ideal sphere `∂I(2 pi k / n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceLabel {
    pub k: usize,
    pub primed: bool,
}

impl fmt::Display for FaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = if self.primed { "'" } else { "" };
        write!(f, "f{p}_{}", self.k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub label: FaceLabel,
    /// Edge indices in counterclockwise order.
    pub edges: Vec<usize>,
    /// `corners[i]` is the vertex where edge `i` starts.
    pub corners: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub label: EdgeLabel,
    pub faces: [usize; 2],
    /// Start and end vertex as traversed by `faces[0]`.
    pub ends: [usize; 2],
}

/// How polygon corners are matched across a shared edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gluing {
    /// Faces as listed; shared edges run in opposite directions.
    Direct,
    /// Every boundary read clockwise, the mirror image of `Direct`.
    Mirrored,
}

/// The 2-complex `∂∂_∞ D_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellComplex2 {
    pub n: usize,
    pub faces: Vec<Face>,
    pub edges: Vec<Edge>,
    pub vertex_count: usize,
}

fn face_lists(n: usize) -> Vec<(FaceLabel, Vec<EdgeLabel>)> {
    let e = EdgeLabel::new;
    let f = |k, primed| FaceLabel { k, primed };
    let mut out = Vec::new();
    let mut f1 = vec![e(1, n - 1, false)];
    f1.extend((2..n - 1).map(|k| e(1, k, true)));
    f1.push(e(1, n - 1, true));
    f1.extend((2..n - 1).map(|k| e(1, k, false)));
    out.push((f(1, false), f1));
    let mut fl = vec![e(1, n - 1, true)];
    fl.extend((2..n - 1).rev().map(|k| e(n - 1, k, true)));
    fl.push(e(1, n - 1, false));
    fl.extend((2..n - 1).rev().map(|k| e(n - 1, k, false)));
    out.push((f(n - 1, false), fl));
    for p in [false, true] {
        if n == 4 {
            out.push((f(2, p), vec![e(1, 2, p), e(n - 1, 2, p)]));
        }
        if n >= 5 {
            out.push((f(2, p), vec![e(1, 2, p), e(n - 1, 2, p), e(2, 3, p)]));
            out.push((
                f(n - 2, p),
                vec![e(n - 1, n - 2, p), e(1, n - 2, p), e(n - 3, n - 2, p)],
            ));
        }
        for k in 3..n.saturating_sub(2) {
            out.push((
                f(k, p),
                vec![e(1, k, p), e(k - 1, k, p), e(n - 1, k, p), e(k, k + 1, p)],
            ));
        }
    }
    out.sort_by_key(|(l, _)| *l);
    out
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
    }
}

/// `∂∂_∞ D_n` with the direct gluing.
pub fn build_ideal_boundary_complex(n: usize) -> Result<CellComplex2> {
    build_with_gluing(n, Gluing::Direct)
}

pub fn build_with_gluing(n: usize, gluing: Gluing) -> Result<CellComplex2> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("n = {n} must be at least 3")));
    }
    let lists: Vec<(FaceLabel, Vec<EdgeLabel>)> = face_lists(n)
        .into_iter()
        .map(|(l, mut es)| {
            if gluing == Gluing::Mirrored {
                es.reverse();
            }
            (l, es)
        })
        .collect();
    // Corners are numbered consecutively face by face.
    let offsets: Vec<usize> = lists
        .iter()
        .scan(0, |acc, (_, es)| {
            let o = *acc;
            *acc += es.len();
            Some(o)
        })
        .collect();
    let total: usize = lists.iter().map(|(_, es)| es.len()).sum();
    let mut occ: HashMap<EdgeLabel, Vec<(usize, usize)>> = HashMap::new();
    for (fi, (_, es)) in lists.iter().enumerate() {
        for (i, e) in es.iter().enumerate() {
            occ.entry(*e).or_default().push((fi, i));
        }
    }
    let mut uf = UnionFind((0..total).collect());
    let mut labels: Vec<EdgeLabel> = occ.keys().copied().collect();
    labels.sort();
    for l in &labels {
        let o = &occ[l];
        if o.len() != 2 {
            return Err(Error::Degenerate(format!("edge {l} borders {} faces", o.len())));
        }
        let corner = |(fi, i): (usize, usize), shift: usize| {
            offsets[fi] + (i + shift) % lists[fi].1.len()
        };
        // Start of the edge in one face is its end in the other.
        uf.union(corner(o[0], 0), corner(o[1], 1));
        uf.union(corner(o[0], 1), corner(o[1], 0));
    }
    let mut vid: HashMap<usize, usize> = HashMap::new();
    let mut vertex_of = |uf: &mut UnionFind, c: usize| {
        let r = uf.find(c);
        let next = vid.len();
        *vid.entry(r).or_insert(next)
    };
    let edge_index: HashMap<EdgeLabel, usize> =
        labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let mut faces = Vec::with_capacity(lists.len());
    for (fi, (label, es)) in lists.iter().enumerate() {
        let corners = (0..es.len())
            .map(|i| vertex_of(&mut uf, offsets[fi] + i))
            .collect();
        faces.push(Face {
            label: *label,
            edges: es.iter().map(|e| edge_index[e]).collect(),
            corners,
        });
    }
    let edges = labels
        .iter()
        .map(|l| {
            let o = &occ[l];
            let f0 = &faces[o[0].0];
            let m = f0.corners.len();
            Edge {
                label: *l,
                faces: [o[0].0, o[1].0],
                ends: [f0.corners[o[0].1], f0.corners[(o[0].1 + 1) % m]],
            }
        })
        .collect();
    let vertex_count = vid.len();
    Ok(CellComplex2 {
        n,
        faces,
        edges,
        vertex_count,
    })
}

impl CellComplex2 {
    /// `V - E + F`.
    pub fn euler(&self) -> i64 {
        self.vertex_count as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    /// Every edge borders exactly two distinct faces.
    pub fn edges_have_two_faces(&self) -> bool {
        let mut count = vec![0usize; self.edges.len()];
        for f in &self.faces {
            for &e in &f.edges {
                count[e] += 1;
            }
        }
        count.iter().all(|&c| c == 2) && self.edges.iter().all(|e| e.faces[0] != e.faces[1])
    }

    /// Sorted list of polygon sizes.
    pub fn face_degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.faces.iter().map(|f| f.edges.len()).collect();
        d.sort_unstable();
        d
    }

    pub fn face(&self, label: FaceLabel) -> Option<&Face> {
        self.faces.iter().find(|f| f.label == label)
    }

    /// Spheres `j` with an edge `e_{j,k}` on the boundary of `face`.
    pub fn bordering_spheres(&self, face: &Face) -> BTreeSet<usize> {
        face.edges
            .iter()
            .map(|&e| {
                let l = self.edges[e].label;
                if l.j == face.label.k {
                    l.k
                } else {
                    l.j
                }
            })
            .collect()
    }

    /// Faces as nodes weighted by their sphere index; one edge per adjacent pair.
    pub fn face_adjacency_graph(&self) -> UnGraph<usize, ()> {
        let mut g = UnGraph::new_undirected();
        let nodes: Vec<_> = self.faces.iter().map(|f| g.add_node(f.label.k)).collect();
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            let (a, b) = (e.faces[0].min(e.faces[1]), e.faces[0].max(e.faces[1]));
            if seen.insert((a, b)) {
                g.add_edge(nodes[a], nodes[b], ());
            }
        }
        g
    }

    /// Vertex/edge/face incidence graph, nodes weighted by dimension.
    pub fn incidence_graph(&self) -> UnGraph<u8, ()> {
        let mut g = UnGraph::new_undirected();
        let vs: Vec<_> = (0..self.vertex_count).map(|_| g.add_node(0u8)).collect();
        let es: Vec<_> = self.edges.iter().map(|_| g.add_node(1u8)).collect();
        for f in &self.faces {
            let fnode = g.add_node(2u8);
            for &e in &f.edges {
                g.add_edge(fnode, es[e], ());
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            g.add_edge(es[i], vs[e.ends[0]], ());
            if e.ends[1] != e.ends[0] {
                g.add_edge(es[i], vs[e.ends[1]], ());
            }
        }
        g
    }
}

/// Whether the direct and mirrored gluings give isomorphic complexes.
pub fn gluings_isomorphic(n: usize) -> Result<bool> {
    let a = build_with_gluing(n, Gluing::Direct)?;
    let b = build_with_gluing(n, Gluing::Mirrored)?;
    Ok(a.euler() == b.euler()
        && is_isomorphic_matching(
            &a.incidence_graph(),
            &b.incidence_graph(),
            |x, y| x == y,
            |_, _| true,
        ))
}

/// A side of the cone: the cone over one base face.
#[derive(Debug, Clone, PartialEq)]
pub struct Side {
    pub face: usize,
    /// Base vertices of the face followed by the apex.
    pub vertices: Vec<usize>,
}

/// The cone over `∂∂_∞ D_n` with apex the interior point `[0,0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellComplex3 {
    pub base: CellComplex2,
    /// Vertex index of the apex (one past the base vertices).
    pub apex: usize,
    pub sides: Vec<Side>,
}

impl CellComplex3 {
    /// Ball point of the apex.
    pub fn apex_point(&self) -> ProjectivePoint {
        ProjectivePoint::from_coords(C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), FormKind::Ball)
            .expect("nonzero")
    }
}

pub fn cone_complex(base: CellComplex2) -> CellComplex3 {
    let apex = base.vertex_count;
    let sides = base
        .faces
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let mut vertices: Vec<usize> = f.corners.clone();
            vertices.dedup();
            vertices.push(apex);
            Side { face: i, vertices }
        })
        .collect();
    CellComplex3 { base, apex, sides }
}

/// Generators of `<A, B | B^n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gen {
    A,
    B,
}

/// A word in `A, B` as a list of syllables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<(Gen, i64)>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn a(k: i64) -> Self {
        Word(vec![(Gen::A, k)])
    }

    pub fn b(k: i64) -> Self {
        Word(vec![(Gen::B, k)])
    }

    /// `self * other`.
    pub fn mul(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend(other.0.iter().copied());
        Word(v)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&(g, e)| (g, -e)).collect())
    }

    /// `A^k self A^{-k}`.
    pub fn conj_a(&self, k: i64) -> Word {
        Word::a(k).mul(self).mul(&Word::a(-k))
    }

    /// Free reduction with `B`-exponents taken modulo `n`.
    pub fn reduce(&self, n: i64) -> Word {
        let mut out: Vec<(Gen, i64)> = Vec::new();
        for &(g, e) in &self.0 {
            let mut e = e;
            if let Some(&(lg, le)) = out.last() {
                if lg == g {
                    out.pop();
                    e += le;
                }
            }
            if g == Gen::B {
                e = e.rem_euclid(n);
                if e > n / 2 {
                    e -= n;
                }
            }
            if e != 0 {
                out.push((g, e));
            }
        }
        Word(out)
    }

    pub fn is_identity(&self, n: i64) -> bool {
        self.reduce(n).0.is_empty()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (g, e) in &self.0 {
            let s = match g {
                Gen::A => "A",
                Gen::B => "B",
            };
            if *e == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Image of the spheres `I(B^a)` under the pairing `B^m` (`m` one of them):
/// `I(B^m) -> I(B^{-m})` and `I(B^a) -> I(B^{a-m})`.
fn apply_pairing(spheres: &[i64], m: i64, n: i64) -> Vec<i64> {
    spheres
        .iter()
        .map(|&a| if a == m { (-m).rem_euclid(n) } else { (a - m).rem_euclid(n) })
        .collect()
}

/// One step of a ridge cycle: the ridge `I_{head} ∩ I_{tail}` and the side
/// pairing applied to it.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeStep {
    pub head: i64,
    pub tail: i64,
    pub pairing: Word,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeCycle {
    pub j: i64,
    pub k: i64,
    pub steps: Vec<RidgeStep>,
    /// Cycle transformation, the product of the pairings in order of
    /// application (last applied on the left).
    pub product: Word,
}

impl RidgeCycle {
    pub fn is_trivial(&self, n: i64) -> bool {
        self.product.is_identity(n)
    }
}

/// The triangle cycles `I_{-1,k} ∩ I_{-j,k} -> I_{1,k} ∩ I_{-(j-1),k} ->
/// I_{j,k} ∩ I_{j-1,k} -> back`, for `j = 2..n-1`.
///
/// Each step applies the pairing of the head side; the image of the head is
/// the next tail. Several ridges may sit on the same pair of spheres, so the
/// cycle is followed for its three steps and then checked for closure.
pub fn ridge_cycles(n: usize, k: i64) -> Result<Vec<RidgeCycle>> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("n = {n} must be at least 3")));
    }
    let ni = n as i64;
    let mut out = Vec::new();
    for j in 2..ni {
        let start = (ni - 1, ni - j);
        let (mut head, mut tail) = start;
        let mut steps = Vec::new();
        let mut product = Word::identity();
        for _ in 0..3 {
            let pairing = Word::b(head).conj_a(k);
            steps.push(RidgeStep {
                head,
                tail,
                pairing: pairing.clone(),
            });
            product = pairing.mul(&product);
            let img = apply_pairing(&[head, tail], head, ni);
            (head, tail) = (img[1], img[0]);
        }
        if (head, tail) != start {
            return Err(Error::Degenerate(format!("ridge cycle for j = {j} does not close")));
        }
        out.push(RidgeCycle {
            j,
            k,
            steps,
            product: product.reduce(ni),
        });
    }
    Ok(out)
}

/// Ideal vertices on three spheres and the pairings between them:
/// `N1 = I_1 ∩ I_{j+1} ∩ I_{j+2}`, `N2 = I_1 ∩ I_{-j} ∩ I_{-(j+1)}`,
/// `N3 = I_{-1} ∩ I_{-(j+1)} ∩ I_{-(j+2)}`, `N4 = I_{-1} ∩ I_j ∩ I_{j+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexCycle {
    pub j: i64,
    /// Sphere exponents of `N1..N4`.
    pub nodes: [[i64; 3]; 4],
    /// `(from, to, B-exponent)` conjugated by `A^k`.
    pub arrows: Vec<(usize, usize, Word)>,
    /// Every arrow maps its source spheres onto its target spheres.
    pub arrows_valid: bool,
    /// All paths between two nodes give the same element.
    pub consistent: bool,
}

pub fn ideal_vertex_cycles(n: usize, k: i64) -> Result<Vec<VertexCycle>> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("n = {n} must be at least 3")));
    }
    let ni = n as i64;
    let m = |x: i64| x.rem_euclid(ni);
    let mut out = Vec::new();
    for j in 1..=(ni - 3) {
        let nodes = [
            [m(1), m(j + 1), m(j + 2)],
            [m(1), m(-j), m(-(j + 1))],
            [m(-1), m(-(j + 1)), m(-(j + 2))],
            [m(-1), m(j), m(j + 1)],
        ];
        let table: [(usize, usize, i64); 6] = [
            (0, 1, j + 1),
            (0, 2, j + 2),
            (2, 1, -1),
            (3, 2, j + 1),
            (3, 0, -1),
            (3, 1, j),
        ];
        let sorted = |v: &[i64]| {
            let mut v = v.to_vec();
            v.sort_unstable();
            v
        };
        let mut arrows_valid = true;
        let mut arrows = Vec::new();
        for &(from, to, e) in &table {
            let e = m(e);
            if !nodes[from].contains(&e)
                || sorted(&apply_pairing(&nodes[from], e, ni)) != sorted(&nodes[to])
            {
                arrows_valid = false;
            }
            arrows.push((from, to, Word::b(e).conj_a(k)));
        }
        // Propagate words from N4 and compare every arrow against them.
        let mut words: [Option<Word>; 4] = [None, None, None, Some(Word::identity())];
        for _ in 0..4 {
            for (from, to, g) in &arrows {
                if let (Some(w), None) = (words[*from].clone(), &words[*to]) {
                    words[*to] = Some(g.mul(&w));
                }
            }
        }
        let consistent = arrows.iter().all(|(from, to, g)| match (&words[*from], &words[*to]) {
            (Some(a), Some(b)) => g.mul(a).mul(&b.inverse()).is_identity(ni),
            _ => false,
        });
        out.push(VertexCycle {
            j,
            nodes,
            arrows,
            arrows_valid,
            consistent,
        });
    }
    Ok(out)
}

/// A connected region of the Ford boundary found by sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeFace {
    pub sphere: usize,
    pub cells: usize,
    pub borders: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub n: usize,
    pub samples_per_sphere: usize,
    pub noise_threshold: usize,
    pub faces: Vec<ProbeFace>,
    /// Components discarded as boundary blur.
    pub noise_components: usize,
    /// Adjacent face pairs, indices into `faces`.
    pub adjacency: Vec<(usize, usize)>,
    /// The recovered adjacency graph is isomorphic to the combinatorial one,
    /// respecting sphere labels.
    pub matches_complex: bool,
}

struct SphereGrid {
    na: usize,
    nb: usize,
    center: HoroPoint,
    radius: f64,
    /// Component id per cell, `usize::MAX` off the Ford boundary.
    comp: Vec<usize>,
}

impl SphereGrid {
    fn cell_angles(&self, i: usize, j: usize) -> (f64, f64) {
        let alpha = -FRAC_PI_2 + (i as f64 + 0.5) * PI / self.na as f64;
        let beta = (j as f64 + 0.5) * TAU / self.nb as f64;
        (alpha, beta)
    }

    /// Cell containing a Siegel point near the sphere, via inverse geographic
    /// coordinates.
    fn locate(&self, p: &ProjectivePoint) -> Option<(usize, usize)> {
        let h = HoroPoint::from_point(p).ok()?;
        let rel = heis_mul(&self.center.heisenberg().inverse(), &h.heisenberg());
        let r2 = self.radius * self.radius;
        let alpha = (rel.t / r2).clamp(-1.0, 1.0).asin();
        let beta = (rel.z.arg() + alpha / 2.0).rem_euclid(TAU);
        let i = (((alpha + FRAC_PI_2) / PI) * self.na as f64).floor() as isize;
        let j = ((beta / TAU) * self.nb as f64).floor() as isize;
        Some((
            i.clamp(0, self.na as isize - 1) as usize,
            j.rem_euclid(self.nb as isize) as usize,
        ))
    }
}

fn ideal_geo_point(sphere: &CyganSphere, alpha: f64, beta: f64) -> Result<ProjectivePoint> {
    let w = alpha.cos().max(0.0).sqrt();
    if beta < PI {
        sphere.geographic(alpha, beta, w)
    } else {
        sphere.geographic(alpha, beta - PI, -w)
    }
}

/// Sample each ideal sphere `∂I(2 pi k / n)` on a geographic grid, classify
/// samples by their sides against the other spheres, and rebuild the face
/// adjacency of `∂∂_∞ D_n` from the sign patterns.
pub fn numeric_cell_probe(n: usize, samples: usize) -> Result<ProbeReport> {
    let complex = build_ideal_boundary_complex(n)?;
    if samples < 100 {
        return Err(Error::InvalidParameter("at least 100 samples per sphere".into()));
    }
    let q = TorusPoint::q0();
    let m = normalising_matrix(&q);
    let m_inv = m
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("normalising matrix".into()))?;
    let to_ball = |p: &ProjectivePoint| {
        ProjectivePoint::new(cayley_matrix() * m_inv * p.lift(), FormKind::Ball)
    };
    let to_siegel = |p: &ProjectivePoint| {
        ProjectivePoint::new(m * cayley_matrix() * p.lift(), FormKind::Siegel)
    };
    let side = (samples as f64).sqrt().ceil() as usize;
    let (na, nb) = (side.max(10), side.max(10));
    let noise_threshold = ((10 * na * nb) as f64 / 1e4).ceil() as usize;
    let theta = |k: usize| TAU * k as f64 / n as f64;

    let mut grids = Vec::with_capacity(n);
    let mut faces: Vec<ProbeFace> = Vec::new();
    let mut noise_components = 0;
    // Ball points and "outside every other sphere" flags, per sphere.
    let mut balls: Vec<Vec<Option<ProjectivePoint>>> = Vec::with_capacity(n);
    let mut blocked: Vec<Vec<Vec<usize>>> = Vec::with_capacity(n);
    for k in 1..n {
        let center = pushed_circle_point(&q, theta(k))?;
        let radius = 1.0 / (2.0 * (theta(k) / 2.0).sin());
        let sphere = CyganSphere::new(center.heisenberg(), radius)?;
        let mut grid = SphereGrid {
            na,
            nb,
            center,
            radius,
            comp: vec![usize::MAX; na * nb],
        };
        let mut ball_pts = vec![None; na * nb];
        let mut inside_of = vec![Vec::new(); na * nb];
        for i in 0..na {
            for j in 0..nb {
                let (a, b) = grid.cell_angles(i, j);
                let p = ideal_geo_point(&sphere, a, b)?;
                let Ok(w) = to_ball(&p) else { continue };
                let mut ins = Vec::new();
                for other in (1..n).filter(|&o| o != k) {
                    match standard_sphere_side(&w, theta(other)) {
                        Ok(s) if s > 0.0 => {}
                        _ => ins.push(other),
                    }
                }
                inside_of[i * nb + j] = ins;
                ball_pts[i * nb + j] = Some(w);
            }
        }
        // Connected components of the cells outside every other sphere.
        for start in 0..na * nb {
            if !inside_of[start].is_empty() || ball_pts[start].is_none() || grid.comp[start] != usize::MAX {
                continue;
            }
            let id = faces.len() + noise_components + 1_000_000;
            let mut queue = VecDeque::from([start]);
            grid.comp[start] = id;
            let mut cells = Vec::new();
            while let Some(c) = queue.pop_front() {
                cells.push(c);
                let (i, j) = (c / nb, c % nb);
                let mut nbrs = vec![i * nb + (j + 1) % nb, i * nb + (j + nb - 1) % nb];
                if i > 0 {
                    nbrs.push((i - 1) * nb + j);
                }
                if i + 1 < na {
                    nbrs.push((i + 1) * nb + j);
                }
                for d in nbrs {
                    if inside_of[d].is_empty() && ball_pts[d].is_some() && grid.comp[d] == usize::MAX {
                        grid.comp[d] = id;
                        queue.push_back(d);
                    }
                }
            }
            let final_id = if cells.len() >= noise_threshold {
                faces.push(ProbeFace {
                    sphere: k,
                    cells: cells.len(),
                    borders: BTreeSet::new(),
                });
                faces.len() - 1
            } else {
                noise_components += 1;
                usize::MAX - 1
            };
            for c in cells {
                grid.comp[c] = final_id;
            }
        }
        grids.push(grid);
        balls.push(ball_pts);
        blocked.push(inside_of);
    }

    // Adjacency: follow each face boundary across to the sphere that blocks it.
    let mut votes: HashMap<(usize, usize), usize> = HashMap::new();
    let mut borders: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); faces.len()];
    for k in 1..n {
        let g = &grids[k - 1];
        for c in 0..na * nb {
            let fc = g.comp[c];
            if fc >= faces.len() {
                continue;
            }
            let (i, j) = (c / nb, c % nb);
            let mut nbrs = vec![i * nb + (j + 1) % nb, i * nb + (j + nb - 1) % nb];
            if i > 0 {
                nbrs.push((i - 1) * nb + j);
            }
            if i + 1 < na {
                nbrs.push((i + 1) * nb + j);
            }
            for d in nbrs {
                let ins = &blocked[k - 1][d];
                if ins.len() != 1 {
                    continue;
                }
                let other = ins[0];
                borders[fc].insert(other);
                let Some(w) = &balls[k - 1][c] else { continue };
                let Ok(sp) = to_siegel(w) else { continue };
                let og = &grids[other - 1];
                let Some((oi, oj)) = og.locate(&sp) else { continue };
                // Majority component in a small window on the other sphere.
                let mut local: HashMap<usize, usize> = HashMap::new();
                for di in -2isize..=2 {
                    let ii = oi as isize + di;
                    if ii < 0 || ii >= na as isize {
                        continue;
                    }
                    for dj in -2isize..=2 {
                        let jj = (oj as isize + dj).rem_euclid(nb as isize) as usize;
                        let cc = og.comp[ii as usize * nb + jj];
                        if cc < faces.len() {
                            *local.entry(cc).or_default() += 1;
                        }
                    }
                }
                if let Some((&best, _)) = local.iter().max_by_key(|(id, cnt)| (**cnt, usize::MAX - **id)) {
                    let key = (fc.min(best), fc.max(best));
                    *votes.entry(key).or_default() += 1;
                }
            }
        }
    }
    for (f, b) in faces.iter_mut().zip(borders) {
        f.borders = b;
    }
    let vote_threshold = (na.max(nb) / 50).max(2);
    let mut adjacency: Vec<(usize, usize)> = votes
        .into_iter()
        .filter(|&((a, b), v)| a != b && v >= vote_threshold)
        .map(|(k, _)| k)
        .collect();
    adjacency.sort_unstable();

    let mut rec = UnGraph::<usize, ()>::new_undirected();
    let nodes: Vec<_> = faces.iter().map(|f| rec.add_node(f.sphere)).collect();
    for &(a, b) in &adjacency {
        rec.add_edge(nodes[a], nodes[b], ());
    }
    let comb = complex.face_adjacency_graph();
    let matches_complex = rec.node_count() == comb.node_count()
        && rec.edge_count() == comb.edge_count()
        && is_isomorphic_matching(&rec, &comb, |a, b| a == b, |_, _| true);
    Ok(ProbeReport {
        n,
        samples_per_sphere: na * nb,
        noise_threshold,
        faces,
        noise_components,
        adjacency,
        matches_complex,
    })
}

/// Count samples of `I(t3) ∩ I(t5) ∩ I_+(t1) ∩ I_+(t2)` that fail to lie in
/// `I_-(t4)`, for `t1 < t3 < t4 < t5 < t2`. Returns `(checked, violations)`.
pub fn containment_check(angles: [f64; 5], grid: usize) -> Result<(usize, usize)> {
    let [t1, t3, t4, t5, t2] = angles;
    if !(0.0 < t1 && t1 < t3 && t3 < t4 && t4 < t5 && t5 < t2 && t2 < TAU) {
        return Err(Error::InvalidParameter("need t1 < t3 < t4 < t5 < t2 in (0, 2pi)".into()));
    }
    let w = w_coefficients(t3, t5)?;
    let (mut checked, mut bad) = (0, 0);
    for a in 1..grid {
        for b in 1..grid {
            let dc = DiskCoords::from_psi(TAU * a as f64 / grid as f64, TAU * b as f64 / grid as f64);
            if w.eval(dc.x, dc.y) > 0.0 {
                continue;
            }
            let p = omega_from_psi(t3, t5, dc.psi1, dc.psi2)?;
            let s1 = standard_sphere_side(&p, t1)?;
            let s2 = standard_sphere_side(&p, t2)?;
            if s1 > 1e-12 && s2 > 1e-12 {
                checked += 1;
                if standard_sphere_side(&p, t4)? >= 0.0 {
                    bad += 1;
                }
            }
        }
    }
    Ok((checked, bad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_for_small_n() {
        let c3 = build_ideal_boundary_complex(3).unwrap();
        assert_eq!((c3.vertex_count, c3.edges.len(), c3.faces.len()), (2, 2, 2));
        let c4 = build_ideal_boundary_complex(4).unwrap();
        assert_eq!((c4.vertex_count, c4.edges.len(), c4.faces.len()), (4, 6, 4));
        let c6 = build_ideal_boundary_complex(6).unwrap();
        assert_eq!((c6.vertex_count, c6.edges.len(), c6.faces.len()), (12, 18, 8));
        assert!(build_ideal_boundary_complex(2).is_err());
    }

    #[test]
    fn sphere_and_spectrum() {
        for n in 3..=12 {
            let c = build_ideal_boundary_complex(n).unwrap();
            assert_eq!(c.euler(), 2, "n = {n}");
            assert!(c.edges_have_two_faces());
            if n >= 6 {
                let mut want = vec![3; 4];
                want.extend(vec![4; 2 * (n - 5)]);
                want.extend([2 * (n - 2); 2]);
                want.sort_unstable();
                assert_eq!(c.face_degrees(), want);
                assert_eq!(c.faces.len(), 2 * n - 4);
                assert_eq!(c.edges.len(), 6 * n - 18);
            }
        }
    }

    #[test]
    fn triangle_borders_for_n5() {
        let c = build_ideal_boundary_complex(5).unwrap();
        let f2 = c.face(FaceLabel { k: 2, primed: false }).unwrap();
        assert_eq!(c.bordering_spheres(f2), BTreeSet::from([1, 3, 4]));
    }

    #[test]
    fn gluings_agree() {
        for n in 3..=9 {
            assert!(gluings_isomorphic(n).unwrap());
            assert_eq!(build_with_gluing(n, Gluing::Mirrored).unwrap().euler(), 2);
        }
    }

    #[test]
    fn cone_structure() {
        let base = build_ideal_boundary_complex(4).unwrap();
        let nf = base.faces.len();
        let cone = cone_complex(base);
        assert_eq!(cone.sides.len(), nf);
        assert_eq!(cone.sides.len(), 4);
        for s in &cone.sides {
            assert_eq!(*s.vertices.last().unwrap(), cone.apex);
            let f = &cone.base.faces[s.face];
            for v in &f.corners {
                assert!(s.vertices.contains(v));
            }
        }
        assert!(cone.apex_point().lift()[0].norm() == 0.0);
    }

    #[test]
    fn word_reduction() {
        let w = Word::b(2).mul(&Word::b(-1)).mul(&Word::b(-1));
        assert!(w.is_identity(3));
        assert!(Word::b(3).is_identity(3));
        assert!(!Word::a(1).mul(&Word::b(1)).is_identity(3));
        let c = Word::b(1).conj_a(2);
        assert!(c.mul(&c.inverse()).is_identity(5));
        assert_eq!(Word::a(1).mul(&Word::b(4)).reduce(5).to_string(), "AB^-1");
    }

    #[test]
    fn ridge_cycles_are_trivial_triangles() {
        for n in 3..=9 {
            for k in [-1, 0, 2] {
                let cyc = ridge_cycles(n, k).unwrap();
                assert_eq!(cyc.len(), n - 2);
                for c in &cyc {
                    assert_eq!(c.steps.len(), 3, "n = {n}, j = {}", c.j);
                    assert!(c.is_trivial(n as i64));
                    let ni = n as i64;
                    assert_eq!((c.steps[1].head, c.steps[1].tail), ((-(c.j - 1)).rem_euclid(ni), 1));
                    assert_eq!(c.steps[2].head, c.j);
                }
            }
        }
    }

    #[test]
    fn vertex_cycles_close_on_four_nodes() {
        for n in 3..=9 {
            for c in ideal_vertex_cycles(n, 0).unwrap() {
                assert!(c.arrows_valid, "n = {n}, j = {}", c.j);
                assert!(c.consistent);
            }
        }
    }

    #[test]
    fn probe_matches_complex() {
        for n in 3..=6 {
            let rep = numeric_cell_probe(n, 10_000).unwrap();
            let c = build_ideal_boundary_complex(n).unwrap();
            assert_eq!(rep.faces.len(), c.faces.len(), "{rep:?}");
            assert!(rep.matches_complex, "{rep:?}");
            for f in &rep.faces {
                let want: BTreeSet<usize> = c
                    .faces
                    .iter()
                    .filter(|g| g.label.k == f.sphere)
                    .flat_map(|g| c.bordering_spheres(g))
                    .collect();
                assert!(f.borders.is_subset(&want), "{f:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn containment_b() {
        let (checked, bad) = containment_check([0.5, 1.5, 2.5, 3.5, 5.0], 120).unwrap();
        assert!(checked > 0);
        assert_eq!(bad, 0);
    }
}
