//! Interpolation node sets: evenly spaced barycentric lattices on
//! simplices, scattered 1-D nodes, uniform test grids, and fill distances.

use crate::error::{Error, Result};
use crate::mn::ProblemParams;
use crate::scalar::{Dec, PrecisionContext, XReal};

/// Seeded 64-bit generator (splitmix64). The state advances by a fixed
///increment, so the stream is a pure function of (seed, index) and runs are
/// byte-reproducible across platforms.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in [0, 1) with 53 random bits.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// An n-simplex given by its n+1 vertices.
#[derive(Debug, Clone)]
pub struct Simplex {
    vertices: Vec<Vec<XReal>>,
    dim: usize,
}

impl Simplex {
    /// Builds a simplex from `n + 1` vertices in R^n, rejecting affinely
    /// dependent vertex sets (zero volume).
    pub fn new(vertices: Vec<Vec<XReal>>, ctx: &PrecisionContext) -> Result<Simplex> {
        if vertices.is_empty() {
            return Err(Error::EmptySet);
        }
        let dim = vertices.len() - 1;
        if vertices.iter().any(|v| v.len() != dim) {
            return Err(Error::Domain(format!(
                "a {dim}-simplex needs {} vertices in R^{dim}",
                dim + 1
            )));
        }
        let s = Simplex { vertices, dim };
        if dim > 0 && s.gram_det(ctx).is_zero() {
            return Err(Error::Domain(
                "simplex vertices are affinely dependent".into(),
            ));
        }
        Ok(s)
    }

    /// 1-simplex [a, b].
    pub fn interval(a: &XReal, b: &XReal, ctx: &PrecisionContext) -> Result<Simplex> {
        Simplex::new(vec![vec![a.clone()], vec![b.clone()]], ctx)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<XReal>] {
        &self.vertices
    }

    /// Maximum pairwise vertex distance.
    pub fn diameter(&self) -> XReal {
        let mut best: Option<XReal> = None;
        for i in 0..self.vertices.len() {
            for j in (i + 1)..self.vertices.len() {
                let d = dist2(&self.vertices[i], &self.vertices[j]).sqrt();
                best = Some(match best {
                    None => d,
                    Some(b) => b.max(&d),
                });
            }
        }
        best.expect("simplex has at least one vertex pair")
    }

    /// Determinant of the Gram matrix of edge vectors from vertex 0;
    /// nonzero exactly when the vertices are affinely independent.
    fn gram_det(&self, ctx: &PrecisionContext) -> XReal {
        let n = self.dim;
        let v0 = &self.vertices[0];
        let edges: Vec<Vec<XReal>> = self.vertices[1..]
            .iter()
            .map(|v| v.iter().zip(v0).map(|(a, b)| a - b).collect())
            .collect();
        let mut g = vec![vec![ctx.from_u32(0); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = ctx.from_u32(0);
                for k in 0..n {
                    s = &s + &(&edges[i][k] * &edges[j][k]);
                }
                g[i][j] = s;
            }
        }
        det_small(&mut g, ctx)
    }
}

fn det_small(m: &mut [Vec<XReal>], ctx: &PrecisionContext) -> XReal {
    // Gaussian elimination without pivoting refinements; only used for
    // tiny affine-independence checks.
    let n = m.len();
    let mut det = ctx.from_u32(1);
    for k in 0..n {
        let mut p = k;
        for r in (k + 1)..n {
            if m[r][k].abs() > m[p][k].abs() {
                p = r;
            }
        }
        if m[p][k].is_zero() {
            return ctx.from_u32(0);
        }
        if p != k {
            m.swap(p, k);
            det = -det;
        }
        det = &det * &m[k][k];
        for r in (k + 1)..n {
            let factor = &m[r][k] / &m[k][k];
            for c in k..n {
                let sub = &factor * &m[k][c];
                m[r][c] = &m[r][c] - &sub;
            }
        }
    }
    det
}

fn dist2(a: &[XReal], b: &[XReal]) -> XReal {
    let mut s = a[0].clone() - b[0].clone();
    s = &s * &s;
    for k in 1..a.len() {
        let d = &a[k] - &b[k];
        s = &s + &(&d * &d);
    }
    s
}

/// How a node set was generated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    /// Evenly spaced lattice of the given degree on a simplex.
    EvenSimplex { degree: u32 },
    /// One random node per width-delta subinterval.
    Scattered { seed: u64 },
    /// Uniform test grid.
    UniformTest,
}

/// Ordered interpolation or test points with a recorded nominal fill
/// distance.
#[derive(Debug, Clone)]
pub struct NodeSet {
    points: Vec<Vec<XReal>>,
    dim: usize,
    fill_distance: XReal,
    kind: NodeKind,
}

impl NodeSet {
    fn new(
        points: Vec<Vec<XReal>>,
        dim: usize,
        fill_distance: XReal,
        kind: NodeKind,
    ) -> Result<NodeSet> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Domain(format!(
                    "point {i} has dimension {} (expected {dim})",
                    p.len()
                )));
            }
        }
        if dim == 1 {
            // sort-based duplicate detection; point sets can be large here
            let mut order: Vec<usize> = (0..points.len()).collect();
            order.sort_by(|&i, &j| points[i][0].partial_cmp(&points[j][0]).expect("finite"));
            for w in order.windows(2) {
                if points[w[0]][0] == points[w[1]][0] {
                    return Err(Error::Domain(format!(
                        "duplicate nodes at {} and {}",
                        w[0], w[1]
                    )));
                }
            }
        } else {
            for i in 0..points.len() {
                for j in (i + 1)..points.len() {
                    if dist2(&points[i], &points[j]).is_zero() {
                        return Err(Error::Domain(format!("duplicate nodes at {i} and {j}")));
                    }
                }
            }
        }
        Ok(NodeSet {
            points,
            dim,
            fill_distance,
            kind,
        })
    }

    /// Wraps an explicit point list (no generation recipe, no meaningful
    /// nominal fill distance). Duplicate points are rejected.
    pub fn from_points(
        points: Vec<Vec<XReal>>,
        dim: usize,
        ctx: &PrecisionContext,
    ) -> Result<NodeSet> {
        NodeSet::new(points, dim, ctx.from_u32(0), NodeKind::UniformTest)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<XReal>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[XReal] {
        &self.points[i]
    }

    pub fn fill_distance_nominal(&self) -> &XReal {
        &self.fill_distance
    }

    pub fn kind(&self) -> &NodeKind {
        &self.kind
    }

    /// Reorders the points; used by permutation-invariance checks.
    pub fn permuted(&self, perm: &[usize]) -> Result<NodeSet> {
        if perm.len() != self.len() {
            return Err(Error::Domain("permutation length mismatch".into()));
        }
        let points = perm.iter().map(|&i| self.points[i].clone()).collect();
        NodeSet::new(points, self.dim, self.fill_distance.clone(), self.kind.clone())
    }

    /// Serializes as CSV `index,x1,...,xn` with a comment header recording
    /// the generation kind (and seed, when random).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.kind {
            NodeKind::EvenSimplex { degree } => {
                out.push_str(&format!("# nodes kind=even degree={degree}\n"))
            }
            NodeKind::Scattered { seed } => {
                out.push_str(&format!("# nodes kind=scattered seed={seed}\n"))
            }
            NodeKind::UniformTest => out.push_str("# nodes kind=uniform\n"),
        }
        let mut header = String::from("index");
        for k in 1..=self.dim {
            header.push_str(&format!(",x{k}"));
        }
        out.push_str(&header);
        out.push('\n');
        for (i, p) in self.points.iter().enumerate() {
            out.push_str(&i.to_string());
            for c in p {
                out.push(',');
                out.push_str(&c.to_decimal_full());
            }
            out.push('\n');
        }
        out
    }
}

/// Node degree for the evenly spaced rule at shape parameter `c`.
///
/// With `C = max(2/(3 b0), 8 rho / c)` the degree window is
/// `1/(3 C delta) <= l <= 2/(3 C delta)`; this picks the largest integer
/// strictly below the upper edge, computed in exact rational arithmetic:
/// `l = ceil(min(b0/delta, c/(12 rho delta))) - 1`. Taking the open upper
/// edge (rather than closing it when the bound is an exact integer) is what
/// the published node counts use at, e.g., `delta = 0.2, c = 60`.
pub fn degree_from_delta(c: &Dec, p: &ProblemParams) -> Result<u32> {
    if !c.is_positive() {
        return Err(Error::Domain(format!("c = {c} must be positive")));
    }
    let twelve = Dec::from_int(12);
    let q = (p.b0 / p.delta).min(*c / (twelve * p.rho * p.delta));
    let l = q.ceil_int() - 1;
    if l < 1 {
        return Err(Error::DegenerateDegree {
            c: c.to_string(),
            delta: p.delta.to_string(),
        });
    }
    Ok(l as u32)
}

/// Evenly spaced points of degree `l` on a simplex: all points whose
/// barycentric coordinates are `(k1/l, ..., k_{n+1}/l)` with nonnegative
/// integer `k` summing to `l`. Compositions are enumerated in descending
/// lexicographic order of `(k1, ..., k_{n+1})`, so on an interval [a, b]
/// the points come out in ascending order from `a` to `b`.
pub fn barycentric_grid(s: &Simplex, l: u32, ctx: &PrecisionContext) -> Result<NodeSet> {
    if l == 0 {
        return Err(Error::Domain("degree l must be >= 1".into()));
    }
    let n_parts = s.dim() + 1;
    let mut points = Vec::new();
    let mut comp = vec![0u32; n_parts];
    enumerate_compositions(l, 0, &mut comp, &mut |k: &[u32]| {
        let mut x = vec![ctx.from_u32(0); s.dim()];
        for (ki, v) in k.iter().zip(s.vertices()) {
            if *ki == 0 {
                continue;
            }
            let w = ctx.from_ratio(*ki as i128, l as i128);
            for (xc, vc) in x.iter_mut().zip(v) {
                *xc = &*xc + &(&w * vc);
            }
        }
        points.push(x);
    });
    let fill = &s.diameter() / &ctx.from_u32(2 * l);
    NodeSet::new(points, s.dim(), fill, NodeKind::EvenSimplex { degree: l })
}

fn enumerate_compositions(rest: u32, idx: usize, comp: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
    if idx == comp.len() - 1 {
        comp[idx] = rest;
        f(comp);
        return;
    }
    // descending first coordinate gives descending lexicographic order
    for k in (0..=rest).rev() {
        comp[idx] = k;
        enumerate_compositions(rest - k, idx + 1, comp, f);
    }
}

/// Scattered 1-D nodes on [a, b]: the interval is split into consecutive
/// subintervals of width `delta`; each full subinterval `[a_i, a_i + delta]`
/// gets the node `a_i + u * delta` with `u` uniform on [0, 1) from the
/// seeded generator. When `(b - a)/delta` is not an integer, `b` itself is
/// appended as the node of the rightmost (short) subinterval. The nominal
/// fill distance recorded is `delta`.
pub fn scattered_1d(
    a: &Dec,
    b: &Dec,
    delta: &Dec,
    seed: u64,
    ctx: &PrecisionContext,
) -> Result<NodeSet> {
    let span = *b - *a;
    if !delta.is_positive() || !(span > Dec::zero()) || !(*delta < span) {
        return Err(Error::Domain(format!(
            "need 0 < delta < b - a (delta = {delta}, b - a = {span})"
        )));
    }
    let q = span / *delta;
    let full = q.floor_int() as u32;
    let exact = q.is_integer();
    let mut rng = SplitMix64::new(seed);
    let a_x = ctx.from_dec(a);
    let d_x = ctx.from_dec(delta);
    let mut points = Vec::with_capacity(full as usize + 1);
    for i in 0..full {
        let u = ctx.from_f64(rng.next_unit());
        let left = &a_x + &(&ctx.from_u32(i) * &d_x);
        points.push(vec![&left + &(&u * &d_x)]);
    }
    if !exact {
        points.push(vec![ctx.from_dec(b)]);
    }
    NodeSet::new(points, 1, d_x, NodeKind::Scattered { seed })
}

/// `count` uniformly spaced points on [a, b], endpoints inclusive.
pub fn uniform_1d(a: &Dec, b: &Dec, count: u32, ctx: &PrecisionContext) -> Result<NodeSet> {
    if count < 2 {
        return Err(Error::Domain("count must be >= 2".into()));
    }
    let a_x = ctx.from_dec(a);
    let b_x = ctx.from_dec(b);
    let span = &b_x - &a_x;
    let step = &span / &ctx.from_u32(count - 1);
    let points = (0..count)
        .map(|k| vec![&a_x + &(&ctx.from_u32(k) * &step)])
        .collect();
    let fill = &span / &ctx.from_u32(2 * (count - 1));
    NodeSet::new(points, 1, fill, NodeKind::UniformTest)
}

/// Sup-min approximation of the fill distance: the largest distance from a
/// probe point to its nearest node. The probe grid must cover the domain
/// densely for the value to be meaningful.
pub fn fill_distance(nodes: &NodeSet, probe: &NodeSet) -> Result<XReal> {
    if nodes.is_empty() || probe.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut worst: Option<XReal> = None;
    for z in probe.points() {
        let mut best: Option<XReal> = None;
        for x in nodes.points() {
            let d = dist2(z, x);
            best = Some(match best {
                None => d,
                Some(b) => b.min(&d),
            });
        }
        let b = best.unwrap();
        worst = Some(match worst {
            None => b,
            Some(w) => w.max(&b),
        });
    }
    Ok(worst.unwrap().sqrt())
}
