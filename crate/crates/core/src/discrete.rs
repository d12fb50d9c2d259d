//! Structured grids: finite-difference jets, Laplace-Beltrami and covariant
//! derivatives against a nodal metric field, geodesic distances, ball volumes,
//! and the text grid-file format.
//!
//! Nodes are numbered with the first axis fastest. Derived fields are masked:
//! `None` marks nodes where a stencil left the grid or hit an invalid input.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fiber::Christoffel;
use crate::geometry::PointJet;
use crate::linalg::Mat;
use crate::scalar::Scalar;

pub type NodeField<V> = Vec<Option<V>>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid<T> {
    lo: Vec<T>,
    hi: Vec<T>,
    counts: Vec<usize>,
    spacing: Vec<T>,
    strides: Vec<usize>,
}

impl<T: Scalar> Grid<T> {
    pub fn new(bbox: &[(T, T)], counts: &[usize]) -> Result<Self> {
        if bbox.len() != counts.len() || bbox.is_empty() {
            return Err(Error::InvalidGrid("box and counts disagree in dimension".into()));
        }
        if let Some(c) = counts.iter().find(|&&c| c < 5) {
            return Err(Error::InvalidGrid(format!("need at least 5 nodes per axis, got {c}")));
        }
        if bbox.iter().any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidGrid("empty box".into()));
        }
        let mut strides = Vec::with_capacity(counts.len());
        let mut s = 1;
        for &c in counts {
            strides.push(s);
            s *= c;
        }
        Ok(Self {
            lo: bbox.iter().map(|b| b.0).collect(),
            hi: bbox.iter().map(|b| b.1).collect(),
            spacing: bbox.iter().zip(counts).map(|(b, &c)| (b.1 - b.0) / T::from_usize_lossy(c - 1)).collect(),
            counts: counts.to_vec(),
            strides,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn spacing(&self) -> &[T] {
        &self.spacing
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn bbox(&self) -> Vec<(T, T)> {
        self.lo.iter().copied().zip(self.hi.iter().copied()).collect()
    }

    pub fn cell_volume(&self) -> T {
        self.spacing.iter().copied().fold(T::one(), |a, b| a * b)
    }

    /// Same box with every spacing halved (`n -> 2n - 1`).
    pub fn refined(&self) -> Self {
        let counts: Vec<usize> = self.counts.iter().map(|&c| 2 * c - 1).collect();
        Self::new(&self.bbox(), &counts).expect("refining a valid grid")
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi(&self, mut idx: usize) -> Vec<usize> {
        self.counts
            .iter()
            .map(|&c| {
                let i = idx % c;
                idx /= c;
                i
            })
            .collect()
    }

    pub fn coords(&self, idx: usize) -> Vec<T> {
        self.multi(idx)
            .iter()
            .enumerate()
            .map(|(a, &i)| {
                if i + 1 == self.counts[a] {
                    self.hi[a]
                } else {
                    self.lo[a] + self.spacing[a] * T::from_usize_lossy(i)
                }
            })
            .collect()
    }

    /// Distance in nodes to the nearest boundary face.
    pub fn margin(&self, idx: usize) -> usize {
        self.multi(idx).iter().zip(&self.counts).map(|(&i, &c)| i.min(c - 1 - i)).min().unwrap_or(0)
    }

    /// Node at `idx + delta * e_axis`, if inside the grid.
    pub fn offset(&self, idx: usize, axis: usize, delta: isize) -> Option<usize> {
        let i = (idx / self.strides[axis]) % self.counts[axis];
        let j = i as isize + delta;
        if j < 0 || j >= self.counts[axis] as isize {
            None
        } else {
            Some((idx as isize + delta * self.strides[axis] as isize) as usize)
        }
    }

    /// Nearest node to a chart point.
    pub fn nearest(&self, x: &[T]) -> usize {
        let multi: Vec<usize> = (0..self.dim())
            .map(|a| {
                let k = ((x[a] - self.lo[a]) / self.spacing[a]).round().as_f64();
                k.clamp(0.0, (self.counts[a] - 1) as f64) as usize
            })
            .collect();
        self.index(&multi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction<T> {
    pub grid: Grid<T>,
    pub values: Vec<T>,
}

impl<T: Scalar> GridFunction<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value at node {k}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid<T>, mut f: impl FnMut(&[T]) -> T) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(&grid.coords(k))).collect();
        Self::new(grid, values)
    }

    pub fn try_from_fn<E>(grid: Grid<T>, mut f: impl FnMut(&[T]) -> std::result::Result<T, E>) -> Result<Self>
    where
        Error: From<E>,
    {
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            values.push(f(&grid.coords(k))?);
        }
        Self::new(grid, values)
    }

    pub fn masked(&self) -> NodeField<T> {
        self.values.iter().map(|&v| Some(v)).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values.iter().zip(&other.values).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

fn second<T: Scalar>(grid: &Grid<T>, v: &[T], k: usize, i: usize, j: usize) -> Option<T> {
    let h = grid.spacing();
    if i == j {
        let p = grid.offset(k, i, 1)?;
        let m = grid.offset(k, i, -1)?;
        Some((v[p] - T::lit(2.0) * v[k] + v[m]) / (h[i] * h[i]))
    } else {
        let pp = grid.offset(grid.offset(k, i, 1)?, j, 1)?;
        let pm = grid.offset(grid.offset(k, i, 1)?, j, -1)?;
        let mp = grid.offset(grid.offset(k, i, -1)?, j, 1)?;
        let mm = grid.offset(grid.offset(k, i, -1)?, j, -1)?;
        Some((v[pp] - v[pm] - v[mp] + v[mm]) / (T::lit(4.0) * h[i] * h[j]))
    }
}

/// Central-difference jet at an interior node.
pub fn jet_at<T: Scalar>(gf: &GridFunction<T>, node: usize) -> Result<PointJet<T>> {
    let grid = &gf.grid;
    if grid.margin(node) < 1 {
        return Err(Error::BoundaryNode { node });
    }
    let v = &gf.values;
    let d = grid.dim();
    let h = grid.spacing();
    let du = (0..d)
        .map(|a| {
            let p = grid.offset(node, a, 1).unwrap();
            let m = grid.offset(node, a, -1).unwrap();
            (v[p] - v[m]) / (T::lit(2.0) * h[a])
        })
        .collect();
    let mut d2u = Mat::zeros(d);
    for i in 0..d {
        for j in 0..=i {
            let s = second(grid, v, node, i, j).unwrap();
            d2u[(i, j)] = s;
            d2u[(j, i)] = s;
        }
    }
    Ok(PointJet::new(grid.coords(node), v[node], du, d2u))
}

/// Jets at every node with margin at least 1.
pub fn jets<T: Scalar>(gf: &GridFunction<T>) -> NodeField<PointJet<T>> {
    (0..gf.grid.len()).map(|k| jet_at(gf, k).ok()).collect()
}

/// Central first derivative of a masked scalar field.
pub fn central<T: Scalar>(grid: &Grid<T>, field: &[Option<T>], node: usize, axis: usize) -> Option<T> {
    let p = field[grid.offset(node, axis, 1)?]?;
    let m = field[grid.offset(node, axis, -1)?]?;
    Some((p - m) / (T::lit(2.0) * grid.spacing()[axis]))
}

/// Coordinate differential of a masked scalar field.
pub fn differential<T: Scalar>(grid: &Grid<T>, field: &[Option<T>]) -> NodeField<Vec<T>> {
    (0..grid.len())
        .map(|k| {
            field[k]?;
            (0..grid.dim()).map(|a| central(grid, field, k, a)).collect()
        })
        .collect()
}

/// Gradient `g^{ij} d_j h` of a masked scalar field.
pub fn gradient<T: Scalar>(grid: &Grid<T>, field: &[Option<T>], metric_inv: &[Option<Mat<T>>]) -> NodeField<Vec<T>> {
    differential(grid, field).into_iter().zip(metric_inv).map(|(d, gi)| Some(gi.as_ref()?.mul_vec(&d?))).collect()
}

/// `sqrt(det g)` and `g^{-1}` per node, failing on non positive definite input.
pub fn metric_data<T: Scalar>(metric: &[Option<Mat<T>>]) -> Result<NodeField<(T, Mat<T>)>> {
    metric
        .iter()
        .enumerate()
        .map(|(k, g)| match g {
            None => Ok(None),
            Some(g) => {
                if !g.is_positive_definite() {
                    return Err(Error::DegenerateMetric { node: k });
                }
                let inv = g.inverse().ok_or(Error::DegenerateMetric { node: k })?;
                Ok(Some((g.det().sqrt(), inv)))
            }
        })
        .collect()
}

/// `|g|^{-1/2} d_i(|g|^{1/2} g^{ij} d_j h)` by nested central differences;
/// valid two nodes in from the boundary and from any invalid input.
pub fn laplace_beltrami<T: Scalar>(grid: &Grid<T>, h: &[Option<T>], metric: &[Option<Mat<T>>]) -> Result<NodeField<T>> {
    let data = metric_data(metric)?;
    let d = grid.dim();
    let flux: Vec<NodeField<T>> = {
        let dh = differential(grid, h);
        let mut flux = vec![vec![None; grid.len()]; d];
        for k in 0..grid.len() {
            if let (Some(g), Some((sq, inv))) = (&dh[k], &data[k]) {
                let v = inv.mul_vec(g);
                for i in 0..d {
                    flux[i][k] = Some(*sq * v[i]);
                }
            }
        }
        flux
    };
    Ok((0..grid.len())
        .map(|k| {
            let (sq, _) = data[k].as_ref()?;
            let mut s = T::zero();
            for (i, fi) in flux.iter().enumerate() {
                s += central(grid, fi, k, i)?;
            }
            Some(s / *sq)
        })
        .collect())
}

/// Laplace-Beltrami of a full grid function against a full metric field.
pub fn laplace_beltrami_gf<T: Scalar>(h: &GridFunction<T>, metric: &[Mat<T>]) -> Result<NodeField<T>> {
    let m: NodeField<Mat<T>> = metric.iter().cloned().map(Some).collect();
    laplace_beltrami(&h.grid, &h.masked(), &m)
}

/// Christoffel symbols of a nodal metric field by central differences.
pub fn metric_christoffel<T: Scalar>(grid: &Grid<T>, metric: &[Option<Mat<T>>]) -> Result<NodeField<Christoffel<T>>> {
    let data = metric_data(metric)?;
    let d = grid.dim();
    let half = T::lit(0.5);
    Ok((0..grid.len())
        .map(|k| {
            let (_, inv) = data[k].as_ref()?;
            let mut dg = Vec::with_capacity(d);
            for a in 0..d {
                let p = metric[grid.offset(k, a, 1)?].as_ref()?;
                let m = metric[grid.offset(k, a, -1)?].as_ref()?;
                dg.push(p.sub(m).scale(T::one() / (T::lit(2.0) * grid.spacing()[a])));
            }
            let mut c = Christoffel::zeros(d);
            for kk in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        let mut s = T::zero();
                        for l in 0..d {
                            s += inv[(kk, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                        }
                        c.set(kk, i, j, half * s);
                    }
                }
            }
            Some(c)
        })
        .collect())
}

/// Covariant Hessian `d_ij h - Gamma^k_ij d_k h` of a masked scalar field.
pub fn covariant_hessian<T: Scalar>(
    grid: &Grid<T>,
    h: &[Option<T>],
    christoffel: &[Option<Christoffel<T>>],
) -> NodeField<Mat<T>> {
    let d = grid.dim();
    (0..grid.len())
        .map(|k| {
            let c = christoffel[k].as_ref()?;
            h[k]?;
            for a in 0..d {
                for s in [-1isize, 1] {
                    let nb = grid.offset(k, a, s)?;
                    h[nb]?;
                    for b in 0..d {
                        for t in [-1isize, 1] {
                            h[grid.offset(nb, b, t)?]?;
                        }
                    }
                }
            }
            let vals: Vec<T> = h.iter().map(|v| v.unwrap_or_else(T::zero)).collect();
            let dh: Vec<T> = (0..d).map(|a| central(grid, h, k, a).unwrap()).collect();
            let d2 = Mat::from_fn(d, |i, j| second(grid, &vals, k, i.max(j), i.min(j)).unwrap());
            Some(c.covariant_hessian(&dh, &d2))
        })
        .collect()
}

/// Ricci tensor `R_ik = d_j G^j_ik - d_k G^j_ij + G^j_jm G^m_ik - G^j_km G^m_ij`
/// from nested differences of the Christoffel field.
pub fn ricci_field<T: Scalar>(grid: &Grid<T>, christoffel: &[Option<Christoffel<T>>]) -> NodeField<Mat<T>> {
    let d = grid.dim();
    (0..grid.len())
        .map(|k| {
            let c = christoffel[k].as_ref()?;
            let mut dc = Vec::with_capacity(d);
            for a in 0..d {
                let p = christoffel[grid.offset(k, a, 1)?].as_ref()?;
                let m = christoffel[grid.offset(k, a, -1)?].as_ref()?;
                dc.push((p, m));
            }
            let two_h: Vec<T> = grid.spacing().iter().map(|&h| T::lit(2.0) * h).collect();
            let deriv =
                |a: usize, kk: usize, i: usize, j: usize| (dc[a].0.get(kk, i, j) - dc[a].1.get(kk, i, j)) / two_h[a];
            Some(Mat::from_fn(d, |i, kk| {
                let mut s = T::zero();
                for j in 0..d {
                    s += deriv(j, j, i, kk) - deriv(kk, j, i, j);
                    for m in 0..d {
                        s += c.get(j, j, m) * c.get(m, i, kk) - c.get(j, kk, m) * c.get(m, i, j);
                    }
                }
                s
            }))
        })
        .collect()
}

/// `|grad A|^2` of a field of (1,1)-tensors `A^k_i`:
/// `(grad_j A)^k_i = d_j A^k_i + G^k_jm A^m_i - G^m_ji A^k_m`, contracted with
/// `g^{jj'} g^{ii'} g_{kk'}`.
pub fn mixed_tensor_gradient_norm2<T: Scalar>(
    grid: &Grid<T>,
    a: &[Option<Mat<T>>],
    metric: &[Option<Mat<T>>],
    christoffel: &[Option<Christoffel<T>>],
) -> Result<NodeField<T>> {
    let data = metric_data(metric)?;
    let d = grid.dim();
    Ok((0..grid.len())
        .map(|k| {
            let c = christoffel[k].as_ref()?;
            let ak = a[k].as_ref()?;
            let g = metric[k].as_ref()?;
            let (_, ginv) = data[k].as_ref()?;
            let mut nab = Vec::with_capacity(d);
            for j in 0..d {
                let p = a[grid.offset(k, j, 1)?].as_ref()?;
                let m = a[grid.offset(k, j, -1)?].as_ref()?;
                let two_h = T::lit(2.0) * grid.spacing()[j];
                nab.push(Mat::from_fn(d, |kk, i| {
                    let mut s = (p[(kk, i)] - m[(kk, i)]) / two_h;
                    for mm in 0..d {
                        s += c.get(kk, j, mm) * ak[(mm, i)] - c.get(mm, j, i) * ak[(kk, mm)];
                    }
                    s
                }));
            }
            let mut total = T::zero();
            for j in 0..d {
                for jp in 0..d {
                    for i in 0..d {
                        for ip in 0..d {
                            let w = ginv[(j, jp)] * ginv[(i, ip)];
                            if w == T::zero() {
                                continue;
                            }
                            let mut s = T::zero();
                            for kk in 0..d {
                                for kp in 0..d {
                                    s += g[(kk, kp)] * nab[j][(kk, i)] * nab[jp][(kp, ip)];
                                }
                            }
                            total += w * s;
                        }
                    }
                }
            }
            Some(total)
        })
        .collect())
}

/// Integer stencil offsets of the distance graph: all primitive steps with
/// entries in `{-2..2}` in 2D (16 directions), the 26-neighbourhood in 3D.
pub fn distance_stencil(dim: usize) -> Vec<Vec<isize>> {
    let reach: isize = if dim == 2 { 2 } else { 1 };
    let mut out = Vec::new();
    let total = (2 * reach + 1).pow(dim as u32);
    for code in 0..total {
        let mut c = code;
        let off: Vec<isize> = (0..dim)
            .map(|_| {
                let v = c % (2 * reach + 1) - reach;
                c /= 2 * reach + 1;
                v
            })
            .collect();
        if off.iter().all(|&v| v == 0) {
            continue;
        }
        let g = off.iter().fold(0isize, |g, &v| gcd(g, v.abs()));
        if g == 1 {
            out.push(off);
        }
    }
    out
}

fn gcd(a: isize, b: isize) -> isize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Dijkstra distances from `source` over the stencil graph with edge lengths
/// averaged from the endpoint metrics. Nodes with no metric are skipped.
pub fn geodesic_distance<T: Scalar>(grid: &Grid<T>, metric: &[Option<Mat<T>>], source: usize) -> Result<NodeField<T>> {
    if metric.get(source).map_or(true, Option::is_none) {
        return Err(Error::DisconnectedRegion { node: source });
    }
    let stencil = distance_stencil(grid.dim());
    let h = grid.spacing();
    let steps: Vec<Vec<T>> =
        stencil.iter().map(|o| o.iter().zip(h).map(|(&k, &hk)| T::lit(k as f64) * hk).collect()).collect();
    let mut dist = vec![f64::INFINITY; grid.len()];
    let mut done = vec![false; grid.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapItem(0.0, source));
    while let Some(HeapItem(d0, k)) = heap.pop() {
        if done[k] {
            continue;
        }
        done[k] = true;
        let gk = metric[k].as_ref().unwrap();
        'edges: for (off, e) in stencil.iter().zip(&steps) {
            let mut nb = k;
            for (a, &o) in off.iter().enumerate() {
                match grid.offset(nb, a, o) {
                    Some(v) => nb = v,
                    None => continue 'edges,
                }
            }
            if done[nb] {
                continue;
            }
            let Some(gn) = metric[nb].as_ref() else { continue };
            let len = T::lit(0.5) * (gk.quad(e).sqrt() + gn.quad(e).sqrt());
            let nd = d0 + len.as_f64();
            if nd < dist[nb] {
                dist[nb] = nd;
                heap.push(HeapItem(nd, nb));
            }
        }
    }
    let mut out = Vec::with_capacity(grid.len());
    for (k, &d) in dist.iter().enumerate() {
        match (&metric[k], d.is_finite()) {
            (None, _) => out.push(None),
            (Some(_), true) => out.push(Some(T::lit(d))),
            (Some(_), false) => return Err(Error::DisconnectedRegion { node: k }),
        }
    }
    Ok(out)
}

/// `sum sqrt(det g) * cell volume` over nodes with `dist <= r`.
pub fn ball_volume<T: Scalar>(grid: &Grid<T>, metric: &[Option<Mat<T>>], dist: &[Option<T>], r: T) -> T {
    let cell = grid.cell_volume();
    metric
        .iter()
        .zip(dist)
        .filter_map(|(g, d)| match (g, d) {
            (Some(g), Some(d)) if *d <= r => Some(g.det().max(T::zero()).sqrt() * cell),
            _ => None,
        })
        .sum()
}

/// Contents of a grid file: a 2D grid, a model label and nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub model: String,
    pub function: GridFunction<f64>,
}

pub const GRID_FILE_MAGIC: &str = "# grwlab-grid v1";

pub fn format_grid_file(model: &str, gf: &GridFunction<f64>) -> Result<String> {
    let g = &gf.grid;
    if g.dim() != 2 {
        return Err(Error::Format("grid files hold two-dimensional grids".into()));
    }
    let b = g.bbox();
    let mut s = String::new();
    writeln!(s, "{GRID_FILE_MAGIC}").unwrap();
    writeln!(s, "box={:?},{:?},{:?},{:?}", b[0].0, b[0].1, b[1].0, b[1].1).unwrap();
    writeln!(s, "counts={},{}", g.counts()[0], g.counts()[1]).unwrap();
    writeln!(s, "model={model}").unwrap();
    let n1 = g.counts()[0];
    for row in gf.values.chunks(n1) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(s, "{}", line.join(" ")).unwrap();
    }
    Ok(s)
}

fn parse_list(key: &str, v: &str, want: usize) -> Result<Vec<f64>> {
    let xs: std::result::Result<Vec<f64>, _> = v.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match xs {
        Ok(xs) if xs.len() == want => Ok(xs),
        _ => Err(Error::Format(format!("bad `{key}` line: {v}"))),
    }
}

pub fn parse_grid_file(text: &str) -> Result<GridFile> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(GRID_FILE_MAGIC) {
        return Err(Error::Format(format!("missing `{GRID_FILE_MAGIC}` header")));
    }
    let (mut bbox, mut counts, mut model) = (None, None, None);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in lines {
        let line = line.trim();
        if let Some(v) = line.strip_prefix("box=") {
            bbox = Some(parse_list("box", v, 4)?);
        } else if let Some(v) = line.strip_prefix("counts=") {
            counts = Some(parse_list("counts", v, 2)?);
        } else if let Some(v) = line.strip_prefix("model=") {
            model = Some(v.trim().to_string());
        } else if line.starts_with('#') {
            continue;
        } else {
            let row: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
            rows.push(row.map_err(|_| Error::Format(format!("bad data line: {line}")))?);
        }
    }
    let bbox = bbox.ok_or_else(|| Error::Format("missing `box=` line".into()))?;
    let counts = counts.ok_or_else(|| Error::Format("missing `counts=` line".into()))?;
    let model = model.ok_or_else(|| Error::Format("missing `model=` line".into()))?;
    let (n1, n2) = (counts[0] as usize, counts[1] as usize);
    if counts.iter().any(|c| c.fract() != 0.0 || *c < 0.0) {
        return Err(Error::Format("counts must be non-negative integers".into()));
    }
    if rows.len() != n2 || rows.iter().any(|r| r.len() != n1) {
        return Err(Error::Format(format!("expected {n2} rows of {n1} values")));
    }
    let grid = Grid::new(&[(bbox[0], bbox[1]), (bbox[2], bbox[3])], &[n1, n2])?;
    Ok(GridFile { model, function: GridFunction::new(grid, rows.concat())? })
}
