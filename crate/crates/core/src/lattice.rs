//! Lattice geometry: boxes, boundaries, directed bonds, plaquettes, chains.
//!
//! The working volume is a cube `Λ = offset + [-N, N]^d` of Z^d. Its boundary
//! `∂Λ` is the set of exterior sites at nearest-neighbor (L1) distance exactly
//! one from the interior, i.e. the 2d face layers without corners. Directed
//! bonds come in two flavors: `Λ*` (both endpoints interior, both
//! orientations) and `∂Λ*` (tail on the boundary, head interior).
//!
//! Site indices are assigned lexicographically, interior first and boundary
//! after, which fixes every matrix and vector layout in the crate. Adjacency
//! is always L1-nearest-neighbor; the weighted gradient norm elsewhere uses
//! the sup-norm of site coordinates.

use crate::error::{Error, Result};

/// Maximum spatial dimension supported by the fixed-size coordinate type.
pub const MAX_DIM: usize = 4;

/// An absolute lattice coordinate; only the first `dim` entries are used.
pub type Coord = [i32; MAX_DIM];

pub fn coord_from(slice: &[i32]) -> Coord {
    let mut c = [0i32; MAX_DIM];
    c[..slice.len()].copy_from_slice(slice);
    c
}

/// Sup-norm `max_i |x_i|` of the first `dim` components.
pub fn sup_norm(c: &Coord, dim: usize) -> i32 {
    c[..dim].iter().map(|v| v.abs()).max().unwrap_or(0)
}

/// Euclidean norm of the first `dim` components.
pub fn euclid_norm(c: &Coord, dim: usize) -> f64 {
    c[..dim]
        .iter()
        .map(|&v| (v as f64) * (v as f64))
        .sum::<f64>()
        .sqrt()
}

/// L1 norm of the first `dim` components.
pub fn l1_norm(c: &Coord, dim: usize) -> i32 {
    c[..dim].iter().map(|v| v.abs()).sum()
}

/// A directed nearest-neighbor bond from `tail` to `head`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bond {
    pub tail: Coord,
    pub head: Coord,
}

impl Bond {
    pub fn new(tail: Coord, head: Coord, dim: usize) -> Result<Self> {
        let mut diff = [0i32; MAX_DIM];
        for i in 0..dim {
            diff[i] = head[i] - tail[i];
        }
        if l1_norm(&diff, dim) != 1 {
            return Err(Error::InvalidParameter(format!(
                "bond endpoints {:?} -> {:?} are not nearest neighbors",
                &tail[..dim],
                &head[..dim]
            )));
        }
        Ok(Bond { tail, head })
    }

    /// Reversal `b -> -b`; an involution.
    pub fn reversed(&self) -> Bond {
        Bond {
            tail: self.head,
            head: self.tail,
        }
    }

    /// The axis along which the bond points.
    pub fn axis(&self, dim: usize) -> usize {
        (0..dim)
            .find(|&i| self.head[i] != self.tail[i])
            .expect("degenerate bond")
    }

    /// Positive orientation: head = tail + e_axis.
    pub fn is_canonical(&self, dim: usize) -> bool {
        let ax = self.axis(dim);
        self.head[ax] == self.tail[ax] + 1
    }

    pub fn shifted(&self, v: &[i32], dim: usize) -> Bond {
        let mut b = *self;
        for i in 0..dim {
            b.tail[i] += v[i];
            b.head[i] += v[i];
        }
        b
    }
}

/// Four directed bonds chaining cyclically around a unit square.
#[derive(Debug, Clone, Copy)]
pub struct Plaquette {
    pub bonds: [Bond; 4],
}

impl Plaquette {
    /// The plaquette based at `base` spanning axes `(a, b)`:
    /// base -> base+e_a -> base+e_a+e_b -> base+e_b -> base.
    pub fn at(base: Coord, axis_a: usize, axis_b: usize) -> Plaquette {
        let mut p1 = base;
        p1[axis_a] += 1;
        let mut p2 = p1;
        p2[axis_b] += 1;
        let mut p3 = base;
        p3[axis_b] += 1;
        Plaquette {
            bonds: [
                Bond {
                    tail: base,
                    head: p1,
                },
                Bond { tail: p1, head: p2 },
                Bond { tail: p2, head: p3 },
                Bond {
                    tail: p3,
                    head: base,
                },
            ],
        }
    }

    /// Heads chain into tails and the four corners are distinct.
    pub fn is_closed_loop(&self, dim: usize) -> bool {
        for i in 0..4 {
            if self.bonds[(i + 1) % 4].tail != self.bonds[i].head {
                return false;
            }
        }
        let tails: Vec<_> = self.bonds.iter().map(|b| &b.tail[..dim]).collect();
        for i in 0..4 {
            for j in (i + 1)..4 {
                if tails[i] == tails[j] {
                    return false;
                }
            }
        }
        true
    }
}

/// Index of a site within a box; interior sites come first, then boundary.
pub type SiteIdx = u32;

/// The cube `Λ = offset + [-N, N]^d` with its L1 boundary layer.
#[derive(Debug, Clone)]
pub struct LatticeBox {
    dim: usize,
    half_side: i32,
    offset: Coord,
    interior_count: usize,
    boundary: Vec<Coord>,
    strides: [i64; MAX_DIM],
}

impl LatticeBox {
    pub fn build(dim: usize, half_side: i32, offset: &[i32]) -> Result<LatticeBox> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        if half_side < 1 {
            return Err(Error::InvalidParameter(format!(
                "half-side {half_side} must be >= 1"
            )));
        }
        let side = (2 * half_side + 1) as i64;
        let interior_count = (side as u128).pow(dim as u32) as usize;
        let mut strides = [0i64; MAX_DIM];
        let mut s = 1i64;
        for i in (0..dim).rev() {
            strides[i] = s;
            s *= side;
        }
        let mut bx = LatticeBox {
            dim,
            half_side,
            offset: coord_from(offset),
            interior_count,
            boundary: Vec::new(),
            strides,
        };
        bx.boundary = bx.enumerate_boundary();
        Ok(bx)
    }

    /// Boundary = face layers at `offset_i ± (N+1)` with the other coordinates
    /// interior; lexicographically sorted. Corners are excluded because they
    /// sit at L1 distance 2.
    fn enumerate_boundary(&self) -> Vec<Coord> {
        let mut out = Vec::new();
        let face = (2 * self.half_side + 1) as usize;
        let face_count = face.pow((self.dim - 1) as u32);
        for axis in 0..self.dim {
            for sign in [-1i32, 1] {
                let fixed = self.offset[axis] + sign * (self.half_side + 1);
                for flat in 0..face_count {
                    let mut rem = flat;
                    let mut c = [0i32; MAX_DIM];
                    c[axis] = fixed;
                    for i in (0..self.dim).rev() {
                        if i == axis {
                            continue;
                        }
                        c[i] = self.offset[i] + (rem % face) as i32 - self.half_side;
                        rem /= face;
                    }
                    out.push(c);
                }
            }
        }
        out.sort_unstable_by(|a, b| a[..self.dim].cmp(&b[..self.dim]));
        out.dedup();
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_side(&self) -> i32 {
        self.half_side
    }

    pub fn offset(&self) -> &Coord {
        &self.offset
    }

    pub fn interior_count(&self) -> usize {
        self.interior_count
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.len()
    }

    pub fn total_sites(&self) -> usize {
        self.interior_count + self.boundary.len()
    }

    pub fn is_interior(&self, c: &Coord) -> bool {
        (0..self.dim).all(|i| (c[i] - self.offset[i]).abs() <= self.half_side)
    }

    pub fn is_boundary(&self, c: &Coord) -> bool {
        self.boundary_index(c).is_some()
    }

    fn boundary_index(&self, c: &Coord) -> Option<usize> {
        self.boundary
            .binary_search_by(|probe| probe[..self.dim].cmp(&c[..self.dim]))
            .ok()
    }

    /// Bijective site index over `Λ ∪ ∂Λ`: interior lexicographic first,
    /// boundary lexicographic after.
    pub fn site_index(&self, c: &Coord) -> Option<SiteIdx> {
        if self.is_interior(c) {
            let mut idx = 0i64;
            for i in 0..self.dim {
                idx += ((c[i] - self.offset[i] + self.half_side) as i64) * self.strides[i];
            }
            Some(idx as SiteIdx)
        } else {
            self.boundary_index(c)
                .map(|b| (self.interior_count + b) as SiteIdx)
        }
    }

    pub fn site_coord(&self, idx: SiteIdx) -> Coord {
        let idx = idx as usize;
        if idx < self.interior_count {
            let mut rem = idx as i64;
            let mut c = [0i32; MAX_DIM];
            for i in 0..self.dim {
                let q = rem / self.strides[i];
                rem %= self.strides[i];
                c[i] = q as i32 - self.half_side + self.offset[i];
            }
            c
        } else {
            self.boundary[idx - self.interior_count]
        }
    }

    /// Interior coordinates in index order.
    pub fn interior_iter(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.interior_count as SiteIdx).map(move |i| self.site_coord(i))
    }

    pub fn boundary_iter(&self) -> impl Iterator<Item = Coord> + '_ {
        self.boundary.iter().copied()
    }

    /// The 2d nearest neighbors of `c`.
    pub fn neighbors(&self, c: &Coord) -> impl Iterator<Item = Coord> + '_ {
        let c = *c;
        let dim = self.dim;
        (0..dim).flat_map(move |ax| {
            [-1i32, 1].into_iter().map(move |s| {
                let mut n = c;
                n[ax] += s;
                n
            })
        })
    }

    /// Directed bonds of `Λ*` (both endpoints interior, both orientations)
    /// followed by `∂Λ*` (tail on the boundary, head interior).
    pub fn bonds(&self) -> BondSets {
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        for c in self.interior_iter() {
            for n in self.neighbors(&c) {
                if self.is_interior(&n) {
                    interior.push(Bond { tail: c, head: n });
                } else {
                    // n is a boundary site; ∂Λ* points inward
                    boundary.push(Bond { tail: n, head: c });
                }
            }
        }
        BondSets { interior, boundary }
    }

    /// Canonical (positively oriented) undirected bonds with at least one
    /// interior endpoint; each undirected bond appears exactly once.
    pub fn canonical_bonds(&self) -> Vec<Bond> {
        let mut out = Vec::new();
        for idx in 0..self.total_sites() as SiteIdx {
            let c = self.site_coord(idx);
            for ax in 0..self.dim {
                let mut n = c;
                n[ax] += 1;
                let head_in = self.is_interior(&n);
                let head_bd = !head_in && self.is_boundary(&n);
                let tail_in = self.is_interior(&c);
                if (tail_in && (head_in || head_bd)) || (self.is_boundary(&c) && head_in) {
                    out.push(Bond { tail: c, head: n });
                }
            }
        }
        out
    }

    /// All plaquettes whose four corners lie in `Λ ∪ ∂Λ`.
    pub fn plaquettes(&self) -> Vec<Plaquette> {
        let mut out = Vec::new();
        if self.dim < 2 {
            return out;
        }
        let lo = -(self.half_side + 1);
        let hi = self.half_side + 1;
        for a in 0..self.dim {
            for b in (a + 1)..self.dim {
                let mut base = [0i32; MAX_DIM];
                self.for_each_site_in_cube(lo, hi, &mut base, 0, &mut |c| {
                    let p = Plaquette::at(*c, a, b);
                    if p.bonds
                        .iter()
                        .all(|bd| self.contains_site(&bd.tail) && self.contains_site(&bd.head))
                    {
                        out.push(p);
                    }
                });
            }
        }
        out
    }

    fn contains_site(&self, c: &Coord) -> bool {
        self.is_interior(c) || self.is_boundary(c)
    }

    fn for_each_site_in_cube(
        &self,
        lo: i32,
        hi: i32,
        cursor: &mut Coord,
        axis: usize,
        f: &mut impl FnMut(&Coord),
    ) {
        if axis == self.dim {
            f(cursor);
            return;
        }
        for v in lo..=hi {
            cursor[axis] = self.offset[axis] + v;
            self.for_each_site_in_cube(lo, hi, cursor, axis + 1, f);
        }
    }

    /// The shifted volume `Λ + v`.
    pub fn shifted(&self, v: &[i32]) -> LatticeBox {
        let mut offset = self.offset;
        for i in 0..self.dim {
            offset[i] += v[i];
        }
        LatticeBox::build(self.dim, self.half_side, &offset[..self.dim])
            .expect("shift preserves validity")
    }
}

pub struct BondSets {
    /// Λ*: both endpoints interior; contains both orientations of each edge.
    pub interior: Vec<Bond>,
    /// ∂Λ*: tail on the boundary, head interior.
    pub boundary: Vec<Bond>,
}

/// Convenience constructor matching the operation contract.
pub fn build_box(dim: usize, half_side: i32, offset: &[i32]) -> Result<LatticeBox> {
    LatticeBox::build(dim, half_side, offset)
}

/// A subset of box sites kept free (unfrozen); everything else absorbs.
///
/// Used for solver domains: the full interior, the interior minus pinned
/// sites, Euclidean balls, or arbitrary masks.
#[derive(Debug, Clone)]
pub struct Domain {
    bbox: LatticeBox,
    free: Vec<SiteIdx>,
    local_of_global: Vec<u32>,
}

pub const NOT_FREE: u32 = u32::MAX;

impl Domain {
    pub fn from_predicate(bbox: LatticeBox, mut keep: impl FnMut(&Coord) -> bool) -> Domain {
        let mut free = Vec::new();
        let mut local_of_global = vec![NOT_FREE; bbox.total_sites()];
        for idx in 0..bbox.interior_count() as SiteIdx {
            let c = bbox.site_coord(idx);
            if keep(&c) {
                local_of_global[idx as usize] = free.len() as u32;
                free.push(idx);
            }
        }
        Domain {
            bbox,
            free,
            local_of_global,
        }
    }

    /// Every interior site free.
    pub fn interior(bbox: LatticeBox) -> Domain {
        Domain::from_predicate(bbox, |_| true)
    }

    /// Interior minus the given pinned sites.
    pub fn interior_minus(bbox: LatticeBox, pinned: &[Coord]) -> Domain {
        let dim = bbox.dim();
        Domain::from_predicate(bbox, |c| !pinned.iter().any(|p| p[..dim] == c[..dim]))
    }

    /// The Euclidean ball `{x : |x| < radius}` hosted in its snug box.
    pub fn ball(dim: usize, radius: i32) -> Result<Domain> {
        let bbox = LatticeBox::build(dim, radius, &vec![0; dim])?;
        let r2 = (radius as i64) * (radius as i64);
        Ok(Domain::from_predicate(bbox, |c| {
            let s: i64 = c[..dim].iter().map(|&v| (v as i64) * (v as i64)).sum();
            s < r2
        }))
    }

    pub fn bbox(&self) -> &LatticeBox {
        &self.bbox
    }

    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    pub fn free_sites(&self) -> &[SiteIdx] {
        &self.free
    }

    pub fn local_index(&self, c: &Coord) -> Option<u32> {
        let g = self.bbox.site_index(c)?;
        let l = self.local_of_global[g as usize];
        (l != NOT_FREE).then_some(l)
    }

    pub fn local_of_global(&self, g: SiteIdx) -> Option<u32> {
        let l = self.local_of_global[g as usize];
        (l != NOT_FREE).then_some(l)
    }

    pub fn coord_of_local(&self, l: u32) -> Coord {
        self.bbox.site_coord(self.free[l as usize])
    }
}

/// Shift a coordinate: `x + v`.
pub fn shift_coord(c: &Coord, v: &[i32], dim: usize) -> Coord {
    let mut out = *c;
    for i in 0..dim {
        out[i] += v[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_counts_match_closed_forms() {
        // interval endpoints
        let b = build_box(1, 1, &[0]).unwrap();
        assert_eq!(b.interior_count(), 3);
        assert_eq!(b.boundary_count(), 2);
        // 3x3 grid: boundary by direct enumeration of L1-adjacent exterior
        // sites excludes diagonals, leaving 4 faces x 3 sites
        let b = build_box(2, 1, &[0, 0]).unwrap();
        assert_eq!(b.interior_count(), 9);
        assert_eq!(b.boundary_count(), 12);
        // (2*2+1)^3
        let b = build_box(3, 2, &[0, 0, 0]).unwrap();
        assert_eq!(b.interior_count(), 125);
    }

    #[test]
    fn rejects_degenerate_boxes() {
        assert!(build_box(0, 1, &[]).is_err());
        assert!(build_box(2, 0, &[0, 0]).is_err());
    }

    #[test]
    fn boundary_matches_l1_scan() {
        // definition check: scan all L1 neighbors of interior sites
        for (d, n) in [(1usize, 3i32), (2, 2), (2, 4), (3, 2), (3, 3)] {
            let b = build_box(d, n, &vec![0; d]).unwrap();
            let mut by_scan: Vec<Coord> = Vec::new();
            for c in b.interior_iter() {
                for nb in b.neighbors(&c) {
                    if !b.is_interior(&nb) {
                        by_scan.push(nb);
                    }
                }
            }
            by_scan.sort_unstable_by(|a, bb| a[..d].cmp(&bb[..d]));
            by_scan.dedup();
            let by_faces: Vec<Coord> = b.boundary_iter().collect();
            assert_eq!(by_scan, by_faces, "d={d} n={n}");
        }
    }

    #[test]
    fn boundary_sites_are_distance_one_and_exterior() {
        let b = build_box(3, 2, &[1, -1, 0]).unwrap();
        for c in b.boundary_iter() {
            assert!(!b.is_interior(&c));
            let near = b.neighbors(&c).any(|n| b.is_interior(&n));
            assert!(near);
        }
    }

    #[test]
    fn site_index_is_a_bijection() {
        let b = build_box(2, 2, &[3, -1]).unwrap();
        let total = b.total_sites();
        let mut seen = vec![false; total];
        for idx in 0..total as SiteIdx {
            let c = b.site_coord(idx);
            let back = b.site_index(&c).unwrap();
            assert_eq!(back, idx);
            assert!(!seen[idx as usize]);
            seen[idx as usize] = true;
        }
        assert!(seen.into_iter().all(|x| x));
    }

    #[test]
    fn bond_counts() {
        // 1d, N=1: 2 undirected interior edges -> 4 directed
        let b = build_box(1, 1, &[0]).unwrap();
        let bs = b.bonds();
        assert_eq!(bs.interior.len(), 4);
        // 2d, N=1: 12 undirected edges of the 3x3 grid -> 24 directed
        let b = build_box(2, 1, &[0, 0]).unwrap();
        let bs = b.bonds();
        assert_eq!(bs.interior.len(), 24);
        // reversal-closed and even
        assert_eq!(bs.interior.len() % 2, 0);
        for bd in &bs.interior {
            assert!(bs.interior.contains(&bd.reversed()));
        }
        // ∂Λ* points inward
        for bd in &bs.boundary {
            assert!(b.is_boundary(&bd.tail) && b.is_interior(&bd.head));
        }
    }

    #[test]
    fn bond_reversal_is_involution() {
        let b = Bond::new(coord_from(&[0, 0]), coord_from(&[1, 0]), 2).unwrap();
        assert_eq!(b.reversed().reversed(), b);
        assert!(Bond::new(coord_from(&[0, 0]), coord_from(&[1, 1]), 2).is_err());
    }

    #[test]
    fn plaquettes_are_closed_loops() {
        let b = build_box(2, 2, &[0, 0]).unwrap();
        let ps = b.plaquettes();
        assert!(!ps.is_empty());
        for p in &ps {
            assert!(p.is_closed_loop(2));
        }
    }

    #[test]
    fn shift_covariance_of_enumeration() {
        let b = build_box(2, 2, &[0, 0]).unwrap();
        let v = [3, -2];
        let shifted = b.shifted(&v);
        let mut moved: Vec<Bond> = b
            .bonds()
            .interior
            .iter()
            .map(|bd| bd.shifted(&v, 2))
            .collect();
        let mut direct = shifted.bonds().interior;
        let key = |bd: &Bond| (bd.tail, bd.head);
        moved.sort_by_key(key);
        direct.sort_by_key(key);
        assert_eq!(moved, direct);
    }

    #[test]
    fn ball_domain_counts() {
        let d = Domain::ball(2, 8).unwrap();
        // |{x in Z^2 : |x| < 8}| = 193 (direct count)
        assert_eq!(d.free_count(), 193);
        for l in 0..d.free_count() as u32 {
            let c = d.coord_of_local(l);
            assert!(euclid_norm(&c, 2) < 8.0);
        }
    }
}
