//! Cubes of `Z^d`, their block partitions, and sparse finite-volume
//! Hamiltonians.
//!
//! Sites of `Λ_L = {−L, …, L}^d` are indexed lexicographically with the last
//! coordinate varying fastest, so a `d`-dimensional Hamiltonian has bandwidth
//! `(2L+1)^{d−1}` and the `d = 1` Hamiltonian is tridiagonal.
//!
//! Blocks come from splitting `(−L−1, L]^d` into `N_L^d` equal half-open cubes
//! of side `(2L+1)/N_L`; a site belongs to the block whose cube contains it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMode {
    /// `N_L`, `l_L` from the asymptotic scale formulas.
    Asymptotic,
    /// `N_L`, `l_L` supplied explicitly.
    Scaled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub mode: PartitionMode,
    pub epsilon: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub n_blocks_per_side: usize,
    pub interior_margin: usize,
    pub block_side: f64,
    /// `block_side > 2 l_L + 1`.
    pub valid: bool,
}

impl ScaleParams {
    /// Explicit partition, used when the asymptotic scales leave empty interiors.
    pub fn scaled(l: usize, n_blocks_per_side: usize, interior_margin: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidArgument("L must be at least 1".into()));
        }
        if n_blocks_per_side == 0 || n_blocks_per_side > 2 * l + 1 {
            return Err(Error::InvalidArgument(format!(
                "N_L = {n_blocks_per_side} must lie in [1, 2L+1 = {}]",
                2 * l + 1
            )));
        }
        let block_side = (2 * l + 1) as f64 / n_blocks_per_side as f64;
        Ok(Self {
            mode: PartitionMode::Scaled,
            epsilon: None,
            gamma: None,
            alpha: None,
            n_blocks_per_side,
            interior_margin,
            block_side,
            valid: block_side > (2 * interior_margin + 1) as f64,
        })
    }

    pub fn validity_diagnostic(&self) -> String {
        format!(
            "block side (2L+1)/N_L = {:.4} must exceed 2 l_L + 1 = {} (N_L = {}, l_L = {})",
            self.block_side,
            2 * self.interior_margin + 1,
            self.n_blocks_per_side,
            self.interior_margin
        )
    }
}

/// `N_L = max(1, ⌊(2L+1)^{1−ε}⌋)` and `l_L = ⌈(5d/(αγ)) ln(2L+1)⌉`.
///
/// Never fails on the validity inequality; inspect [`ScaleParams::valid`].
pub fn choose_scales(l: usize, epsilon: f64, alpha: f64, gamma: f64, d: usize) -> Result<ScaleParams> {
    if l == 0 || d == 0 {
        return Err(Error::InvalidArgument("L and d must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} not in (0, 1)")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} not in (0, 1]")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma {gamma} must be positive")));
    }
    let side = (2 * l + 1) as f64;
    let n_blocks = (side.powf(1.0 - epsilon).floor() as usize).max(1);
    let margin = ((5.0 * d as f64 / (alpha * gamma)) * side.ln()).ceil() as usize;
    let block_side = side / n_blocks as f64;
    Ok(ScaleParams {
        mode: PartitionMode::Asymptotic,
        epsilon: Some(epsilon),
        gamma: Some(gamma),
        alpha: Some(alpha),
        n_blocks_per_side: n_blocks,
        interior_margin: margin,
        block_side,
        valid: block_side > (2 * margin + 1) as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// Inclusive coordinate ranges, one per dimension.
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
    /// Global site indices, ascending.
    pub sites: Vec<usize>,
    pub interior: Vec<usize>,
    /// `(m, k)` with `m` in the block, `k ∈ Λ_L` outside it, `|m − k| = 1`.
    pub boundary_pairs: Vec<(usize, usize)>,
}

impl Block {
    pub fn contains_coords(&self, x: &[i64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&xi, (&lo, &hi))| lo <= xi && xi <= hi)
    }

    /// ℓ∞ lattice distance from `x` (inside the block) to the block boundary.
    pub fn distance_to_boundary(&self, x: &[i64]) -> i64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&xi, (&lo, &hi))| (xi - lo).min(hi - xi))
            .min()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubeGeometry {
    pub d: usize,
    pub half_side: usize,
    pub params: ScaleParams,
    pub blocks: Vec<Block>,
}

impl CubeGeometry {
    pub fn side(&self) -> usize {
        2 * self.half_side + 1
    }

    pub fn volume(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    pub fn coords(&self, index: usize) -> Vec<i64> {
        site_coords(self.d, self.half_side, index)
    }

    pub fn index(&self, x: &[i64]) -> Option<usize> {
        site_index(self.d, self.half_side, x)
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, p: usize) -> Result<&Block> {
        self.blocks.get(p).ok_or(Error::IndexOutOfRange {
            index: p,
            len: self.blocks.len(),
        })
    }

    pub fn severed_bonds(&self) -> usize {
        // every severed bond appears once from each side
        self.blocks.iter().map(|b| b.boundary_pairs.len()).sum::<usize>() / 2
    }

    /// Index of the site at the origin.
    pub fn center(&self) -> usize {
        self.index(&vec![0; self.d]).expect("origin lies in the cube")
    }

    /// Geometry with a single block (`N_L = 1`, `l_L = 0`).
    pub fn whole(d: usize, l: usize) -> Result<Self> {
        partition_cube(d, l, &ScaleParams::scaled(l, 1, 0)?)
    }
}

pub fn site_coords(d: usize, l: usize, mut index: usize) -> Vec<i64> {
    let side = 2 * l + 1;
    let mut x = vec![0i64; d];
    for slot in x.iter_mut().rev() {
        *slot = (index % side) as i64 - l as i64;
        index /= side;
    }
    x
}

pub fn site_index(d: usize, l: usize, x: &[i64]) -> Option<usize> {
    if x.len() != d {
        return None;
    }
    let side = 2 * l as i64 + 1;
    let mut index: i64 = 0;
    for &xi in x {
        if xi < -(l as i64) || xi > l as i64 {
            return None;
        }
        index = index * side + xi + l as i64;
    }
    Some(index as usize)
}

/// Splits `Λ_L` into `N_L^d` blocks with interiors and boundary pairs.
pub fn partition_cube(d: usize, l: usize, params: &ScaleParams) -> Result<CubeGeometry> {
    if d == 0 || l == 0 {
        return Err(Error::InvalidArgument("L and d must be at least 1".into()));
    }
    if !params.valid {
        return Err(Error::InvalidScale(params.validity_diagnostic()));
    }
    let side = 2 * l + 1;
    let n = params.n_blocks_per_side;
    if n == 0 || n > side {
        return Err(Error::InvalidArgument(format!("N_L = {n} must lie in [1, {side}]")));
    }
    // 1-d block ranges: x lies in block j iff j (2L+1)/N < x + L + 1 <= (j+1)(2L+1)/N
    let mut ranges: Vec<(i64, i64)> = vec![(i64::MAX, i64::MIN); n];
    for x in -(l as i64)..=(l as i64) {
        let shifted = (x + l as i64 + 1) as usize;
        let j = (shifted * n - 1) / side;
        let r = &mut ranges[j];
        r.0 = r.0.min(x);
        r.1 = r.1.max(x);
    }
    let n_blocks = n.pow(d as u32);
    let mut blocks = Vec::with_capacity(n_blocks);
    let volume = side.pow(d as u32);
    let mut owner = vec![0usize; volume];
    for p in 0..n_blocks {
        let mut multi = vec![0usize; d];
        let mut rest = p;
        for slot in multi.iter_mut().rev() {
            *slot = rest % n;
            rest /= n;
        }
        let lower: Vec<i64> = multi.iter().map(|&j| ranges[j].0).collect();
        let upper: Vec<i64> = multi.iter().map(|&j| ranges[j].1).collect();
        let mut block = Block {
            lower,
            upper,
            sites: Vec::new(),
            interior: Vec::new(),
            boundary_pairs: Vec::new(),
        };
        let mut x = block.lower.clone();
        'sites: loop {
            let idx = site_index(d, l, &x).expect("block coordinates lie in the cube");
            block.sites.push(idx);
            owner[idx] = p;
            if block.distance_to_boundary(&x) > params.interior_margin as i64 {
                block.interior.push(idx);
            }
            for axis in (0..d).rev() {
                if x[axis] < block.upper[axis] {
                    x[axis] += 1;
                    continue 'sites;
                }
                x[axis] = block.lower[axis];
            }
            break;
        }
        blocks.push(block);
    }
    for block in &mut blocks {
        let p = owner[block.sites[0]];
        for &m in &block.sites {
            let x = site_coords(d, l, m);
            for axis in 0..d {
                for step in [-1i64, 1] {
                    let mut y = x.clone();
                    y[axis] += step;
                    if let Some(k) = site_index(d, l, &y) {
                        if owner[k] != p {
                            block.boundary_pairs.push((m, k));
                        }
                    }
                }
            }
        }
    }
    Ok(CubeGeometry {
        d,
        half_side: l,
        params: params.clone(),
        blocks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hopping {
    /// Nearest-neighbour hopping 1, zero diagonal.
    LaplacianOffdiag,
    /// `H_0 = 0`.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub hopping: Hopping,
    pub coupling: f64,
}

impl HamiltonianSpec {
    pub fn new(hopping: Hopping, coupling: f64) -> Result<Self> {
        if !(coupling > 0.0 && coupling.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coupling must be positive, got {coupling}"
            )));
        }
        Ok(Self { hopping, coupling })
    }

    /// `‖H_0‖_∞` on `Z^d`.
    pub fn hopping_norm(&self, d: usize) -> f64 {
        match self.hopping {
            Hopping::LaplacianOffdiag => 2.0 * d as f64,
            Hopping::None => 0.0,
        }
    }
}

/// Symmetric sparse matrix: diagonal plus off-diagonal pattern stored by rows
/// (both triangles).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHamiltonian {
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseHamiltonian {
    /// Builds from a diagonal and off-diagonal triplets `(i, j, v)` with
    /// `i < j`; the mirror entries are added here.
    pub fn from_parts(diag: Vec<f64>, upper: &[(usize, usize, f64)]) -> Result<Self> {
        let n = diag.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in upper {
            if i >= n || j >= n {
                return Err(Error::IndexOutOfRange {
                    index: i.max(j),
                    len: n,
                });
            }
            if i == j {
                return Err(Error::InvalidArgument("off-diagonal triplet on the diagonal".into()));
            }
            rows[i].push((j, v));
            rows[j].push((i, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            diag,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn diagonal_matrix(diag: Vec<f64>) -> Self {
        let n = diag.len();
        Self {
            diag,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal entries `(column, value)` of `row`.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn off_diagonal_count(&self) -> usize {
        self.cols.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        self.row(i).find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    /// Largest `|i − j|` over stored off-diagonal entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n())
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn is_tridiagonal(&self) -> bool {
        self.bandwidth() <= 1
    }

    /// `(diagonal, sub-diagonal)` when tridiagonal.
    pub fn tridiagonal(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if !self.is_tridiagonal() {
            return None;
        }
        let n = self.n();
        let off = (1..n).map(|i| self.entry(i, i - 1)).collect();
        Some((self.diag.clone(), off))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n())
            .map(|i| self.diag[i].abs() + self.row(i).map(|e| e.1.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.diag[i] * x[i] + self.row(i).map(|(j, v)| v * x[j]).sum::<f64>())
            .collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.n();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n()).all(|i| self.row(i).all(|(j, v)| self.entry(j, i) == v))
    }

    /// Principal submatrix on `sites` (ascending global indices).
    pub fn principal_submatrix(&self, sites: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut local = vec![usize::MAX; n];
        for (li, &g) in sites.iter().enumerate() {
            if g >= n {
                return Err(Error::IndexOutOfRange { index: g, len: n });
            }
            local[g] = li;
        }
        let diag: Vec<f64> = sites.iter().map(|&g| self.diag[g]).collect();
        let mut upper = Vec::new();
        for (li, &g) in sites.iter().enumerate() {
            for (j, v) in self.row(g) {
                let lj = local[j];
                if lj != usize::MAX && lj > li {
                    upper.push((li, lj, v));
                }
            }
        }
        Self::from_parts(diag, &upper)
    }
}

/// `H = H_0 + λ Σ ω_j P_j` on `Λ_L` with open boundary.
pub fn assemble_hamiltonian(
    spec: &HamiltonianSpec,
    geom: &CubeGeometry,
    omega: &[f64],
) -> Result<SparseHamiltonian> {
    let n = geom.volume();
    if omega.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: omega.len(),
        });
    }
    let diag: Vec<f64> = omega.iter().map(|w| spec.coupling * w).collect();
    match spec.hopping {
        Hopping::None => Ok(SparseHamiltonian::diagonal_matrix(diag)),
        Hopping::LaplacianOffdiag => {
            let side = geom.side();
            let mut upper = Vec::with_capacity(n * geom.d);
            for i in 0..n {
                let mut stride = 1;
                let mut rest = i;
                for _ in 0..geom.d {
                    // coordinate along this axis, last axis first
                    if rest % side + 1 < side {
                        upper.push((i, i + stride, 1.0));
                    }
                    rest /= side;
                    stride *= side;
                }
            }
            SparseHamiltonian::from_parts(diag, &upper)
        }
    }
}

/// `H_{C_p}`: compression of `h` to block `p`.
pub fn restrict_to_block(
    h: &SparseHamiltonian,
    geom: &CubeGeometry,
    p: usize,
) -> Result<SparseHamiltonian> {
    if h.n() != geom.volume() {
        return Err(Error::SizeMismatch {
            expected: geom.volume(),
            got: h.n(),
        });
    }
    h.principal_submatrix(&geom.block(p)?.sites)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choose_scales_examples() {
        let s = choose_scales(1000, 0.3, 1.0, 0.5, 1).unwrap();
        assert_eq!(s.n_blocks_per_side, 204);
        assert_eq!(s.interior_margin, 77);
        assert!(!s.valid);
        assert!((s.block_side - 2001.0 / 204.0).abs() < 1e-12);

        let s = choose_scales(1_000_000, 0.5, 1.0, 1.0, 1).unwrap();
        assert_eq!(s.n_blocks_per_side, 1414);
        assert_eq!(s.interior_margin, 73);
        assert!(s.valid);

        for eps in [0.01, 0.5, 0.999] {
            assert!(choose_scales(1, eps, 1.0, 1.0, 1).unwrap().n_blocks_per_side >= 1);
        }
        assert!(choose_scales(10, 1.0, 1.0, 1.0, 1).is_err());
        assert!(choose_scales(10, 0.5, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn partition_examples() {
        let g = partition_cube(1, 4, &ScaleParams::scaled(4, 3, 0).unwrap()).unwrap();
        let sizes: Vec<usize> = g.blocks.iter().map(|b| b.sites.len()).collect();
        assert_eq!(sizes, vec![3, 3, 3]);
        assert_eq!(g.blocks[0].lower, vec![-4]);
        assert_eq!(g.blocks[1].lower, vec![-1]);
        assert_eq!(g.blocks[2].upper, vec![4]);

        let g = partition_cube(1, 4, &ScaleParams::scaled(4, 1, 1).unwrap()).unwrap();
        assert_eq!(g.blocks.len(), 1);
        assert_eq!(g.blocks[0].sites.len(), 9);
        let interior: Vec<i64> = g.blocks[0].interior.iter().map(|&i| g.coords(i)[0]).collect();
        assert_eq!(interior, vec![-2, -1, 0, 1, 2]);

        let g = partition_cube(2, 2, &ScaleParams::scaled(2, 1, 0).unwrap()).unwrap();
        assert_eq!(g.blocks[0].sites.len(), 25);
    }

    #[test]
    fn invalid_params_refused() {
        let s = choose_scales(1000, 0.3, 1.0, 0.5, 1).unwrap();
        assert!(matches!(partition_cube(1, 1000, &s), Err(Error::InvalidScale(_))));
        let s = ScaleParams::scaled(4, 3, 1).unwrap();
        assert!(!s.valid);
    }

    #[test]
    fn partition_cover_and_interiors_by_exhaustion() {
        for (d, l, n, margin) in [(1, 7, 3, 1), (2, 5, 2, 1), (2, 6, 3, 0), (3, 3, 2, 0), (1, 20, 4, 2)] {
            let g = partition_cube(d, l, &ScaleParams::scaled(l, n, margin).unwrap()).unwrap();
            let mut seen = vec![0u32; g.volume()];
            for b in &g.blocks {
                for &s in &b.sites {
                    seen[s] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1));
            assert_eq!(g.blocks.iter().map(|b| b.sites.len()).sum::<usize>(), (2 * l + 1).pow(d as u32));
            for b in &g.blocks {
                let coords: Vec<Vec<i64>> = b.sites.iter().map(|&s| g.coords(s)).collect();
                let boundary: Vec<&Vec<i64>> = coords
                    .iter()
                    .filter(|x| {
                        (0..d).any(|axis| {
                            [-1i64, 1].iter().any(|st| {
                                let mut y = (*x).clone();
                                y[axis] += st;
                                !b.contains_coords(&y)
                            })
                        })
                    })
                    .collect();
                for (x, &s) in coords.iter().zip(&b.sites) {
                    let dist = boundary
                        .iter()
                        .map(|y| x.iter().zip(y.iter()).map(|(a, c)| (a - c).abs()).max().unwrap())
                        .min()
                        .unwrap();
                    assert_eq!(b.interior.contains(&s), dist > margin as i64);
                }
                for &(m, k) in &b.boundary_pairs {
                    assert!(b.sites.contains(&m) && !b.sites.contains(&k));
                    let (xm, xk) = (g.coords(m), g.coords(k));
                    let l1: i64 = xm.iter().zip(&xk).map(|(a, c)| (a - c).abs()).sum();
                    assert_eq!(l1, 1);
                }
            }
        }
    }

    #[test]
    fn coordinates_round_trip() {
        let g = CubeGeometry::whole(3, 2).unwrap();
        for i in 0..g.volume() {
            assert_eq!(g.index(&g.coords(i)), Some(i));
        }
        assert_eq!(g.coords(g.center()), vec![0, 0, 0]);
        assert_eq!(g.index(&[3, 0, 0]), None);
    }

    #[test]
    fn assemble_examples() {
        let g = CubeGeometry::whole(1, 1).unwrap();
        let spec = HamiltonianSpec::new(Hopping::None, 2.0).unwrap();
        let h = assemble_hamiltonian(&spec, &g, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(h.diagonal(), &[0.2, 0.4, 0.6]);
        assert_eq!(h.off_diagonal_count(), 0);

        let spec = HamiltonianSpec::new(Hopping::LaplacianOffdiag, 1.0).unwrap();
        let h = assemble_hamiltonian(&spec, &g, &[0.0; 3]).unwrap();
        let eig = nalgebra::SymmetricEigen::new(h.to_dense()).eigenvalues;
        let mut e: Vec<f64> = eig.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        let r2 = 2f64.sqrt();
        for (a, b) in e.iter().zip([-r2, 0.0, r2]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(h.is_symmetric());
        assert!(matches!(
            assemble_hamiltonian(&spec, &g, &[0.0; 2]),
            Err(Error::SizeMismatch { expected: 3, got: 2 })
        ));
        assert!(HamiltonianSpec::new(Hopping::None, 0.0).is_err());
    }

    #[test]
    fn assemble_open_boundary_2d() {
        let g = CubeGeometry::whole(2, 2).unwrap();
        let spec = HamiltonianSpec::new(Hopping::LaplacianOffdiag, 1.0).unwrap();
        let h = assemble_hamiltonian(&spec, &g, &vec![0.0; 25]).unwrap();
        // 2 * (5 * 4) bonds, stored twice
        assert_eq!(h.off_diagonal_count(), 80);
        assert_eq!(h.bandwidth(), 5);
        assert!(h.is_symmetric());
        for i in 0..25 {
            for (j, v) in h.row(i) {
                let (a, b) = (g.coords(i), g.coords(j));
                let l1: i64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
                assert_eq!(l1, 1);
                assert_eq!(v, 1.0);
            }
        }
    }

    #[test]
    fn restrict_examples() {
        let spec = HamiltonianSpec::new(Hopping::LaplacianOffdiag, 1.0).unwrap();
        let g1 = CubeGeometry::whole(1, 4).unwrap();
        let omega: Vec<f64> = (0..9).map(|i| i as f64 * 0.1).collect();
        let h = assemble_hamiltonian(&spec, &g1, &omega).unwrap();
        assert_eq!(restrict_to_block(&h, &g1, 0).unwrap(), h);

        let g3 = partition_cube(1, 4, &ScaleParams::scaled(4, 3, 0).unwrap()).unwrap();
        let b = restrict_to_block(&h, &g3, 1).unwrap();
        assert_eq!(b.n(), 3);
        assert_eq!(b.off_diagonal_count(), 4);
        assert_eq!(b.diagonal(), &omega[3..6]);
        assert!(matches!(restrict_to_block(&h, &g3, 3), Err(Error::IndexOutOfRange { .. })));

        let none = HamiltonianSpec::new(Hopping::None, 1.0).unwrap();
        let h = assemble_hamiltonian(&none, &g3, &omega).unwrap();
        let b = restrict_to_block(&h, &g3, 2).unwrap();
        assert_eq!(b, SparseHamiltonian::diagonal_matrix(omega[6..9].to_vec()));
    }
}
