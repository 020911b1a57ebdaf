//! Biorthonormal eigendecomposition of small diagonalizable complex matrices.
//!
//! Eigenvalues come from the characteristic polynomial (closed forms for
//! dimension 2 and 3, Durand–Kerner iteration above that), followed by a
//! Newton polish. Nearby roots are grouped into levels and every candidate
//! group is confirmed by the nullity of `M - λ I`, so a semisimple repeated
//! eigenvalue becomes one degenerate level while a Jordan block is rejected.
//! Right vectors are orthonormal within a level; the left vectors are the
//! dual basis (rows of the inverse of the right-vector matrix), which makes
//! biorthonormality and completeness hold to working precision.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linops::{fro_norm, CMatrix};

/// Default biorthonormality tolerance.
pub const EPS_BI: f64 = 1e-9;
/// Default relative threshold below which eigenvalues are grouped into one level.
pub const EPS_DEG: f64 = 1e-8;

/// Relative spread within which raw roots are treated as grouping candidates.
/// Roots of a polynomial with a double zero carry errors of order sqrt(eps).
const CANDIDATE_TOL: f64 = 1e-5;
/// Relative pivot size below which a direction counts as null.
const RANK_TOL: f64 = 1e-9;
/// Eigenbases with a worse condition number are reported as defective.
const MAX_BASIS_CONDITION: f64 = 1e8;
/// A Jordan block perturbed by rounding splits its roots by about
/// sqrt(eps)·‖M‖; clusters tighter than this are never split.
const JORDAN_SPLIT: f64 = 1e-6;

/// One eigenvalue level with its degeneracy subspace.
#[derive(Debug, Clone)]
pub struct Level {
    pub eigenvalue: C64,
    /// Right eigenvectors ψ_{n,a}, orthonormal within the level.
    pub right: Vec<Vec<C64>>,
    /// Dual left eigenvectors φ_{n,a}, with ⟨φ_{n,a}|ψ_{m,b}⟩ = δ_nm δ_ab.
    pub left: Vec<Vec<C64>>,
}

impl Level {
    pub fn degeneracy(&self) -> usize {
        self.right.len()
    }
}

#[derive(Debug, Clone)]
pub struct BiorthoEigensystem {
    dim: usize,
    pub levels: Vec<Level>,
}

impl BiorthoEigensystem {
    pub fn new(dim: usize, levels: Vec<Level>) -> Self {
        BiorthoEigensystem { dim, levels }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.levels.iter().map(|l| l.eigenvalue).collect()
    }

    pub fn degeneracies(&self) -> Vec<usize> {
        self.levels.iter().map(Level::degeneracy).collect()
    }

    /// Index of the first basis column belonging to each level.
    pub fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.levels.len());
        let mut acc = 0;
        for l in &self.levels {
            off.push(acc);
            acc += l.degeneracy();
        }
        off
    }

    /// Matrix Ψ whose columns are all right vectors in level order.
    pub fn right_matrix(&self) -> CMatrix {
        let cols: Vec<Vec<C64>> = self.levels.iter().flat_map(|l| l.right.iter().cloned()).collect();
        CMatrix::from_columns(&cols)
    }

    /// Matrix Φ whose columns are all left vectors in level order.
    pub fn left_matrix(&self) -> CMatrix {
        let cols: Vec<Vec<C64>> = self.levels.iter().flat_map(|l| l.left.iter().cloned()).collect();
        CMatrix::from_columns(&cols)
    }

    /// max |⟨φ_i|ψ_j⟩ − δ_ij|
    pub fn biorthonormality_error(&self) -> f64 {
        let g = &self.left_matrix().adjoint() * &self.right_matrix();
        (&g - &CMatrix::identity(self.dim)).max_abs()
    }

    /// max |Σ|ψ⟩⟨φ| − 1|
    pub fn completeness_error(&self) -> f64 {
        let g = &self.right_matrix() * &self.left_matrix().adjoint();
        (&g - &CMatrix::identity(self.dim)).max_abs()
    }

    /// Σ_n E_n Σ_a |ψ_n,a⟩⟨φ_n,a|
    pub fn reconstruct(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim);
        for l in &self.levels {
            for (r, lf) in l.right.iter().zip(&l.left) {
                m += &CMatrix::outer(r, lf).scale(l.eigenvalue);
            }
        }
        m
    }

    /// Rebuilds the left vectors as the dual basis of the current right vectors.
    pub(crate) fn rebuild_duals(&mut self) -> Result<()> {
        let psi = self.right_matrix();
        let inv = psi
            .try_inverse()
            .ok_or_else(|| Error::NonFinite("eigenvector matrix is singular".into()))?;
        let mut row = 0;
        for l in &mut self.levels {
            for a in 0..l.degeneracy() {
                l.left[a] = inv.row(row).iter().map(|z| z.conj()).collect();
                row += 1;
            }
        }
        Ok(())
    }
}

/// Biorthonormal eigensystem of a diagonalizable matrix, grouped into levels.
pub fn bi_eigensystem(m: &CMatrix, eps_deg: f64) -> Result<BiorthoEigensystem> {
    let n = m.dim();
    if !m.is_finite() {
        return Err(Error::NonFinite("matrix has non-finite entries".into()));
    }
    assert!(eps_deg > 0.0, "eps_deg must be positive");
    let scale = fro_norm(m).max(1.0);
    let roots = polish_roots(m, raw_eigenvalues(m)?);

    let mut groups: Vec<(C64, Vec<Vec<C64>>)> = Vec::new();
    for cluster in candidate_clusters(&roots, CANDIDATE_TOL * scale) {
        resolve_cluster(m, &roots, cluster, eps_deg, scale, &mut groups)?;
    }
    groups.sort_by(|a, b| {
        a.0.re
            .partial_cmp(&b.0.re)
            .unwrap()
            .then(a.0.im.partial_cmp(&b.0.im).unwrap())
    });

    let levels: Vec<Level> = groups
        .into_iter()
        .map(|(e, right)| {
            let k = right.len();
            Level { eigenvalue: e, right, left: vec![vec![C64::new(0.0, 0.0); n]; k] }
        })
        .collect();
    let mut sys = BiorthoEigensystem { dim: n, levels };

    let psi = sys.right_matrix();
    let inv = psi.try_inverse().ok_or_else(|| defective(&sys))?;
    if fro_norm(&psi) * fro_norm(&inv) > MAX_BASIS_CONDITION {
        return Err(defective(&sys));
    }
    sys.rebuild_duals()?;

    // Dual Rayleigh quotient per level: well conditioned even where the
    // characteristic polynomial has a multiple root.
    for l in &mut sys.levels {
        let k = l.degeneracy();
        let mut tr = C64::new(0.0, 0.0);
        for a in 0..k {
            let mv = m.mul_vec(&l.right[a]);
            tr += inner(&l.left[a], &mv);
        }
        l.eigenvalue = tr / k as f64;
    }
    for w in sys.levels.windows(2) {
        let (e1, e2) = (w[0].eigenvalue, w[1].eigenvalue);
        let lscale = 1f64.max(e1.norm()).max(e2.norm());
        if (e1 - e2).norm() <= eps_deg * lscale {
            return Err(defective(&sys));
        }
    }
    Ok(sys)
}

fn defective(sys: &BiorthoEigensystem) -> Error {
    let worst = sys.levels.first().map(|l| l.eigenvalue).unwrap_or_default();
    Error::DefectiveMatrix { eigenvalue: worst, geometric: 1, algebraic: 2 }
}

/// ⟨u|v⟩ with the left argument conjugated.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn raw_eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    match m.dim() {
        0 => Ok(vec![]),
        1 => Ok(vec![m[(0, 0)]]),
        2 => {
            let half = m.trace() * 0.5;
            let det = m.det();
            let d = (half * half - det).sqrt();
            Ok(vec![half - d, half + d])
        }
        3 => Ok(cubic_roots(m)),
        _ => durand_kerner(&char_poly(m)),
    }
}

/// Monic characteristic polynomial coefficients [c_0, …, c_{n-1}, 1] of
/// det(λ − M) by the Faddeev–LeVerrier recursion.
fn char_poly(m: &CMatrix) -> Vec<C64> {
    let n = m.dim();
    let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
    coeffs[n] = C64::new(1.0, 0.0);
    let mut mk = CMatrix::zeros(n);
    for k in 1..=n {
        let shifted = &mk + &CMatrix::identity(n).scale(coeffs[n - k + 1]);
        mk = m * &shifted;
        coeffs[n - k] = -mk.trace() / k as f64;
    }
    coeffs
}

fn eval_poly(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn cubic_roots(m: &CMatrix) -> Vec<C64> {
    // λ³ + Aλ² + Bλ + C
    let a = -m.trace();
    let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)]
        - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)]
        - m[(1, 2)] * m[(2, 1)];
    let b = minors;
    let c = -m.det();
    let p = b - a * a / 3.0;
    let q = a * a * a * (2.0 / 27.0) - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    let sq = disc.sqrt();
    let w1 = -q / 2.0 + sq;
    let w2 = -q / 2.0 - sq;
    let w = if w1.norm() >= w2.norm() { w1 } else { w2 };
    let omega = C64::new(-0.5, 3f64.sqrt() / 2.0);
    if w.norm() == 0.0 {
        // p = q = 0: triple root
        return vec![shift; 3];
    }
    let u = w.powf(1.0 / 3.0);
    let mut roots = Vec::with_capacity(3);
    let mut uk = u;
    for _ in 0..3 {
        let v = -p / (uk * 3.0);
        roots.push(uk + v + shift);
        uk *= omega;
    }
    roots
}

fn durand_kerner(coeffs: &[C64]) -> Result<Vec<C64>> {
    let n = coeffs.len() - 1;
    let radius = 1.0 + coeffs[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let seed = C64::new(0.4, 0.9);
    let mut z: Vec<C64> = (0..n).map(|k| seed.powu(k as u32) * radius * 0.5).collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let (p, _) = eval_poly(coeffs, z[i]);
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                z[i] += C64::new(1e-8 * radius, 1e-8 * radius);
                continue;
            }
            let step = p / denom;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta <= 1e-15 * radius {
            return Ok(z);
        }
    }
    Err(Error::NonConvergence("Durand-Kerner root iteration".into()))
}

/// One guarded Newton step on the characteristic polynomial for each root.
fn polish_roots(m: &CMatrix, roots: Vec<C64>) -> Vec<C64> {
    let coeffs = char_poly(m);
    roots
        .into_iter()
        .map(|r| {
            let (p, dp) = eval_poly(&coeffs, r);
            if dp.norm() == 0.0 {
                return r;
            }
            let cand = r - p / dp;
            let (pc, _) = eval_poly(&coeffs, cand);
            if pc.norm() < p.norm() && cand.re.is_finite() && cand.im.is_finite() {
                cand
            } else {
                r
            }
        })
        .collect()
}

/// Single-linkage clusters of root indices at absolute tolerance `tol`.
fn candidate_clusters(roots: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = roots.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (roots[i] - roots[j]).norm() <= tol {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut roots_of: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match roots_of.iter().position(|&x| x == r) {
            Some(p) => clusters[p].push(i),
            None => {
                roots_of.push(r);
                clusters.push(vec![i]);
            }
        }
    }
    clusters
}

fn resolve_cluster(
    m: &CMatrix,
    roots: &[C64],
    cluster: Vec<usize>,
    eps_deg: f64,
    scale: f64,
    out: &mut Vec<(C64, Vec<Vec<C64>>)>,
) -> Result<()> {
    let n = m.dim();
    let k = cluster.len();
    // The sum over a cluster is better conditioned than its members: take it
    // from the trace and the roots outside the cluster.
    let outside: C64 = (0..roots.len()).filter(|i| !cluster.contains(i)).map(|i| roots[i]).sum();
    let mean = if k == 1 { roots[cluster[0]] } else { (m.trace() - outside) / k as f64 };
    let shifted = m - &CMatrix::identity(n).scale(mean);
    if k == 1 {
        out.push((mean, orthonormalize(null_space(&shifted, 1))));
        return Ok(());
    }
    // Roots of a multiple zero are only good to about the root spread; the
    // null-direction pivots of a semisimple level are that small, while a
    // Jordan block keeps an O(scale) pivot.
    let radius = cluster.iter().map(|&i| (roots[i] - mean).norm()).fold(0.0, f64::max);
    let nullity = n - rank(&shifted, (RANK_TOL * scale).max(10.0 * radius));
    if nullity >= k {
        out.push((mean, orthonormalize(null_space(&shifted, k))));
        return Ok(());
    }
    // Split at the widest edge of the cluster's minimum spanning tree.
    let (spread, left, right) = split_cluster(roots, &cluster);
    let lscale = 1f64.max(mean.norm());
    if spread <= (eps_deg * lscale).max(JORDAN_SPLIT * scale) {
        return Err(Error::DefectiveMatrix { eigenvalue: mean, geometric: nullity, algebraic: k });
    }
    resolve_cluster(m, roots, left, eps_deg, scale, out)?;
    resolve_cluster(m, roots, right, eps_deg, scale, out)
}

fn split_cluster(roots: &[C64], cluster: &[usize]) -> (f64, Vec<usize>, Vec<usize>) {
    // Prim's algorithm; remember the heaviest edge used.
    let k = cluster.len();
    let mut in_tree = vec![false; k];
    let mut best = vec![f64::INFINITY; k];
    let mut parent = vec![0usize; k];
    in_tree[0] = true;
    for j in 1..k {
        best[j] = (roots[cluster[0]] - roots[cluster[j]]).norm();
    }
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for _ in 1..k {
        let (j, _) = (0..k)
            .filter(|&j| !in_tree[j])
            .map(|j| (j, best[j]))
            .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        in_tree[j] = true;
        edges.push((best[j], parent[j], j));
        for l in 0..k {
            if !in_tree[l] {
                let d = (roots[cluster[j]] - roots[cluster[l]]).norm();
                if d < best[l] {
                    best[l] = d;
                    parent[l] = j;
                }
            }
        }
    }
    let (widx, &(wmax, _, _)) = edges
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.partial_cmp(&b.1 .0).unwrap())
        .unwrap();
    // Components after removing the widest edge.
    let mut comp: Vec<usize> = (0..k).collect();
    for (e, &(_, a, b)) in edges.iter().enumerate() {
        if e == widx {
            continue;
        }
        let (ca, cb) = (comp[a], comp[b]);
        for c in comp.iter_mut() {
            if *c == cb {
                *c = ca;
            }
        }
    }
    let first = comp[0];
    let left = (0..k).filter(|&j| comp[j] == first).map(|j| cluster[j]).collect();
    let right = (0..k).filter(|&j| comp[j] != first).map(|j| cluster[j]).collect();
    (wmax, left, right)
}

/// Complete-pivoting elimination; returns the reduced matrix plus row and column orders.
fn eliminate(a: &CMatrix, steps: usize) -> (CMatrix, Vec<usize>, Vec<f64>) {
    let n = a.dim();
    let mut w = a.clone();
    let mut cols: Vec<usize> = (0..n).collect();
    let mut pivots = Vec::with_capacity(steps);
    for k in 0..steps.min(n) {
        let mut best = (k, k, -1.0);
        for i in k..n {
            for j in k..n {
                let v = w[(i, j)].norm();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        let (pi, pj, pv) = best;
        pivots.push(pv);
        if pi != k {
            for j in 0..n {
                let tmp = w[(k, j)];
                w[(k, j)] = w[(pi, j)];
                w[(pi, j)] = tmp;
            }
        }
        if pj != k {
            for i in 0..n {
                let tmp = w[(i, k)];
                w[(i, k)] = w[(i, pj)];
                w[(i, pj)] = tmp;
            }
            cols.swap(k, pj);
        }
        if pv == 0.0 {
            continue;
        }
        let piv = w[(k, k)];
        for i in (k + 1)..n {
            let f = w[(i, k)] / piv;
            if f.norm() == 0.0 {
                continue;
            }
            for j in k..n {
                let wkj = w[(k, j)];
                w[(i, j)] -= f * wkj;
            }
        }
    }
    (w, cols, pivots)
}

fn rank(a: &CMatrix, tol: f64) -> usize {
    let (_, _, pivots) = eliminate(a, a.dim());
    pivots.iter().filter(|&&p| p > tol).count()
}

/// Basis of the (forced) `k`-dimensional null space of `a`.
fn null_space(a: &CMatrix, k: usize) -> Vec<Vec<C64>> {
    let n = a.dim();
    let r = n - k;
    let (w, cols, _) = eliminate(a, r);
    let mut basis = Vec::with_capacity(k);
    for f in r..n {
        // permuted unknowns y: y_f = 1, other free = 0, solve upper block for y_0..y_{r-1}
        let mut y = vec![C64::new(0.0, 0.0); n];
        y[f] = C64::new(1.0, 0.0);
        for i in (0..r).rev() {
            let mut s = w[(i, f)];
            for j in (i + 1)..r {
                s += w[(i, j)] * y[j];
            }
            y[i] = -s / w[(i, i)];
        }
        let mut x = vec![C64::new(0.0, 0.0); n];
        for (pos, &col) in cols.iter().enumerate() {
            x[col] = y[pos];
        }
        basis.push(x);
    }
    basis
}

/// Modified Gram–Schmidt, applied twice; each vector gets a fixed phase
/// convention (largest component real and positive).
fn orthonormalize(mut vs: Vec<Vec<C64>>) -> Vec<Vec<C64>> {
    for _ in 0..2 {
        for i in 0..vs.len() {
            for j in 0..i {
                let proj = inner(&vs[j], &vs[i]);
                let vj = vs[j].clone();
                for (x, y) in vs[i].iter_mut().zip(vj) {
                    *x -= proj * y;
                }
            }
            let nrm = vs[i].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            vs[i].iter_mut().for_each(|z| *z /= nrm);
        }
    }
    if vs.len() == 1 {
        let v = &mut vs[0];
        let big = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if let Some(&z) = v.iter().find(|z| z.norm() >= 0.5 * big) {
            let phase = z.conj() / z.norm();
            v.iter_mut().for_each(|x| *x *= phase);
        }
    }
    vs
}
