//! Matrix product state for the amplitude vector `|ν⟩`.
//!
//! Site `q` holds a rank-3 tensor `(left bond, physical, right bond)`; bit `q`
//! of a computational index is the physical index of site `q`. The chain is
//! kept in mixed-canonical form around `center`: tensors left of it are left
//! isometries and tensors right of it are right isometries.

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::error::{Error, Result};

/// 2×2 operator, `m[row][col]`.
pub type Mat2 = [[C64; 2]; 2];
/// 4×4 operator on an ordered pair `(a, b)`, row index `2·s_a + s_b`.
pub type Mat4 = [[C64; 4]; 4];

/// Largest register [`MpsState::to_dense`] and friends will expand.
pub const MAX_DENSE_QUBITS: usize = 20;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

type CMat = Mat<C64>;

/// Singular-value truncation applied after every two-site update.
///
/// Singular values `σ_j ≤ eps·σ_max` are discarded and at most `chi_max`
/// are kept. `eps = 0` disables compression: a two-site gate of operator
/// Schmidt rank `k` acting across a bond of dimension `χ` leaves `k·χ`
/// singular values (capped by the local matrix size), zeros included. This
/// is the bond an MPO application of the gate would produce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub eps: f64,
    pub chi_max: Option<usize>,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            eps: 1e-12,
            chi_max: None,
        }
    }
}

impl TruncationPolicy {
    pub fn new(eps: f64, chi_max: Option<usize>) -> Result<Self> {
        let p = Self { eps, chi_max };
        p.validate()?;
        Ok(p)
    }

    /// No truncation at all.
    pub fn none() -> Self {
        Self {
            eps: 0.0,
            chi_max: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidPolicy(format!("eps must be >= 0, got {}", self.eps)));
        }
        if self.chi_max == Some(0) {
            return Err(Error::InvalidPolicy("chi_max must be >= 1".into()));
        }
        Ok(())
    }

    fn keep(&self, sorted: &[f64]) -> usize {
        let mut k = if self.eps > 0.0 {
            let cutoff = self.eps * sorted[0];
            sorted.iter().take_while(|&&s| s > cutoff).count()
        } else {
            sorted.len()
        };
        if let Some(cap) = self.chi_max {
            k = k.min(cap);
        }
        k.max(1)
    }
}

#[derive(Clone, Debug, PartialEq)]
struct SiteTensor {
    left: usize,
    right: usize,
    data: Vec<C64>,
}

impl SiteTensor {
    fn zeros(left: usize, right: usize) -> Self {
        Self {
            left,
            right,
            data: vec![ZERO; left * 2 * right],
        }
    }

    #[inline]
    fn idx(&self, l: usize, s: usize, r: usize) -> usize {
        (l * 2 + s) * self.right + r
    }

    #[inline]
    fn at(&self, l: usize, s: usize, r: usize) -> C64 {
        self.data[self.idx(l, s, r)]
    }

    /// `(left·2) × right` matrix view.
    fn as_left_matrix(&self) -> CMat {
        Mat::from_fn(self.left * 2, self.right, |row, r| self.data[row * self.right + r])
    }

    /// `left × (2·right)` matrix view.
    fn as_right_matrix(&self) -> CMat {
        Mat::from_fn(self.left, 2 * self.right, |l, col| self.data[l * 2 * self.right + col])
    }

    fn from_left_matrix(m: &CMat) -> Self {
        let left = m.nrows() / 2;
        let right = m.ncols();
        let mut t = Self::zeros(left, right);
        for row in 0..m.nrows() {
            for r in 0..right {
                t.data[row * right + r] = m[(row, r)];
            }
        }
        t
    }

    fn from_right_matrix(m: &CMat) -> Self {
        let left = m.nrows();
        let right = m.ncols() / 2;
        let mut t = Self::zeros(left, right);
        for l in 0..left {
            for col in 0..m.ncols() {
                t.data[l * 2 * right + col] = m[(l, col)];
            }
        }
        t
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpsState {
    sites: Vec<SiteTensor>,
    center: usize,
}

/// JSON dump of an MPS: per-site shapes and row-major `[re, im]` entries.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MpsDump {
    pub n: usize,
    pub sites: Vec<SiteDump>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SiteDump {
    /// `[left bond, physical, right bond]`
    pub shape: [usize; 3],
    pub entries: Vec<[f64; 2]>,
}

pub(crate) fn is_unitary2(m: &Mat2) -> bool {
    for i in 0..2 {
        for j in 0..2 {
            let v: C64 = (0..2).map(|k| m[k][i].conj() * m[k][j]).sum();
            let target = if i == j { ONE } else { ZERO };
            if (v - target).norm() > 1e-12 {
                return false;
            }
        }
    }
    true
}

/// Reorders a gate on `(a, b)` into a gate on `(b, a)`.
fn swap_operands(m: &Mat4) -> Mat4 {
    let perm = |i: usize| ((i & 1) << 1) | (i >> 1);
    let mut out = [[ZERO; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[perm(i)][perm(j)];
        }
    }
    out
}

pub fn swap_gate() -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = ONE;
    m[1][2] = ONE;
    m[2][1] = ONE;
    m[3][3] = ONE;
    m
}

pub fn cnot_gate() -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = ONE;
    m[1][1] = ONE;
    m[2][3] = ONE;
    m[3][2] = ONE;
    m
}

impl MpsState {
    /// Product state `|idx⟩` with all bonds of dimension 1.
    pub fn basis_state(n: usize, idx: &Bits) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("an MPS needs at least one site".into()));
        }
        if idx.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: idx.len(),
            });
        }
        let sites = (0..n)
            .map(|q| {
                let mut t = SiteTensor::zeros(1, 1);
                t.data[idx.get(q) as usize] = ONE;
                t
            })
            .collect();
        Ok(Self { sites, center: 0 })
    }

    /// Exact decomposition of a dense vector by successive SVDs.
    pub fn from_dense(amps: &[C64], policy: &TruncationPolicy) -> Result<Self> {
        if !amps.len().is_power_of_two() || amps.len() < 2 {
            return Err(Error::InvalidSize(format!("{} amplitudes", amps.len())));
        }
        let n = amps.len().trailing_zeros() as usize;
        if n > MAX_DENSE_QUBITS {
            return Err(Error::Capacity {
                what: "MpsState::from_dense",
                max: MAX_DENSE_QUBITS,
                n,
            });
        }
        policy.validate()?;
        // rest[(bond, remaining index)], remaining index little-endian over sites k..n
        let mut bond = 1usize;
        let mut rest = Mat::from_fn(1, amps.len(), |_, j| amps[j]);
        let mut sites = Vec::with_capacity(n);
        for _ in 0..n - 1 {
            let cols = rest.ncols() / 2;
            // row = (l, s) with s the lowest remaining bit
            let m = Mat::from_fn(bond * 2, cols, |row, c| rest[(row / 2, (row % 2) + 2 * c)]);
            let (u, s, vt) = svd_sorted(&m)?;
            let k = policy.keep(&s);
            let u = u.subcols(0, k).to_owned();
            let mut next = vt.subrows(0, k).to_owned();
            for (i, sv) in s.iter().take(k).enumerate() {
                scale_row(&mut next, i, *sv);
            }
            sites.push(SiteTensor::from_left_matrix(&u));
            bond = k;
            rest = next;
        }
        let mut last = SiteTensor::zeros(bond, 1);
        for l in 0..bond {
            for s in 0..2 {
                let i = last.idx(l, s, 0);
                last.data[i] = rest[(l, s)];
            }
        }
        sites.push(last);
        Ok(Self {
            center: n - 1,
            sites,
        })
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    /// `χ_k` between sites `k` and `k+1`, for `k = 0..n-1`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.sites.len() - 1].iter().map(|t| t.right).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn center(&self) -> usize {
        self.center
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.sites.len() {
            return Err(Error::OutOfRange {
                what: "sites",
                index: site,
                len: self.sites.len(),
            });
        }
        Ok(())
    }

    /// Moves the orthogonality center with QR steps; bond dimensions never grow.
    pub fn move_center(&mut self, target: usize) -> Result<()> {
        self.check_site(target)?;
        while self.center < target {
            let c = self.center;
            let qr = self.sites[c].as_left_matrix().qr();
            let (q, r) = (qr.compute_thin_Q(), qr.thin_R().to_owned());
            self.sites[c] = SiteTensor::from_left_matrix(&q);
            let next = &self.sites[c + 1];
            let merged = &r * &next.as_right_matrix();
            self.sites[c + 1] = SiteTensor::from_right_matrix(&merged);
            self.center += 1;
        }
        while self.center > target {
            let c = self.center;
            // M = R† Q† from the QR of M†
            let qr = self.sites[c].as_right_matrix().adjoint().qr();
            let (q, r) = (qr.compute_thin_Q(), qr.thin_R().to_owned());
            self.sites[c] = SiteTensor::from_right_matrix(&q.adjoint().to_owned());
            let prev = &self.sites[c - 1];
            let merged = &prev.as_left_matrix() * r.adjoint();
            self.sites[c - 1] = SiteTensor::from_left_matrix(&merged);
            self.center -= 1;
        }
        Ok(())
    }

    /// Applies a single-site operator; it need not be unitary.
    pub fn apply_1q(&mut self, site: usize, mat: &Mat2) -> Result<()> {
        self.check_site(site)?;
        if !is_unitary2(mat) {
            self.move_center(site)?;
        }
        let t = &mut self.sites[site];
        for l in 0..t.left {
            for r in 0..t.right {
                let a0 = t.at(l, 0, r);
                let a1 = t.at(l, 1, r);
                let i0 = t.idx(l, 0, r);
                let i1 = t.idx(l, 1, r);
                t.data[i0] = mat[0][0] * a0 + mat[0][1] * a1;
                t.data[i1] = mat[1][0] * a0 + mat[1][1] * a1;
            }
        }
        Ok(())
    }

    /// Applies a two-site operator on `(a, b)`; non-adjacent pairs are routed
    /// by swapping `b` next to `a` and back again.
    pub fn apply_2q(&mut self, a: usize, b: usize, mat: &Mat4, policy: &TruncationPolicy) -> Result<()> {
        self.check_site(a)?;
        self.check_site(b)?;
        if a == b {
            return Err(Error::DuplicateOperand(a));
        }
        policy.validate()?;
        let swap = swap_gate();
        if b > a {
            for k in (a + 1..b).rev() {
                self.apply_adjacent(k, &swap, policy)?;
            }
            self.apply_adjacent(a, mat, policy)?;
            for k in a + 1..b {
                self.apply_adjacent(k, &swap, policy)?;
            }
        } else {
            for k in b..a - 1 {
                self.apply_adjacent(k, &swap, policy)?;
            }
            self.apply_adjacent(a - 1, &swap_operands(mat), policy)?;
            for k in (b..a - 1).rev() {
                self.apply_adjacent(k, &swap, policy)?;
            }
        }
        Ok(())
    }

    /// Gate on sites `(i, i+1)`, row index `2·s_i + s_{i+1}`.
    fn apply_adjacent(&mut self, i: usize, mat: &Mat4, policy: &TruncationPolicy) -> Result<()> {
        if self.center != i && self.center != i + 1 {
            self.move_center(i)?;
        }
        let (left, mid, right) = (self.sites[i].left, self.sites[i].right, self.sites[i + 1].right);
        let (a, b) = (&self.sites[i], &self.sites[i + 1]);
        // theta[(l, s1), (s2, r)]
        let mut theta = CMat::zeros(left * 2, 2 * right);
        for l in 0..left {
            for s1 in 0..2 {
                for k in 0..mid {
                    let av = a.at(l, s1, k);
                    if av == ZERO {
                        continue;
                    }
                    for s2 in 0..2 {
                        for r in 0..right {
                            theta[(l * 2 + s1, s2 * right + r)] += av * b.at(k, s2, r);
                        }
                    }
                }
            }
        }
        let mut gated = CMat::zeros(left * 2, 2 * right);
        for l in 0..left {
            for r in 0..right {
                for t1 in 0..2 {
                    for t2 in 0..2 {
                        let mut acc = ZERO;
                        for s1 in 0..2 {
                            for s2 in 0..2 {
                                acc += mat[2 * t1 + t2][2 * s1 + s2] * theta[(l * 2 + s1, s2 * right + r)];
                            }
                        }
                        gated[(l * 2 + t1, t2 * right + r)] = acc;
                    }
                }
            }
        }
        let (u, s, vt) = svd_sorted(&gated)?;
        let mut k = policy.keep(&s);
        if policy.eps == 0.0 {
            k = k.min(operator_schmidt_rank(mat)? * mid);
        }
        let u = u.subcols(0, k).to_owned();
        let mut sv = vt.subrows(0, k).to_owned();
        for (j, val) in s.iter().take(k).enumerate() {
            scale_row(&mut sv, j, *val);
        }
        self.sites[i] = SiteTensor::from_left_matrix(&u);
        self.sites[i + 1] = SiteTensor::from_right_matrix(&sv);
        self.center = i + 1;
        Ok(())
    }

    fn site_operator(x: bool, z: bool) -> Mat2 {
        // X^x Z^z
        match (x, z) {
            (false, false) => [[ONE, ZERO], [ZERO, ONE]],
            (true, false) => [[ZERO, ONE], [ONE, ZERO]],
            (false, true) => [[ONE, ZERO], [ZERO, -ONE]],
            (true, true) => [[ZERO, -ONE], [ONE, ZERO]],
        }
    }

    /// `⟨self| ⊗_q O_q |other⟩` by a left-to-right transfer contraction.
    fn sandwich(&self, other: &Self, ops: &dyn Fn(usize) -> Mat2) -> C64 {
        let mut env = Mat::from_fn(1, 1, |_, _| ONE);
        for (q, (a, b)) in self.sites.iter().zip(&other.sites).enumerate() {
            let op = ops(q);
            // tmp[l, s', r'] = Σ_{l'} env[l, l'] · Σ_s op[s', s] b[l', s, r']
            let mut ob = SiteTensor::zeros(b.left, b.right);
            for l in 0..b.left {
                for r in 0..b.right {
                    let (b0, b1) = (b.at(l, 0, r), b.at(l, 1, r));
                    let i0 = ob.idx(l, 0, r);
                    let i1 = ob.idx(l, 1, r);
                    ob.data[i0] = op[0][0] * b0 + op[0][1] * b1;
                    ob.data[i1] = op[1][0] * b0 + op[1][1] * b1;
                }
            }
            let mut next = CMat::zeros(a.right, b.right);
            for l in 0..a.left {
                for lp in 0..b.left {
                    let e = env[(l, lp)];
                    if e == ZERO {
                        continue;
                    }
                    for s in 0..2 {
                        for r in 0..a.right {
                            let ac = a.at(l, s, r).conj() * e;
                            if ac == ZERO {
                                continue;
                            }
                            for rp in 0..b.right {
                                next[(r, rp)] += ac * ob.at(lp, s, rp);
                            }
                        }
                    }
                }
            }
            env = next;
        }
        env[(0, 0)]
    }

    /// `⟨ν| X_x Z_z |ν⟩` with the Z factors applied first.
    pub fn expect_pauli(&self, xbits: &Bits, zbits: &Bits) -> Result<C64> {
        let n = self.num_sites();
        for b in [xbits, zbits] {
            if b.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: b.len(),
                });
            }
        }
        Ok(self.sandwich(self, &|q| Self::site_operator(xbits.get(q), zbits.get(q))))
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.num_sites() != other.num_sites() {
            return Err(Error::LengthMismatch {
                expected: self.num_sites(),
                got: other.num_sites(),
            });
        }
        Ok(self.sandwich(other, &|_| Self::site_operator(false, false)))
    }

    pub fn norm(&self) -> f64 {
        self.sandwich(self, &|_| Self::site_operator(false, false))
            .re
            .max(0.0)
            .sqrt()
    }

    /// Rescales to unit norm; returns the norm found beforehand.
    pub fn normalize(&mut self) -> Result<f64> {
        let nrm = self.norm();
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(Error::Internal(format!("cannot normalize a state of norm {nrm}")));
        }
        let c = self.center;
        for v in &mut self.sites[c].data {
            *v /= nrm;
        }
        Ok(nrm)
    }

    fn dense_guard(&self, what: &'static str) -> Result<()> {
        if self.num_sites() > MAX_DENSE_QUBITS {
            return Err(Error::Capacity {
                what,
                max: MAX_DENSE_QUBITS,
                n: self.num_sites(),
            });
        }
        Ok(())
    }

    /// Full amplitude vector, little-endian in the site index.
    pub fn to_dense(&self) -> Result<Vec<C64>> {
        self.dense_guard("MpsState::to_dense")?;
        // acc[prefix * bond + r]
        let mut acc = vec![ONE];
        let mut prefix = 1usize;
        let mut bond = 1usize;
        for t in &self.sites {
            let mut next = vec![ZERO; prefix * 2 * t.right];
            for p in 0..prefix {
                for l in 0..bond {
                    let v = acc[p * bond + l];
                    if v == ZERO {
                        continue;
                    }
                    for s in 0..2 {
                        let np = p + s * prefix;
                        for r in 0..t.right {
                            next[np * t.right + r] += v * t.at(l, s, r);
                        }
                    }
                }
            }
            acc = next;
            prefix *= 2;
            bond = t.right;
        }
        Ok(acc)
    }

    /// Number of amplitudes with `|ν_i| > tol`.
    pub fn count_nonzero(&self, tol: f64) -> Result<usize> {
        self.dense_guard("MpsState::count_nonzero")?;
        Ok(self.to_dense()?.iter().filter(|a| a.norm() > tol).count())
    }

    pub fn dump(&self) -> MpsDump {
        MpsDump {
            n: self.num_sites(),
            sites: self
                .sites
                .iter()
                .map(|t| SiteDump {
                    shape: [t.left, 2, t.right],
                    entries: t.data.iter().map(|c| [c.re, c.im]).collect(),
                })
                .collect(),
        }
    }
}

fn scale_row(m: &mut CMat, row: usize, by: f64) {
    for c in 0..m.ncols() {
        m[(row, c)] *= by;
    }
}

/// Thin SVD `m = U diag(s) V†` with singular values in decreasing order.
fn operator_schmidt_rank(mat: &Mat4) -> Result<usize> {
    let r = CMat::from_fn(4, 4, |i, j| mat[2 * (i / 2) + j / 2][2 * (i % 2) + j % 2]);
    let (_, s, _) = svd_sorted(&r)?;
    Ok(s.iter().filter(|&&v| v > 1e-12 * s[0]).count())
}

fn svd_sorted(m: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let svd = m
        .thin_svd()
        .map_err(|e| Error::Internal(format!("SVD failed: {e:?}")))?;
    let u = svd.U();
    let vt = svd.V().adjoint().to_owned();
    let diag = svd.S().column_vector();
    let s: Vec<f64> = (0..diag.nrows()).map(|i| diag[i].re).collect();
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Internal("SVD produced non-finite singular values".into()));
    }
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let u2 = Mat::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let vt2 = Mat::from_fn(order.len(), vt.ncols(), |r, c| vt[(order[r], c)]);
    let s2 = order.iter().map(|&i| s[i]).collect();
    Ok((u2, s2, vt2))
}
