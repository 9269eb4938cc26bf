//! Cascaded-channel correlation and two-stage adaptive user grouping.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::cmatrix::{inner, norm_sq, CMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Disjoint, non-empty user groups covering `0..K`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPartition {
    groups: Vec<Vec<usize>>,
    users: usize,
}

impl GroupPartition {
    /// Validates that `groups` partitions `0..users`.
    pub fn new(groups: Vec<Vec<usize>>, users: usize) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::Contract("partition has no groups".into()));
        }
        let mut seen = vec![false; users];
        for g in &groups {
            if g.is_empty() {
                return Err(Error::Contract("partition contains an empty group".into()));
            }
            for &u in g {
                if u >= users {
                    return Err(Error::Contract(format!("user {u} out of range for {users} users")));
                }
                if std::mem::replace(&mut seen[u], true) {
                    return Err(Error::Contract(format!("user {u} appears in more than one group")));
                }
            }
        }
        if let Some(u) = seen.iter().position(|s| !s) {
            return Err(Error::Contract(format!("user {u} is not assigned to any group")));
        }
        Ok(Self { groups, users })
    }

    /// Everyone in one group.
    pub fn single(users: usize) -> Self {
        Self { groups: vec![(0..users).collect()], users }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn num_users(&self) -> usize {
        self.users
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }
}

/// Symmetric `K x K` matrix of cascaded-channel correlation coefficients,
/// zero on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<T> {
    k: usize,
    rho: Vec<T>,
}

impl<T: Real> CorrelationMatrix<T> {
    /// From a full row-major matrix. Off-diagonal entries must lie in
    /// `[0, 1]` and be symmetric; the diagonal is ignored.
    pub fn from_full(k: usize, rho: Vec<T>) -> Result<Self> {
        if rho.len() != k * k {
            return Err(Error::Contract(format!("correlation data has {} entries, expected {}", rho.len(), k * k)));
        }
        let mut rho = rho;
        for i in 0..k {
            rho[i * k + i] = T::zero();
            for j in 0..k {
                let v = rho[i * k + j];
                if i != j && !(v >= T::zero() && v <= T::one()) {
                    return Err(Error::Contract(format!("rho[{i}][{j}] = {v} outside [0, 1]")));
                }
                if v != rho[j * k + i] {
                    return Err(Error::Contract(format!("rho is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { k, rho })
    }

    /// Builds the matrix from the upper triangle given by `f(i, j)`, `i < j`.
    pub fn from_pairs(k: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut rho = vec![T::zero(); k * k];
        for i in 0..k {
            for j in i + 1..k {
                let v = f(i, j);
                rho[i * k + j] = v;
                rho[j * k + i] = v;
            }
        }
        Self::from_full(k, rho)
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.rho[i * self.k + j]
    }
}

fn normalized_inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>], i: usize, j: usize) -> Result<T> {
    let (na, nb) = (norm_sq(a), norm_sq(b));
    if !(na > T::zero()) || !(nb > T::zero()) {
        let who = if na > T::zero() { j } else { i };
        return Err(Error::DegenerateChannel(format!("cascaded channel of user {who} has zero norm")));
    }
    let rho = inner(b, a).norm() / (na.sqrt() * nb.sqrt());
    Ok(rho.min(T::one()))
}

/// `|g_i g_j^H| / (||g_i|| ||g_j||)` with `g_k = h_{r,k}^H diag(theta) H_t`.
pub fn cascaded_correlation<T: Real>(
    i: usize,
    j: usize,
    theta: &[Complex<T>],
    h_t: &CMatrix<T>,
    h_r: &CMatrix<T>,
) -> Result<T> {
    if i == j {
        return Err(Error::Contract("correlation needs two distinct users".into()));
    }
    if i >= h_r.rows() || j >= h_r.rows() {
        return Err(Error::Contract(format!("user index out of range for {} users", h_r.rows())));
    }
    let g = crate::beamforming::cascade(&h_r.select_rows(&[i, j]), theta, h_t)?;
    normalized_inner(g.row(0), g.row(1), i, j)
}

/// All pairwise coefficients from precomputed cascaded rows (`K x M`).
pub fn correlation_matrix<T: Real>(h_eff: &CMatrix<T>) -> Result<CorrelationMatrix<T>> {
    let k = h_eff.rows();
    let norms: Vec<T> = (0..k).map(|u| norm_sq(h_eff.row(u))).collect();
    if let Some(u) = norms.iter().position(|n| !(*n > T::zero())) {
        return Err(Error::DegenerateChannel(format!("cascaded channel of user {u} has zero norm")));
    }
    CorrelationMatrix::from_pairs(k, |i, j| {
        let v = inner(h_eff.row(j), h_eff.row(i)).norm() / (norms[i].sqrt() * norms[j].sqrt());
        v.min(T::one())
    })
}

/// Two-stage threshold grouping.
///
/// Stage one scans unassigned pairs `(i, j)`, `i < j`, in lexicographic order
/// and, on the first pair with `rho > eta`, opens a fresh singleton group for
/// each of the two users and restarts the scan. Stage two appends every
/// remaining user (ascending index) to the existing group with the smallest
/// summed correlation to it, lowest group index on ties. When stage one
/// opened no group, all users form a single group.
pub fn adaptive_grouping<T: Real>(rho: &CorrelationMatrix<T>, eta: T) -> GroupPartition {
    let k = rho.len();
    let mut assigned = vec![false; k];
    let mut groups: Vec<Vec<usize>> = Vec::new();

    'scan: loop {
        for i in 0..k {
            if assigned[i] {
                continue;
            }
            for j in i + 1..k {
                if !assigned[j] && rho.get(i, j) > eta {
                    assigned[i] = true;
                    assigned[j] = true;
                    groups.push(vec![i]);
                    groups.push(vec![j]);
                    continue 'scan;
                }
            }
        }
        break;
    }

    let rest: Vec<usize> = (0..k).filter(|&u| !assigned[u]).collect();
    if groups.is_empty() {
        groups.push(rest);
    } else {
        for u in rest {
            let mut best = 0;
            let mut best_sum = T::infinity();
            for (g, members) in groups.iter().enumerate() {
                let s: T = members.iter().map(|&v| rho.get(u, v)).sum();
                if s < best_sum {
                    best_sum = s;
                    best = g;
                }
            }
            groups[best].push(u);
        }
    }
    GroupPartition { groups, users: k }
}
