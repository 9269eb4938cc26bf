//! Cascaded channels, MRT precoding, SINR/rate evaluation, the two design
//! objectives and the one-dimensional beamforming-pair search.

use num_complex::Complex;

use crate::channel::ChannelRealization;
use crate::cmatrix::CMatrix;
use crate::codebook::ReflectionCandidate;
use crate::config::LinkBudget;
use crate::error::{Error, Result};
use crate::grouping::GroupPartition;
use crate::scalar::Real;

/// A selected reflection state together with its MRT precoder.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingPair<T> {
    /// Codebook index, when the reflection state is a codebook entry.
    pub candidate: Option<usize>,
    pub theta: Vec<Complex<T>>,
    /// `M x |users|` precoder, one column per served user.
    pub w: CMatrix<T>,
    /// Design objective in bit/s: J^U for the unified design, the
    /// intra-group sum rate for a group pair.
    pub objective: T,
}

/// Result of a codebook search.
#[derive(Debug, Clone, PartialEq)]
pub struct Search<T> {
    pub pair: BeamformingPair<T>,
    /// Objective evaluations performed.
    pub evaluations: u64,
}

/// `H_r diag(theta) H_t`.
pub fn cascade<T: Real>(h_r: &CMatrix<T>, theta: &[Complex<T>], h_t: &CMatrix<T>) -> Result<CMatrix<T>> {
    if h_r.cols() != theta.len() || h_t.rows() != theta.len() {
        return Err(Error::Contract(format!(
            "cascade dimensions disagree: H_r {:?}, theta {}, H_t {:?}",
            h_r.shape(),
            theta.len(),
            h_t.shape()
        )));
    }
    Ok(h_r.matmul_diag(theta, h_t))
}

/// `H^H / sqrt(Trace(H H^H))`.
pub fn mrt_precoder<T: Real>(h_eff: &CMatrix<T>) -> Result<CMatrix<T>> {
    let fro = h_eff.frobenius_sq();
    if !(fro > T::zero()) {
        return Err(Error::DegenerateChannel("MRT on an all-zero effective channel".into()));
    }
    Ok(h_eff.adjoint().scale(T::one() / fro.sqrt()))
}

/// `|h_i^H w_j|^2` for every in-group pair: entry `(i, j)` is user `i`'s
/// gain from user `j`'s beam.
fn gain_matrix<T: Real>(h_eff: &CMatrix<T>, w: &CMatrix<T>) -> Vec<Vec<T>> {
    let x = h_eff.matmul(w);
    (0..x.rows()).map(|i| x.row(i).iter().map(|z| z.norm_sqr()).collect()).collect()
}

/// SINR of the `k`-th group member with equal power split `P_t / |G|`.
/// `h_eff` holds the group's effective channel rows and `w` one column per
/// member, in the same order.
pub fn sinr<T: Real>(k: usize, h_eff: &CMatrix<T>, w: &CMatrix<T>, lb: &LinkBudget<T>) -> Result<T> {
    check_group_shapes(h_eff, w)?;
    if k >= h_eff.rows() {
        return Err(Error::Contract(format!("user position {k} outside a group of {}", h_eff.rows())));
    }
    let p = lb.pt_w / T::lit(h_eff.rows() as f64);
    let row = h_eff.row(k);
    let mut signal = T::zero();
    let mut interference = T::zero();
    for j in 0..w.cols() {
        let g = row.iter().enumerate().fold(Complex::new(T::zero(), T::zero()), |a, (m, h)| a + h * w[(m, j)]);
        if j == k {
            signal = p * g.norm_sqr();
        } else {
            interference = interference + p * g.norm_sqr();
        }
    }
    Ok(signal / (interference + lb.noise_power_w))
}

/// `B log2(1 + sinr)`.
pub fn user_rate<T: Real>(sinr: T, bandwidth_hz: T) -> T {
    bandwidth_hz * sinr.ln_1p() / T::LN_2()
}

fn check_group_shapes<T: Real>(h_eff: &CMatrix<T>, w: &CMatrix<T>) -> Result<()> {
    if h_eff.cols() != w.rows() || h_eff.rows() != w.cols() {
        return Err(Error::Contract(format!(
            "precoder {:?} does not match effective channel {:?}",
            w.shape(),
            h_eff.shape()
        )));
    }
    Ok(())
}

/// Rates of every group member served together in one slot.
pub fn group_rates<T: Real>(h_eff: &CMatrix<T>, w: &CMatrix<T>, lb: &LinkBudget<T>) -> Result<Vec<T>> {
    check_group_shapes(h_eff, w)?;
    let size = h_eff.rows();
    let p = lb.pt_w / T::lit(size as f64);
    let gains = gain_matrix(h_eff, w);
    Ok(gains
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let interference: T = g.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &v)| v).sum();
            let s = p * g[k] / (p * interference + lb.noise_power_w);
            user_rate(s, lb.bandwidth_hz)
        })
        .collect())
}

pub fn group_sum_rate<T: Real>(h_eff: &CMatrix<T>, w: &CMatrix<T>, lb: &LinkBudget<T>) -> Result<T> {
    Ok(group_rates(h_eff, w, lb)?.into_iter().sum())
}

/// Group-based objective with any groups that cannot fit the configuration
/// overhead reported separately.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupObjective<T> {
    pub value: T,
    /// Groups with `|G|/K < t_p`; their contribution is clamped to zero.
    pub infeasible_groups: Vec<usize>,
}

/// `sum_g (|G_g|/K - t_p) * R(G_g)` given each group's own intra-group sum rate.
pub fn objective_group<T: Real>(partition: &GroupPartition, group_sum_rates: &[T], t_p: T) -> Result<GroupObjective<T>> {
    if partition.num_groups() != group_sum_rates.len() {
        return Err(Error::Contract(format!(
            "{} group rates for {} groups",
            group_sum_rates.len(),
            partition.num_groups()
        )));
    }
    let k = T::lit(partition.num_users() as f64);
    let mut value = T::zero();
    let mut infeasible_groups = Vec::new();
    for (g, (members, &rate)) in partition.groups().iter().zip(group_sum_rates).enumerate() {
        let weight = T::lit(members.len() as f64) / k - t_p;
        if weight < T::zero() {
            log::warn!("group {g} ({} users) cannot absorb the configuration overhead t_p = {t_p}", members.len());
            infeasible_groups.push(g);
            continue;
        }
        value = value + weight * rate;
    }
    Ok(GroupObjective { value, infeasible_groups })
}

/// `(1 - t_p) sum_g |G_g|/K * R(G_g)` where, in group `g`'s slot, only the
/// columns of the common precoder that belong to `g` are active.
pub fn objective_unified<T: Real>(
    partition: &GroupPartition,
    h_eff: &CMatrix<T>,
    w: &CMatrix<T>,
    t_p: T,
    lb: &LinkBudget<T>,
) -> Result<T> {
    if h_eff.rows() != partition.num_users() {
        return Err(Error::Contract(format!(
            "effective channel has {} rows, partition covers {} users",
            h_eff.rows(),
            partition.num_users()
        )));
    }
    check_group_shapes(h_eff, w)?;
    let k = T::lit(partition.num_users() as f64);
    let mut total = T::zero();
    for members in partition.groups() {
        let rows = h_eff.select_rows(members);
        let cols = w.select_cols(members);
        total = total + T::lit(members.len() as f64) / k * group_sum_rate(&rows, &cols, lb)?;
    }
    Ok((T::one() - t_p) * total)
}

/// Per-candidate effective channels `H_r diag(theta_l) H_t` for all users,
/// computed once per channel draw and shared by both designs.
#[derive(Debug, Clone)]
pub struct EffectiveChannels<T> {
    per_candidate: Vec<CMatrix<T>>,
}

impl<T: Real> EffectiveChannels<T> {
    pub fn new(ch: &ChannelRealization<T>, codebook: &[ReflectionCandidate<T>]) -> Result<Self> {
        let per_candidate = codebook.iter().map(|c| cascade(&ch.h_r, &c.theta, &ch.h_t)).collect::<Result<_>>()?;
        Ok(Self { per_candidate })
    }

    pub fn get(&self, candidate: usize) -> &CMatrix<T> {
        &self.per_candidate[candidate]
    }

    pub fn len(&self) -> usize {
        self.per_candidate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_candidate.is_empty()
    }
}

/// Argmax over candidates, lowest index on ties.
fn argmax_search<T: Real>(
    codebook: &[ReflectionCandidate<T>],
    mut eval: impl FnMut(usize) -> Result<(CMatrix<T>, T)>,
) -> Result<Search<T>> {
    let mut best: Option<(usize, CMatrix<T>, T)> = None;
    let mut evaluations = 0u64;
    for c in codebook {
        let (w, j) = eval(c.index)?;
        evaluations += 1;
        if best.as_ref().is_none_or(|(_, _, b)| j > *b) {
            best = Some((c.index, w, j));
        }
    }
    let (idx, w, objective) = best.ok_or_else(|| Error::Contract("empty codebook".into()))?;
    Ok(Search {
        pair: BeamformingPair { candidate: Some(idx), theta: codebook[idx].theta.clone(), w, objective },
        evaluations,
    })
}

/// Unified design: one pair for the whole cycle, MRT over all users, scored
/// by the unified objective on `partition`.
pub fn select_pair_unified<T: Real>(
    eff: &EffectiveChannels<T>,
    codebook: &[ReflectionCandidate<T>],
    partition: &GroupPartition,
    t_p: T,
    lb: &LinkBudget<T>,
) -> Result<Search<T>> {
    argmax_search(codebook, |l| {
        let h = eff.get(l);
        let w = mrt_precoder(h)?;
        let j = objective_unified(partition, h, &w, t_p, lb)?;
        Ok((w, j))
    })
}

/// Group-based design: MRT over the group's rows only, scored by the
/// group's intra-group sum rate.
pub fn select_pair_group<T: Real>(
    eff: &EffectiveChannels<T>,
    codebook: &[ReflectionCandidate<T>],
    members: &[usize],
    lb: &LinkBudget<T>,
) -> Result<Search<T>> {
    if members.is_empty() {
        return Err(Error::Contract("cannot search for an empty group".into()));
    }
    argmax_search(codebook, |l| {
        let h = eff.get(l).select_rows(members);
        let w = mrt_precoder(&h)?;
        let j = group_sum_rate(&h, &w, lb)?;
        Ok((w, j))
    })
}
