//! Sub-surface refined search: coordinate ascent over the common discrete
//! phase of each sub-surface.

use num_complex::Complex;

use crate::beamforming::{group_sum_rate, mrt_precoder, objective_unified, BeamformingPair};
use crate::channel::ChannelRealization;
use crate::cmatrix::CMatrix;
use crate::config::LinkBudget;
use crate::error::{Error, Result};
use crate::grouping::GroupPartition;
use crate::scalar::{cis, Real};

/// Minimum objective gain (bit/s) for a move to count as an improvement.
pub const IMPROVEMENT_TOL: f64 = 1e-9;

/// Per-sub-surface phase indices into `{e^{j 2 pi l / L}}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsurfaceState {
    phase_index: Vec<usize>,
    levels: usize,
    elements: usize,
}

impl SubsurfaceState {
    pub fn new(phase_index: Vec<usize>, levels: usize, elements: usize) -> Result<Self> {
        let s = phase_index.len();
        if s == 0 || levels == 0 || elements == 0 || !elements.is_multiple_of(s) {
            return Err(Error::Contract(format!("{s} sub-surfaces do not tile {elements} elements")));
        }
        if let Some(&bad) = phase_index.iter().find(|&&i| i >= levels) {
            return Err(Error::Contract(format!("phase index {bad} outside {levels} levels")));
        }
        Ok(Self { phase_index, levels, elements })
    }

    /// Quantizes an element-wise reflection vector: each sub-surface takes
    /// the level nearest the circular mean of its elements' phases.
    pub fn from_theta<T: Real>(theta: &[Complex<T>], subsurfaces: usize, levels: usize) -> Result<Self> {
        let n = theta.len();
        if subsurfaces == 0 || !n.is_multiple_of(subsurfaces) {
            return Err(Error::Contract(format!("{subsurfaces} sub-surfaces do not tile {n} elements")));
        }
        let width = n / subsurfaces;
        let step = T::TAU() / T::lit(levels as f64);
        let phase_index = theta
            .chunks(width)
            .map(|block| {
                let sum = block.iter().fold(Complex::new(T::zero(), T::zero()), |a, z| a + z);
                if sum.norm() <= T::epsilon() * T::lit(width as f64) {
                    return 0;
                }
                let mut ph = sum.arg();
                if ph < T::zero() {
                    ph = ph + T::TAU();
                }
                (ph / step).round().to_usize().unwrap_or(0) % levels
            })
            .collect();
        Self::new(phase_index, levels, n)
    }

    pub fn phase_index(&self) -> &[usize] {
        &self.phase_index
    }

    pub fn subsurfaces(&self) -> usize {
        self.phase_index.len()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Element-wise reflection vector; every element of a sub-surface
    /// carries that sub-surface's coefficient.
    pub fn theta<T: Real>(&self) -> Vec<Complex<T>> {
        let width = self.elements / self.subsurfaces();
        self.phase_index
            .iter()
            .flat_map(|&l| std::iter::repeat_n(level_phase::<T>(l, self.levels), width))
            .collect()
    }
}

fn level_phase<T: Real>(l: usize, levels: usize) -> Complex<T> {
    cis(T::TAU() * T::lit(l as f64) / T::lit(levels as f64))
}

/// Which objective the refinement climbs.
#[derive(Debug, Clone, Copy)]
pub enum RefineDesign<'a, T> {
    /// One state for all users, scored by the unified objective on `partition`.
    Unified { partition: &'a GroupPartition, t_p: T },
    /// One state for a single group, scored by its intra-group sum rate.
    Group { members: &'a [usize] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome<T> {
    pub pair: BeamformingPair<T>,
    pub state: SubsurfaceState,
    pub passes: usize,
    pub evaluations: u64,
    pub accepted_moves: usize,
    /// Objective of the initial state followed by the objective after each
    /// accepted move.
    pub trace: Vec<T>,
}

/// Partial cascades `H_r[:, block_s] H_t[block_s, :]`, so a state's
/// effective channel is `sum_s e^{j phi_s} C_s`.
struct BlockCascades<T> {
    blocks: Vec<CMatrix<T>>,
}

impl<T: Real> BlockCascades<T> {
    fn new(h_r: &CMatrix<T>, h_t: &CMatrix<T>, subsurfaces: usize) -> Self {
        let width = h_t.rows() / subsurfaces;
        let blocks = (0..subsurfaces)
            .map(|s| {
                let mut mask = vec![Complex::new(T::zero(), T::zero()); h_t.rows()];
                for m in &mut mask[s * width..(s + 1) * width] {
                    *m = Complex::new(T::one(), T::zero());
                }
                h_r.matmul_diag(&mask, h_t)
            })
            .collect();
        Self { blocks }
    }

    fn effective(&self, state: &SubsurfaceState) -> CMatrix<T> {
        let (r, c) = self.blocks[0].shape();
        let mut out = CMatrix::zeros(r, c);
        for (blk, &l) in self.blocks.iter().zip(state.phase_index()) {
            out.axpy(level_phase(l, state.levels()), blk);
        }
        out
    }
}

/// Coordinate ascent over sub-surfaces.
///
/// Each pass visits the sub-surfaces in index order and scores all `L`
/// common phases for the visited one (so a pass costs exactly `S * L`
/// evaluations), moving to the best (lowest level on ties) only when it
/// beats the current objective by more than [`IMPROVEMENT_TOL`]. Stops
/// after a pass without an accepted move, or after `max_passes`.
pub fn refine<T: Real>(
    initial: &SubsurfaceState,
    design: RefineDesign<'_, T>,
    ch: &ChannelRealization<T>,
    lb: &LinkBudget<T>,
    max_passes: usize,
) -> Result<RefineOutcome<T>> {
    let n = ch.h_t.rows();
    if initial.elements != n || ch.h_r.cols() != n {
        return Err(Error::Contract(format!("state covers {} elements, channel has {n}", initial.elements)));
    }
    let h_r = match design {
        RefineDesign::Unified { partition, .. } => {
            if partition.num_users() != ch.h_r.rows() {
                return Err(Error::Contract("partition does not match the user count".into()));
            }
            ch.h_r.clone()
        }
        RefineDesign::Group { members } => {
            if members.is_empty() || members.iter().any(|&u| u >= ch.h_r.rows()) {
                return Err(Error::Contract("invalid group for refinement".into()));
            }
            ch.h_r.select_rows(members)
        }
    };
    let blocks = BlockCascades::new(&h_r, &ch.h_t, initial.subsurfaces());

    let score = |state: &SubsurfaceState| -> Result<(CMatrix<T>, T)> {
        let h = blocks.effective(state);
        let w = mrt_precoder(&h)?;
        let j = match design {
            RefineDesign::Unified { partition, t_p } => objective_unified(partition, &h, &w, t_p, lb)?,
            RefineDesign::Group { .. } => group_sum_rate(&h, &w, lb)?,
        };
        Ok((w, j))
    };

    let tol = T::lit(IMPROVEMENT_TOL);
    let mut state = initial.clone();
    let (mut best_w, mut current) = score(&state)?;
    let mut trace = vec![current];
    let mut evaluations = 0u64;
    let mut accepted_moves = 0;
    let mut passes = 0;

    while passes < max_passes.max(1) {
        passes += 1;
        let mut moved = false;
        for s in 0..state.subsurfaces() {
            let keep = state.phase_index[s];
            let mut cand: Option<(usize, CMatrix<T>, T)> = None;
            for l in 0..state.levels() {
                state.phase_index[s] = l;
                let (w, j) = score(&state)?;
                evaluations += 1;
                if cand.as_ref().is_none_or(|(_, _, b)| j > *b) {
                    cand = Some((l, w, j));
                }
            }
            let (l, w, j) = cand.expect("at least one level");
            if j > current + tol {
                state.phase_index[s] = l;
                best_w = w;
                current = j;
                trace.push(j);
                accepted_moves += 1;
                moved = true;
            } else {
                state.phase_index[s] = keep;
            }
        }
        if !moved {
            break;
        }
    }

    Ok(RefineOutcome {
        pair: BeamformingPair { candidate: None, theta: state.theta(), w: best_w, objective: current },
        state,
        passes,
        evaluations,
        accepted_moves,
        trace,
    })
}
