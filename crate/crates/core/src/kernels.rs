//! Step kernels. Each maps a nonsingular state to a new state whose
//! log-determinant is no smaller:
//!
//! * [`ma_step`]: multiplicative update `w_i <- w_i d(i, w) / m`.
//! * [`vdm_step`]: move toward the vertex with the largest `d(i, w)` by the
//!   closed-form optimal fraction.
//! * [`ve_step`]: determinant-optimal transfer of mass between two candidates.
//! * [`vem_step`]: [`ve_step`] from the worst support point to the best candidate.
//! * [`nne_sweep`]: [`ve_step`] between each support point and its nearest later
//!   support point.
//! * [`cocktail_step`]: `vdm_step`, then `nne_sweep`, then `ma_step`.
//!
//! Ties in every argmax/argmin are broken toward the smallest index.

use crate::error::{Error, Result};
use crate::information::InformationState;
use crate::weights::DesignWeights;

#[derive(Clone, Debug)]
pub struct StepOutcome<'s> {
    pub new_state: InformationState<'s>,
    /// `phi(new) - phi(old)`.
    pub log_det_gain: f64,
    /// Indices whose weight changed, ascending.
    pub touched: Vec<usize>,
    pub detail: StepDetail,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepDetail {
    Ma(MaRecord),
    Vdm(VdmRecord),
    Ve(VeRecord),
    Vem {
        i_min: usize,
        i_max: usize,
        /// `None` when `i_min == i_max`.
        exchange: Option<VeRecord>,
    },
    Nne(NneRecord),
    Cocktail {
        vdm: VdmRecord,
        nne: NneRecord,
        ma: MaRecord,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaRecord {
    /// Points updated (the support).
    pub updated: usize,
    /// `sum_i w_i d(i, w) / m` before renormalization.
    pub raw_mass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VdmRecord {
    pub i_max: usize,
    pub d_max: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VeRecord {
    /// Mass leaves `from` when `delta > 0`.
    pub from: usize,
    pub to: usize,
    /// Unclamped maximizer; may be infinite.
    pub delta_star: f64,
    /// Clamped step in `[-w_to, w_from]`.
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct NneRecord {
    /// `(i_j, i_j*)` in execution order.
    pub pairs: Vec<(usize, usize)>,
    pub exchanges: Vec<VeRecord>,
    /// Points zeroed earlier in the sweep that regained mass in a later pair.
    pub revived: Vec<usize>,
}

impl<'s> StepOutcome<'s> {
    fn identity(state: &InformationState<'s>, detail: StepDetail) -> Self {
        Self {
            new_state: state.clone(),
            log_det_gain: 0.0,
            touched: Vec::new(),
            detail,
        }
    }

    fn from_states(
        old: &InformationState<'s>,
        new_state: InformationState<'s>,
        touched: Vec<usize>,
        detail: StepDetail,
    ) -> Self {
        let log_det_gain = new_state.log_det() - old.log_det();
        Self {
            new_state,
            log_det_gain,
            touched,
            detail,
        }
    }
}

/// Equivalence-theorem certificate `max_i d(i, w) / m` over all candidates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    pub max_ratio: f64,
    pub argmax: usize,
    pub converged: bool,
}

/// Tests `max_i d(i, w) / m <= 1 + epsilon`.
pub fn converged(state: &InformationState<'_>, epsilon: f64) -> Certificate {
    certificate_of(state.d_all(), state.dim(), epsilon)
}

pub(crate) fn certificate_of(d_values: &[f64], m: usize, epsilon: f64) -> Certificate {
    let (argmax, d_max) = first_max(d_values);
    let max_ratio = d_max / m as f64;
    Certificate {
        max_ratio,
        argmax,
        converged: max_ratio <= 1.0 + epsilon,
    }
}

fn first_max(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

pub fn ma_step<'s>(state: &InformationState<'s>) -> Result<StepOutcome<'s>> {
    let m = state.dim() as f64;
    let mut w = state.weights().as_slice().to_vec();
    let support = state.d_support();
    let mut raw_mass = 0.0;
    for &(i, d) in &support {
        w[i] *= d / m;
        raw_mass += w[i];
    }
    let touched: Vec<usize> = support.iter().map(|&(i, _)| i).collect();
    let record = MaRecord {
        updated: touched.len(),
        raw_mass,
    };
    let new_state = state.with_weights(DesignWeights::normalized(w))?;
    Ok(StepOutcome::from_states(
        state,
        new_state,
        touched,
        StepDetail::Ma(record),
    ))
}

/// Smallest index maximizing `d(i, w)` over all candidates, zero-weight ones included.
pub fn vdm_select(state: &InformationState<'_>) -> usize {
    first_max(state.d_all()).0
}

/// `delta = (d_max / m - 1) / (d_max - 1)`, clipped at zero.
pub fn vdm_delta(d_max: f64, m: usize) -> f64 {
    let mf = m as f64;
    if d_max <= mf {
        0.0
    } else {
        ((d_max / mf - 1.0) / (d_max - 1.0)).min(1.0)
    }
}

pub fn vdm_step<'s>(state: &InformationState<'s>) -> Result<StepOutcome<'s>> {
    let (i_max, d_max) = first_max(state.d_all());
    let delta = vdm_delta(d_max, state.dim());
    let record = VdmRecord {
        i_max,
        d_max,
        delta,
    };
    if delta == 0.0 {
        return Ok(StepOutcome::identity(state, StepDetail::Vdm(record)));
    }
    let old = state.weights().as_slice();
    let mut w: Vec<f64> = old.iter().map(|v| (1.0 - delta) * v).collect();
    w[i_max] += delta;
    let mut touched: Vec<usize> = state.weights().support_iter().collect();
    if let Err(pos) = touched.binary_search(&i_max) {
        touched.insert(pos, i_max);
    }
    let new_state = state.with_weights(DesignWeights::normalized(w))?;
    Ok(StepOutcome::from_states(
        state,
        new_state,
        touched,
        StepDetail::Vdm(record),
    ))
}

/// Unclamped maximizer `(d_k - d_j) / (2 (d_j d_k - d_jk^2))` from the three variance values.
///
/// A vanishing denominator (collinear `x_j`, `x_k`) gives `+-inf` by the sign of the
/// numerator, or `0` when the numerator vanishes too.
pub fn delta_star(d_j: f64, d_k: f64, d_jk: f64) -> f64 {
    let numerator = d_k - d_j;
    let denominator = 2.0 * (d_j * d_k - d_jk * d_jk);
    if denominator > 1e-14 * d_j * d_k {
        return numerator / denominator;
    }
    if numerator.abs() < 1e-12 * d_j.max(d_k) {
        0.0
    } else if numerator > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

pub fn ve_delta_star(state: &InformationState<'_>, j: usize, k: usize) -> f64 {
    let (d_j, d_k, d_jk) = state.d_pair(j, k);
    delta_star(d_j, d_k, d_jk)
}

/// Moves the determinant-optimal mass `delta in [-w_k, w_j]` from `j` to `k`.
pub fn ve_step<'s>(state: &InformationState<'s>, j: usize, k: usize) -> Result<StepOutcome<'s>> {
    let (record, w) = ve_weights(state, j, k)?;
    match w {
        None => Ok(StepOutcome::identity(state, StepDetail::Ve(record))),
        Some(w) => {
            let new_state = state.with_weights(DesignWeights::from_normalized(w))?;
            let touched = if j < k { vec![j, k] } else { vec![k, j] };
            Ok(StepOutcome::from_states(
                state,
                new_state,
                touched,
                StepDetail::Ve(record),
            ))
        }
    }
}

fn ve_weights(
    state: &InformationState<'_>,
    j: usize,
    k: usize,
) -> Result<(VeRecord, Option<Vec<f64>>)> {
    if j == k {
        return Err(Error::InvalidConfig(format!(
            "vertex exchange needs distinct indices, got {j} twice"
        )));
    }
    let weights = state.weights();
    let (w_j, w_k) = (weights.get(j), weights.get(k));
    let delta_star = ve_delta_star(state, j, k);
    let delta = delta_star.max(-w_k).min(w_j);
    let record = VeRecord {
        from: j,
        to: k,
        delta_star,
        delta,
    };
    if delta == 0.0 {
        return Ok((record, None));
    }
    let mut w = weights.as_slice().to_vec();
    if delta == w_j {
        w[k] = w_k + w_j;
        w[j] = 0.0;
    } else if delta == -w_k {
        w[j] = w_j + w_k;
        w[k] = 0.0;
    } else {
        w[j] = w_j - delta;
        w[k] = w_k + delta;
    }
    Ok((record, Some(w)))
}

pub fn vem_step<'s>(state: &InformationState<'s>) -> Result<StepOutcome<'s>> {
    let (i_max, _) = first_max(state.d_all());
    let i_min = state
        .d_support()
        .into_iter()
        .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
            Some((_, bd)) if bd <= d => best,
            _ => Some((i, d)),
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidWeights("empty support".into()))?;
    if i_min == i_max {
        return Ok(StepOutcome::identity(
            state,
            StepDetail::Vem {
                i_min,
                i_max,
                exchange: None,
            },
        ));
    }
    let out = ve_step(state, i_min, i_max)?;
    let StepDetail::Ve(exchange) = out.detail else {
        unreachable!("ve_step always records a vertex exchange")
    };
    Ok(StepOutcome {
        detail: StepDetail::Vem {
            i_min,
            i_max,
            exchange: Some(exchange),
        },
        ..out
    })
}

/// For each support point except the last, its `L1`-nearest strictly later support point.
pub fn nne_pairing(state: &InformationState<'_>) -> Vec<(usize, usize)> {
    let space = state.space();
    let support = state.weights().support();
    support
        .iter()
        .enumerate()
        .take(support.len().saturating_sub(1))
        .map(|(pos, &i)| {
            let mut best = (support[pos + 1], f64::INFINITY);
            for &cand in &support[pos + 1..] {
                let d = space.l1_distance(i, cand);
                if d < best.1 {
                    best = (cand, d);
                }
            }
            (i, best.0)
        })
        .collect()
}

/// Runs [`ve_step`] over the pairing computed from the entering state.
pub fn nne_sweep<'s>(state: &InformationState<'s>) -> Result<StepOutcome<'s>> {
    let (new_state, touched, record) = nne_sweep_inner(state)?;
    Ok(StepOutcome::from_states(
        state,
        new_state,
        touched,
        StepDetail::Nne(record),
    ))
}

fn nne_sweep_inner<'s>(
    state: &InformationState<'s>,
) -> Result<(InformationState<'s>, Vec<usize>, NneRecord)> {
    let pairs = nne_pairing(state);
    let mut current = state.clone();
    let mut exchanges = Vec::with_capacity(pairs.len());
    let mut zeroed = Vec::new();
    let mut revived = Vec::new();
    let mut touched = Vec::new();
    for &(j, k) in &pairs {
        let (record, w) = ve_weights(&current, j, k)?;
        exchanges.push(record);
        let Some(w) = w else { continue };
        for i in [j, k] {
            if w[i] == 0.0 {
                zeroed.push(i);
            } else if current.weights().get(i) == 0.0 && zeroed.contains(&i) {
                revived.push(i);
            }
        }
        touched.extend([j, k]);
        current = current.with_weights(DesignWeights::from_normalized(w))?;
    }
    touched.sort_unstable();
    touched.dedup();
    let record = NneRecord {
        pairs,
        exchanges,
        revived,
    };
    Ok((current, touched, record))
}

/// One cocktail iteration: `vdm_step`, `nne_sweep`, then `ma_step`.
pub fn cocktail_step<'s>(state: &InformationState<'s>) -> Result<StepOutcome<'s>> {
    let vdm = vdm_step(state)?;
    let StepDetail::Vdm(vdm_record) = vdm.detail else {
        unreachable!()
    };
    let (after_nne, nne_touched, nne_record) = nne_sweep_inner(&vdm.new_state)?;
    let after_nne = after_nne.with_weights(DesignWeights::normalized(
        after_nne.weights().as_slice().to_vec(),
    ))?;
    let ma = ma_step(&after_nne)?;
    let StepDetail::Ma(ma_record) = ma.detail else {
        unreachable!()
    };
    let mut touched = vdm.touched;
    touched.extend(nne_touched);
    touched.extend(ma.touched);
    touched.sort_unstable();
    touched.dedup();
    Ok(StepOutcome::from_states(
        state,
        ma.new_state,
        touched,
        StepDetail::Cocktail {
            vdm: vdm_record,
            nne: nne_record,
            ma: ma_record,
        },
    ))
}

/// Sub-step gains of one cocktail iteration `(vdm, nne, ma)`, for diagnostics.
pub fn cocktail_gains(state: &InformationState<'_>) -> Result<[f64; 3]> {
    let vdm = vdm_step(state)?;
    let nne = nne_sweep(&vdm.new_state)?;
    let ma = ma_step(&nne.new_state)?;
    Ok([vdm.log_det_gain, nne.log_det_gain, ma.log_det_gain])
}
