//! Assignment mechanisms: student-proposing deferred acceptance, the Boston
//! (immediate acceptance) mechanism, first-preference-first, serial
//! dictatorship and the Chinese parallel mechanism, plus their constrained
//! versions.
//!
//! The `*_on_profile` entry points take a borrowed [`Profile`] so callers can
//! evaluate truncations and unilateral deviations without copying the
//! instance.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    rank_in, ConstraintVector, Instance, Matching, PriorityOrder, Profile, SchoolId, StudentId, ValidationError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MechanismError {
    #[error("serial dictatorship needs one priority order shared by all schools")]
    CommonPriorityViolation,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

/// Which mechanism to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MechanismKind {
    GaleShapley,
    Boston,
    FirstPreferenceFirst,
    SerialDictatorship,
    /// Rounds of length `e`.
    ChineseParallel {
        e: usize,
    },
}

/// A ranking constraint applied before the mechanism runs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    Uniform(usize),
    PerStudent(ConstraintVector),
}

/// A mechanism together with an optional ranking constraint.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    pub constraint: Option<Constraint>,
}

impl MechanismSpec {
    pub fn new(kind: MechanismKind) -> Self {
        MechanismSpec { kind, constraint: None }
    }

    pub fn gs() -> Self {
        Self::new(MechanismKind::GaleShapley)
    }

    pub fn boston() -> Self {
        Self::new(MechanismKind::Boston)
    }

    pub fn fpf() -> Self {
        Self::new(MechanismKind::FirstPreferenceFirst)
    }

    pub fn sd() -> Self {
        Self::new(MechanismKind::SerialDictatorship)
    }

    pub fn chinese(e: usize) -> Self {
        Self::new(MechanismKind::ChineseParallel { e })
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.constraint = Some(Constraint::Uniform(k));
        self
    }

    pub fn with_limits(mut self, limits: ConstraintVector) -> Self {
        self.constraint = Some(Constraint::PerStudent(limits));
        self
    }

    /// Checks the spec's own invariants and its fit with `instance`.
    pub fn check(&self, instance: &Instance) -> Result<(), MechanismError> {
        match &self.constraint {
            Some(Constraint::Uniform(0)) => {
                return Err(MechanismError::InvalidParameter("ranking constraint must be at least 1".into()))
            }
            Some(Constraint::PerStudent(v)) if v.len() != instance.n_students() => {
                return Err(ValidationError::ConstraintCount { expected: instance.n_students(), found: v.len() }.into())
            }
            _ => {}
        }
        match self.kind {
            MechanismKind::ChineseParallel { e: 0 } => {
                Err(MechanismError::InvalidParameter("round length e must be at least 1".into()))
            }
            MechanismKind::SerialDictatorship if !instance.has_common_priority() => {
                Err(MechanismError::CommonPriorityViolation)
            }
            _ => Ok(()),
        }
    }

    /// The reported profile after this spec's constraint.
    pub fn constrained_profile<'a>(&self, instance: &'a Instance) -> Profile<'a> {
        self.constrain(instance.profile())
    }

    /// Applies the constraint to an arbitrary profile of reports.
    pub fn constrain<'a>(&self, mut profile: Profile<'a>) -> Profile<'a> {
        match &self.constraint {
            None => {}
            Some(Constraint::Uniform(k)) => {
                for list in profile.iter_mut() {
                    *list = &list[..(*k).min(list.len())];
                }
            }
            Some(Constraint::PerStudent(v)) => {
                for (list, &k) in profile.iter_mut().zip(v.limits()) {
                    *list = &list[..k.min(list.len())];
                }
            }
        }
        profile
    }

    /// Constraint that applies to student `i`, if any.
    pub fn limit_for(&self, i: StudentId) -> Option<usize> {
        match &self.constraint {
            None => None,
            Some(Constraint::Uniform(k)) => Some(*k),
            Some(Constraint::PerStudent(v)) => Some(v.limit(i)),
        }
    }
}

impl fmt::Display for MechanismSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match self.kind {
            MechanismKind::GaleShapley => "GS".to_string(),
            MechanismKind::Boston => "Boston".to_string(),
            MechanismKind::FirstPreferenceFirst => "FPF".to_string(),
            MechanismKind::SerialDictatorship => "SD".to_string(),
            MechanismKind::ChineseParallel { e } => format!("Ch({e})"),
        };
        match &self.constraint {
            None => write!(f, "{base}"),
            Some(Constraint::Uniform(k)) => write!(f, "{base}^{k}"),
            Some(Constraint::PerStudent(v)) => {
                let ks: Vec<String> = v.limits().iter().map(|k| k.to_string()).collect();
                write!(f, "{base}^({})", ks.join(","))
            }
        }
    }
}

/// One step of a deferred or immediate acceptance run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub applications: Vec<(StudentId, SchoolId)>,
    /// New applicants accepted at this step (tentatively for deferred
    /// acceptance, finally for immediate acceptance).
    pub accepted: Vec<(StudentId, SchoolId)>,
    /// Rejections issued at this step, including students displaced from a
    /// seat they held.
    pub rejections: Vec<(StudentId, SchoolId)>,
}

/// Step-by-step record of a run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub steps: Vec<TraceStep>,
}

impl RoundTrace {
    /// Replays the trace and returns the matching it ends in.
    pub fn replay(&self, n_students: usize) -> Matching {
        let mut m = Matching::unmatched(n_students);
        for step in &self.steps {
            for &(i, s) in &step.applications {
                m.assign(i, Some(s));
            }
            for &(i, s) in &step.rejections {
                if m.school_of(i) == Some(s) {
                    m.assign(i, None);
                }
            }
        }
        m
    }
}

/// Student-proposing deferred acceptance over `profile`.
///
/// Each step, every student rejected at the previous step applies to her
/// next listed school; each school keeps the highest-priority applicants up
/// to its capacity among those it holds and its new applicants.
pub fn deferred_acceptance_on_profile(
    profile: &[&[SchoolId]],
    priorities: &[PriorityOrder],
    capacities: &[u32],
    mut trace: Option<&mut RoundTrace>,
) -> Matching {
    let n = profile.len();
    let m = capacities.len();
    let mut next = vec![0usize; n];
    let mut held: Vec<Vec<StudentId>> = vec![Vec::new(); m];
    let mut fresh: Vec<Vec<StudentId>> = vec![Vec::new(); m];
    let mut pending: Vec<StudentId> = (0..n).map(StudentId).collect();

    while !pending.is_empty() {
        let mut step = TraceStep::default();
        let mut touched = Vec::new();
        for &i in &pending {
            let list = profile[i.0];
            if let Some(&s) = list.get(next[i.0]) {
                next[i.0] += 1;
                if fresh[s.0].is_empty() {
                    touched.push(s);
                }
                fresh[s.0].push(i);
                if trace.is_some() {
                    step.applications.push((i, s));
                }
            }
        }
        pending.clear();
        touched.sort_unstable();
        for s in touched {
            let order = &priorities[s.0];
            let q = capacities[s.0] as usize;
            let pool = &mut held[s.0];
            let newcomers = std::mem::take(&mut fresh[s.0]);
            pool.extend_from_slice(&newcomers);
            pool.sort_unstable_by_key(|&i| order.position(i));
            let rejected = if pool.len() > q { pool.split_off(q) } else { Vec::new() };
            if trace.is_some() {
                for &i in &newcomers {
                    if pool.contains(&i) {
                        step.accepted.push((i, s));
                    }
                }
                let mut rej: Vec<_> = rejected.iter().map(|&i| (i, s)).collect();
                rej.sort_unstable();
                step.rejections.extend(rej);
            }
            pending.extend(rejected);
            fresh[s.0] = newcomers;
            fresh[s.0].clear();
        }
        pending.sort_unstable();
        if let Some(t) = trace.as_deref_mut() {
            if !step.applications.is_empty() {
                t.steps.push(step);
            }
        }
    }

    let mut out = Matching::unmatched(n);
    for (s, students) in held.iter().enumerate() {
        for &i in students {
            out.assign(i, Some(SchoolId(s)));
        }
    }
    out
}

/// Immediate acceptance (Boston) over `profile`.
///
/// Seats are awarded for good at each step; a school only considers its new
/// applicants, up to its remaining capacity.
pub fn boston_on_profile(
    profile: &[&[SchoolId]],
    priorities: &[PriorityOrder],
    capacities: &[u32],
    mut trace: Option<&mut RoundTrace>,
) -> Matching {
    let n = profile.len();
    let m = capacities.len();
    let mut remaining: Vec<usize> = capacities.iter().map(|&q| q as usize).collect();
    let mut next = vec![0usize; n];
    let mut out = Matching::unmatched(n);
    let mut fresh: Vec<Vec<StudentId>> = vec![Vec::new(); m];
    let mut pending: Vec<StudentId> = (0..n).map(StudentId).collect();

    while !pending.is_empty() {
        let mut step = TraceStep::default();
        let mut touched = Vec::new();
        for &i in &pending {
            if let Some(&s) = profile[i.0].get(next[i.0]) {
                next[i.0] += 1;
                if fresh[s.0].is_empty() {
                    touched.push(s);
                }
                fresh[s.0].push(i);
                if trace.is_some() {
                    step.applications.push((i, s));
                }
            }
        }
        pending.clear();
        touched.sort_unstable();
        for s in touched {
            let order = &priorities[s.0];
            let applicants = &mut fresh[s.0];
            applicants.sort_unstable_by_key(|&i| order.position(i));
            let take = remaining[s.0].min(applicants.len());
            remaining[s.0] -= take;
            for &i in &applicants[..take] {
                out.assign(i, Some(s));
                if trace.is_some() {
                    step.accepted.push((i, s));
                }
            }
            let mut rejected: Vec<StudentId> = applicants[take..].to_vec();
            rejected.sort_unstable();
            if trace.is_some() {
                step.rejections.extend(rejected.iter().map(|&i| (i, s)));
            }
            pending.extend(rejected);
            applicants.clear();
        }
        pending.sort_unstable();
        if let Some(t) = trace.as_deref_mut() {
            if !step.applications.is_empty() {
                t.steps.push(step);
            }
        }
    }
    out
}

/// Priorities with every first-preference-first school reordered by the
/// rank students give it in `profile` (lower rank first), the original
/// priority breaking ties. Unlisting students share the rank `n_schools + 1`.
pub fn fpf_adjusted_on_profile(
    profile: &[&[SchoolId]],
    priorities: &[PriorityOrder],
    fpf_mask: &[bool],
) -> Vec<PriorityOrder> {
    let n_schools = priorities.len();
    priorities
        .iter()
        .enumerate()
        .map(|(s, order)| {
            if !fpf_mask[s] {
                return order.clone();
            }
            let school = SchoolId(s);
            let mut ranking = order.ranking().to_vec();
            ranking.sort_by_key(|&i| (rank_in(profile[i.0], school, n_schools), order.position(i)));
            PriorityOrder::new(ranking).expect("reordering keeps a permutation")
        })
        .collect()
}

/// First-preference-first: deferred acceptance under the adjusted priorities.
pub fn fpf_on_profile(profile: &[&[SchoolId]], instance: &Instance) -> Matching {
    if !instance.fpf_mask().iter().any(|&f| f) {
        return deferred_acceptance_on_profile(profile, instance.priorities(), instance.capacities(), None);
    }
    let adjusted = fpf_adjusted_on_profile(profile, instance.priorities(), instance.fpf_mask());
    deferred_acceptance_on_profile(profile, &adjusted, instance.capacities(), None)
}

/// Serial dictatorship as sequential picks: in priority order, each student
/// takes her best listed school that still has a free seat.
pub fn serial_dictatorship_on_profile(profile: &[&[SchoolId]], order: &PriorityOrder, capacities: &[u32]) -> Matching {
    let mut remaining: Vec<u32> = capacities.to_vec();
    let mut out = Matching::unmatched(profile.len());
    for &i in order.ranking() {
        if let Some(&s) = profile[i.0].iter().find(|s| remaining[s.0] > 0) {
            remaining[s.0] -= 1;
            out.assign(i, Some(s));
        }
    }
    out
}

/// Chinese parallel with rounds of length `e`.
///
/// Round `r` runs deferred acceptance on the residual market with every
/// still-unmatched student's list cut at `r·e`; matches made in a round are
/// final. Stops once no seat is left, once no unmatched student lists a
/// school with a free seat, or once `r·e` reaches the number of schools.
pub fn chinese_parallel_on_profile(
    profile: &[&[SchoolId]],
    priorities: &[PriorityOrder],
    capacities: &[u32],
    e: usize,
) -> Matching {
    assert!(e >= 1, "round length must be at least 1");
    let n = profile.len();
    let n_schools = capacities.len();
    let mut residual = capacities.to_vec();
    let mut out = Matching::unmatched(n);
    let mut round = 1usize;
    loop {
        let limit = round.saturating_mul(e);
        let round_profile: Vec<&[SchoolId]> = profile
            .iter()
            .enumerate()
            .map(|(i, list)| if out.assignment()[i].is_some() { &list[..0] } else { &list[..limit.min(list.len())] })
            .collect();
        let result = deferred_acceptance_on_profile(&round_profile, priorities, &residual, None);
        for (i, s) in result.assignment().iter().enumerate() {
            if let Some(s) = *s {
                out.assign(StudentId(i), Some(s));
                residual[s.0] -= 1;
            }
        }
        let seats_left = residual.iter().any(|&q| q > 0);
        let someone_can_apply =
            (0..n).any(|i| out.assignment()[i].is_none() && profile[i].iter().any(|s| residual[s.0] > 0));
        if !seats_left || !someone_can_apply || limit >= n_schools {
            break;
        }
        round += 1;
    }
    out
}

/// Runs `kind` on an already-constrained profile. Serial dictatorship uses
/// the first school's order and assumes the caller checked that all
/// schools share it.
pub fn run_on_profile(kind: MechanismKind, instance: &Instance, profile: &[&[SchoolId]]) -> Matching {
    match kind {
        MechanismKind::GaleShapley => {
            deferred_acceptance_on_profile(profile, instance.priorities(), instance.capacities(), None)
        }
        MechanismKind::Boston => boston_on_profile(profile, instance.priorities(), instance.capacities(), None),
        MechanismKind::FirstPreferenceFirst => fpf_on_profile(profile, instance),
        MechanismKind::SerialDictatorship => {
            serial_dictatorship_on_profile(profile, &instance.priorities()[0], instance.capacities())
        }
        MechanismKind::ChineseParallel { e } => {
            chinese_parallel_on_profile(profile, instance.priorities(), instance.capacities(), e)
        }
    }
}

/// Student-optimal stable matching of the instance as reported.
pub fn deferred_acceptance(instance: &Instance) -> Matching {
    deferred_acceptance_on_profile(&instance.profile(), instance.priorities(), instance.capacities(), None)
}

pub fn deferred_acceptance_traced(instance: &Instance) -> (Matching, RoundTrace) {
    let mut trace = RoundTrace::default();
    let m = deferred_acceptance_on_profile(
        &instance.profile(),
        instance.priorities(),
        instance.capacities(),
        Some(&mut trace),
    );
    (m, trace)
}

pub fn boston(instance: &Instance) -> Matching {
    boston_on_profile(&instance.profile(), instance.priorities(), instance.capacities(), None)
}

pub fn boston_traced(instance: &Instance) -> (Matching, RoundTrace) {
    let mut trace = RoundTrace::default();
    let m = boston_on_profile(&instance.profile(), instance.priorities(), instance.capacities(), Some(&mut trace));
    (m, trace)
}

pub fn fpf_adjusted_priorities(instance: &Instance) -> Vec<PriorityOrder> {
    fpf_adjusted_on_profile(&instance.profile(), instance.priorities(), instance.fpf_mask())
}

pub fn first_preference_first(instance: &Instance) -> Matching {
    fpf_on_profile(&instance.profile(), instance)
}

pub fn serial_dictatorship(instance: &Instance) -> Result<Matching, MechanismError> {
    if !instance.has_common_priority() {
        return Err(MechanismError::CommonPriorityViolation);
    }
    Ok(serial_dictatorship_on_profile(&instance.profile(), &instance.priorities()[0], instance.capacities()))
}

pub fn chinese_parallel(instance: &Instance, e: usize) -> Result<Matching, MechanismError> {
    if e == 0 {
        return Err(MechanismError::InvalidParameter("round length e must be at least 1".into()));
    }
    Ok(chinese_parallel_on_profile(&instance.profile(), instance.priorities(), instance.capacities(), e))
}

/// Truncates the profile per `spec.constraint`, then runs `spec.kind`.
pub fn run_mechanism(spec: &MechanismSpec, instance: &Instance) -> Result<Matching, MechanismError> {
    spec.check(instance)?;
    Ok(run_on_profile(spec.kind, instance, &spec.constrained_profile(instance)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_instance;
    use crate::model::{PreferenceList, RawInstance};

    fn inst(prefs: &[&[usize]], priorities: &[&[usize]], caps: &[u32], fpf: &[usize]) -> Instance {
        validate_instance(&RawInstance {
            n_students: prefs.len(),
            n_schools: caps.len(),
            preferences: prefs.iter().map(|p| p.to_vec()).collect(),
            priorities: priorities.iter().map(|p| p.to_vec()).collect(),
            capacities: caps.to_vec(),
            fpf_schools: fpf.to_vec(),
        })
        .unwrap()
        .instance
    }

    // Three students, two unit schools, common priority i1 ≻ i2 ≻ i3.
    fn small_common() -> Instance {
        inst(&[&[0, 1], &[0, 1], &[1, 0]], &[&[0, 1, 2], &[0, 1, 2]], &[1, 1], &[])
    }

    #[test]
    fn empty_lists_leave_everyone_unmatched() {
        let i = inst(&[&[], &[]], &[&[0, 1]], &[1], &[]);
        assert_eq!(deferred_acceptance(&i), Matching::unmatched(2));
        assert_eq!(boston(&i), Matching::unmatched(2));
    }

    #[test]
    fn boston_and_da_differ_on_small_common() {
        let i = small_common();
        assert_eq!(boston(&i), Matching::from_indices(&[Some(0), None, Some(1)]));
        assert_eq!(deferred_acceptance(&i), Matching::from_indices(&[Some(0), Some(1), None]));
    }

    #[test]
    fn single_student_boston() {
        let i = inst(&[&[0]], &[&[0]], &[1], &[]);
        assert_eq!(boston(&i), Matching::from_indices(&[Some(0)]));
    }

    #[test]
    fn traces_replay_to_outcome() {
        let i = small_common();
        let (m, t) = deferred_acceptance_traced(&i);
        assert_eq!(t.replay(3), m);
        let (b, t) = boston_traced(&i);
        assert_eq!(t.replay(3), b);
        assert_eq!(t.steps[0].applications.len(), 3);
    }

    #[test]
    fn fpf_without_fpf_schools_is_da() {
        let i = small_common();
        assert_eq!(fpf_adjusted_priorities(&i), i.priorities().to_vec());
        assert_eq!(first_preference_first(&i), deferred_acceptance(&i));
    }

    #[test]
    fn fpf_ties_keep_original_priority() {
        // both rank s1 first; original order at s1 is i2 ≻ i1
        let i = inst(&[&[0], &[0], &[1, 0]], &[&[1, 0, 2], &[0, 1, 2]], &[1, 1], &[0]);
        let adj = fpf_adjusted_priorities(&i);
        assert_eq!(adj[0].ranking(), &[StudentId(1), StudentId(0), StudentId(2)]);
    }

    #[test]
    fn fpf_everywhere_is_boston() {
        let i = small_common().with_fpf_schools(&[SchoolId(0), SchoolId(1)]);
        assert_eq!(first_preference_first(&i), boston(&i));
    }

    #[test]
    fn sd_requires_common_priority() {
        let i = inst(&[&[0], &[0]], &[&[0, 1], &[1, 0]], &[1, 1], &[]);
        assert_eq!(serial_dictatorship(&i), Err(MechanismError::CommonPriorityViolation));
        let spec = MechanismSpec::sd().with_k(2);
        assert_eq!(run_mechanism(&spec, &i), Err(MechanismError::CommonPriorityViolation));
    }

    #[test]
    fn sd_single_student() {
        let i = inst(&[&[0]], &[&[0]], &[1], &[]);
        assert_eq!(serial_dictatorship(&i).unwrap(), Matching::from_indices(&[Some(0)]));
    }

    #[test]
    fn chinese_with_slack_rounds_is_da() {
        let i = small_common();
        assert_eq!(chinese_parallel(&i, 2).unwrap(), deferred_acceptance(&i));
        assert_eq!(chinese_parallel(&i, 5).unwrap(), deferred_acceptance(&i));
        assert_eq!(chinese_parallel(&i, 1).unwrap(), boston(&i));
        assert!(chinese_parallel(&i, 0).is_err());
    }

    #[test]
    fn constrained_spec_truncates() {
        let i = small_common();
        let gs1 = run_mechanism(&MechanismSpec::gs().with_k(1), &i).unwrap();
        assert_eq!(gs1, Matching::from_indices(&[Some(0), None, Some(1)]));
        let big = run_mechanism(&MechanismSpec::gs().with_k(99), &i).unwrap();
        assert_eq!(big, deferred_acceptance(&i));
        assert!(run_mechanism(&MechanismSpec::gs().with_k(0), &i).is_err());
        let v = ConstraintVector::new(vec![2, 1]).unwrap();
        assert!(matches!(
            run_mechanism(&MechanismSpec::gs().with_limits(v), &i),
            Err(MechanismError::Validation(ValidationError::ConstraintCount { .. }))
        ));
    }

    #[test]
    fn spec_labels() {
        assert_eq!(MechanismSpec::gs().with_k(4).to_string(), "GS^4");
        assert_eq!(MechanismSpec::chinese(3).to_string(), "Ch(3)");
        let v = ConstraintVector::new(vec![2, 1]).unwrap();
        assert_eq!(MechanismSpec::boston().with_limits(v).to_string(), "Boston^(2,1)");
    }

    #[test]
    fn capacity_two_school() {
        let i = inst(&[&[0], &[0], &[0]], &[&[2, 1, 0]], &[2], &[]);
        let m = deferred_acceptance(&i);
        assert_eq!(m, Matching::from_indices(&[None, Some(0), Some(0)]));
        assert!(m.respects_capacities(&i));
        let _ = PreferenceList::empty();
    }
}
