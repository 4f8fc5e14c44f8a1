//! Manipulating students and equilibrium constructions, each with a
//! brute-force counterpart over the full strategy space.

use serde::Serialize;
use thiserror::Error;

use crate::fairness::is_stable;
use crate::mechanisms::{
    deferred_acceptance_on_profile, fpf_adjusted_on_profile, run_on_profile, serial_dictatorship_on_profile,
    MechanismError, MechanismKind, MechanismSpec,
};
use crate::model::{outcome_rank, ConstraintVector, Instance, Matching, PreferenceList, SchoolId, StudentId};

/// A strategy: any strict ranking of any subset of schools.
pub type Report = PreferenceList;

pub const MAX_REPORT_SCHOOLS: usize = 6;
/// Cap on report profiles visited by [`equilibrium_outcomes_bruteforce`].
pub const MAX_PROFILE_SEARCH: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("strategy space too large: {0}")]
    SizeGuard(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("construction disagrees with its characterisation: {0}")]
    LemmaViolation(String),
    #[error("report of sincere student {0} is not her truthful list")]
    InsincereReport(StudentId),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

/// Every strict ordering of every subset of `n_schools` schools, shortest
/// first, lexicographic within a length.
pub fn all_reports(n_schools: usize) -> Result<Vec<Report>, StrategyError> {
    if n_schools > MAX_REPORT_SCHOOLS {
        return Err(StrategyError::SizeGuard(format!("{n_schools} schools; limit is {MAX_REPORT_SCHOOLS}")));
    }
    let mut out = Vec::new();
    for len in 0..=n_schools {
        let mut prefix = Vec::with_capacity(len);
        let mut used = vec![false; n_schools];
        orderings(len, &mut prefix, &mut used, &mut out);
    }
    Ok(out)
}

fn orderings(len: usize, prefix: &mut Vec<SchoolId>, used: &mut [bool], out: &mut Vec<Report>) {
    if prefix.len() == len {
        out.push(PreferenceList::new(prefix.clone()));
        return;
    }
    for s in 0..used.len() {
        if !used[s] {
            used[s] = true;
            prefix.push(SchoolId(s));
            orderings(len, prefix, used, out);
            prefix.pop();
            used[s] = false;
        }
    }
}

fn check_k(k: usize) -> Result<(), StrategyError> {
    if k < 2 {
        return Err(StrategyError::InvalidParameter(format!("constraint must exceed 1, got {k}")));
    }
    Ok(())
}

/// Reports worth trying for student `i`: those no longer than her limit,
/// since a longer report is truncated to one of these anyway.
fn candidate_reports(reports: &[Report], limit: Option<usize>) -> impl Iterator<Item = &Report> {
    reports.iter().filter(move |r| limit.is_none_or(|k| r.len() <= k))
}

/// Whether some report of `i` beats her current outcome under `truth`,
/// with every other report in `profile` fixed.
fn has_profitable_deviation<'a>(
    spec: &MechanismSpec,
    instance: &Instance,
    profile: &mut [&'a [SchoolId]],
    i: StudentId,
    reports: &'a [Report],
    truth: &[SchoolId],
) -> bool {
    let base = run_on_profile(spec.kind, instance, &spec.constrain(profile.to_vec()));
    let current = outcome_rank(truth, base.school_of(i));
    if current == 0 {
        return false;
    }
    let saved = profile[i.0];
    let mut found = false;
    for r in candidate_reports(reports, spec.limit_for(i)) {
        profile[i.0] = r.schools();
        let m = run_on_profile(spec.kind, instance, &spec.constrain(profile.to_vec()));
        if outcome_rank(truth, m.school_of(i)) < current {
            found = true;
            break;
        }
    }
    profile[i.0] = saved;
    found
}

/// Students with a report that strictly improves their outcome under their
/// true preferences, everyone else truthful. Exhaustive over
/// [`all_reports`]. Ascending.
pub fn manipulating_students(spec: &MechanismSpec, instance: &Instance) -> Result<Vec<StudentId>, StrategyError> {
    spec.check(instance)?;
    let reports = all_reports(instance.n_schools())?;
    let mut profile = instance.profile();
    Ok(instance
        .students()
        .filter(|&i| {
            has_profitable_deviation(spec, instance, &mut profile, i, &reports, instance.preference(i).schools())
        })
        .collect())
}

/// Manipulating students of constrained deferred acceptance, testing only
/// students unmatched under the truthful outcome and only single-school
/// reports.
pub fn gs_manipulating_students_fast(instance: &Instance, k: usize) -> Result<Vec<StudentId>, StrategyError> {
    check_k(k)?;
    let spec = MechanismSpec::gs().with_k(k);
    let mut profile = spec.constrained_profile(instance);
    let base = deferred_acceptance_on_profile(&profile, instance.priorities(), instance.capacities(), None);
    if is_stable(&base, instance) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for i in instance.students().filter(|&i| base.school_of(i).is_none()) {
        let saved = profile[i.0];
        for s in instance.preference(i).schools() {
            profile[i.0] = std::slice::from_ref(s);
            let m = deferred_acceptance_on_profile(&profile, instance.priorities(), instance.capacities(), None);
            if m.school_of(i) == Some(*s) {
                out.push(i);
                break;
            }
        }
        profile[i.0] = saved;
    }
    Ok(out)
}

/// Which students report truthfully; the rest best respond.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SophisticationPartition {
    sincere: Vec<bool>,
}

impl SophisticationPartition {
    pub fn all_sincere(n_students: usize) -> Self {
        SophisticationPartition { sincere: vec![true; n_students] }
    }

    pub fn all_sophisticated(n_students: usize) -> Self {
        SophisticationPartition { sincere: vec![false; n_students] }
    }

    /// Panics if a listed student is out of range.
    pub fn from_sincere(n_students: usize, sincere: &[StudentId]) -> Self {
        let mut mask = vec![false; n_students];
        for i in sincere {
            mask[i.0] = true;
        }
        SophisticationPartition { sincere: mask }
    }

    pub fn from_mask(sincere: Vec<bool>) -> Self {
        SophisticationPartition { sincere }
    }

    pub fn is_sincere(&self, i: StudentId) -> bool {
        self.sincere[i.0]
    }

    pub fn len(&self) -> usize {
        self.sincere.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sincere.is_empty()
    }

    pub fn sincere(&self) -> Vec<StudentId> {
        (0..self.sincere.len()).filter(|&i| self.sincere[i]).map(StudentId).collect()
    }

    pub fn sophisticated(&self) -> Vec<StudentId> {
        (0..self.sincere.len()).filter(|&i| !self.sincere[i]).map(StudentId).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// Serial dictatorship on sincere first choices, then deferred
    /// acceptance of the leftover sincere students on residual seats.
    BostonTwoStep,
    /// Serial dictatorship with only sincere students truncated.
    SerialDictatorshipSincereTruncated,
    /// Semi-sophisticated students dropping competitive schools.
    SemiSophisticated,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquilibriumOutcome {
    pub profile: Vec<Report>,
    pub matching: Matching,
    pub construction: Construction,
}

fn check_partition(instance: &Instance, partition: &SophisticationPartition) -> Result<(), StrategyError> {
    if partition.len() != instance.n_students() {
        return Err(StrategyError::InvalidParameter(format!(
            "partition covers {} students, instance has {}",
            partition.len(),
            instance.n_students()
        )));
    }
    Ok(())
}

fn equilibrium_profile(instance: &Instance, partition: &SophisticationPartition, matching: &Matching) -> Vec<Report> {
    instance
        .students()
        .map(|i| {
            if partition.is_sincere(i) {
                instance.preference(i).clone()
            } else {
                PreferenceList::new(matching.school_of(i).into_iter().collect())
            }
        })
        .collect()
}

fn confirm(
    spec: &MechanismSpec,
    instance: &Instance,
    profile: &[Report],
    matching: &Matching,
) -> Result<(), StrategyError> {
    let reported: Vec<&[SchoolId]> = profile.iter().map(|r| r.schools()).collect();
    let replay = run_on_profile(spec.kind, instance, &spec.constrain(reported));
    if &replay != matching {
        return Err(StrategyError::LemmaViolation(format!(
            "{spec} on the equilibrium profile gives {replay}, construction gives {matching}"
        )));
    }
    Ok(())
}

/// The equilibrium outcome of constrained Boston under a common priority
/// with sincere and sophisticated students.
pub fn boston_equilibrium_outcome(
    instance: &Instance,
    partition: &SophisticationPartition,
    k: usize,
) -> Result<EquilibriumOutcome, StrategyError> {
    check_k(k)?;
    check_partition(instance, partition)?;
    if !instance.has_common_priority() {
        return Err(MechanismError::CommonPriorityViolation.into());
    }
    let order = &instance.priorities()[0];
    let step1: Vec<&[SchoolId]> = instance
        .students()
        .map(|i| {
            let p = instance.preference(i);
            if partition.is_sincere(i) {
                p.prefix(1)
            } else {
                p.schools()
            }
        })
        .collect();
    let mut matching = serial_dictatorship_on_profile(&step1, order, instance.capacities());

    let mut residual = instance.capacities().to_vec();
    for s in matching.assignment().iter().flatten() {
        residual[s.0] -= 1;
    }
    let step2: Vec<&[SchoolId]> = instance
        .students()
        .map(|i| {
            let p = instance.preference(i);
            if partition.is_sincere(i) && matching.school_of(i).is_none() {
                p.prefix(k)
            } else {
                &p.schools()[..0]
            }
        })
        .collect();
    let all_fpf = vec![true; instance.n_schools()];
    let augmented = fpf_adjusted_on_profile(&step2, instance.priorities(), &all_fpf);
    let second = deferred_acceptance_on_profile(&step2, &augmented, &residual, None);
    for i in instance.students() {
        if let Some(s) = second.school_of(i) {
            matching.assign(i, Some(s));
        }
    }

    let profile = equilibrium_profile(instance, partition, &matching);
    confirm(&MechanismSpec::boston().with_k(k), instance, &profile, &matching)?;
    Ok(EquilibriumOutcome { profile, matching, construction: Construction::BostonTwoStep })
}

/// The equilibrium outcome of constrained serial dictatorship: the
/// constraint binds only the sincere students.
pub fn sd_equilibrium_outcome(
    instance: &Instance,
    partition: &SophisticationPartition,
    k: usize,
) -> Result<EquilibriumOutcome, StrategyError> {
    check_k(k)?;
    check_partition(instance, partition)?;
    if !instance.has_common_priority() {
        return Err(MechanismError::CommonPriorityViolation.into());
    }
    let reported: Vec<&[SchoolId]> = instance
        .students()
        .map(|i| {
            let p = instance.preference(i);
            if partition.is_sincere(i) {
                p.prefix(k)
            } else {
                p.schools()
            }
        })
        .collect();
    let matching = serial_dictatorship_on_profile(&reported, &instance.priorities()[0], instance.capacities());
    let profile = equilibrium_profile(instance, partition, &matching);
    confirm(&MechanismSpec::sd().with_k(k), instance, &profile, &matching)?;
    Ok(EquilibriumOutcome { profile, matching, construction: Construction::SerialDictatorshipSincereTruncated })
}

/// Whether no sophisticated student can gain by deviating unilaterally from
/// `profile`, gains judged by true preferences.
pub fn is_nash_equilibrium(
    spec: &MechanismSpec,
    instance: &Instance,
    partition: &SophisticationPartition,
    profile: &[Report],
) -> Result<bool, StrategyError> {
    spec.check(instance)?;
    check_partition(instance, partition)?;
    if profile.len() != instance.n_students() {
        return Err(StrategyError::InvalidParameter(format!(
            "profile has {} reports, instance has {} students",
            profile.len(),
            instance.n_students()
        )));
    }
    for i in partition.sincere() {
        let limit = spec.limit_for(i).unwrap_or(usize::MAX);
        if profile[i.0].prefix(limit) != instance.preference(i).prefix(limit) {
            return Err(StrategyError::InsincereReport(i));
        }
    }
    let reports = all_reports(instance.n_schools())?;
    let mut reported: Vec<&[SchoolId]> = profile.iter().map(|r| r.schools()).collect();
    for i in partition.sophisticated() {
        if has_profitable_deviation(spec, instance, &mut reported, i, &reports, instance.preference(i).schools()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every distinct Nash equilibrium outcome, searching all report profiles
/// of the sophisticated students. Sorted.
pub fn equilibrium_outcomes_bruteforce(
    spec: &MechanismSpec,
    instance: &Instance,
    partition: &SophisticationPartition,
) -> Result<Vec<Matching>, StrategyError> {
    spec.check(instance)?;
    check_partition(instance, partition)?;
    let reports = all_reports(instance.n_schools())?;
    let sophisticated = partition.sophisticated();
    let choices: Vec<Vec<&Report>> =
        sophisticated.iter().map(|&i| candidate_reports(&reports, spec.limit_for(i)).collect()).collect();
    let total = choices
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
        .filter(|&t| t <= MAX_PROFILE_SEARCH)
        .ok_or_else(|| StrategyError::SizeGuard(format!("more than {MAX_PROFILE_SEARCH} report profiles")))?;

    let mut profile: Vec<Report> = instance.preferences().to_vec();
    let mut outcomes = Vec::new();
    for mut code in 0..total {
        for (slot, &i) in sophisticated.iter().enumerate() {
            let c = &choices[slot];
            profile[i.0] = c[code % c.len()].clone();
            code /= c.len();
        }
        if is_nash_equilibrium(spec, instance, partition, &profile)? {
            let reported: Vec<&[SchoolId]> = profile.iter().map(|r| r.schools()).collect();
            outcomes.push(run_on_profile(spec.kind, instance, &spec.constrain(reported)));
        }
    }
    outcomes.sort();
    outcomes.dedup();
    Ok(outcomes)
}

/// Competitive schools and each student's guaranteed first choice.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Competition {
    pub competitive: Vec<SchoolId>,
    pub guaranteed: Vec<Option<SchoolId>>,
}

impl Competition {
    pub fn is_competitive(&self, s: SchoolId) -> bool {
        self.competitive.binary_search(&s).is_ok()
    }
}

/// A student is guaranteed her first choice `s` when she is among the
/// `q_s` highest-priority students at `s`; `s` is competitive when at least
/// `q_s` students are guaranteed it.
pub fn competitive_schools(instance: &Instance) -> Competition {
    let guaranteed: Vec<Option<SchoolId>> = instance
        .students()
        .map(|i| {
            instance.preference(i).first().filter(|&s| instance.priority(s).position(i) < instance.capacity(s) as usize)
        })
        .collect();
    let mut counts = vec![0usize; instance.n_schools()];
    for s in guaranteed.iter().flatten() {
        counts[s.0] += 1;
    }
    let competitive = instance.schools().filter(|&s| counts[s.0] >= instance.capacity(s) as usize).collect();
    Competition { competitive, guaranteed }
}

/// Reports of semi-sophisticated students facing constraint `l`.
pub fn semi_sophisticated_profile(instance: &Instance, l: usize) -> Result<Vec<Report>, StrategyError> {
    check_k(l)?;
    let comp = competitive_schools(instance);
    Ok(instance
        .students()
        .map(|i| {
            let p = instance.preference(i);
            let keep =
                comp.guaranteed[i.0].is_some() || p.len() <= l || p.schools().iter().all(|&s| comp.is_competitive(s));
            if keep {
                p.clone()
            } else {
                PreferenceList::new(p.schools().iter().copied().filter(|&s| !comp.is_competitive(s)).collect())
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SemiSophisticatedOutcome {
    pub profile: Vec<Report>,
    pub matching: Matching,
    /// Dropped competitive schools each student prefers to one of her top
    /// `l` reported schools.
    pub dropped_preferred: Vec<usize>,
    /// `l` plus `dropped_preferred`, per student.
    pub limits: ConstraintVector,
}

/// Constrained deferred acceptance on the semi-sophisticated profile, cross
/// checked against unconstrained deferred acceptance on the true lists cut
/// at per-student limits.
pub fn semi_sophisticated_outcome(instance: &Instance, l: usize) -> Result<SemiSophisticatedOutcome, StrategyError> {
    let profile = semi_sophisticated_profile(instance, l)?;
    let comp = competitive_schools(instance);
    let spec = MechanismSpec::gs().with_k(l);
    let reported: Vec<&[SchoolId]> = profile.iter().map(|r| r.schools()).collect();
    let matching = run_on_profile(MechanismKind::GaleShapley, instance, &spec.constrain(reported));

    let dropped_preferred: Vec<usize> = instance
        .students()
        .map(|i| {
            let truth = instance.preference(i);
            let top = profile[i.0].prefix(l);
            let Some(&worst) = top.last() else { return 0 };
            let cutoff = truth.position(worst).expect("reports only list acceptable schools");
            truth.schools()[..cutoff].iter().filter(|&&s| comp.is_competitive(s) && !profile[i.0].contains(s)).count()
        })
        .collect();
    let limits =
        ConstraintVector::new(dropped_preferred.iter().map(|r| l + r).collect()).expect("limits are at least l");
    let via_limits = deferred_acceptance_on_profile(
        &instance.profile_with_limits(&limits),
        instance.priorities(),
        instance.capacities(),
        None,
    );
    if via_limits != matching {
        return Err(StrategyError::LemmaViolation(format!(
            "GS^{l} on the semi-sophisticated profile gives {matching}, GS on per-student truncation gives {via_limits}"
        )));
    }
    Ok(SemiSophisticatedOutcome { profile, matching, dropped_preferred, limits })
}
