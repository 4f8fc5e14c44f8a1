//! Stability diagnostics and the raw data behind the two fairness criteria.
//!
//! Blocking is always judged against the full preference lists of the
//! instance, even when the matching came from a constrained mechanism.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mechanisms::{run_mechanism, MechanismError, MechanismSpec};
use crate::model::{outcome_rank, Instance, Matching, SchoolId, StudentId};

/// Why a pair blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    EmptySeat,
    LowerPriorityOccupant(StudentId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockingPair {
    pub student: StudentId,
    pub school: SchoolId,
    pub witness: Witness,
}

impl BlockingPair {
    /// Re-checks the pair against its own definition.
    pub fn holds(&self, matching: &Matching, instance: &Instance) -> bool {
        let i = self.student;
        let s = self.school;
        let pref = instance.preference(i).schools();
        if outcome_rank(pref, Some(s)) >= outcome_rank(pref, matching.school_of(i)) {
            return false;
        }
        match self.witness {
            Witness::EmptySeat => matching.students_at(s).count() < instance.capacity(s) as usize,
            Witness::LowerPriorityOccupant(j) => matching.school_of(j) == Some(s) && instance.priority(s).prefers(i, j),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FairnessError {
    #[error("instance too large for brute force: {0}")]
    SizeGuard(String),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

/// Every matched student lists her school under her full preferences.
pub fn is_individually_rational(matching: &Matching, instance: &Instance) -> bool {
    instance.students().all(|i| matching.school_of(i).is_none_or(|s| instance.preference(i).contains(s)))
}

/// All blocking pairs, sorted, each with one witness: an empty seat when
/// there is one, otherwise the lowest-priority occupant ranked below the
/// student.
pub fn blocking_pairs(matching: &Matching, instance: &Instance) -> Vec<BlockingPair> {
    let n_schools = instance.n_schools();
    let mut occupants: Vec<Vec<StudentId>> = vec![Vec::new(); n_schools];
    for i in instance.students() {
        if let Some(s) = matching.school_of(i) {
            occupants[s.0].push(i);
        }
    }
    let mut out = Vec::new();
    for i in instance.students() {
        let pref = instance.preference(i).schools();
        let current = outcome_rank(pref, matching.school_of(i));
        for &s in pref.iter().take(current.min(pref.len())) {
            let occ = &occupants[s.0];
            let witness = if occ.len() < instance.capacity(s) as usize {
                Some(Witness::EmptySeat)
            } else {
                let order = instance.priority(s);
                occ.iter()
                    .copied()
                    .filter(|&j| order.prefers(i, j))
                    .max_by_key(|&j| order.position(j))
                    .map(Witness::LowerPriorityOccupant)
            };
            if let Some(witness) = witness {
                out.push(BlockingPair { student: i, school: s, witness });
            }
        }
    }
    out.sort_unstable();
    out
}

/// Students in at least one blocking pair, ascending.
pub fn blocking_students(matching: &Matching, instance: &Instance) -> Vec<StudentId> {
    let mut v: Vec<StudentId> = blocking_pairs(matching, instance).iter().map(|p| p.student).collect();
    v.dedup();
    v
}

pub fn is_stable(matching: &Matching, instance: &Instance) -> bool {
    is_individually_rational(matching, instance) && blocking_pairs(matching, instance).is_empty()
}

/// Stability flags and blocking-student counts of two mechanisms at one
/// instance. Directional comparisons across instances belong to the
/// verification harness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FairnessVerdict {
    pub mechanism_a: String,
    pub mechanism_b: String,
    pub instance_digest: String,
    pub stable_a: bool,
    pub stable_b: bool,
    pub count_a: usize,
    pub count_b: usize,
}

pub fn compare_at(
    mech_a: &MechanismSpec,
    mech_b: &MechanismSpec,
    instance: &Instance,
) -> Result<FairnessVerdict, MechanismError> {
    let a = run_mechanism(mech_a, instance)?;
    let b = run_mechanism(mech_b, instance)?;
    Ok(FairnessVerdict {
        mechanism_a: mech_a.to_string(),
        mechanism_b: mech_b.to_string(),
        instance_digest: instance.digest(),
        stable_a: is_stable(&a, instance),
        stable_b: is_stable(&b, instance),
        count_a: blocking_students(&a, instance).len(),
        count_b: blocking_students(&b, instance).len(),
    })
}

pub const BRUTEFORCE_MAX_STUDENTS: usize = 8;
pub const BRUTEFORCE_MAX_SCHOOLS: usize = 5;
pub const BRUTEFORCE_MAX_ASSIGNMENTS: u64 = 2_000_000;

/// Every stable matching, found by enumerating individually rational
/// assignments within capacity. Sorted.
pub fn stable_set_bruteforce(instance: &Instance) -> Result<Vec<Matching>, FairnessError> {
    let n = instance.n_students();
    let m = instance.n_schools();
    if n > BRUTEFORCE_MAX_STUDENTS || m > BRUTEFORCE_MAX_SCHOOLS {
        return Err(FairnessError::SizeGuard(format!(
            "{n} students, {m} schools; limit is {BRUTEFORCE_MAX_STUDENTS} students, {BRUTEFORCE_MAX_SCHOOLS} schools"
        )));
    }
    let space = instance
        .preferences()
        .iter()
        .try_fold(1u64, |acc, p| acc.checked_mul(p.len() as u64 + 1))
        .filter(|&x| x <= BRUTEFORCE_MAX_ASSIGNMENTS);
    if space.is_none() {
        return Err(FairnessError::SizeGuard(format!("more than {BRUTEFORCE_MAX_ASSIGNMENTS} candidate assignments")));
    }

    let mut remaining: Vec<u32> = instance.capacities().to_vec();
    let mut current = Matching::unmatched(n);
    let mut out = Vec::new();
    extend(instance, 0, &mut remaining, &mut current, &mut out);
    out.sort();
    Ok(out)
}

fn extend(instance: &Instance, i: usize, remaining: &mut [u32], current: &mut Matching, out: &mut Vec<Matching>) {
    if i == instance.n_students() {
        if blocking_pairs(current, instance).is_empty() {
            out.push(current.clone());
        }
        return;
    }
    let id = StudentId(i);
    extend(instance, i + 1, remaining, current, out);
    for &s in instance.preference(id).schools() {
        if remaining[s.0] > 0 {
            remaining[s.0] -= 1;
            current.assign(id, Some(s));
            extend(instance, i + 1, remaining, current, out);
            current.assign(id, None);
            remaining[s.0] += 1;
        }
    }
}
