//! Domain types shared by every mechanism: students, schools, preference
//! lists, priority orders, instances and matchings.
//!
//! Preference lists only store acceptable schools, most preferred first.
//! Anything not listed sits below the outside option. Truncating a list is
//! therefore a prefix operation, and the mechanisms work on borrowed prefix
//! slices (`Profile`) rather than on copies of the lists.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Dense index of a student within an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StudentId(pub usize);

/// Dense index of a school within an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SchoolId(pub usize);

impl StudentId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl SchoolId {
    pub fn index(self) -> usize {
        self.0
    }
}

// Displayed 1-based, the way rosters are usually written (i1, s1, ...).
impl fmt::Display for StudentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i{}", self.0 + 1)
    }
}

impl fmt::Display for SchoolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0 + 1)
    }
}

/// A borrowed preference profile: one acceptable-school slice per student.
pub type Profile<'a> = Vec<&'a [SchoolId]>;

/// A student's strict ranking of the schools she finds acceptable.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct PreferenceList(Vec<SchoolId>);

impl PreferenceList {
    /// Builds a list without validation; [`validate_instance`] checks lists
    /// that come from outside.
    pub fn new(schools: Vec<SchoolId>) -> Self {
        PreferenceList(schools)
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        PreferenceList(indices.iter().map(|&s| SchoolId(s)).collect())
    }

    pub fn empty() -> Self {
        PreferenceList(Vec::new())
    }

    pub fn schools(&self) -> &[SchoolId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<SchoolId> {
        self.0.first().copied()
    }

    pub fn contains(&self, s: SchoolId) -> bool {
        self.0.contains(&s)
    }

    /// 0-based position of `s`, or `None` when `s` is unacceptable.
    pub fn position(&self, s: SchoolId) -> Option<usize> {
        position_in(&self.0, s)
    }

    /// The first `k` acceptable schools.
    pub fn prefix(&self, k: usize) -> &[SchoolId] {
        &self.0[..k.min(self.0.len())]
    }

    /// Whether `a` is strictly preferred to `b`, where `None` is the outside
    /// option. Unlisted schools rank below the outside option and tie with
    /// each other.
    pub fn prefers(&self, a: Option<SchoolId>, b: Option<SchoolId>) -> bool {
        outcome_rank(&self.0, a) < outcome_rank(&self.0, b)
    }
}

impl From<Vec<SchoolId>> for PreferenceList {
    fn from(v: Vec<SchoolId>) -> Self {
        PreferenceList(v)
    }
}

pub(crate) fn position_in(list: &[SchoolId], s: SchoolId) -> Option<usize> {
    list.iter().position(|&x| x == s)
}

/// Rank of an outcome for a student with acceptable list `list`:
/// listed schools rank by position, the outside option ranks right after
/// them, unacceptable schools rank last.
pub(crate) fn outcome_rank(list: &[SchoolId], outcome: Option<SchoolId>) -> usize {
    match outcome {
        None => list.len(),
        Some(s) => position_in(list, s).unwrap_or(list.len() + 1),
    }
}

/// A school's strict priority order over every student, highest first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PriorityOrder {
    ranking: Vec<StudentId>,
    position: Vec<usize>,
}

impl PriorityOrder {
    /// Builds an order from a permutation of `0..n_students`.
    pub fn new(ranking: Vec<StudentId>) -> Result<Self, ValidationError> {
        let n = ranking.len();
        let mut position = vec![usize::MAX; n];
        for (pos, &i) in ranking.iter().enumerate() {
            if i.0 >= n || position[i.0] != usize::MAX {
                return Err(ValidationError::NotAPermutation { school: None });
            }
            position[i.0] = pos;
        }
        Ok(PriorityOrder { ranking, position })
    }

    pub fn from_indices(indices: &[usize]) -> Result<Self, ValidationError> {
        Self::new(indices.iter().map(|&i| StudentId(i)).collect())
    }

    /// `i1 ≻ i2 ≻ ... ≻ in`.
    pub fn identity(n_students: usize) -> Self {
        PriorityOrder { ranking: (0..n_students).map(StudentId).collect(), position: (0..n_students).collect() }
    }

    pub fn ranking(&self) -> &[StudentId] {
        &self.ranking
    }

    /// 0-based position of `i` in the order (0 = highest priority).
    pub fn position(&self, i: StudentId) -> usize {
        self.position[i.0]
    }

    pub fn prefers(&self, a: StudentId, b: StudentId) -> bool {
        self.position[a.0] < self.position[b.0]
    }

    pub fn len(&self) -> usize {
        self.ranking.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }
}

/// A per-student ranking constraint `k_i ≥ 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct ConstraintVector(Vec<usize>);

impl ConstraintVector {
    pub fn new(limits: Vec<usize>) -> Result<Self, ValidationError> {
        if let Some(pos) = limits.iter().position(|&k| k == 0) {
            return Err(ValidationError::ZeroConstraint { student: StudentId(pos) });
        }
        Ok(ConstraintVector(limits))
    }

    pub fn uniform(k: usize, n_students: usize) -> Result<Self, ValidationError> {
        Self::new(vec![k; n_students])
    }

    pub fn limits(&self) -> &[usize] {
        &self.0
    }

    pub fn limit(&self, i: StudentId) -> usize {
        self.0[i.0]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-student assignment to a school or to the outside option.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Matching(Vec<Option<SchoolId>>);

impl Matching {
    pub fn unmatched(n_students: usize) -> Self {
        Matching(vec![None; n_students])
    }

    pub fn from_assignment(assignment: Vec<Option<SchoolId>>) -> Self {
        Matching(assignment)
    }

    /// Shorthand for tests and fixtures: `Some(j)` means school index `j`.
    pub fn from_indices(assignment: &[Option<usize>]) -> Self {
        Matching(assignment.iter().map(|s| s.map(SchoolId)).collect())
    }

    pub fn assignment(&self) -> &[Option<SchoolId>] {
        &self.0
    }

    pub fn school_of(&self, i: StudentId) -> Option<SchoolId> {
        self.0[i.0]
    }

    pub fn assign(&mut self, i: StudentId, s: Option<SchoolId>) {
        self.0[i.0] = s;
    }

    pub fn n_students(&self) -> usize {
        self.0.len()
    }

    pub fn is_matched(&self, i: StudentId) -> bool {
        self.0[i.0].is_some()
    }

    /// Students assigned to `s`, ascending by id.
    pub fn students_at(&self, s: SchoolId) -> impl Iterator<Item = StudentId> + '_ {
        self.0.iter().enumerate().filter(move |(_, a)| **a == Some(s)).map(|(i, _)| StudentId(i))
    }

    pub fn fill_counts(&self, n_schools: usize) -> Vec<usize> {
        let mut fill = vec![0; n_schools];
        for s in self.0.iter().flatten() {
            fill[s.0] += 1;
        }
        fill
    }

    pub fn matched_students(&self) -> Vec<StudentId> {
        (0..self.0.len()).filter(|&i| self.0[i].is_some()).map(StudentId).collect()
    }

    /// Whether the assignment respects every capacity of `instance`.
    pub fn respects_capacities(&self, instance: &Instance) -> bool {
        self.0.len() == instance.n_students()
            && self.0.iter().flatten().all(|s| s.0 < instance.n_schools())
            && self.fill_counts(instance.n_schools()).iter().zip(instance.capacities()).all(|(&f, &q)| f <= q as usize)
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .map(|(i, s)| match s {
                Some(s) => format!("{}→{}", StudentId(i), s),
                None => format!("{}→∅", StudentId(i)),
            })
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("instance has no students")]
    NoStudents,
    #[error("instance has no schools")]
    NoSchools,
    #[error("expected {expected} preference lists, found {found}")]
    PreferenceCount { expected: usize, found: usize },
    #[error("expected {expected} priority orders, found {found}")]
    PriorityCount { expected: usize, found: usize },
    #[error("expected {expected} capacities, found {found}")]
    CapacityCount { expected: usize, found: usize },
    #[error("duplicate school {school} in the preference list of {student}")]
    DuplicateSchool { student: StudentId, school: SchoolId },
    #[error("unknown school index {school}{}", student.map(|i| format!(" in the preference list of {i}")).unwrap_or_default())]
    UnknownSchool { student: Option<StudentId>, school: usize },
    #[error("unknown student index {student} in the priority order of {school}")]
    UnknownStudent { school: SchoolId, student: usize },
    #[error("priority order{} is not a permutation of the students", school.map(|s| format!(" of {s}")).unwrap_or_default())]
    NotAPermutation { school: Option<SchoolId> },
    #[error("capacity of {school} must be at least 1")]
    ZeroCapacity { school: SchoolId },
    #[error("unknown first-preference-first school index {school}")]
    UnknownFpfSchool { school: usize },
    #[error("ranking constraint of {student} must be at least 1")]
    ZeroConstraint { student: StudentId },
    #[error("expected {expected} ranking constraints, found {found}")]
    ConstraintCount { expected: usize, found: usize },
}

/// All violations found while validating a raw instance.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid instance: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ValidationErrors(pub Vec<ValidationError>);

/// Non-fatal observations about an otherwise valid instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationWarning {
    /// The model usually assumes strictly more students than schools.
    NotMoreStudentsThanSchools { n_students: usize, n_schools: usize },
}

impl fmt::Display for ValidationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationWarning::NotMoreStudentsThanSchools { n_students, n_schools } => {
                write!(f, "{n_students} students and {n_schools} schools: expected more students than schools")
            }
        }
    }
}

/// An instance description in plain indices, before validation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawInstance {
    pub n_students: usize,
    pub n_schools: usize,
    pub preferences: Vec<Vec<usize>>,
    pub priorities: Vec<Vec<usize>>,
    pub capacities: Vec<u32>,
    #[serde(default)]
    pub fpf_schools: Vec<usize>,
}

/// A validated instance together with any warnings raised on the way.
#[derive(Clone, Debug)]
pub struct Validated {
    pub instance: Instance,
    pub warnings: Vec<ValidationWarning>,
}

/// A school choice problem: preferences, priorities, capacities and the set
/// of first-preference-first schools.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Instance {
    preferences: Vec<PreferenceList>,
    priorities: Vec<PriorityOrder>,
    capacities: Vec<u32>,
    fpf: Vec<bool>,
}

/// Checks every invariant of `raw` and reports all violations at once.
pub fn validate_instance(raw: &RawInstance) -> Result<Validated, ValidationErrors> {
    let mut errors = Vec::new();
    let (n, m) = (raw.n_students, raw.n_schools);
    if n == 0 {
        errors.push(ValidationError::NoStudents);
    }
    if m == 0 {
        errors.push(ValidationError::NoSchools);
    }
    if raw.preferences.len() != n {
        errors.push(ValidationError::PreferenceCount { expected: n, found: raw.preferences.len() });
    }
    if raw.priorities.len() != m {
        errors.push(ValidationError::PriorityCount { expected: m, found: raw.priorities.len() });
    }
    if raw.capacities.len() != m {
        errors.push(ValidationError::CapacityCount { expected: m, found: raw.capacities.len() });
    }

    let mut preferences = Vec::with_capacity(raw.preferences.len());
    for (i, list) in raw.preferences.iter().enumerate() {
        let mut seen = vec![false; m];
        let mut ok = true;
        for &s in list {
            if s >= m {
                errors.push(ValidationError::UnknownSchool { student: Some(StudentId(i)), school: s });
                ok = false;
            } else if seen[s] {
                errors.push(ValidationError::DuplicateSchool { student: StudentId(i), school: SchoolId(s) });
                ok = false;
            } else {
                seen[s] = true;
            }
        }
        if ok {
            preferences.push(PreferenceList::from_indices(list));
        }
    }

    let mut priorities = Vec::with_capacity(raw.priorities.len());
    for (s, order) in raw.priorities.iter().enumerate() {
        let school = SchoolId(s);
        let mut seen = vec![false; n];
        let mut ok = order.len() == n;
        for &i in order {
            if i >= n {
                errors.push(ValidationError::UnknownStudent { school, student: i });
                ok = false;
            } else if seen[i] {
                ok = false;
            } else {
                seen[i] = true;
            }
        }
        if ok {
            priorities.push(PriorityOrder::from_indices(order).expect("checked permutation"));
        } else if !order.iter().any(|&i| i >= n) {
            errors.push(ValidationError::NotAPermutation { school: Some(school) });
        }
    }

    for (s, &q) in raw.capacities.iter().enumerate() {
        if q < 1 {
            errors.push(ValidationError::ZeroCapacity { school: SchoolId(s) });
        }
    }

    let mut fpf = vec![false; m];
    for &s in &raw.fpf_schools {
        if s >= m {
            errors.push(ValidationError::UnknownFpfSchool { school: s });
        } else {
            fpf[s] = true;
        }
    }

    if !errors.is_empty() {
        return Err(ValidationErrors(errors));
    }
    let mut warnings = Vec::new();
    if n <= m {
        warnings.push(ValidationWarning::NotMoreStudentsThanSchools { n_students: n, n_schools: m });
    }
    Ok(Validated { instance: Instance { preferences, priorities, capacities: raw.capacities.clone(), fpf }, warnings })
}

impl Instance {
    /// Builds an instance from already-typed parts, validating them.
    pub fn new(
        preferences: Vec<PreferenceList>,
        priorities: Vec<PriorityOrder>,
        capacities: Vec<u32>,
        fpf_schools: &[SchoolId],
    ) -> Result<Self, ValidationErrors> {
        let raw = RawInstance {
            n_students: preferences.len(),
            n_schools: capacities.len(),
            preferences: preferences.iter().map(|p| p.schools().iter().map(|s| s.0).collect()).collect(),
            priorities: priorities.iter().map(|o| o.ranking().iter().map(|i| i.0).collect()).collect(),
            capacities,
            fpf_schools: fpf_schools.iter().map(|s| s.0).collect(),
        };
        validate_instance(&raw).map(|v| v.instance)
    }

    /// Same as [`Instance::new`] with one priority order shared by all schools.
    pub fn with_common_priority(
        preferences: Vec<PreferenceList>,
        priority: PriorityOrder,
        capacities: Vec<u32>,
        fpf_schools: &[SchoolId],
    ) -> Result<Self, ValidationErrors> {
        let priorities = vec![priority; capacities.len()];
        Self::new(preferences, priorities, capacities, fpf_schools)
    }

    pub fn to_raw(&self) -> RawInstance {
        RawInstance {
            n_students: self.n_students(),
            n_schools: self.n_schools(),
            preferences: self.preferences.iter().map(|p| p.schools().iter().map(|s| s.0).collect()).collect(),
            priorities: self.priorities.iter().map(|o| o.ranking().iter().map(|i| i.0).collect()).collect(),
            capacities: self.capacities.clone(),
            fpf_schools: self.fpf_schools().iter().map(|s| s.0).collect(),
        }
    }

    pub fn n_students(&self) -> usize {
        self.preferences.len()
    }

    pub fn n_schools(&self) -> usize {
        self.capacities.len()
    }

    pub fn students(&self) -> impl Iterator<Item = StudentId> + Clone {
        (0..self.n_students()).map(StudentId)
    }

    pub fn schools(&self) -> impl Iterator<Item = SchoolId> + Clone {
        (0..self.n_schools()).map(SchoolId)
    }

    pub fn preferences(&self) -> &[PreferenceList] {
        &self.preferences
    }

    pub fn preference(&self, i: StudentId) -> &PreferenceList {
        &self.preferences[i.0]
    }

    pub fn priorities(&self) -> &[PriorityOrder] {
        &self.priorities
    }

    pub fn priority(&self, s: SchoolId) -> &PriorityOrder {
        &self.priorities[s.0]
    }

    pub fn capacities(&self) -> &[u32] {
        &self.capacities
    }

    pub fn capacity(&self, s: SchoolId) -> u32 {
        self.capacities[s.0]
    }

    pub fn is_fpf(&self, s: SchoolId) -> bool {
        self.fpf[s.0]
    }

    pub fn fpf_mask(&self) -> &[bool] {
        &self.fpf
    }

    pub fn fpf_schools(&self) -> Vec<SchoolId> {
        self.schools().filter(|&s| self.fpf[s.0]).collect()
    }

    /// Whether every school uses the same priority order.
    pub fn has_common_priority(&self) -> bool {
        self.priorities.windows(2).all(|w| w[0].ranking == w[1].ranking)
    }

    /// The truthful profile, borrowed.
    pub fn profile(&self) -> Profile<'_> {
        self.preferences.iter().map(|p| p.schools()).collect()
    }

    /// The profile truncated at `k` for every student.
    pub fn truncated_profile(&self, k: usize) -> Profile<'_> {
        self.preferences.iter().map(|p| p.prefix(k)).collect()
    }

    /// The profile truncated at each student's own limit.
    pub fn profile_with_limits(&self, limits: &ConstraintVector) -> Profile<'_> {
        self.preferences.iter().zip(limits.limits()).map(|(p, &k)| p.prefix(k)).collect()
    }

    /// Copy of this instance with different preferences.
    pub fn with_preferences(&self, preferences: Vec<PreferenceList>) -> Instance {
        assert_eq!(preferences.len(), self.n_students(), "one list per student");
        Instance { preferences, ..self.clone() }
    }

    /// Copy of this instance with a different first-preference-first set.
    pub fn with_fpf_schools(&self, fpf_schools: &[SchoolId]) -> Instance {
        let mut fpf = vec![false; self.n_schools()];
        for s in fpf_schools {
            fpf[s.0] = true;
        }
        Instance { fpf, ..self.clone() }
    }

    /// Longest preference list length.
    pub fn max_list_len(&self) -> usize {
        self.preferences.iter().map(|p| p.len()).max().unwrap_or(0)
    }

    /// SHA-256 over a canonical encoding, hex encoded.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        let mut put = |x: usize| h.update((x as u64).to_le_bytes());
        put(self.n_students());
        put(self.n_schools());
        for p in &self.preferences {
            put(p.len());
            p.schools().iter().for_each(|s| put(s.0));
        }
        for o in &self.priorities {
            o.ranking().iter().for_each(|i| put(i.0));
        }
        for (&q, &f) in self.capacities.iter().zip(&self.fpf) {
            put(q as usize);
            put(f as usize);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The first `k` schools of `pref`, order preserved.
pub fn truncate_preferences(pref: &PreferenceList, k: usize) -> PreferenceList {
    PreferenceList(pref.prefix(k).to_vec())
}

/// Truncates each student's list at her own limit. Priorities, capacities
/// and first-preference-first schools are unchanged.
pub fn truncate_profile(instance: &Instance, limits: &ConstraintVector) -> Result<Instance, ValidationError> {
    if limits.len() != instance.n_students() {
        return Err(ValidationError::ConstraintCount { expected: instance.n_students(), found: limits.len() });
    }
    let preferences =
        instance.preferences().iter().zip(limits.limits()).map(|(p, &k)| truncate_preferences(p, k)).collect();
    Ok(instance.with_preferences(preferences))
}

/// 1-based rank of `s` in `pref`; unacceptable schools get `n_schools + 1`.
pub fn rank_of(pref: &PreferenceList, s: SchoolId, n_schools: usize) -> usize {
    rank_in(pref.schools(), s, n_schools)
}

pub(crate) fn rank_in(list: &[SchoolId], s: SchoolId, n_schools: usize) -> usize {
    position_in(list, s).map_or(n_schools + 1, |p| p + 1)
}
