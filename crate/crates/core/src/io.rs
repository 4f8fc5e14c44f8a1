//! On-disk documents. Instances are stored with names rather than indices;
//! reports are JSON trees with a fixed key order.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{json, Value};
use thiserror::Error;

use crate::fairness::{BlockingPair, Witness};
use crate::model::{
    validate_instance, Instance, Matching, RawInstance, SchoolId, StudentId, ValidationErrors, ValidationWarning,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{context}: line {line}, column {column}: {message}")]
    Parse { context: String, line: usize, column: usize, message: String },
    #[error("{0}")]
    Document(String),
    #[error(transparent)]
    Validation(#[from] ValidationErrors),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchoolEntry {
    pub name: String,
    /// Required; optional here only so a missing value can be reported by
    /// school name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<u32>,
    #[serde(default)]
    pub fpf: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrioritiesDoc {
    /// One order shared by every school.
    Common(Vec<String>),
    PerSchool(BTreeMap<String, Vec<String>>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub schema_version: u32,
    pub students: Vec<String>,
    pub schools: Vec<SchoolEntry>,
    /// Students without an entry list nothing.
    #[serde(default)]
    pub preferences: BTreeMap<String, Vec<String>>,
    pub priorities: PrioritiesDoc,
}

/// Display names for students and schools, by index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Roster {
    pub students: Vec<String>,
    pub schools: Vec<String>,
}

impl Roster {
    /// `i1..in` and `s1..sm`.
    pub fn default_names(n_students: usize, n_schools: usize) -> Self {
        Roster {
            students: (0..n_students).map(|i| StudentId(i).to_string()).collect(),
            schools: (0..n_schools).map(|s| SchoolId(s).to_string()).collect(),
        }
    }

    pub fn for_instance(instance: &Instance) -> Self {
        Roster::default_names(instance.n_students(), instance.n_schools())
    }

    pub fn student(&self, i: StudentId) -> &str {
        &self.students[i.0]
    }

    pub fn school(&self, s: SchoolId) -> &str {
        &self.schools[s.0]
    }

    pub fn student_id(&self, name: &str) -> Option<StudentId> {
        self.students.iter().position(|n| n == name).map(StudentId)
    }

    pub fn school_id(&self, name: &str) -> Option<SchoolId> {
        self.schools.iter().position(|n| n == name).map(SchoolId)
    }

    /// Parses a comma-separated list of student names.
    pub fn parse_students(&self, list: &str) -> Result<Vec<StudentId>, IoError> {
        list.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|n| self.student_id(n).ok_or_else(|| IoError::Document(format!("unknown student {n:?}"))))
            .collect()
    }

    pub fn students_json(&self, students: &[StudentId]) -> Value {
        Value::from(students.iter().map(|&i| self.student(i)).collect::<Vec<_>>())
    }

    pub fn schools_json(&self, schools: &[SchoolId]) -> Value {
        Value::from(schools.iter().map(|&s| self.school(s)).collect::<Vec<_>>())
    }

    pub fn matching(&self, matching: &Matching) -> NamedMatching {
        NamedMatching(
            matching
                .assignment()
                .iter()
                .enumerate()
                .map(|(i, s)| (self.students[i].clone(), s.map(|s| self.school(s).to_string())))
                .collect(),
        )
    }

    pub fn matching_json(&self, matching: &Matching) -> Value {
        serde_json::to_value(self.matching(matching)).expect("matching serialises")
    }

    pub fn blocking_pairs_json(&self, pairs: &[BlockingPair]) -> Value {
        Value::from(
            pairs
                .iter()
                .map(|p| {
                    let witness = match p.witness {
                        Witness::EmptySeat => Value::from("empty_seat"),
                        Witness::LowerPriorityOccupant(j) => json!({ "lower_priority_occupant": self.student(j) }),
                    };
                    json!({ "student": self.student(p.student), "school": self.school(p.school), "witness": witness })
                })
                .collect::<Vec<_>>(),
        )
    }

    /// Reads a `{student: school|null}` map back into a matching.
    pub fn parse_matching(&self, map: &BTreeMap<String, Option<String>>) -> Result<Matching, IoError> {
        let mut m = Matching::unmatched(self.students.len());
        for (student, school) in map {
            let i =
                self.student_id(student).ok_or_else(|| IoError::Document(format!("unknown student {student:?}")))?;
            let s = match school {
                Some(name) => {
                    Some(self.school_id(name).ok_or_else(|| IoError::Document(format!("unknown school {name:?}")))?)
                }
                None => None,
            };
            m.assign(i, s);
        }
        Ok(m)
    }
}

/// A matching as `{student: school|null}` in roster order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedMatching(pub Vec<(String, Option<String>)>);

impl Serialize for NamedMatching {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (student, school) in &self.0 {
            map.serialize_entry(student, school)?;
        }
        map.end()
    }
}

fn unique(names: &[String], what: &str) -> Result<HashMap<String, usize>, IoError> {
    let mut index = HashMap::new();
    for (k, n) in names.iter().enumerate() {
        if n.is_empty() {
            return Err(IoError::Document(format!("empty {what} name")));
        }
        if index.insert(n.clone(), k).is_some() {
            return Err(IoError::Document(format!("duplicate {what} name {n:?}")));
        }
    }
    Ok(index)
}

fn order_indices(names: &[String], students: &HashMap<String, usize>, context: &str) -> Result<Vec<usize>, IoError> {
    names
        .iter()
        .map(|n| students.get(n).copied().ok_or_else(|| IoError::Document(format!("{context}: unknown student {n:?}"))))
        .collect()
}

impl InstanceDocument {
    pub fn from_instance(instance: &Instance, roster: &Roster) -> Self {
        let schools = instance
            .schools()
            .map(|s| SchoolEntry {
                name: roster.school(s).to_string(),
                capacity: Some(instance.capacity(s)),
                fpf: instance.is_fpf(s),
            })
            .collect();
        let preferences = instance
            .students()
            .map(|i| {
                let list = instance.preference(i).schools().iter().map(|&s| roster.school(s).to_string()).collect();
                (roster.student(i).to_string(), list)
            })
            .collect();
        let names = |s: SchoolId| -> Vec<String> {
            instance.priority(s).ranking().iter().map(|&i| roster.student(i).to_string()).collect()
        };
        let priorities = if instance.has_common_priority() {
            PrioritiesDoc::Common(names(SchoolId(0)))
        } else {
            PrioritiesDoc::PerSchool(instance.schools().map(|s| (roster.school(s).to_string(), names(s))).collect())
        };
        InstanceDocument {
            schema_version: SCHEMA_VERSION,
            students: roster.students.clone(),
            schools,
            preferences,
            priorities,
        }
    }

    pub fn roster(&self) -> Roster {
        Roster { students: self.students.clone(), schools: self.schools.iter().map(|s| s.name.clone()).collect() }
    }

    /// Resolves names to indices; the result still needs validation.
    pub fn to_raw(&self) -> Result<RawInstance, IoError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(IoError::Document(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let students = unique(&self.students, "student")?;
        let school_names: Vec<String> = self.schools.iter().map(|s| s.name.clone()).collect();
        let schools = unique(&school_names, "school")?;
        let mut capacities = Vec::with_capacity(self.schools.len());
        for s in &self.schools {
            capacities
                .push(s.capacity.ok_or_else(|| IoError::Document(format!("school {:?} has no capacity", s.name)))?);
        }
        let mut preferences = vec![Vec::new(); self.students.len()];
        for (student, list) in &self.preferences {
            let i = *students
                .get(student)
                .ok_or_else(|| IoError::Document(format!("preferences given for unknown student {student:?}")))?;
            preferences[i] =
                list.iter()
                    .map(|n| {
                        schools.get(n).copied().ok_or_else(|| {
                            IoError::Document(format!("preferences of {student:?}: unknown school {n:?}"))
                        })
                    })
                    .collect::<Result<_, _>>()?;
        }
        let priorities = match &self.priorities {
            PrioritiesDoc::Common(order) => {
                vec![order_indices(order, &students, "common priority")?; self.schools.len()]
            }
            PrioritiesDoc::PerSchool(map) => {
                if let Some(name) = map.keys().find(|n| !schools.contains_key(*n)) {
                    return Err(IoError::Document(format!("priority given for unknown school {name:?}")));
                }
                school_names
                    .iter()
                    .map(|name| {
                        let order = map
                            .get(name)
                            .ok_or_else(|| IoError::Document(format!("school {name:?} has no priority order")))?;
                        order_indices(order, &students, &format!("priority of {name:?}"))
                    })
                    .collect::<Result<_, _>>()?
            }
        };
        Ok(RawInstance {
            n_students: self.students.len(),
            n_schools: self.schools.len(),
            preferences,
            priorities,
            capacities,
            fpf_schools: self.schools.iter().enumerate().filter(|(_, s)| s.fpf).map(|(k, _)| k).collect(),
        })
    }

    pub fn to_instance(&self) -> Result<LoadedInstance, IoError> {
        let validated = validate_instance(&self.to_raw()?)?;
        Ok(LoadedInstance { instance: validated.instance, roster: self.roster(), warnings: validated.warnings })
    }
}

#[derive(Clone, Debug)]
pub struct LoadedInstance {
    pub instance: Instance,
    pub roster: Roster,
    pub warnings: Vec<ValidationWarning>,
}

fn parse_error(context: &str, e: serde_json::Error) -> IoError {
    IoError::Parse { context: context.to_string(), line: e.line(), column: e.column(), message: e.to_string() }
}

pub fn parse_instance(text: &str, context: &str) -> Result<LoadedInstance, IoError> {
    let doc: InstanceDocument = serde_json::from_str(text).map_err(|e| parse_error(context, e))?;
    doc.to_instance()
}

pub fn load_instance(path: &Path) -> Result<LoadedInstance, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
    parse_instance(&text, &path.display().to_string())
}

pub fn instance_to_string(instance: &Instance, roster: &Roster) -> String {
    let mut s =
        serde_json::to_string_pretty(&InstanceDocument::from_instance(instance, roster)).expect("document serialises");
    s.push('\n');
    s
}

pub fn save_instance(instance: &Instance, roster: &Roster, path: &Path) -> Result<(), IoError> {
    fs::write(path, instance_to_string(instance, roster))
        .map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

/// Reads a `{student: school|null}` matching file against `roster`.
pub fn load_matching(path: &Path, roster: &Roster) -> Result<Matching, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })?;
    let map: BTreeMap<String, Option<String>> =
        serde_json::from_str(&text).map_err(|e| parse_error(&path.display().to_string(), e))?;
    roster.parse_matching(&map)
}

/// Everything a command prints. Object keys inside `result` are sorted, so
/// equal inputs give byte-identical output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub command: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub result: Value,
    pub passed: bool,
}

impl ReportDocument {
    pub fn new(command: Vec<String>, result: Value) -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            command,
            instance_digest: None,
            seed: None,
            result,
            passed: true,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{fixture_instance, Completion, FixtureId};

    #[test]
    fn fixtures_round_trip() {
        for id in FixtureId::ALL {
            let inst = fixture_instance(id, Completion::Ascending);
            let roster = Roster::for_instance(&inst);
            let text = instance_to_string(&inst, &roster);
            let back = parse_instance(&text, "mem").unwrap();
            assert_eq!(back.instance, inst, "{id}");
            assert_eq!(back.roster, roster);
            assert_eq!(instance_to_string(&back.instance, &back.roster), text);
        }
    }

    #[test]
    fn missing_capacity_names_the_school() {
        let text = r#"{"schema_version":1,"students":["a","b"],"schools":[{"name":"x","capacity":1},{"name":"north"}],
            "preferences":{"a":["x"]},"priorities":{"common":["a","b"]}}"#;
        let err = parse_instance(text, "mem").unwrap_err().to_string();
        assert!(err.contains("\"north\""), "{err}");
    }

    #[test]
    fn common_shorthand_expands() {
        let common = r#"{"schema_version":1,"students":["a","b"],"schools":[{"name":"x","capacity":1},{"name":"y","capacity":1}],
            "priorities":{"common":["b","a"]}}"#;
        let per = r#"{"schema_version":1,"students":["a","b"],"schools":[{"name":"x","capacity":1},{"name":"y","capacity":1}],
            "priorities":{"per_school":{"y":["b","a"],"x":["b","a"]}}}"#;
        let a = parse_instance(common, "a").unwrap().instance;
        let b = parse_instance(per, "b").unwrap().instance;
        assert_eq!(a, b);
        assert!(a.has_common_priority());
    }

    #[test]
    fn parse_errors_carry_position() {
        match parse_instance("{\n  \"schema_version\": 1,\n  \"students\": [1]\n}", "doc.json") {
            Err(IoError::Parse { line, context, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(context, "doc.json");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_names_rejected() {
        let dup = r#"{"schema_version":1,"students":["a","a"],"schools":[{"name":"x","capacity":1}],"priorities":{"common":["a","a"]}}"#;
        assert!(matches!(parse_instance(dup, "m"), Err(IoError::Document(_))));
        let unknown = r#"{"schema_version":1,"students":["a"],"schools":[{"name":"x","capacity":1}],
            "preferences":{"a":["z"]},"priorities":{"common":["a"]}}"#;
        assert!(matches!(parse_instance(unknown, "m"), Err(IoError::Document(_))));
        let invalid = r#"{"schema_version":1,"students":["a","b"],"schools":[{"name":"x","capacity":1}],"priorities":{"common":["a"]}}"#;
        assert!(matches!(parse_instance(invalid, "m"), Err(IoError::Validation(_))));
    }

    #[test]
    fn matching_serialises_in_roster_order() {
        let roster = Roster::default_names(11, 2);
        let mut m = Matching::unmatched(11);
        m.assign(StudentId(1), Some(SchoolId(1)));
        let text = serde_json::to_string(&roster.matching(&m)).unwrap();
        assert!(text.starts_with(r#"{"i1":null,"i2":"s2","i3":null"#), "{text}");
        let map: BTreeMap<String, Option<String>> = serde_json::from_str(&text).unwrap();
        assert_eq!(roster.parse_matching(&map).unwrap(), m);
    }
}
