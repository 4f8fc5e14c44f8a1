//! Writes every worked example as an instance document under
//! `data/fixtures/`.

use std::path::Path;

use school_choice::io::{save_instance, Roster};
use school_choice::verify::{fixture_instance, Completion, FixtureId};

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixtures");
    std::fs::create_dir_all(&dir).expect("create data/fixtures");
    for id in FixtureId::ALL {
        let inst = fixture_instance(id, Completion::Ascending);
        let path = dir.join(format!("{}.json", id.name()));
        save_instance(&inst, &Roster::for_instance(&inst), &path).expect("write fixture");
        println!("{}", path.display());
    }
}
