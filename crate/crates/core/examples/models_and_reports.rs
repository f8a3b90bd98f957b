//! Seeded generators, the text model format and JSON reports.

use statdist::framework::{run, sample_hooks, Budget};
use statdist::io::generators::{gen_branch, gen_random};
use statdist::io::model::{parse_model, serialize_model};
use statdist::io::report::{parse_report, write_report, ResultReport};
use statdist::StateId;

fn main() {
    let branch = gen_branch(2, 2, 1, 4).unwrap();
    let text = serialize_model(&branch);
    print!("{text}");
    assert_eq!(parse_model(&text).unwrap(), branch);
    assert_eq!(gen_random(30, 3, 9).unwrap(), gen_random(30, 3, 9).unwrap());

    let r = run(
        &branch,
        StateId(0),
        1e-3,
        &mut sample_hooks(2),
        Budget::default(),
    )
    .unwrap();
    let json = write_report(&ResultReport::from_result("branch.mc", &r, true));
    print!("{json}");
    assert_eq!(parse_report(&json).unwrap().bounds(), r.bounds);
}
