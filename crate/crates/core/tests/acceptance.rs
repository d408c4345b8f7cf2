//! One line per acceptance criterion; exits nonzero if any criterion fails.

use symcoord::acceptance::{all_passed, criteria};

fn main() {
    let mut results = Vec::new();
    for criterion in criteria() {
        let result = criterion.run();
        println!("{result}");
        results.push(result);
    }
    if !all_passed(&results) {
        eprintln!("acceptance: at least one criterion failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
