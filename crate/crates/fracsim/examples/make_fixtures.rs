//! Regenerates the committed fixture datasets under data/.
//!
//! Usage: cargo run -p fracsim --example make_fixtures [out_dir]

use fracsim::io::save_traces;
use fracsim::synthetic;

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    let path = |name: &str| format!("{out}/{name}");

    let (t1, d1) = synthetic::example1_traces(1);
    save_traces(&path("example1_traces.txt"), &t1, Some("m"), Some(d1)).unwrap();

    let (t2, d2) = synthetic::example2_traces(5);
    save_traces(&path("example2_traces.txt"), &t2, Some("m"), Some(d2)).unwrap();

    let ex3 = synthetic::example3_traces(1);
    save_traces(&path("example3_traces.txt"), &ex3.traces, Some("m"), Some(ex3.domain)).unwrap();

    println!(
        "wrote {} / {} / {} traces under {out}/",
        t1.len(),
        t2.len(),
        ex3.traces.len()
    );
}
