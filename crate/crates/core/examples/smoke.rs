use subnoether_core::catalog::{case_names, run_case};
use subnoether_core::system::OracleConfig;

fn main() {
    let which: Vec<String> = std::env::args().skip(1).collect();
    let oracle = OracleConfig { seed: 42, points: 5 };
    for name in case_names() {
        if !which.is_empty() && !which.iter().any(|w| w == name) {
            continue;
        }
        let t = std::time::Instant::now();
        match run_case(name, &oracle) {
            Ok(report) => {
                print!("{}", report.render_text(false));
                println!("  [{:.2?}]", t.elapsed());
            }
            Err(e) => println!("== {name} == ERROR: {e}"),
        }
    }
}
