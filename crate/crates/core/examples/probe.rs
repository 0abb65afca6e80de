use subnoether_core::dsl::load_document;
use subnoether_core::runner::run_document;
use subnoether_core::system::OracleConfig;

fn main() {
    let src = std::fs::read_to_string(std::env::args().nth(1).unwrap()).unwrap();
    let t0 = std::time::Instant::now();
    let full = load_document(&src).unwrap();
    println!("resolve: {:.2?}, {} checks", t0.elapsed(), full.checks.len());
    let oracle = OracleConfig { seed: 42, points: 2 };
    for i in 0..full.checks.len() {
        let mut doc = load_document(&src).unwrap();
        let kept = doc.checks.swap_remove(i);
        doc.checks = vec![kept];
        let t = std::time::Instant::now();
        let report = run_document("probe", &doc, &oracle);
        println!("  [{:?}] {}", t.elapsed(), report.render_text(false).lines().nth(1).unwrap_or(""));
    }
}
