use std::sync::Arc;
use wg_core::mesh::structured_unit_square;
use wg_core::problem::builtin;
use wg_core::study::{convergence_study, RunOptions};
use wg_core::WgSpace;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(String::as_str).unwrap_or("sinsin");
    let j: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let rt = args.get(3).map(|s| s == "rt").unwrap_or(false);
    let space = if rt { WgSpace::rt(j) } else { WgSpace::full(j) };
    let ns: Vec<usize> = if j == 0 { vec![8, 16, 32, 64] } else { vec![4, 8, 16, 32] };
    let meshes = ns.iter().map(|&n| Arc::new(structured_unit_square(n).unwrap())).collect();
    let t = std::time::Instant::now();
    let s = convergence_study(meshes, &builtin(name).unwrap(), space, RunOptions::default()).unwrap();
    print!("{}", s.report.to_csv());
    for l in &s.levels {
        println!("res {:.2e} cons {:.2e} jump {:.2e}", l.residual, l.max_conservation_residual, l.max_flux_jump);
    }
    println!("{:?}", t.elapsed());
}
