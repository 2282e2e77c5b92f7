use nbodylab::ellipse::*;

fn show(e1: f64, e2: f64, a2: f64, inc: f64, peri: f64, grid: usize) {
    let p1 = KeplerEllipse::from_elements(&EllipseElements{ a: 1.0, e: e1, inclination: 0.0, node: 0.0, periapsis: 0.0 }).unwrap();
    let p2 = KeplerEllipse::from_elements(&EllipseElements{ a: a2, e: e2, inclination: inc, node: 0.0, periapsis: peri }).unwrap();
    let pair = ConfocalPair::new(p1, p2).unwrap();
    let set = find_critical_points(&pair, grid).unwrap();
    println!("e1 {e1} e2 {e2} a2 {a2} inc {inc} peri {peri} grid {grid}: total {} (min {} max {} sad {} deg {}), complete {}, euler {}",
        set.total(), set.n_min, set.n_max, set.n_saddle, set.n_degenerate, set.complete, set.euler_ok);
    for p in &set.points {
        println!("  ({:+.6}, {:+.6}) d2 {:.6e} {:?} |g| {:.2e}", p.e1, p.e2, p.d2, p.kind, p.grad_norm);
    }
}

fn main() {
    show(0.6, 0.8, 2.0, 0.0, 0.0, 192);
    show(0.99, 0.9, 1.4, 1.2, 0.8, 192);
}
