//! Integrates monomials `x^a y^b` over the reference triangle with every
//! available rule and compares against `a! b! / (a + b + 2)!`.

use fekit::quadrature::{triangle_rule, TRIANGLE_ORDERS};

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn main() -> fekit::Result<()> {
    for order in TRIANGLE_ORDERS {
        let rule = triangle_rule(order)?;
        let mut worst = 0.0f64;
        for a in 0..=order as u32 {
            for b in 0..=(order as u32 - a) {
                let q: f64 = rule
                    .reference_points()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                    .sum();
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                worst = worst.max((q - exact).abs());
            }
        }
        println!("order {order}: {} points, max error on degree <= {order}: {worst:.2e}", rule.len());
    }
    Ok(())
}
