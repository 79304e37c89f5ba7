//! The CMA-ES core on standard test functions, plus the ask/tell loop.

use guided_lmapf::cmaes::{minimize, rosenbrock, sphere, CmaState};

fn main() -> guided_lmapf::Result<()> {
    let s = minimize(sphere, &[1.0; 10], 0.5, 20_000, None, 1e-8, 1)?;
    println!("sphere-10: {:.2e} after {} evaluations", s.value, s.evals);
    let r = minimize(rosenbrock, &[0.0; 5], 0.5, 50_000, None, 1e-6, 1)?;
    println!("rosenbrock-5: {:.2e} after {} evaluations", r.value, r.evals);

    let mut es = CmaState::new(3, 1.0, 300, 7)?;
    while es.remaining() > 0 {
        let xs = es.ask(10)?;
        // maximized, like throughput
        let fit: Vec<f64> = xs.iter().map(|x| -(x - nalgebra::DVector::from_element(3, 2.0)).norm_squared()).collect();
        es.tell(&xs, &fit)?;
    }
    println!("ask/tell mean {:.3?}, sigma {:.2e}, cond {:.1}", es.mean.as_slice(), es.sigma, es.condition_number());
    Ok(())
}
