//! The three synthetic outcome generators and the covariate law.

use topocause::datagen::{
    gen_covariates, gen_orbit, synth_graph_pairs, synth_image_pairs, true_propensity, GraphSpec,
    ImageSpec, OrbitOrder,
};

fn main() -> topocause::Result<()> {
    let xs = gen_covariates(1000, 1);
    let p: Vec<f64> = xs.iter().map(|x| true_propensity(x)).collect();
    let (lo, hi) = p.iter().fold((1.0f64, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    println!("propensity range over 1000 draws: [{lo:.4}, {hi:.4}]");

    for s in [3.5, 4.0, 4.1] {
        let cloud = gen_orbit(s, 300, 5, OrbitOrder::Sequential)?;
        let mean_x = cloud.points().iter().map(|q| q[0]).sum::<f64>() / cloud.len() as f64;
        println!("orbit s = {s}: {} points, mean x {mean_x:.3}", cloud.len());
    }

    let images = synth_image_pairs(4, &ImageSpec::default(), 2)?;
    for (i, (y0, y1)) in images.iter().enumerate() {
        let dark = |im: &topocause::complex::ImageGrid| im.values().iter().filter(|&&v| v < 0.3).count();
        println!("image unit {i}: dark pixels y0 = {}, y1 = {}", dark(y0), dark(y1));
    }

    let graphs = synth_graph_pairs(4, &GraphSpec::default(), 3)?;
    for (i, (g0, g1)) in graphs.iter().enumerate() {
        println!("graph unit {i}: loops y0 = {}, y1 = {}", g0.cycle_rank(), g1.cycle_rank());
    }
    Ok(())
}
