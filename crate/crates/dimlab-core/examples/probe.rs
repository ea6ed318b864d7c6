// Scratch probe for estimator calibration during development.
use dimlab_core::assouad::{assouad_dimension, assouad_spectrum, quasi_assouad};
use dimlab_core::covering::estimate_box_dimension;
use dimlab_core::geometry::{generate, GeneratorSpec};
use dimlab_core::intermediate::{intermediate_curve, intermediate_dimension};

fn pow2(e: i32) -> f64 {
    (2f64).powi(e)
}

fn seq_times_segment(level: i32) -> dimlab_core::PointCloud {
    generate(&GeneratorSpec::Product {
        a: Box::new(GeneratorSpec::SequenceSet { p: 1.0, delta: 1.0 }),
        b: Box::new(GeneratorSpec::Segment { delta: 1.0 }),
        delta: pow2(level),
    })
    .unwrap()
}

fn fp(p: f64, level: i32) -> dimlab_core::PointCloud {
    generate(&GeneratorSpec::SequenceSet {
        p,
        delta: pow2(level),
    })
    .unwrap()
}

fn fp_product(p: f64, level: i32) -> dimlab_core::PointCloud {
    generate(&GeneratorSpec::Product {
        a: Box::new(GeneratorSpec::SequenceSet { p, delta: 1.0 }),
        b: Box::new(GeneratorSpec::SequenceSet { p, delta: 1.0 }),
        delta: pow2(level),
    })
    .unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let what = args.get(1).map(|s| s.as_str()).unwrap_or("box");

    match what {
        "box" => {
            for (name, cloud, target) in [
                ("seq_x_seg@2^-10", seq_times_segment(-10), 1.5),
                ("seq_x_seg@2^-11", seq_times_segment(-11), 1.5),
                ("F1@2^-14", fp(1.0, -14), 0.5),
                ("F0.5@2^-14", fp(0.5, -14), 2.0 / 3.0),
                ("F0.5xF0.5@2^-10", fp_product(0.5, -10), 4.0 / 3.0),
                ("F0.5xF0.5@2^-11", fp_product(0.5, -11), 4.0 / 3.0),
            ] {
                let t0 = std::time::Instant::now();
                let est = estimate_box_dimension(&cloud).unwrap();
                println!(
                    "{name}: n={} slope={:.4} (lo {:.4}, hi {:.4}) target {target:.4} err {:+.4}  [{:?}]",
                    cloud.len(),
                    est.fit.slope,
                    est.lower,
                    est.upper,
                    est.fit.slope - target,
                    t0.elapsed()
                );
            }
        }
        "assouad" => {
            let lvl: i32 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(-11);
            let cloud = seq_times_segment(lvl);
            println!("cloud n={}", cloud.len());
            let thetas: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
            let t0 = std::time::Instant::now();
            let curve = assouad_spectrum(&cloud, &thetas).unwrap();
            for (i, t) in curve.thetas.iter().enumerate() {
                let target = ((1.5 - t) / (1.0 - t)).min(2.0);
                println!(
                    "theta {t:.2}: est {:.4} target {target:.4} err {:+.4} (r2 {:.3}, {} anchors)",
                    curve.values[i],
                    curve.values[i] - target,
                    curve.diagnostics[i].fit_r2,
                    curve.diagnostics[i].n_anchors
                );
            }
            println!("curve time {:?}", t0.elapsed());
            let t0 = std::time::Instant::now();
            let adim = assouad_dimension(&cloud).unwrap();
            println!("assouad dim {adim:.4} (target 2) [{:?}]", t0.elapsed());
            let qa = quasi_assouad(&curve, 2.0).unwrap();
            println!("quasi assouad {qa:.4} (target 2)");
        }
        "intermediate" => {
            let lvl: i32 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(-11);
            let cloud = seq_times_segment(lvl);
            println!("cloud n={}", cloud.len());
            let t0 = std::time::Instant::now();
            for k in 1..=10 {
                let theta = k as f64 / 10.0;
                let (v, fit) = intermediate_dimension(&cloud, theta).unwrap();
                let target = (1.0 + 2.0 * theta) / (1.0 + theta);
                println!(
                    "theta {theta:.2}: est {v:.4} target {target:.4} err {:+.4} (r2 {:.4})",
                    v - target,
                    fit.r_squared
                );
            }
            println!("time {:?}", t0.elapsed());
        }
        "profile" => {
            let lvl: i32 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(-10);
            let cloud = seq_times_segment(lvl);
            println!("n={}", cloud.len());
            for theta in [0.25, 0.5, 0.75] {
                let t0 = std::time::Instant::now();
                let v =
                    dimlab_core::capacity::intermediate_dimension_profile(&cloud, theta, 2).unwrap();
                let (dp, _) = intermediate_dimension(&cloud, theta).unwrap();
                let target = (1.0 + 2.0 * theta) / (1.0 + theta);
                println!(
                    "theta {theta}: profile {v:.4} dp {dp:.4} |diff| {:.4} target {target:.4} [{:?}]",
                    (v - dp).abs(),
                    t0.elapsed()
                );
            }
        }
        "boxprofile" => {
            // s >= d consistency on the 1D sequence sets, and the k=1 profile
            // of the product example
            for (name, cloud, s) in [
                ("F1", fp(1.0, -16), 2.0),
                ("F0.5", fp(0.5, -16), 2.0),
                ("seq_x_seg s=1", seq_times_segment(-10), 1.0),
                ("seq_x_seg s=2", seq_times_segment(-10), 2.0),
            ] {
                let t0 = std::time::Instant::now();
                let (est, fit) =
                    dimlab_core::capacity::box_dimension_profile(&cloud, s).unwrap();
                let box_est = estimate_box_dimension(&cloud).unwrap();
                println!(
                    "{name}: profile {est:.4} box {:.4} r2 {:.4} [{:?}]",
                    box_est.fit.slope,
                    fit.r_squared,
                    t0.elapsed()
                );
            }
        }
        "capcurve" => {
            let theta: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.1);
            let s: f64 = args.get(3).map(|v| v.parse().unwrap()).unwrap_or(1.0);
            let lvl: i32 = args.get(4).map(|v| v.parse().unwrap()).unwrap_or(-10);
            let cloud = seq_times_segment(lvl);
            println!("n={} theta={theta} s={s}", cloud.len());
            for j in 2..=(-lvl - 1) {
                let r = pow2(-j);
                let spec =
                    dimlab_core::capacity::KernelSpec::intermediate_profile(s, 2, theta, r).unwrap();
                let est = dimlab_core::capacity::capacity(&cloud, &spec).unwrap();
                println!(
                    "j={j}: capacity {:.4} log2C {:.3} net {} sat {} conv {}",
                    est.value,
                    est.value.log2(),
                    est.net_points,
                    est.saturated,
                    est.converged
                );
            }
        }
        "boxcapcurve" => {
            let s: f64 = args.get(2).map(|v| v.parse().unwrap()).unwrap_or(1.0);
            let lvl: i32 = args.get(3).map(|v| v.parse().unwrap()).unwrap_or(-10);
            let cloud = seq_times_segment(lvl);
            println!("n={} s={s}", cloud.len());
            for j in 2..=(-lvl - 1) {
                let r = pow2(-j);
                let spec = dimlab_core::capacity::KernelSpec::box_profile(s, r).unwrap();
                let est = dimlab_core::capacity::capacity(&cloud, &spec).unwrap();
                println!(
                    "j={j}: capacity {:.4} log2C {:.3} net {} sat {}",
                    est.value,
                    est.value.log2(),
                    est.net_points,
                    est.saturated
                );
            }
        }
        "assouad_raw" => {
            let theta: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.8);
            let lvl: i32 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(-10);
            let cloud = seq_times_segment(lvl);
            let j_max = cloud.max_level();
            println!("n={} j_max={j_max}", cloud.len());
            for level in 1..=j_max {
                let radius = (2f64).powf(-theta * level as f64);
                let m = dimlab_core::assouad::max_local_count_probe(&cloud, radius, level).unwrap();
                let x = level as f64 * (1.0 - theta);
                println!(
                    "level {level}: R=2^{:-.2} x={x:.2} log2M={:.3} ratio {:.3}",
                    -(theta * level as f64),
                    (m as f64).log2(),
                    (m as f64).log2() / x
                );
            }
        }
        "intermediate_f1" => {
            let cloud = fp(1.0, -14);
            let curve = intermediate_curve(&cloud, &[0.2, 0.4, 0.6, 0.8, 1.0]).unwrap();
            for (t, v) in curve.thetas.iter().zip(&curve.values) {
                let target = t / (t + 1.0);
                println!("theta {t:.2}: est {v:.4} target {target:.4} err {:+.4}", v - target);
            }
        }
        other => eprintln!("unknown probe {other}"),
    }
}
