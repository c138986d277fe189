use sps_core::device::{QubitParams, Rates};
use sps_core::lindblad::{integrated_correlations, two_time_correlations, TimeGrid};
use sps_core::pulse::{Pulse, PulseTrain};

#[test]
fn probe_g2_curve() {
    let q = QubitParams::new(16.8, 0.415, 0.0).unwrap();
    let r = Rates::from_mhz(7.02, 0.0, 0.0, 0.03).unwrap();
    let pulse = Pulse::gaussian(2.0, 1.0)
        .with_rabi_angle(std::f64::consts::PI)
        .unwrap();
    let train = PulseTrain::new(pulse, 16, 512.0).unwrap();
    let t_grid = TimeGrid::span(-6.0, 300.0, 1.0);
    let tau_grid = TimeGrid::span(0.0, 612.0, 1.0);
    let surf = two_time_correlations(&q, &r, &train, &t_grid, &tau_grid).unwrap();
    let raw = integrated_correlations(&surf, None);
    // raw curve structure
    let raw_center_mass: f64 = raw.g2[0..80].iter().sum();
    let raw_side_max = raw.g2[450..612].iter().cloned().fold(0.0f64, f64::max);
    println!("raw: K(0)={:.3e} K(5)={:.3e} K(10)={:.3e} K(20)={:.3e} K(40)={:.3e}",
        raw.g2[0], raw.g2[5], raw.g2[10], raw.g2[20], raw.g2[40]);
    println!("raw: center mass(0..80)={raw_center_mass:.4e} side max={raw_side_max:.4e}");
    // integrated-window ratios, normalize_g2 convention: w = period/4
    let w = 128usize;
    let win = |g2: &Vec<f64>, c: usize| -> f64 {
        let lo = c.saturating_sub(w);
        let hi = (c + w).min(g2.len() - 1);
        let mut s: f64 = g2[lo..=hi].iter().sum();
        if c < w {
            // mirror the tau<0 wing of the center window
            s += g2[1..=(w - c)].iter().sum::<f64>();
        }
        s
    };
    let raw_ratio = win(&raw.g2, 0) / win(&raw.g2, 512);
    println!("raw integrated ratio (w=128): {raw_ratio:.4}");
    for bw in [25.0, 12.5, 6.25] {
        let f = integrated_correlations(&surf, Some(bw));
        let center0 = f.g2[0];
        let (c_arg, c_max) = f.g2[0..150]
            .iter()
            .enumerate()
            .fold((0usize, 0.0f64), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let side = f
            .tau_ns
            .iter()
            .zip(&f.g2)
            .filter(|(t, _)| (**t - 512.0).abs() <= 60.0)
            .map(|(_, v)| *v)
            .fold(0.0f64, f64::max);
        println!(
            "bw {bw}: K(0)/side = {:.4}, center bump max {:.4} at tau={c_arg} ns, side={side:.4e}, integrated ratio {:.4}",
            center0 / side,
            c_max / side,
            win(&f.g2, 0) / win(&f.g2, 512)
        );
    }
}
