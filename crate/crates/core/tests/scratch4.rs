use sps_core::device::{QubitParams, Rates};
use sps_core::lindblad::{apply_detection_filter, emission_observables, evolve, DensityMatrix3, TimeGrid};
use sps_core::pulse::Pulse;
use std::f64::consts::PI;

fn r2(y: &[f64], f: &[f64]) -> f64 {
    let sff: f64 = f.iter().map(|v| v * v).sum();
    let sfy: f64 = f.iter().zip(y).map(|(a, b)| a * b).sum();
    let a = sfy / sff;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let ss_res: f64 = y.iter().zip(f).map(|(v, fv)| (v - a * fv) * (v - a * fv)).sum();
    1.0 - ss_res / ss_tot
}

#[test]
fn probe_rabi_r2() {
    let q = QubitParams::new(16.8, 0.415, 0.0).unwrap();
    let r = Rates::from_mhz(7.02, 0.0, 0.0, 0.03).unwrap();
    let grid = TimeGrid::span(-6.0, 140.0, 0.5);
    let idx6 = grid.times().iter().position(|&t| t >= 6.0).unwrap();
    let n = 25;
    let mut amps = Vec::new();
    let mut pows = Vec::new();
    let mut th = Vec::new();
    for k in 0..n {
        let theta = 2.0 * PI * k as f64 / (n - 1) as f64;
        let p = Pulse::gaussian(2.0, 1.0).with_rabi_angle(theta).unwrap();
        let traj = evolve(&q, &r, &p, &DensityMatrix3::ground(), &grid).unwrap();
        let rec = emission_observables(&traj, &r);
        amps.push(rec.amp[idx6]);
        pows.push(rec.power[idx6]);
        th.push(theta);
    }
    // global phase: make the pi/2 point purely real
    let idx_half = n / 4;
    let rot = num_complex::Complex64::new(0.0, -amps[idx_half].arg()).exp();
    let abs_amp: Vec<f64> = amps.iter().map(|a| a.norm()).collect();
    let re_amp: Vec<f64> = amps.iter().map(|a| (a * rot).re).collect();
    let f_abs: Vec<f64> = th.iter().map(|t| t.sin().abs()).collect();
    let f_sin: Vec<f64> = th.iter().map(|t| t.sin()).collect();
    let f_pow: Vec<f64> = th.iter().map(|t| (t / 2.0).sin().powi(2)).collect();
    println!("R2 |amp| vs |sin|     = {:.4}", r2(&abs_amp, &f_abs));
    println!("R2 Re amp vs sin      = {:.4}", r2(&re_amp, &f_sin));
    println!("R2 power vs sin^2     = {:.4}", r2(&pows, &f_pow));
}

#[test]
fn probe_rabi_readout() {
    let q = QubitParams::new(16.8, 0.415, 0.0).unwrap();
    let r = Rates::from_mhz(7.02, 0.0, 0.0, 0.03).unwrap();
    let grid = TimeGrid::span(-6.0, 140.0, 0.5);
    // filtered readout like the measured curves: 25 MHz detection bandwidth
    let filtered = |theta: f64| {
        let p = Pulse::gaussian(2.0, 1.0).with_rabi_angle(theta).unwrap();
        let traj = evolve(&q, &r, &p, &DensityMatrix3::ground(), &grid).unwrap();
        apply_detection_filter(&emission_observables(&traj, &r), 25.0)
    };
    let ref_amp = filtered(PI / 2.0);
    let t_amp = ref_amp
        .amp
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
        .unwrap()
        .0;
    let ref_pow = filtered(PI);
    let t_pow = ref_pow
        .power
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    println!("t_amp = {} ns, t_pow = {} ns", grid.times()[t_amp], grid.times()[t_pow]);
    for k in 0..13 {
        let theta = 2.0 * PI * k as f64 / 12.0;
        let rec = filtered(theta);
        println!(
            "theta {:5.2}: amp {:.4} (phase {:6.2}) |sin|={:.3}; pow {:.5} sin2={:.3}",
            theta,
            rec.amp[t_amp].norm(),
            rec.amp[t_amp].arg(),
            theta.sin().abs(),
            rec.power[t_pow],
            (theta / 2.0).sin().powi(2)
        );
    }
}
