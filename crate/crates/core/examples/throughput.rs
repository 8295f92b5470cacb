//! Measures forward+backward throughput for a few network widths.
//!
//! `cargo run --release -p surgecorr-core --example throughput`

use std::time::Instant;

use surgecorr_core::nn::{ForwardCache, NetworkConfig, NetworkParams};

fn main() {
    let batch = 32;
    let widths = [(32, 128, 256, 128), (16, 32, 64, 32), (8, 16, 32, 16), (8, 16, 16, 8)];
    for (f, u1, u2, d) in widths {
        let cfg = NetworkConfig::standard(15, 1).with_widths(f, u1, u2, d);
        let net = NetworkParams::<f64>::build(cfg, 0).unwrap();
        let mut grads = NetworkParams::zeros(cfg).unwrap();
        let mut cache = ForwardCache::new();
        let x: Vec<f64> = (0..batch * cfg.w_in).map(|i| (i as f64 * 0.1).sin()).collect();
        let y = vec![0.5; batch * cfg.w_out];
        let steps = 20;
        let start = Instant::now();
        for _ in 0..steps {
            net.forward_batch(&x, batch, &mut cache).unwrap();
            net.backward(&mut cache, &y, &mut grads).unwrap();
        }
        let per_sample = start.elapsed().as_secs_f64() / (steps * batch) as f64;
        println!(
            "widths {f}/{u1}/{u2}/{d}: {} params, {:.1} us/sample",
            cfg.param_count(),
            per_sample * 1e6
        );
    }
}
