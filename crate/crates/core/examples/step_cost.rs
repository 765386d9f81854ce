//! Wall time per LLG step on a 64x64 film, with and without thermal noise.

use std::time::Instant;

use skyrc::rng::StreamKey;
use skyrc::texture::{seed_texture, LlgIntegrator, MaterialParams, Texture};

fn main() {
    for temperature in [0.0, 0.05] {
        let p = MaterialParams::<f64> { temperature, ..Default::default() };
        let mut lat = seed_texture::<f64>(&Texture::Labyrinth { seed: 1 }, 64, 64).unwrap();
        let mut integ = LlgIntegrator::new(lat.len());
        let mut rng = StreamKey::new(1, 0, 0).rng();
        let n = 5000;
        let t0 = Instant::now();
        for _ in 0..n {
            integ.step(&mut lat, &p, 10.0, &mut rng).unwrap();
        }
        let per = t0.elapsed().as_secs_f64() / n as f64;
        println!("T={temperature}: {:.1} us/step, mean mz {:.3}", per * 1e6, lat.mean_mz());
    }
}
