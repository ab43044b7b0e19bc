//! Fixtures shared by the benches.

use het_core::eval::synth::Renderer;
use het_core::eval::SynthSpec;
use het_core::{BoxI, Frame};

/// The first `frames` frames of the default synthetic scene and the initial box.
pub fn scene(frames: usize) -> (Vec<Frame>, BoxI) {
    let spec = SynthSpec {
        frames,
        ..SynthSpec::default()
    };
    let r = Renderer::new(&spec, 0).expect("default scene renders");
    let frames = (0..frames).map(|k| r.render(k, false)).collect();
    let (x, y) = spec.start;
    (frames, BoxI::new(x.round() as i32, y.round() as i32, spec.target_w as u32, spec.target_h as u32))
}
