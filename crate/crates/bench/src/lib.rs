//! Fixtures shared by the kernel benchmarks.

use affdim::domination::find_multicone;
use affdim::transfer::{s0_surrogate, CylinderFunction};
use affdim::{DominationCertificate, IfsSystem, Matrix2, Preset, ProjPoint, SliceQuery};

pub struct Fixture {
    pub sys: IfsSystem,
    pub cert: DominationCertificate,
    pub s0: f64,
}

/// The figure1 system with its certificate and level-4 dimension bound.
pub fn figure1() -> Fixture {
    let sys = Preset::Figure1.system();
    let cert = find_multicone(&sys, 4, 200).expect("figure1 is dominated");
    let s0 = s0_surrogate(&sys, 4).expect("bound exists").0;
    Fixture { sys, cert, s0 }
}

/// Deterministic spread of matrices for the SVD kernel.
pub fn matrices(count: usize) -> Vec<Matrix2> {
    (0..count)
        .map(|i| {
            let t = i as f64 * 0.618_033_988_749_895;
            Matrix2::new(
                t.sin(),
                (2.0 * t).cos(),
                0.3 * t.cos(),
                0.5 + 0.4 * (3.0 * t).sin(),
            )
        })
        .collect()
}

pub fn ones(depth: usize, n: usize) -> CylinderFunction {
    CylinderFunction::constant(depth, n, 1.0)
}

pub fn vertical_slice(t: f64, exponent: f64) -> SliceQuery {
    SliceQuery {
        direction: ProjPoint::from_angle(0.0),
        t,
        exponent,
        r_min: 1e-3,
    }
}
