//! Fixtures shared by the benchmarks.

use tau_core::grassmann::{self, FlowGroupElement, FlowTimes, GrassmannPoint};
use tau_core::linalg::identity;
use tau_core::{BlockLoop, CMat, CircleGrid, Complex64};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn grid() -> CircleGrid {
    CircleGrid::new(256).expect("valid grid size")
}

/// `Id + C/z` with `C = [[0, 0.2], [0.1, 0]]`.
pub fn two_by_two_point() -> GrassmannPoint {
    let cm = CMat::from_row_slice(2, 2, &[c(0.0), c(0.2), c(0.1), c(0.0)]);
    let gamma = BlockLoop::new(2, -1, vec![cm, identity(2)]).expect("consistent blocks");
    GrassmannPoint::new(gamma, "2x2").expect("normalized point")
}

/// The 2x2 point flowed to `t = (0.4, 0, -0.2)` under the principal flows.
pub fn two_by_two_flow() -> FlowGroupElement {
    let times: FlowTimes = [(1, c(0.4)), (3, c(-0.2))].into_iter().collect();
    FlowGroupElement::principal_a(2, 3, grid())
        .and_then(|f| f.with_times(times))
        .expect("commuting generators")
}

/// Jump matrix `g^-1 gamma` of the 2x2 example.
pub fn two_by_two_jump() -> BlockLoop {
    grassmann::jump(&two_by_two_point(), &two_by_two_flow()).expect("invertible on the grid")
}
