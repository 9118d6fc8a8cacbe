#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

pub mod criteria;

use std::collections::BTreeMap;

use qswitch_core::numerics::{Matrix, SymmetricPositiveDefinite, Vector};
use qswitch_core::plant::{DwellBound, ModeDynamics, ModeId, Switch, SwitchedPlant, SwitchingSignal};
use qswitch_core::{DesignInputs, QuantizerConfig};

pub fn m(rows: usize, cols: usize, data: &[f64]) -> Matrix {
    Matrix::from_row_slice(rows, cols, data)
}

pub fn v(data: &[f64]) -> Vector {
    Vector::from_column_slice(data)
}

pub const P1: ModeId = ModeId(1);
pub const P2: ModeId = ModeId(2);

pub fn mode1() -> ModeDynamics {
    ModeDynamics::new(
        P1,
        m(2, 2, &[1.0, -0.3, 0.4, -4.0]),
        m(2, 1, &[1.0, 0.0]),
        m(1, 2, &[1.0, 1.0]),
        m(1, 2, &[-3.0, -2.0]),
        m(2, 1, &[-4.0, 0.0]),
    )
    .unwrap()
}

/// Mode 2 with the gain signs that make both loops Hurwitz.
pub fn mode2() -> ModeDynamics {
    ModeDynamics::new(
        P2,
        m(2, 2, &[-0.1, 1.0, -1.0, 0.1]),
        m(2, 1, &[0.0, 1.0]),
        m(1, 2, &[0.0, -1.0]),
        m(1, 2, &[0.0, -1.0]),
        m(2, 1, &[0.0, 1.0]),
    )
    .unwrap()
}

pub fn example_plant() -> SwitchedPlant {
    let id = Matrix::identity(2, 2);
    SwitchedPlant::new(
        vec![(P1, mode1()), (P2, mode2())],
        vec![((P2, P1), id.clone()), ((P1, P2), id)],
    )
    .unwrap()
}

pub fn example_inputs(range: f64, n0: f64, tau_a: f64) -> DesignInputs {
    let mut weights = BTreeMap::new();
    weights.insert(P1, SymmetricPositiveDefinite::from_diagonal(&[6.0, 6.0, 2.0, 6.0]).unwrap());
    weights.insert(P2, SymmetricPositiveDefinite::identity(4));
    DesignInputs {
        weights,
        kappa: 4.5,
        quantizer: QuantizerConfig::new(range, 0.05, None, 1).unwrap(),
        capture_window: 0.5,
        zoom_out_period: 1.0,
        zoom_out_margin: 0.1,
        dwell: DwellBound::new(n0, tau_a).unwrap(),
    }
}

/// The published parameter set: `M = 10`.
pub fn published_inputs() -> DesignInputs {
    example_inputs(10.0, 1.0, 3.5)
}

pub fn example_signal() -> SwitchingSignal {
    SwitchingSignal::new(
        P1,
        vec![
            Switch { time: 3.5, mode: P2 },
            Switch { time: 7.0, mode: P1 },
            Switch { time: 20.0, mode: P2 },
        ],
    )
    .unwrap()
}

pub fn example_x0() -> Vector {
    v(&[5.0, -10.0])
}
