// not every integration test binary uses every builder
#![allow(dead_code)]

use ccres::potentials::{coupling_matrix, ChannelSet, PotentialFamily, PotentialModel};
use nalgebra::DMatrix;

pub fn single_gaussian(l: u32, strength: f64) -> PotentialModel {
    PotentialModel::new(
        ChannelSet::new(vec![l], 1.0).unwrap(),
        DMatrix::from_row_slice(1, 1, &[strength]),
        PotentialFamily::Gaussian,
        (0, 0),
    )
    .unwrap()
}

/// Coupled s/p Gaussian wells: λ11 = 7, λ22 = 20, λ12 = 0.5.
pub fn sp_model() -> PotentialModel {
    PotentialModel::new(
        ChannelSet::new(vec![0, 1], 1.0).unwrap(),
        coupling_matrix(7.0, 20.0, 0.5),
        PotentialFamily::Gaussian,
        (1, 1),
    )
    .unwrap()
}

/// Coupled p/d Gaussian wells: λ11 = 10, λ22 = 30, λ12 = 0.3.
pub fn pd_model() -> PotentialModel {
    PotentialModel::new(
        ChannelSet::new(vec![1, 2], 1.0).unwrap(),
        coupling_matrix(10.0, 30.0, 0.3),
        PotentialFamily::Gaussian,
        (1, 1),
    )
    .unwrap()
}

pub fn square_well(depth: f64, radius: f64) -> PotentialModel {
    PotentialModel::new(
        ChannelSet::new(vec![0], 1.0).unwrap(),
        DMatrix::from_row_slice(1, 1, &[depth]),
        PotentialFamily::SquareWell { radius },
        (0, 0),
    )
    .unwrap()
}
