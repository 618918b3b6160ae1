//! Input fields sampled at cell midpoints and the nodal constants derived
//! from them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Region, Vec2};
use crate::kernels::Kernel;
use crate::lattice::Lattice;
use crate::weights::WeightTable;

/// Spatial dimension.
pub const DIM: usize = 2;
/// `d²`, appearing in the dilatation coefficient.
pub const DIM_SQ: f64 = (DIM * DIM) as f64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Override<T> {
    pub region: Region,
    pub value: T,
}

/// A field total on the plane: `background` everywhere except inside the
/// override regions, where the last matching override wins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Field<T> {
    pub background: T,
    #[serde(default)]
    pub overrides: Vec<Override<T>>,
}

pub type ScalarField = Field<f64>;
pub type VectorField = Field<Vec2>;

impl<T: Copy> Field<T> {
    pub fn constant(value: T) -> Self {
        Field {
            background: value,
            overrides: Vec::new(),
        }
    }

    pub fn with_override(mut self, region: Region, value: T) -> Self {
        self.overrides.push(Override { region, value });
        self
    }

    pub fn sample(&self, x: Vec2) -> T {
        self.overrides
            .iter()
            .rev()
            .find(|o| o.region.contains(x))
            .map_or(self.background, |o| o.value)
    }

    pub fn sample_lattice(&self, lattice: &Lattice) -> Vec<T> {
        lattice
            .midpoints()
            .iter()
            .map(|&x| self.sample(x))
            .collect()
    }

    /// Every value the field can take.
    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        std::iter::once(self.background).chain(self.overrides.iter().map(|o| o.value))
    }
}

/// Per-node constants of the one-point model.
#[derive(Clone, Debug)]
pub struct NodalMaterial {
    pub m_num: Vec<f64>,
    pub alpha_num: Vec<f64>,
    pub tau_num: Vec<f64>,
    pub k: Vec<f64>,
    pub l: Vec<f64>,
}

impl NodalMaterial {
    pub fn compute(
        lattice: &Lattice,
        kernel: &Kernel,
        weights: &WeightTable,
        k: &ScalarField,
        l: &ScalarField,
    ) -> Result<Self> {
        if !weights.matches(lattice) {
            return Err(Error::DimensionMismatch {
                expected: lattice.len(),
                actual: 0,
            });
        }
        let vol = lattice.cell_volume();
        let m_num = (0..lattice.len())
            .into_par_iter()
            .map(|i| {
                let mut m = 0.0;
                let mut err = None;
                weights.for_each_in_row(i, |j, _, w| {
                    let bond = lattice.bond(i, j);
                    match kernel.rho(bond) {
                        Ok(rho) => m += w * vol * rho * bond.norm_sq(),
                        Err(e) => err = Some(e),
                    }
                });
                match err {
                    Some(e) => Err(e),
                    None if m > 0.0 => Ok(m),
                    None => Err(Error::DegenerateStencil { node: i, m_num: m }),
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        let k = k.sample_lattice(lattice);
        let l = l.sample_lattice(lattice);
        let alpha_num = l.iter().zip(&m_num).map(|(l, m)| l / m).collect();
        let tau_num = k
            .iter()
            .zip(&l)
            .zip(&m_num)
            .map(|((k, l), m)| (k * DIM_SQ - l) / (m * m))
            .collect();
        Ok(NodalMaterial {
            m_num,
            alpha_num,
            tau_num,
            k,
            l,
        })
    }

    pub fn len(&self) -> usize {
        self.m_num.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m_num.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelVariant;
    use crate::lattice::BoxDomain;
    use crate::weights::{build_weights, WeightScheme};

    #[test]
    fn last_override_wins() {
        let f = ScalarField::constant(1.0)
            .with_override(Region::disc(Vec2::ZERO, 1.0).unwrap(), 2.0)
            .with_override(Region::disc(Vec2::ZERO, 0.5).unwrap(), 3.0);
        assert_eq!(f.sample(Vec2::new(0.1, 0.0)), 3.0);
        assert_eq!(f.sample(Vec2::new(0.7, 0.0)), 2.0);
        assert_eq!(f.sample(Vec2::new(5.0, 0.0)), 1.0);
    }

    #[test]
    fn center_node_hand_sum() {
        // 3x3 lattice, rho = 1, FA with horizon covering all 8 neighbours
        let kappa = 0.1;
        let d = BoxDomain::new(Vec2::ZERO, Vec2::new(0.3, 0.3)).unwrap();
        let l = Lattice::new(d, kappa).unwrap();
        let k = Kernel::new(0.2, KernelVariant::Constant { value: 1.0 }).unwrap();
        let w = build_weights(&l, &k, WeightScheme::Fa).unwrap();
        let mat = NodalMaterial::compute(
            &l,
            &k,
            &w,
            &ScalarField::constant(1.0),
            &ScalarField::constant(1.0),
        )
        .unwrap();
        // 4 axis neighbours at distance kappa, 4 diagonal at sqrt(2) kappa
        let expect = kappa * kappa * (4.0 * kappa * kappa + 4.0 * 2.0 * kappa * kappa);
        assert!((mat.m_num[4] - expect).abs() <= 1e-15 * expect);
    }

    #[test]
    fn bond_based_material_has_zero_tau() {
        let d = BoxDomain::new(Vec2::ZERO, Vec2::new(0.5, 0.25)).unwrap();
        let l = Lattice::new(d, 1.0 / 40.0).unwrap();
        let k = Kernel::inverse_distance(0.05).unwrap();
        let w = build_weights(&l, &k, WeightScheme::Paac).unwrap();
        let kf = ScalarField::constant(100.0)
            .with_override(Region::disc(Vec2::new(0.2, 0.1), 0.05).unwrap(), 3.0);
        let lf = ScalarField::constant(400.0)
            .with_override(Region::disc(Vec2::new(0.2, 0.1), 0.05).unwrap(), 12.0);
        let mat = NodalMaterial::compute(&l, &k, &w, &kf, &lf).unwrap();
        assert!(mat.tau_num.iter().all(|&t| t == 0.0));
        assert!(mat.alpha_num.iter().all(|&a| a > 0.0));
    }

    #[test]
    fn degenerate_custom_stencil() {
        let d = BoxDomain::new(Vec2::ZERO, Vec2::new(0.1, 0.1)).unwrap();
        let l = Lattice::new(d, 0.05).unwrap();
        let k = Kernel::inverse_distance(0.1).unwrap();
        let w = WeightTable::custom(&l, 0.1, []).unwrap();
        let err = NodalMaterial::compute(
            &l,
            &k,
            &w,
            &ScalarField::constant(1.0),
            &ScalarField::constant(1.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateStencil { node: 0, .. }));
    }
}
