use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{check_dim, Error, JointVector, Result};

/// Forward dynamics refuses to invert `M` when `λ_min / λ_max` drops below this.
pub const SINGULARITY_RCOND: f64 = 1e-12;

const BOUND_SAMPLES: usize = 1000;
const BOUND_SEED: u64 = 0x5eed_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointType {
    Revolute,
    Prismatic,
}

/// Physical parameters of one planar link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// kg
    pub mass: f64,
    /// m, joint axis to next joint axis
    pub length: f64,
    /// m, joint axis to the link's center of mass
    pub com_distance: f64,
    /// kg·m², about the center of mass, normal to the motion plane
    pub inertia_zz: f64,
}

impl LinkParams {
    pub fn new(mass: f64, length: f64, com_distance: f64, inertia_zz: f64) -> Result<Self> {
        let link = Self {
            mass,
            length,
            com_distance,
            inertia_zz,
        };
        link.validate()?;
        Ok(link)
    }

    /// Uniform slender rod of the given mass and length.
    pub fn slender_rod(mass: f64, length: f64) -> Result<Self> {
        Self::new(mass, length, 0.5 * length, mass * length * length / 12.0)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.mass, self.length, self.com_distance, self.inertia_zz]
            .iter()
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::InvalidInput("link parameters must be finite".into()));
        }
        if self.mass <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "link mass {} must be > 0",
                self.mass
            )));
        }
        if self.length <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "link length {} must be > 0",
                self.length
            )));
        }
        if !(0.0..=self.length).contains(&self.com_distance) {
            return Err(Error::InvalidInput(format!(
                "center-of-mass distance {} must lie in [0, {}]",
                self.com_distance, self.length
            )));
        }
        if self.inertia_zz < 0.0 {
            return Err(Error::InvalidInput(format!(
                "link inertia {} must be >= 0",
                self.inertia_zz
            )));
        }
        Ok(())
    }
}

/// Planar serial chain of revolute joints moving in a vertical plane.
///
/// Joint angles are relative; link `i` points along the absolute angle
/// `q_0 + ... + q_i` measured from the horizontal, with gravity acting along
/// the negative vertical axis.
///
/// Models are immutable after construction. The inertia bounds
/// `α₁ I ≤ M(q) ≤ α₂ I` are certified empirically when the model is built.
#[derive(Debug, Clone, PartialEq)]
pub struct ManipulatorModel {
    links: Vec<LinkParams>,
    joint_types: Vec<JointType>,
    gravity: f64,
    inertia_bounds: (f64, f64),
}

impl ManipulatorModel {
    /// All-revolute chain with validated link parameters.
    pub fn new(links: Vec<LinkParams>, gravity: f64) -> Result<Self> {
        let n = links.len();
        Self::with_joint_types(links, vec![JointType::Revolute; n], gravity)
    }

    pub fn with_joint_types(
        links: Vec<LinkParams>,
        joint_types: Vec<JointType>,
        gravity: f64,
    ) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::InvalidInput(
                "a model needs at least one link".into(),
            ));
        }
        if joint_types.len() != links.len() {
            return Err(Error::InvalidInput(format!(
                "{} joint types given for {} links",
                joint_types.len(),
                links.len()
            )));
        }
        if joint_types.contains(&JointType::Prismatic) {
            return Err(Error::Unsupported(
                "planar dynamics are implemented for revolute joints only".into(),
            ));
        }
        if !gravity.is_finite() {
            return Err(Error::InvalidInput("gravity must be finite".into()));
        }
        for link in &links {
            link.validate()?;
        }
        let model = Self::assemble(links, joint_types, gravity);
        if model.inertia_bounds.0 <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "inertia matrix is not positive definite (sampled λ_min = {:e})",
                model.inertia_bounds.0
            )));
        }
        Ok(model)
    }

    /// Builds a revolute chain without validating link parameters.
    ///
    /// Intended for fault-injection fixtures (for example a negated link
    /// inertia); every other constructor rejects such models.
    pub fn new_unvalidated(links: Vec<LinkParams>, gravity: f64) -> Self {
        let n = links.len();
        Self::assemble(links, vec![JointType::Revolute; n], gravity)
    }

    fn assemble(links: Vec<LinkParams>, joint_types: Vec<JointType>, gravity: f64) -> Self {
        let mut model = Self {
            links,
            joint_types,
            gravity,
            inertia_bounds: (f64::NAN, f64::NAN),
        };
        model.inertia_bounds = model.certify_inertia_bounds(BOUND_SAMPLES, BOUND_SEED);
        model
    }

    /// Two-link planar arm.
    pub fn two_link(first: LinkParams, second: LinkParams, gravity: f64) -> Result<Self> {
        Self::new(vec![first, second], gravity)
    }

    /// The stock simulation arm: two 1 kg, 1 m slender rods, g₀ = 9.81 m/s².
    pub fn stock_two_link() -> Self {
        let rod = LinkParams::slender_rod(1.0, 1.0).expect("stock link is valid");
        Self::two_link(rod, rod, 9.81).expect("stock model is valid")
    }

    pub fn dof(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[LinkParams] {
        &self.links
    }

    pub fn joint_types(&self) -> &[JointType] {
        &self.joint_types
    }

    /// Gravitational acceleration g₀ in m/s².
    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    /// Empirical `(α₁, α₂)` with `α₁ ≤ λ_min(M(q))`, `λ_max(M(q)) ≤ α₂`.
    pub fn inertia_bounds(&self) -> (f64, f64) {
        self.inertia_bounds
    }

    /// Same model with a different gravity constant.
    pub fn with_gravity(&self, gravity: f64) -> Self {
        Self::assemble(self.links.clone(), self.joint_types.clone(), gravity)
    }

    /// Extreme eigenvalues of `M(q)` over `samples` seeded uniform draws of
    /// `q ∈ [-π, π]ⁿ`.
    pub fn certify_inertia_bounds(&self, samples: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.dof();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..samples {
            let q = JointVector::from_fn(n, |_, _| {
                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)
            });
            let eig = self.mass_matrix_unchecked(&q).symmetric_eigenvalues();
            lo = lo.min(eig.min());
            hi = hi.max(eig.max());
        }
        (lo, hi)
    }

    fn check_state(&self, what: &'static str, v: &JointVector) -> Result<()> {
        check_dim(what, v, self.dof())
    }

    /// Lever arm of joint `j`'s segment as seen by body `i` (`j ≤ i`).
    fn lever(&self, body: usize, segment: usize) -> f64 {
        if segment < body {
            self.links[segment].length
        } else {
            self.links[body].com_distance
        }
    }

    fn absolute_angles(q: &JointVector) -> Vec<f64> {
        q.iter()
            .scan(0.0, |acc, qi| {
                *acc += qi;
                Some(*acc)
            })
            .collect()
    }

    fn mass_matrix_unchecked(&self, q: &JointVector) -> DMatrix<f64> {
        let n = self.dof();
        let phi = Self::absolute_angles(q);
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            for l in k..n {
                let mut acc = 0.0;
                for i in l..n {
                    let link = &self.links[i];
                    let mut trans = 0.0;
                    for a in k..=i {
                        for b in l..=i {
                            trans += self.lever(i, a) * self.lever(i, b) * (phi[a] - phi[b]).cos();
                        }
                    }
                    acc += link.mass * trans + link.inertia_zz;
                }
                m[(k, l)] = acc;
                m[(l, k)] = acc;
            }
        }
        m
    }

    /// Inertia matrix `M(q)`: symmetric, positive definite.
    pub fn mass_matrix(&self, q: &JointVector) -> Result<DMatrix<f64>> {
        self.check_state("q", q)?;
        Ok(self.mass_matrix_unchecked(q))
    }

    /// Partial derivatives `∂M/∂q_m` for every joint `m`.
    pub fn mass_matrix_partials(&self, q: &JointVector) -> Result<Vec<DMatrix<f64>>> {
        self.check_state("q", q)?;
        let n = self.dof();
        let phi = Self::absolute_angles(q);
        // ∂φ_a/∂q_m = 1 when m ≤ a
        let step = |m: usize, a: usize| if m <= a { 1.0 } else { 0.0 };
        let mut out = Vec::with_capacity(n);
        for m in 0..n {
            let mut dm = DMatrix::zeros(n, n);
            for k in 0..n {
                for l in k..n {
                    let mut acc = 0.0;
                    for i in l..n {
                        let mut trans = 0.0;
                        for a in k..=i {
                            for b in l..=i {
                                let w = step(m, a) - step(m, b);
                                if w != 0.0 {
                                    trans -= self.lever(i, a)
                                        * self.lever(i, b)
                                        * (phi[a] - phi[b]).sin()
                                        * w;
                                }
                            }
                        }
                        acc += self.links[i].mass * trans;
                    }
                    dm[(k, l)] = acc;
                    dm[(l, k)] = acc;
                }
            }
            out.push(dm);
        }
        Ok(out)
    }

    /// Coriolis/centrifugal matrix from the Christoffel symbols of `M`:
    /// `C_kj = Σ_m ½ (∂M_kj/∂q_m + ∂M_km/∂q_j − ∂M_jm/∂q_k) q̇_m`.
    pub fn coriolis_matrix(&self, q: &JointVector, qdot: &JointVector) -> Result<DMatrix<f64>> {
        self.check_state("qdot", qdot)?;
        let dm = self.mass_matrix_partials(q)?;
        let n = self.dof();
        Ok(DMatrix::from_fn(n, n, |k, j| {
            (0..n)
                .map(|m| 0.5 * (dm[m][(k, j)] + dm[j][(k, m)] - dm[k][(j, m)]) * qdot[m])
                .sum()
        }))
    }

    /// Gravity torque `g(q) = ∂P/∂q`.
    pub fn gravity_vector(&self, q: &JointVector) -> Result<JointVector> {
        self.check_state("q", q)?;
        let n = self.dof();
        let phi = Self::absolute_angles(q);
        Ok(JointVector::from_fn(n, |k, _| {
            (k..n)
                .map(|i| {
                    let reach: f64 = (k..=i).map(|a| self.lever(i, a) * phi[a].cos()).sum();
                    self.links[i].mass * reach
                })
                .sum::<f64>()
                * self.gravity
        }))
    }

    /// `T = ½ q̇ᵀ M(q) q̇`.
    pub fn kinetic_energy(&self, q: &JointVector, qdot: &JointVector) -> Result<f64> {
        self.check_state("qdot", qdot)?;
        let m = self.mass_matrix(q)?;
        Ok(0.5 * qdot.dot(&(m * qdot)))
    }

    /// Potential energy with the base at zero height.
    pub fn potential_energy(&self, q: &JointVector) -> Result<f64> {
        self.check_state("q", q)?;
        let phi = Self::absolute_angles(q);
        Ok((0..self.dof())
            .map(|i| {
                let height: f64 = (0..=i).map(|a| self.lever(i, a) * phi[a].sin()).sum();
                self.links[i].mass * self.gravity * height
            })
            .sum())
    }

    /// `τ = M(q) q̈ + C(q, q̇) q̇ + g(q)`.
    pub fn inverse_dynamics(
        &self,
        q: &JointVector,
        qdot: &JointVector,
        qddot: &JointVector,
    ) -> Result<JointVector> {
        self.check_state("qddot", qddot)?;
        let m = self.mass_matrix(q)?;
        let c = self.coriolis_matrix(q, qdot)?;
        let g = self.gravity_vector(q)?;
        Ok(m * qddot + c * qdot + g)
    }

    /// Solves `M(q) q̈ = u + d − C(q, q̇) q̇ − g(q)` for `q̈`.
    pub fn forward_dynamics(
        &self,
        q: &JointVector,
        qdot: &JointVector,
        u: &JointVector,
        d: &JointVector,
    ) -> Result<JointVector> {
        self.check_state("u", u)?;
        self.check_state("d", d)?;
        let m = self.mass_matrix(q)?;
        let c = self.coriolis_matrix(q, qdot)?;
        let g = self.gravity_vector(q)?;
        let rhs = u + d - c * qdot - g;
        self.solve_inertia(m, &rhs)
    }

    /// `M(q)⁻¹ v`, with the same singularity guard as forward dynamics.
    pub fn solve_mass_matrix(&self, q: &JointVector, v: &JointVector) -> Result<JointVector> {
        self.check_state("v", v)?;
        let m = self.mass_matrix(q)?;
        self.solve_inertia(m, v)
    }

    fn solve_inertia(&self, m: DMatrix<f64>, rhs: &JointVector) -> Result<JointVector> {
        let eig = m.clone().symmetric_eigenvalues();
        let (lo, hi) = (eig.min(), eig.max());
        let rcond = if hi > 0.0 { lo / hi } else { f64::NEG_INFINITY };
        if rcond.is_nan() || rcond < SINGULARITY_RCOND {
            return Err(Error::Singular { rcond });
        }
        let chol = m.cholesky().ok_or(Error::Singular { rcond })?;
        Ok(chol.solve(rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn jv(v: &[f64]) -> JointVector {
        JointVector::from_column_slice(v)
    }

    // Closed-form two-link expressions from the standard textbook derivation.
    fn textbook_mass(model: &ManipulatorModel, q2: f64) -> DMatrix<f64> {
        let (a, b) = (model.links()[0], model.links()[1]);
        let t1 = a.mass * a.com_distance.powi(2) + b.mass * a.length.powi(2) + a.inertia_zz;
        let t2 = b.mass * b.com_distance.powi(2) + b.inertia_zz;
        let t3 = b.mass * a.length * b.com_distance;
        let c = q2.cos();
        DMatrix::from_row_slice(
            2,
            2,
            &[t1 + t2 + 2.0 * t3 * c, t2 + t3 * c, t2 + t3 * c, t2],
        )
    }

    #[test]
    fn two_link_matches_textbook_form() {
        let model = ManipulatorModel::stock_two_link();
        for &q2 in &[0.0, 0.3, -1.2, PI / 2.0, 3.0] {
            let m = model.mass_matrix(&jv(&[0.7, q2])).unwrap();
            assert_relative_eq!(m, textbook_mass(&model, q2), epsilon = 1e-14);
        }
    }

    #[test]
    fn massless_second_link_leaves_single_link_inertia() {
        let first = LinkParams::slender_rod(1.0, 1.0).unwrap();
        let ghost = LinkParams {
            mass: 0.0,
            length: 1.0,
            com_distance: 0.5,
            inertia_zz: 0.0,
        };
        let model = ManipulatorModel::new_unvalidated(vec![first, ghost], 9.81);
        let m = model.mass_matrix(&jv(&[0.4, 1.1])).unwrap();
        assert_relative_eq!(m[(0, 0)], 0.25 + 1.0 / 12.0, epsilon = 1e-15);
        assert_eq!(m[(0, 1)], 0.0);
        assert_eq!(m[(1, 1)], 0.0);
    }

    #[test]
    fn revolute_periodicity() {
        let model = ManipulatorModel::stock_two_link();
        let q = jv(&[0.3, -0.8]);
        let shifted = jv(&[0.3, -0.8 + 2.0 * PI]);
        assert_relative_eq!(
            model.mass_matrix(&q).unwrap(),
            model.mass_matrix(&shifted).unwrap(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn zero_velocity_has_no_coriolis_force() {
        let model = ManipulatorModel::stock_two_link();
        let c = model
            .coriolis_matrix(&jv(&[0.2, 1.0]), &jv(&[0.0, 0.0]))
            .unwrap();
        assert_eq!(c * jv(&[0.0, 0.0]), jv(&[0.0, 0.0]));
    }

    #[test]
    fn gravity_vanishes_without_field_and_when_vertical() {
        let model = ManipulatorModel::stock_two_link();
        let free = model.with_gravity(0.0);
        assert_eq!(
            free.gravity_vector(&jv(&[0.3, 0.4])).unwrap(),
            jv(&[0.0, 0.0])
        );
        let g = model.gravity_vector(&jv(&[PI / 2.0, 0.0])).unwrap();
        assert!(g.amax() < 1e-14, "{g}");
    }

    #[test]
    fn statics() {
        let model = ManipulatorModel::stock_two_link();
        let q = jv(&[0.5, -0.25]);
        let zero = jv(&[0.0, 0.0]);
        assert_eq!(
            model.inverse_dynamics(&q, &zero, &zero).unwrap(),
            model.gravity_vector(&q).unwrap()
        );
        let g = model.gravity_vector(&q).unwrap();
        let acc = model.forward_dynamics(&q, &zero, &g, &zero).unwrap();
        assert!(acc.amax() < 1e-12);
    }

    #[test]
    fn disturbance_at_rest_is_inertia_solve() {
        let model = ManipulatorModel::stock_two_link();
        let q = jv(&[0.1, 0.9]);
        let zero = jv(&[0.0, 0.0]);
        let d = jv(&[1.0, 0.5]);
        let g = model.gravity_vector(&q).unwrap();
        let acc = model.forward_dynamics(&q, &zero, &g, &d).unwrap();
        let direct = model.mass_matrix(&q).unwrap().lu().solve(&d).unwrap();
        assert_relative_eq!(acc, direct, epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let model = ManipulatorModel::stock_two_link();
        let err = model.mass_matrix(&jv(&[0.0])).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                what: "q",
                expected: 2,
                got: 1
            }
        );
        assert!(matches!(
            model.gravity_vector(&jv(&[f64::NAN, 0.0])),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn broken_model_is_singular() {
        let mut link = LinkParams::slender_rod(1.0, 1.0).unwrap();
        link.inertia_zz = -1.0;
        let model = ManipulatorModel::new_unvalidated(vec![link, link], 9.81);
        let zero = jv(&[0.0, 0.0]);
        let err = model
            .forward_dynamics(&zero, &zero, &zero, &zero)
            .unwrap_err();
        assert!(matches!(err, Error::Singular { .. }), "{err}");
    }

    #[test]
    fn construction_validates() {
        let rod = LinkParams::slender_rod(1.0, 1.0).unwrap();
        assert!(LinkParams::new(0.0, 1.0, 0.5, 0.1).is_err());
        assert!(LinkParams::new(1.0, 1.0, 1.5, 0.1).is_err());
        assert!(LinkParams::new(1.0, -1.0, 0.0, 0.1).is_err());
        assert!(ManipulatorModel::new(vec![], 9.81).is_err());
        assert!(matches!(
            ManipulatorModel::with_joint_types(
                vec![rod, rod],
                vec![JointType::Revolute, JointType::Prismatic],
                9.81
            ),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn stock_inertia_bounds() {
        let (lo, hi) = ManipulatorModel::stock_two_link().inertia_bounds();
        assert!(lo > 0.0 && hi > lo);
        // λ of M at q2 = 0 and q2 = π bracket the sampled extremes.
        let m0 = ManipulatorModel::stock_two_link()
            .mass_matrix(&jv(&[0.0, 0.0]))
            .unwrap();
        assert!(m0.symmetric_eigenvalues().max() >= hi - 1e-3);
    }
}
