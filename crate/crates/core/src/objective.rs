//! Cost functionals for both compilation steps.
//!
//! * unity cost: `Σ_{j=1}^{N−1} |λ_j|` over the characteristic-polynomial
//!   coefficients of the unit matrix. Zero exactly when the spectrum is the
//!   N-th roots of a unit-modulus constant.
//! * target distance: `1 − |tr(A B†)|² / N²`, blind to global phase.

use serde::{Deserialize, Serialize};

use crate::circuit::{
    apply_cnot_left, apply_cnot_right, apply_single_left, apply_single_right, compile_slots,
    rotation_derivatives, rotation_entries, synthesize, CircuitTopology, CompiledSlot,
    ParameterVector, Scope,
};
use crate::error::{Error, Result};
use crate::linalg::{char_poly_coeffs, SquareMatrix, C64};

/// Default central-difference step, in radians.
pub const DEFAULT_GRADIENT_STEP: f64 = 1e-5;

pub fn unity_cost(u: &SquareMatrix) -> Result<f64> {
    let coeffs = char_poly_coeffs(u)?;
    Ok(coeffs.lambdas.iter().map(|l| l.norm()).sum())
}

/// `Σ |λ_j|²`, a smooth alternative to [`unity_cost`].
pub fn unity_cost_squared(u: &SquareMatrix) -> Result<f64> {
    let coeffs = char_poly_coeffs(u)?;
    Ok(coeffs.lambdas.iter().map(|l| l.norm_sqr()).sum())
}

/// `tr(a · b†)` without forming the product.
pub fn overlap(a: &SquareMatrix, b: &SquareMatrix) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x * y.conj())
        .sum())
}

pub fn distance(a: &SquareMatrix, b: &SquareMatrix) -> Result<f64> {
    let t = overlap(a, b)?;
    let d = a.dim() as f64;
    Ok((1.0 - t.norm_sqr() / (d * d)).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    UnityCost,
    TargetDistance,
}

/// How [`ObjectiveSpec::gradient`] differentiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    /// Central differences everywhere.
    CentralDifference,
    /// Exact derivatives for the target distance, central differences
    /// for the unity cost.
    #[default]
    Auto,
}

/// A cost function of the rotation angles of a topology.
#[derive(Debug, Clone)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub topology: CircuitTopology,
    pub scope: Scope,
    pub target: Option<SquareMatrix>,
    /// Use `Σ|λ_j|²` instead of `Σ|λ_j|` for the unity cost.
    pub squared_modulus: bool,
    pub gradient_method: GradientMethod,
}

impl ObjectiveSpec {
    /// Unity cost of a single unit.
    pub fn unity(topology: &CircuitTopology) -> Self {
        Self {
            kind: ObjectiveKind::UnityCost,
            topology: topology.clone(),
            scope: Scope::Unit,
            target: None,
            squared_modulus: false,
            gradient_method: GradientMethod::default(),
        }
    }

    /// Distance of the full circuit to `target`.
    pub fn target_distance(topology: &CircuitTopology, target: &SquareMatrix) -> Result<Self> {
        if target.dim() != topology.dim() {
            return Err(Error::DimensionMismatch {
                left: target.dim(),
                right: topology.dim(),
            });
        }
        let deviation = target.unitarity_deviation();
        if deviation > 1e-8 {
            return Err(Error::NotUnitary {
                deviation,
                tolerance: 1e-8,
            });
        }
        Ok(Self {
            kind: ObjectiveKind::TargetDistance,
            topology: topology.clone(),
            scope: Scope::Full,
            target: Some(target.clone()),
            squared_modulus: false,
            gradient_method: GradientMethod::default(),
        })
    }

    pub fn with_gradient_method(mut self, method: GradientMethod) -> Self {
        self.gradient_method = method;
        self
    }

    pub fn with_squared_modulus(mut self, squared: bool) -> Self {
        self.squared_modulus = squared;
        self
    }

    pub fn param_len(&self) -> usize {
        self.topology.param_len(self.scope)
    }

    fn check(&self, angles: &[f64]) -> Result<()> {
        if angles.len() != self.param_len() {
            return Err(Error::ParameterLength {
                expected: self.param_len(),
                actual: angles.len(),
            });
        }
        Ok(())
    }

    fn target(&self) -> Result<&SquareMatrix> {
        self.target
            .as_ref()
            .ok_or_else(|| Error::InvalidObjective("target distance needs a target".into()))
    }

    /// Matrix synthesized from `angles` under this spec's scope.
    pub fn synthesize(&self, angles: &[f64]) -> Result<SquareMatrix> {
        self.check(angles)?;
        let units = match self.scope {
            Scope::Unit => 1,
            Scope::Full => self.topology.unit_count(),
        };
        let block = self.topology.unit_param_len();
        Ok(synthesize(
            &self.topology,
            (0..units).map(|u| &angles[u * block..(u + 1) * block]),
        ))
    }

    fn value(&self, angles: &[f64]) -> Result<f64> {
        let u = self.synthesize(angles)?;
        match self.kind {
            ObjectiveKind::UnityCost if self.squared_modulus => unity_cost_squared(&u),
            ObjectiveKind::UnityCost => unity_cost(&u),
            ObjectiveKind::TargetDistance => distance(&u, self.target()?),
        }
    }

    /// Cost at `params`; scope and length must match.
    pub fn evaluate(&self, params: &ParameterVector) -> Result<f64> {
        if params.scope != self.scope {
            return Err(Error::WrongScope {
                expected: self.scope,
            });
        }
        self.value(&params.angles)
    }

    /// Central-difference gradient `(f(θ + h e_k) − f(θ − h e_k)) / 2h`.
    pub fn gradient_central(&self, angles: &[f64], step: f64) -> Result<Vec<f64>> {
        self.check(angles)?;
        if !(step > 0.0) {
            return Err(Error::InvalidConfig(format!("gradient step must be positive, got {step}")));
        }
        let mut probe = angles.to_vec();
        let mut grad = Vec::with_capacity(angles.len());
        for k in 0..angles.len() {
            let x = angles[k];
            probe[k] = x + step;
            let plus = self.value(&probe)?;
            probe[k] = x - step;
            let minus = self.value(&probe)?;
            probe[k] = x;
            grad.push((plus - minus) / (2.0 * step));
        }
        Ok(grad)
    }

    /// Exact gradient of the target distance.
    ///
    /// With `C = G_L ⋯ G_1` and `t = tr(T† C)`, the derivative of `t` along an
    /// angle of slot k is `tr(M_k G_k')` where `M_k = (G_{k−1} ⋯ G_1) T† (G_L ⋯ G_{k+1})`;
    /// only the partial trace of `M_k` over the other qubits is needed.
    pub fn gradient_exact_distance(&self, angles: &[f64]) -> Result<Vec<f64>> {
        self.check(angles)?;
        if self.kind != ObjectiveKind::TargetDistance {
            return Err(Error::InvalidObjective(
                "exact gradient is only available for the target distance".into(),
            ));
        }
        let target = self.target()?;
        let d = self.topology.dim();
        let block = self.topology.unit_param_len();
        let compiled = compile_slots(&self.topology);
        let units = self.topology.unit_count();

        // Flattened slot sequence with per-slot angle offsets into `angles`.
        let sequence: Vec<(CompiledSlot, usize)> = (0..units)
            .flat_map(|u| compiled.iter().map(move |s| (*s, u * block)))
            .collect();
        let gate = |slot: &CompiledSlot, base: usize| -> Option<[C64; 4]> {
            match *slot {
                CompiledSlot::Rot { offset, .. } => {
                    Some(rotation_entries(&angles[base + offset..base + offset + 3]))
                }
                CompiledSlot::Cnot { .. } => None,
            }
        };

        // Backward sweep: suffix[k] = T† G_L ⋯ G_{k+1}.
        let mut suffixes = Vec::with_capacity(sequence.len());
        let mut w = target.adjoint();
        for (slot, base) in sequence.iter().rev() {
            suffixes.push(w.clone());
            match *slot {
                CompiledSlot::Cnot {
                    control_bit,
                    target_bit,
                } => apply_cnot_right(&mut w, control_bit, target_bit),
                CompiledSlot::Rot { bit, .. } => {
                    apply_single_right(&mut w, &gate(slot, *base).expect("rotation"), bit)
                }
            }
        }
        suffixes.reverse();
        // After the full sweep, w = T† C.
        let t = w.trace();

        let mut grad = vec![0.0; angles.len()];
        let mut prefix = SquareMatrix::identity(d);
        let scale = -2.0 / (d as f64 * d as f64);
        for ((slot, base), suffix) in sequence.iter().zip(&suffixes) {
            match *slot {
                CompiledSlot::Cnot {
                    control_bit,
                    target_bit,
                } => apply_cnot_left(&mut prefix, control_bit, target_bit),
                CompiledSlot::Rot { bit, offset } => {
                    let q = partial_trace_product(&prefix, suffix, bit);
                    let phi = &angles[base + offset..base + offset + 3];
                    for (a, dg) in rotation_derivatives(phi).iter().enumerate() {
                        // tr(Q · G') with Q[y][x] indexed as (y, x).
                        let dt = q[0] * dg[0] + q[1] * dg[2] + q[2] * dg[1] + q[3] * dg[3];
                        grad[base + offset + a] = scale * (t.conj() * dt).re;
                    }
                    apply_single_left(&mut prefix, &gate(slot, *base).expect("rotation"), bit);
                }
            }
        }
        Ok(grad)
    }

    /// Gradient according to [`Self::gradient_method`].
    pub fn gradient(&self, params: &ParameterVector, step: f64) -> Result<Vec<f64>> {
        if params.scope != self.scope {
            return Err(Error::WrongScope {
                expected: self.scope,
            });
        }
        crate::optimize::Objective::gradient(self, &params.angles, step)
    }
}

/// Partial trace over all qubits but the one owning `bit` of `B · W`,
/// returned as `[Q00, Q01, Q10, Q11]` with `Q[a][b] = Σ_r (B W)[(a,r),(b,r)]`.
fn partial_trace_product(b: &SquareMatrix, w: &SquareMatrix, bit: usize) -> [C64; 4] {
    let d = b.dim();
    let bs = b.as_slice();
    let ws = w.as_slice();
    let mut q = [C64::new(0.0, 0.0); 4];
    for rest in (0..d).filter(|i| i & bit == 0) {
        let rows = [rest, rest | bit];
        for (ai, &row) in rows.iter().enumerate() {
            let b_row = &bs[row * d..(row + 1) * d];
            for (bi, &col) in rows.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (m, bv) in b_row.iter().enumerate() {
                    acc += bv * ws[m * d + col];
                }
                q[ai * 2 + bi] += acc;
            }
        }
    }
    q
}

impl crate::optimize::Objective for ObjectiveSpec {
    fn dim(&self) -> usize {
        self.param_len()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        ObjectiveSpec::value(self, x)
    }

    fn gradient(&self, x: &[f64], step: f64) -> Result<Vec<f64>> {
        match (self.gradient_method, self.kind) {
            (GradientMethod::Auto, ObjectiveKind::TargetDistance) => {
                self.gradient_exact_distance(x)
            }
            _ => self.gradient_central(x, step),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{circuit_unitary, preset_topology, unit_unitary, GateSlot};
    use crate::linalg::{haar_random, multiply};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn unity_cost_closed_forms() {
        assert!((unity_cost(&SquareMatrix::identity(2)).unwrap() - 2.0).abs() < 1e-14);
        let sq = SquareMatrix::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(unity_cost(&sq).unwrap() < 1e-15);
        assert!((unity_cost(&SquareMatrix::identity(4)).unwrap() - 14.0).abs() < 1e-12);
    }

    #[test]
    fn unity_cost_vanishes_on_roots_of_unity() {
        let n = 8;
        let w: Vec<C64> = (0..n)
            .map(|k| C64::from_polar(1.0, 0.3 + 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect();
        let v = haar_random(n, 4).unwrap();
        let u = multiply(&multiply(&v, &SquareMatrix::diagonal(&w)).unwrap(), &v.adjoint()).unwrap();
        assert!(unity_cost(&u).unwrap() < 1e-12);
    }

    #[test]
    fn distance_closed_forms() {
        let u = haar_random(8, 1).unwrap();
        assert!(distance(&u, &u).unwrap() < 1e-14);
        let x = SquareMatrix::from_rows([[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]);
        assert_eq!(distance(&SquareMatrix::identity(2), &x).unwrap(), 1.0);
        let phased = u.scale(C64::from_polar(1.0, 1.234));
        assert!(distance(&u, &phased).unwrap() < 1e-14);
        assert!(distance(&u, &SquareMatrix::identity(4)).is_err());
    }

    #[test]
    fn distance_invariant_under_common_unitary() {
        let (a, b, w) = (
            haar_random(8, 5).unwrap(),
            haar_random(8, 6).unwrap(),
            haar_random(8, 7).unwrap(),
        );
        let base = distance(&a, &b).unwrap();
        let left = distance(&(&w * &a), &(&w * &b)).unwrap();
        let right = distance(&(&a * &w), &(&b * &w)).unwrap();
        assert!((base - left).abs() < 1e-13 && (base - right).abs() < 1e-13);
        assert!((base - distance(&b, &a).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn evaluate_trivial_cases() {
        let rot_only = CircuitTopology::new(3, "r", vec![GateSlot::Rot { qubit: 2 }], None).unwrap();
        let spec = ObjectiveSpec::unity(&rot_only);
        let cost = spec.evaluate(&ParameterVector::unit(vec![0.0; 3])).unwrap();
        // Identity on 8 dims: Σ_{k=1}^{7} C(8,k) = 2^8 − 2.
        assert!((cost - 254.0).abs() < 1e-9);

        let t = preset_topology("chain3").unwrap();
        let params = ParameterVector::full((0..t.full_param_len()).map(|k| (k as f64 * 0.61).sin()).collect());
        let target = circuit_unitary(&t, &params).unwrap();
        let spec = ObjectiveSpec::target_distance(&t, &target).unwrap();
        assert!(spec.evaluate(&params).unwrap() < 1e-14);
    }

    #[test]
    fn evaluate_matches_manual_composition() {
        let t = preset_topology("chain3").unwrap();
        let unit = ParameterVector::unit((0..12).map(|k| (k as f64 * 1.3).cos()).collect());
        let manual = unity_cost(&unit_unitary(&t, &unit).unwrap()).unwrap();
        assert_eq!(ObjectiveSpec::unity(&t).evaluate(&unit).unwrap(), manual);

        let target = haar_random(8, 9).unwrap();
        let full = ParameterVector::full((0..96).map(|k| (k as f64 * 0.7).sin()).collect());
        let manual = distance(&circuit_unitary(&t, &full).unwrap(), &target).unwrap();
        let spec = ObjectiveSpec::target_distance(&t, &target).unwrap();
        assert!((spec.evaluate(&full).unwrap() - manual).abs() < 1e-15);
    }

    #[test]
    fn evaluate_rejects_mismatch() {
        let t = preset_topology("chain3").unwrap();
        let spec = ObjectiveSpec::unity(&t);
        assert!(spec.evaluate(&ParameterVector::full(vec![0.0; 96])).is_err());
        assert!(spec.evaluate(&ParameterVector::unit(vec![0.0; 11])).is_err());
        assert!(ObjectiveSpec::target_distance(&t, &SquareMatrix::identity(4)).is_err());
        let not_unitary = SquareMatrix::identity(8).scale(c(1.1, 0.0));
        assert!(ObjectiveSpec::target_distance(&t, &not_unitary).is_err());
    }

    #[test]
    fn empty_parameter_gradient() {
        let cx_only = CircuitTopology::new(
            2,
            "cx",
            vec![GateSlot::Cnot { control: 1, target: 2 }],
            None,
        )
        .unwrap();
        let spec = ObjectiveSpec::unity(&cx_only);
        assert!(spec.gradient(&ParameterVector::unit(vec![]), 1e-5).unwrap().is_empty());
    }

    #[test]
    fn gradient_vanishes_at_global_minimum() {
        let t = preset_topology("chain3").unwrap();
        let params = ParameterVector::full((0..96).map(|k| (k as f64 * 0.29).cos()).collect());
        let target = circuit_unitary(&t, &params).unwrap();
        for method in [GradientMethod::CentralDifference, GradientMethod::Auto] {
            let spec = ObjectiveSpec::target_distance(&t, &target)
                .unwrap()
                .with_gradient_method(method);
            let g = spec.gradient(&params, DEFAULT_GRADIENT_STEP).unwrap();
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(norm <= 1e-6, "{method:?}: {norm}");
        }
    }

    #[test]
    fn exact_gradient_matches_central_difference() {
        let t = preset_topology("chain3").unwrap();
        let target = haar_random(8, 31).unwrap();
        let spec = ObjectiveSpec::target_distance(&t, &target).unwrap();
        let angles: Vec<f64> = (0..96).map(|k| (k as f64 * 2.17).sin() * 2.0).collect();
        let exact = spec.gradient_exact_distance(&angles).unwrap();
        let central = spec.gradient_central(&angles, 1e-5).unwrap();
        for (e, c) in exact.iter().zip(&central) {
            assert!((e - c).abs() < 1e-8, "{e} vs {c}");
        }
        assert!(ObjectiveSpec::unity(&t).gradient_exact_distance(&angles[..12]).is_err());
    }

    #[test]
    fn rejects_non_positive_step() {
        let t = preset_topology("chain3").unwrap();
        let spec = ObjectiveSpec::unity(&t);
        assert!(spec.gradient_central(&[0.0; 12], 0.0).is_err());
    }
}
