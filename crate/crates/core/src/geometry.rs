//! Directions on the scattering hemisphere and the lobe angle kernels.
//!
//! Elevation is measured from the surface normal, so `theta = 0` points
//! straight away from the surface and `theta = pi/2` lies in the surface
//! plane (grazing). Azimuth is wrapped into `[0, 2 pi)`. Directions below
//! the surface plane are rejected rather than clamped: the models are only
//! defined on the backscattering hemisphere.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};

/// A direction on the upper hemisphere: elevation from the surface normal
/// plus azimuth in the surface plane, both in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    theta: f64,
    phi: f64,
}

impl Direction {
    /// Builds a direction from radians; `theta` must lie in `[0, pi/2]`,
    /// `phi` may be any finite angle and is wrapped into `[0, 2 pi)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::NotFinite {
                name: "theta",
                value: theta,
            });
        }
        if !(0.0..=FRAC_PI_2).contains(&theta) {
            return Err(Error::ElevationOutOfRange(theta));
        }
        if !phi.is_finite() {
            return Err(Error::NotFinite {
                name: "phi",
                value: phi,
            });
        }
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            // rem_euclid of a tiny negative rounds up to the modulus itself.
            phi -= TAU;
        }
        Ok(Self { theta, phi })
    }

    /// Builds a direction from degrees. `90` maps to exactly `pi/2`.
    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        Self::new(theta_deg / 180.0 * PI, phi_deg / 180.0 * PI)
    }

    /// Elevation from the surface normal, radians in `[0, pi/2]`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Azimuth, radians in `[0, 2 pi)`.
    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Incidence and observation directions plus the scalar geometry of one
/// surface element: source distance, observer distance, element area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterGeometry {
    incidence: Direction,
    observation: Direction,
    r_i: f64,
    r_s: f64,
    ds: f64,
}

impl ScatterGeometry {
    /// Distances are in meters, the element area in square meters; all
    /// three must be strictly positive.
    pub fn new(
        incidence: Direction,
        observation: Direction,
        r_i: f64,
        r_s: f64,
        ds: f64,
    ) -> Result<Self> {
        for (name, value) in [("r_i", r_i), ("r_s", r_s), ("ds", ds)] {
            if !value.is_finite() {
                return Err(Error::NotFinite { name, value });
            }
            if value <= 0.0 {
                return Err(Error::NotPositive { name, value });
            }
        }
        Ok(Self {
            incidence,
            observation,
            r_i,
            r_s,
            ds,
        })
    }

    pub fn incidence(&self) -> &Direction {
        &self.incidence
    }

    pub fn observation(&self) -> &Direction {
        &self.observation
    }

    pub fn r_i(&self) -> f64 {
        self.r_i
    }

    pub fn r_s(&self) -> f64 {
        self.r_s
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    /// The same element seen with transmitter and receiver swapped: the
    /// directions exchange roles and the distances follow them.
    pub fn exchanged(&self) -> Self {
        Self {
            incidence: self.observation,
            observation: self.incidence,
            r_i: self.r_s,
            r_s: self.r_i,
            ds: self.ds,
        }
    }
}

/// Cosine of the angle between the observation direction and the specular
/// direction of the incident ray:
/// `cos(theta_i) cos(theta_s) - sin(theta_i) sin(theta_s) cos(phi_s - phi_i)`,
/// clamped to `[-1, 1]` against round-off.
///
/// The azimuth difference enters through `|phi_s - phi_i|`, so the result is
/// bit-for-bit invariant under exchange of the two arguments.
pub fn cos_psi_r(incidence: &Direction, observation: &Direction) -> f64 {
    let dphi = (observation.phi - incidence.phi).abs();
    let c = incidence.theta.cos() * observation.theta.cos()
        - incidence.theta.sin() * observation.theta.sin() * dphi.cos();
    c.clamp(-1.0, 1.0)
}

/// Cosine of the angle between the observation direction and the incidence
/// direction itself (the backscatter kernel): same expression as
/// [`cos_psi_r`] with the azimuthal term added instead of subtracted.
pub fn cos_psi_i(incidence: &Direction, observation: &Direction) -> f64 {
    let dphi = (observation.phi - incidence.phi).abs();
    let c = incidence.theta.cos() * observation.theta.cos()
        + incidence.theta.sin() * observation.theta.sin() * dphi.cos();
    c.clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_elevation() {
        assert!(Direction::new(-0.1, 0.0).is_err());
        assert!(Direction::new(FRAC_PI_2 + 1e-12, 0.0).is_err());
        assert!(Direction::new(f64::NAN, 0.0).is_err());
        assert!(Direction::new(0.3, f64::INFINITY).is_err());
    }

    #[test]
    fn azimuth_is_wrapped_into_one_turn() {
        let d = Direction::new(0.3, TAU + 0.25).unwrap();
        assert!((d.phi() - 0.25).abs() < 1e-15);
        let e = Direction::new(0.3, -0.25).unwrap();
        assert!((e.phi() - (TAU - 0.25)).abs() < 1e-15);
        // A negative angle tiny enough to round back onto the modulus must
        // still land inside [0, 2 pi).
        let f = Direction::new(0.3, -1e-20).unwrap();
        assert!(f.phi() < TAU);
        assert_eq!(Direction::new(0.3, TAU).unwrap().phi(), 0.0);
    }

    #[test]
    fn degrees_map_onto_exact_radian_boundaries() {
        let d = Direction::from_degrees(90.0, 360.0).unwrap();
        assert_eq!(d.theta(), FRAC_PI_2);
        assert_eq!(d.phi(), 0.0);
        assert_eq!(Direction::from_degrees(45.0, 0.0).unwrap().theta(), PI / 4.0);
    }

    #[test]
    fn specular_direction_gives_unit_kernel() {
        let inc = Direction::from_degrees(45.0, 0.0).unwrap();
        let obs = Direction::from_degrees(45.0, 180.0).unwrap();
        assert_eq!(cos_psi_r(&inc, &obs), 1.0);
    }

    #[test]
    fn backscatter_direction_gives_unit_incidence_kernel() {
        let inc = Direction::from_degrees(37.0, 12.0).unwrap();
        assert_eq!(cos_psi_i(&inc, &inc), 1.0);
    }

    #[test]
    fn normal_incidence_reduces_both_kernels_to_cos_theta_s() {
        let inc = Direction::new(0.0, 1.234).unwrap();
        for theta_s_deg in [0.0, 15.0, 40.0, 75.0, 90.0] {
            let obs = Direction::from_degrees(theta_s_deg, 200.0).unwrap();
            assert_eq!(cos_psi_r(&inc, &obs), obs.theta().cos());
            assert_eq!(cos_psi_i(&inc, &obs), obs.theta().cos());
        }
    }

    #[test]
    fn in_plane_kernel_reduces_to_angle_difference() {
        // theta_i = 60 deg, theta_s = 30 deg, opposite azimuth: the angle to
        // the specular direction is 30 deg.
        let inc = Direction::from_degrees(60.0, 0.0).unwrap();
        let obs = Direction::from_degrees(30.0, 180.0).unwrap();
        let expected = (30f64 / 180.0 * PI).cos();
        assert!((cos_psi_r(&inc, &obs) - expected).abs() < 1e-15);
    }

    #[test]
    fn incidence_kernel_is_specular_kernel_with_mirrored_azimuth() {
        let inc = Direction::from_degrees(52.0, 33.0).unwrap();
        let obs = Direction::from_degrees(28.0, 290.0).unwrap();
        let mirrored = Direction::from_degrees(28.0, 290.0 + 180.0).unwrap();
        let a = cos_psi_i(&inc, &obs);
        let b = cos_psi_r(&inc, &mirrored);
        assert!((a - b).abs() < 1e-15, "{a} vs {b}");
    }

    #[test]
    fn geometry_rejects_non_positive_scalars() {
        let d = Direction::new(0.1, 0.2).unwrap();
        assert!(ScatterGeometry::new(d, d, 0.0, 1.0, 1.0).is_err());
        assert!(ScatterGeometry::new(d, d, 1.0, -2.0, 1.0).is_err());
        assert!(ScatterGeometry::new(d, d, 1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn exchange_swaps_directions_and_distances() {
        let inc = Direction::from_degrees(10.0, 5.0).unwrap();
        let obs = Direction::from_degrees(70.0, 185.0).unwrap();
        let g = ScatterGeometry::new(inc, obs, 2.0, 3.0, 0.5).unwrap();
        let x = g.exchanged();
        assert_eq!(x.incidence(), &obs);
        assert_eq!(x.observation(), &inc);
        assert_eq!(x.r_i(), 3.0);
        assert_eq!(x.r_s(), 2.0);
        assert_eq!(x.ds(), 0.5);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn direction() -> impl Strategy<Value = Direction> {
            (0.0..FRAC_PI_2, 0.0..TAU)
                .prop_map(|(theta, phi)| Direction::new(theta, phi).unwrap())
        }

        proptest! {
            #[test]
            fn kernels_stay_in_unit_interval(a in direction(), b in direction()) {
                prop_assert!(cos_psi_r(&a, &b).abs() <= 1.0);
                prop_assert!(cos_psi_i(&a, &b).abs() <= 1.0);
            }

            #[test]
            fn kernels_are_exchange_symmetric_bit_for_bit(a in direction(), b in direction()) {
                prop_assert_eq!(cos_psi_r(&a, &b), cos_psi_r(&b, &a));
                prop_assert_eq!(cos_psi_i(&a, &b), cos_psi_i(&b, &a));
            }
        }
    }
}
