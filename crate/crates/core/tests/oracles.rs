use std::f64::consts::PI;

use ppw_core::domain::{solve_extrapolated, DomainGrid, DomainPotential, Shape};
use ppw_core::potentials::RadialPotential;
use ppw_core::radial::first_two;
use ppw_core::special::{bessel_zero, ppw_constant};

// Reference zeros j_{ν,1} (Abramowitz & Stegun, table 9.5 and 10.6).
const J0_1: f64 = 2.404_825_557_695_773;
const J1_1: f64 = 3.831_705_970_207_512;
const J15_1: f64 = 4.493_409_457_909_064;

#[test]
fn bessel_zeros_match_tables() {
    for (nu, want) in [(0.0, J0_1), (1.0, J1_1), (0.5, PI), (1.5, J15_1)] {
        let z = bessel_zero(nu, 1).unwrap();
        assert!((z.value - want).abs() < 1e-12, "ν = {nu}: {}", z.value);
    }
    assert!((ppw_constant(3).unwrap() - (J15_1 / PI).powi(2)).abs() < 1e-12);
}

#[test]
fn unit_disk_and_ball_spectra() {
    let f = first_two(2, 1.0, &RadialPotential::Zero, 1e-11).unwrap();
    assert!((f.lambda1 / (J0_1 * J0_1) - 1.0).abs() < 1e-8);
    assert!((f.lambda2 / (J1_1 * J1_1) - 1.0).abs() < 1e-8);
    let g = first_two(3, 1.0, &RadialPotential::Zero, 1e-11).unwrap();
    assert!((g.lambda1 / (PI * PI) - 1.0).abs() < 1e-8);
    assert!((g.lambda2 / (J15_1 * J15_1) - 1.0).abs() < 1e-8);
}

#[test]
fn oscillator_limit_on_a_large_ball() {
    for n in [2usize, 3] {
        let f = first_two(n, 7.0, &RadialPotential::harmonic(), 1e-11).unwrap();
        assert!((f.lambda1 - n as f64).abs() < 1e-8, "{}", f.lambda1);
        assert!((f.lambda2 - (n + 2) as f64).abs() < 1e-8, "{}", f.lambda2);
    }
}

#[test]
fn extrapolated_grid_eigenvalues() {
    let zero = DomainPotential::Radial(RadialPotential::Zero);
    let square = DomainGrid::from_shape(Shape::square(1.0), 1.0 / 32.0).unwrap();
    let (_, _, ex) = solve_extrapolated(&square, &zero, 2, 1e-10).unwrap();
    assert!((ex.lambda1() - 2.0 * PI * PI).abs() < 1e-3 * 2.0 * PI * PI, "{}", ex.lambda1());
    assert!((ex.lambda2() - 5.0 * PI * PI).abs() < 1e-3 * 5.0 * PI * PI, "{}", ex.lambda2());

    let disk = DomainGrid::from_shape(Shape::disk(1.0), 1.0 / 32.0).unwrap();
    let (_, _, ex) = solve_extrapolated(&disk, &zero, 2, 1e-10).unwrap();
    assert!((ex.lambda1() - J0_1 * J0_1).abs() < 2e-3 * J0_1 * J0_1, "{}", ex.lambda1());
    assert!((ex.lambda2() - J1_1 * J1_1).abs() < 2e-3 * J1_1 * J1_1, "{}", ex.lambda2());
}
