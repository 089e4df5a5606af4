use pcr_core::geom3::{orthonormality_error, rot_x, Pose, Rot3, Vec3};
use pcr_core::ode::IntegratorConfig;
use pcr_core::rod::{
    distributed_load, integrate_rod, stiffness_matrices, strains_from_wrench, wrench_from_strains, CrossSection,
    Material, RodParams,
};
use proptest::prelude::*;

const L: f64 = 0.53;
const RADIUS: f64 = 0.3005;

fn section() -> CrossSection {
    CrossSection::circular(0.004).unwrap()
}

fn arc_tip(s: f64) -> Vec3 {
    Vec3::new(0.0, -RADIUS * (1.0 - (s / RADIUS).cos()), RADIUS * (s / RADIUS).sin())
}

fn base_pose(rx: f64, p: Vec3) -> Pose {
    Pose::new(Rot3::from_matrix_unchecked(rot_x(rx)), p)
}

#[test]
fn arc_tip_and_frame() {
    let rod = RodParams::precurved(L, RADIUS, section(), Material::titanium_alloy());
    let sol = integrate_rod(&Pose::identity(), &Vec3::zeros(), &Vec3::zeros(), &rod, &IntegratorConfig::default()).unwrap();
    assert!((sol.tip.position() - arc_tip(L)).norm() < 1e-9);
    assert!((sol.tip.rotation().matrix() - rot_x(L / RADIUS)).norm() < 1e-9);
    for st in &sol.samples {
        assert!((st.position() - arc_tip(st.s)).norm() < 1e-9, "s = {}", st.s);
    }
}

#[test]
fn cantilever_matches_small_deflection_beam() {
    let rod = RodParams::straight(L, section(), Material::titanium_alloy());
    let ei = stiffness_matrices(&rod).bending_torsion.x;
    let cfg = IntegratorConfig::default().without_samples();
    for ratio in [0.001, 0.005, 0.01] {
        let f = Vec3::new(ratio * ei / (L * L), 0.0, 0.0);
        // base moment from rigid statics of the deformed rod: m(L) = 0 gives
        // m(0) = (p(L) - p(0)) x F, iterated on the current tip
        let mut tip = Vec3::new(0.0, 0.0, L);
        let mut sol = None;
        for _ in 0..4 {
            let m0 = tip.cross(&f);
            let s = integrate_rod(&Pose::identity(), &f, &m0, &rod, &cfg).unwrap();
            tip = s.tip.position();
            sol = Some(s);
        }
        let sol = sol.unwrap();
        assert!(sol.tip.m.norm() < 1e-9 * f.norm() * L, "{}", sol.tip.m.norm());
        let expected = f.x * L.powi(3) / (3.0 * ei);
        let got = sol.tip.position().x;
        assert!(((got - expected) / expected).abs() < 0.01, "ratio {ratio}: {got} vs {expected}");
    }
}

#[test]
fn rotation_drift_stays_small() {
    let rod = RodParams::precurved(L, RADIUS, section(), Material::titanium_alloy()).with_gravity(Vec3::new(0.0, 0.0, -9.81));
    let cases = [
        (Vec3::new(0.3, -1.0, 4.0), Vec3::new(0.02, 0.01, -0.03)),
        (Vec3::new(-2.0, 0.5, -1.0), Vec3::new(0.0, -0.05, 0.01)),
        (Vec3::zeros(), Vec3::new(0.0, 0.0, 0.02)),
    ];
    for (n0, m0) in cases {
        let sol = integrate_rod(&base_pose(0.4, Vec3::new(0.1, 0.2, 0.0)), &n0, &m0, &rod, &IntegratorConfig::default()).unwrap();
        for st in &sol.samples {
            assert!(orthonormality_error(st.rotation().matrix()) <= 1e-8);
        }
    }
}

#[test]
fn force_balance_with_gravity() {
    let rod = RodParams::precurved(L, RADIUS, section(), Material::titanium_alloy()).with_gravity(Vec3::new(0.0, 0.0, -9.81));
    let n0 = Vec3::new(0.4, -0.3, 1.5);
    let sol = integrate_rod(&base_pose(-0.2, Vec3::zeros()), &n0, &Vec3::new(0.0, 0.01, 0.0), &rod, &IntegratorConfig::default()).unwrap();
    let expected = distributed_load(&rod) * L;
    assert!((n0 - sol.tip.n - expected).norm() < 1e-9);
}

#[test]
fn internal_force_constant_without_load() {
    let rod = RodParams::precurved(L, RADIUS, section(), Material::titanium_alloy());
    let n0 = Vec3::new(0.4, -0.3, 1.5);
    let sol = integrate_rod(&Pose::identity(), &n0, &Vec3::new(0.01, 0.0, 0.0), &rod, &IntegratorConfig::default()).unwrap();
    for st in &sol.samples {
        assert!((st.n - n0).norm() < 1e-12);
    }
}

#[test]
fn moment_balance_from_samples() {
    // d/ds (m + p x n) = p' x n + p x n' + m' = -p x f
    let rod = RodParams::precurved(L, RADIUS, section(), Material::titanium_alloy()).with_gravity(Vec3::new(0.0, 0.0, -9.81));
    let f = distributed_load(&rod);
    let cfg = IntegratorConfig {
        samples: 401,
        ..Default::default()
    };
    let sol = integrate_rod(&base_pose(0.3, Vec3::new(0.2, 0.0, 0.05)), &Vec3::new(0.5, 0.2, 2.0), &Vec3::new(0.01, -0.02, 0.005), &rod, &cfg).unwrap();
    let s = &sol.samples;
    let g = |k: usize| s[k].m + s[k].position().cross(&s[k].n);
    let mut worst: f64 = 0.0;
    for k in 1..s.len() - 1 {
        let h = s[k + 1].s - s[k - 1].s;
        let fd = (g(k + 1) - g(k - 1)) / h;
        let exact = -s[k].position().cross(&f);
        worst = worst.max((fd - exact).norm());
    }
    assert!(worst < 1e-6, "worst {worst}");
}

#[test]
fn integrator_order_on_arc() {
    // tip error against step count; a 5(4) pair should give slope near -5
    let rod = RodParams::precurved(2.0, RADIUS, section(), Material::titanium_alloy());
    let mut pts = Vec::new();
    for tol in [1e-5, 1e-6, 1e-7, 1e-8, 1e-9] {
        let cfg = IntegratorConfig {
            rtol: tol,
            atol: tol * 1e-2,
            samples: 0,
            ..Default::default()
        };
        let sol = integrate_rod(&Pose::identity(), &Vec3::zeros(), &Vec3::zeros(), &rod, &cfg).unwrap();
        let err = (sol.tip.position() - arc_tip(2.0)).norm();
        pts.push(((sol.steps as f64).ln(), err.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(slope <= -4.0, "observed order {}", -slope);
}

fn vec3(scale: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-scale..scale).prop_map(Vec3::from)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn constitutive_round_trip(
        rpy in prop::array::uniform3(-3.0f64..3.0),
        n in vec3(50.0),
        m in vec3(0.5),
        diameter in 0.001f64..0.01,
    ) {
        let rod = RodParams::precurved(L, RADIUS, CrossSection::circular(diameter).unwrap(), Material::titanium_alloy());
        let r = Rot3::from_rpy(rpy[0], rpy[1].clamp(-1.5, 1.5), rpy[2]);
        let k = stiffness_matrices(&rod);
        let (v, u) = strains_from_wrench(&r, &n, &m, &rod);
        let (n2, m2) = wrench_from_strains(&r, &v, &u, &rod);
        // v carries the unit reference stretch, so the returned wrench is
        // exact only up to eps * stiffness; compare in strain units
        let dn = (r.matrix().tr_mul(&(n2 - n))).component_div(&k.shear_extension);
        let dm = (r.matrix().tr_mul(&(m2 - m))).component_div(&k.bending_torsion);
        prop_assert!(dn.norm() <= 1e-12 && dm.norm() <= 1e-12, "{dn} {dm}");
        let (v2, u2) = strains_from_wrench(&r, &n2, &m2, &rod);
        prop_assert!((v2 - v).norm() <= 1e-12 && (u2 - u).norm() <= 1e-12);
    }
}
