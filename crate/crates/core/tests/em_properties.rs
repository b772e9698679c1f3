//! Property tests for the layered EM model, materials and the antenna link.

use num_complex::Complex64;
use proptest::prelude::*;
use wallsim::antenna_link::{aperture_transmission, coax_attenuation, combine_paths, CoaxSpec, Combination, UnitCell};
use wallsim::layered_em::{cp_transmission, tmm_coefficients, Incidence, Layer, LayerStack, Polarization};
use wallsim::materials::{builtin_database, permittivity_at, Electrical, Material, MaterialDb, PermittivityModel};

fn dielectric(eps_real: f64, eps_imag: f64) -> Material {
    Material::new("m", Electrical::Fixed { eps_real, eps_imag }, 1.0).unwrap()
}

prop_compose! {
    fn lossless_stack()(layers in prop::collection::vec((1.0f64..12.0, 1.0f64..150.0), 1..5)) -> LayerStack {
        LayerStack::new(layers.into_iter().map(|(e, t)| Layer { material: dielectric(e, 0.0), thickness_mm: t }).collect()).unwrap()
    }
}

prop_compose! {
    fn lossy_stack()(layers in prop::collection::vec((1.0f64..9.0, 0.0f64..1.0, 1.0f64..120.0), 1..5)) -> LayerStack {
        LayerStack::new(layers.into_iter().map(|(e, l, t)| Layer { material: dielectric(e, l), thickness_mm: t }).collect()).unwrap()
    }
}

fn pol() -> impl Strategy<Value = Polarization> {
    prop_oneof![Just(Polarization::TE), Just(Polarization::TM)]
}

proptest! {
    #[test]
    fn lossless_stacks_conserve_energy(
        stack in lossless_stack(),
        f in 1.0f64..8.0,
        theta in prop_oneof![Just(0.0), Just(30.0), Just(60.0)],
        polarization in pol(),
    ) {
        let c = tmm_coefficients(&stack, &Incidence { frequency_ghz: f, theta_deg: theta, polarization }).unwrap();
        prop_assert!((c.t.norm_sqr() + c.r.norm_sqr() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn transmission_is_reciprocal(stack in lossy_stack(), f in 1.0f64..8.0, theta in 0.0f64..70.0, polarization in pol()) {
        let inc = Incidence { frequency_ghz: f, theta_deg: theta, polarization };
        let fwd = tmm_coefficients(&stack, &inc).unwrap().t.norm();
        let rev = tmm_coefficients(&stack.reversed(), &inc).unwrap().t.norm();
        prop_assert!((fwd - rev).abs() <= 1e-10 * fwd.max(1e-300) + 1e-300, "{fwd} vs {rev}");
    }

    #[test]
    fn splitting_a_layer_changes_nothing(stack in lossy_stack(), pick in 0usize..4, f in 1.0f64..8.0, theta in 0.0f64..60.0) {
        let idx = pick % stack.layers().len();
        let inc = Incidence { frequency_ghz: f, theta_deg: theta, polarization: Polarization::TE };
        let whole = tmm_coefficients(&stack, &inc).unwrap();
        let split = tmm_coefficients(&stack.split_layer(idx).unwrap(), &inc).unwrap();
        prop_assert!((whole.t - split.t).norm() < 1e-12);
    }

    #[test]
    fn circular_polarizations_agree_at_normal_incidence(stack in lossy_stack(), f in 1.0f64..8.0) {
        let rh = tmm_coefficients(&stack, &Incidence::normal(f, Polarization::RHCP)).unwrap().t;
        let lh = tmm_coefficients(&stack, &Incidence::normal(f, Polarization::LHCP)).unwrap().t;
        prop_assert!((rh - lh).norm() <= 1e-14 * rh.norm().max(1e-300));
        let cp = cp_transmission(&stack, f, 0.0).unwrap();
        prop_assert!(cp.cross.norm() <= 1e-12 * cp.co.norm());
    }

    #[test]
    fn power_law_loss_follows_closed_form(a in 1.0f64..10.0, c in 0.0f64..1.0, d in 0.0f64..2.0) {
        let m = PermittivityModel::new(a, 0.0, c, d).unwrap();
        let freqs: Vec<f64> = (0..100).map(|i| 1.0 + 99.0 * i as f64 / 99.0).collect();
        let eps: Vec<f64> = freqs.iter().map(|&f| permittivity_at(&m, f).unwrap().eps_imag).collect();
        for (w, fw) in eps.windows(2).zip(freqs.windows(2)) {
            if d >= 1.0 {
                prop_assert!(w[1] >= w[0] * (1.0 - 1e-12));
            }
            // ε''·f is proportional to σ = c·f^d.
            let expect = (fw[1] / fw[0]).powf(d);
            prop_assert!(((w[1] * fw[1]) / (w[0] * fw[0]) / expect - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn antenna_path_shrinks_with_cell_area(s1 in 55.0f64..300.0, ds in 0.0f64..200.0, f in 1.0f64..8.0) {
        let stack = LayerStack::load_bearing_wall(&builtin_database()).unwrap();
        let small = UnitCell::with_default_system(stack.clone(), s1);
        let large = small.resized(s1 + ds);
        prop_assert!(aperture_transmission(&large, f, 0.0).unwrap() <= aperture_transmission(&small, f, 0.0).unwrap());
    }

    #[test]
    fn combination_modes_are_ordered(tr in 0.0f64..1.0, ti in -1.0f64..1.0, ant in 0.0f64..1.0) {
        let wall = Complex64::new(tr, ti);
        let inc = combine_paths(wall, ant, Combination::Incoherent);
        let best = combine_paths(wall, ant, Combination::CoherentBest);
        let worst = combine_paths(wall, ant, Combination::CoherentWorst);
        prop_assert!(inc >= wall.norm().max(ant) * (1.0 - 1e-15));
        prop_assert!(worst <= inc + 1e-15 && inc <= best + 1e-15);
    }

    #[test]
    fn common_cable_loss_keeps_best_separation(rho_scale in 1.0f64..6.0, f in 1.5f64..8.0) {
        // A lossier cable costs every separation the same dB; the best
        // (lowest-loss) separation does not move.
        let stack = LayerStack::load_bearing_wall(&builtin_database()).unwrap();
        let best = |scale: f64| {
            [70.0, 90.0, 120.0, 150.0, 200.0]
                .into_iter()
                .map(|s| {
                    let mut cell = UnitCell::with_default_system(stack.clone(), s);
                    cell.system.as_mut().unwrap().coax.resistivity_ohm_m *= scale;
                    (s, aperture_transmission(&cell, f, 0.0).unwrap())
                })
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0
        };
        prop_assert_eq!(best(1.0), best(rho_scale));
    }
}

#[test]
fn conductor_loss_scales_with_root_frequency() {
    let coax = CoaxSpec::default();
    let lo = coax_attenuation(&coax, 3.5).unwrap().conductor_db;
    let hi = coax_attenuation(&coax, 8.0).unwrap().conductor_db;
    assert!((hi / lo / (8.0f64 / 3.5).sqrt() - 1.0).abs() < 0.01);
}

#[test]
fn builtin_database_round_trips() {
    let db = builtin_database();
    let back = MaterialDb::from_json(&db.to_json().unwrap()).unwrap();
    for m in db.iter() {
        assert_eq!(back.get(&m.name).unwrap(), m);
    }
}
