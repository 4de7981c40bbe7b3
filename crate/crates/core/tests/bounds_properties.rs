use isac_hybrid::crlb::{self, oracle};
use isac_hybrid::fisher::{self, FisherOptions, FisherSet};
use isac_hybrid::scenario::{derive_geometry, LinkBudget, OfdmConfig, SceneGeometry, Vec2};
use proptest::prelude::*;

const C: f64 = 3.0e8;

fn arb_scene() -> impl Strategy<Value = (FisherSet, SceneGeometry)> {
    ((10.0f64..500.0, -1.5f64..1.5), (10.0f64..500.0, -3.1f64..3.1), 70.0f64..110.0, 70.0f64..110.0, 2usize..9)
        .prop_filter_map("degenerate scene", |((rb, th), (ru, phi), bs_db, ue_db, nr)| {
            let cfg = OfdmConfig { rx_antennas: nr, ..OfdmConfig::default() };
            let lb = LinkBudget::from_db(bs_db, ue_db, &cfg);
            let q = Vec2::new(rb * th.cos(), rb * th.sin());
            let ue = q + Vec2::new(ru * phi.cos(), ru * phi.sin());
            let g = derive_geometry(q, ue).ok()?;
            (g.aoa.cos().abs() > 0.05 && g.range_ue > 1.0).then_some(())?;
            let fs = fisher::fisher_set(&cfg, &lb, &g, &FisherOptions::default()).ok()?;
            Some((fs, g))
        })
}

proptest! {
    #[test]
    fn hybrid_sits_between_limit_and_mono((fs, g) in arb_scene()) {
        let mono = crlb::mono_from_fisher(&fs, g.range_bs, C).unwrap().crlb;
        let hybrid = crlb::hybrid_position(&fs, &g, C).unwrap().crlb;
        let limit = crlb::position_limit(&fs, &g, C).unwrap().crlb;
        prop_assert!(hybrid <= mono * (1.0 + 1e-12));
        prop_assert!(hybrid >= limit * (1.0 - 1e-12));
    }

    #[test]
    fn more_ue_information_never_hurts((fs, g) in arb_scene(), factor in 1.0f64..100.0) {
        let base = crlb::hybrid_position(&fs, &g, C).unwrap().crlb;
        let boosted = FisherSet { delay_ue: fs.delay_ue * factor, ..fs };
        let better = crlb::hybrid_position(&boosted, &g, C).unwrap().crlb;
        prop_assert!(better <= base * (1.0 + 1e-12));
    }

    #[test]
    fn fusion_gain_is_the_bound_difference((fs, g) in arb_scene()) {
        let mono = crlb::mono_from_fisher(&fs, g.range_bs, C).unwrap().crlb;
        let hybrid = crlb::hybrid_position(&fs, &g, C).unwrap().crlb;
        let gain = crlb::fusion_gain(&fs, &g, C).unwrap();
        prop_assert!(gain >= 0.0);
        prop_assert!((gain - (mono - hybrid)).abs() <= 1e-10 * mono);
    }

    #[test]
    fn closed_forms_agree_with_oracle((fs, g) in arb_scene()) {
        prop_assume!(g.sin_bistatic().abs() > 0.05);
        let lam = OfdmConfig::default().wavelength();
        let hybrid = crlb::hybrid_position(&fs, &g, C).unwrap().crlb;
        let numeric = oracle::position_trace(&fs, g.target, g.ue, C);
        prop_assert!((hybrid - numeric).abs() <= 1e-9 * numeric);
        let vel = crlb::velocity(&fs, &g, lam).unwrap().crlb;
        let vel_numeric = oracle::velocity_trace(&fs, g.target, g.ue, lam);
        prop_assert!((vel - vel_numeric).abs() <= 1e-9 * vel_numeric);
    }

    #[test]
    fn optimal_angle_is_obtuse(rho in 1e-6f64..1e6) {
        let psi = crlb::optimal_bistatic_angle(rho).unwrap();
        prop_assert!(psi > std::f64::consts::FRAC_PI_2 && psi < std::f64::consts::PI);
    }
}
