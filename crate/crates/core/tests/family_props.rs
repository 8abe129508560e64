use hbilinear::functions::{family_a_pair, Lattice, LatticeParams};
use hbilinear::group::koranyi_ball_volume;
use hbilinear::harness::{lp_norm, NormEstimatorConfig};
use hbilinear::sampling::stream_rng;
use hbilinear::{FamilyParams, GroupPoint, LatticeFamily, TestFunction};
use proptest::prelude::*;

fn params(exponent: f64, truncation: f64) -> LatticeParams {
    LatticeParams {
        n: 1,
        decay: 3.0,
        growth: 11.0,
        exponent,
        truncation,
    }
}

const FAMILIES: [LatticeFamily; 3] = [LatticeFamily::A, LatticeFamily::B, LatticeFamily::C];

#[test]
fn supports_are_disjoint_at_minimal_decay() {
    for fam in FAMILIES {
        let lat = Lattice::new(fam, params(2.0, 50.0)).unwrap();
        let members = lat.members_sorted(100);
        assert_eq!(members.len(), 100);
        // horizontal reach of each support: [2b', 2b'+r] for the boxes, 2r around b' for the balls
        let reach: Vec<(Vec<f64>, f64)> = members
            .iter()
            .map(|b| {
                let r = lat.radius(b.knorm());
                let (scale, lo, hi) = match fam {
                    LatticeFamily::C => (1.0, -2.0 * r, 2.0 * r),
                    _ => (2.0, 0.0, r),
                };
                let c = b.horizontal().iter().map(|&c| scale * c as f64 + 0.5 * (lo + hi)).collect();
                (c, 0.5 * (hi - lo) + 1e-9)
            })
            .collect();
        let mut rng = stream_rng(17, fam as u64);
        let mut checked = 0u64;
        for (i, a) in members.iter().enumerate() {
            for _ in 0..10_000 {
                let x = lat.sample_support(a, &mut rng);
                assert!(lat.support_contains(a, &x), "{fam:?} {a:?}");
                for (j, b) in members.iter().enumerate() {
                    let (c, h) = &reach[j];
                    let near = c.iter().zip(x.z()).all(|(c, z)| (c - z).abs() <= *h);
                    if i != j && near {
                        checked += 1;
                        assert!(!lat.support_contains(b, &x), "{fam:?}: {a:?} meets {b:?}");
                    }
                }
            }
        }
        assert!(checked > 0);
    }
}

/// `∫|f|^p` by sampling every support uniformly; evaluation goes through the
/// descriptor, the reference is the closed-form series.
#[test]
fn lattice_norms_match_series() {
    for fam in FAMILIES {
        for p in [1.5, 2.0, 3.0] {
            let lat = Lattice::new(fam, params(p, 20.0)).unwrap();
            let f = TestFunction::LatticeSum {
                family: fam,
                params: params(p, 20.0),
            };
            let mut rng = stream_rng(5, p.to_bits());
            // the integrand is constant on each support, so one sample per member is exact
            let mut sum = 0.0;
            lat.for_each_member(|a, k| {
                let idx = hbilinear::LatticeIndex::new(a).unwrap();
                let x = lat.sample_support(&idx, &mut rng);
                sum += f.evaluate(&x).unwrap().abs().powf(p) * lat.support_measure(k);
            });
            let exact = f.norm_pow_closed_form(p, 1).unwrap();
            let series: f64 = {
                let mut s = 0.0;
                lat.for_each_member(|_, k| s += lat.weight(k).powf(p) * lat.support_measure(k));
                s
            };
            assert!((exact - series).abs() <= 1e-12 * series);
            assert!((sum - exact).abs() <= 1e-9 * exact, "{fam:?} p={p}: {sum} vs {exact}");
        }
    }
}

/// Far-field family over a finite window against the radial integral
/// `Q C_Q ∫ ρ^{Q−1−Qp/e} (log ρ)^{−pτ} dρ`.
#[test]
fn log_tail_norm_matches_radial_integral() {
    let f = TestFunction::LogPowerTail {
        power: -2.0,
        log_exponent: -0.75,
        cutoff: 16.0,
    };
    let p = 2.0;
    let cfg = NormEstimatorConfig {
        j_min: 4,
        j_max: 8,
        samples_per_stratum: 40_000,
        seed: 3,
        ..Default::default()
    };
    let est = lp_norm(1, p, &cfg, &f).unwrap();
    // ∫_{16}^{512} 4 C_Q ρ^{-1} (ln ρ)^{-1.5} dρ
    let a = 0.5;
    let exact_int = 4.0 * koranyi_ball_volume(1) * (16f64.ln().powf(-a) - 512f64.ln().powf(-a)) / a;
    assert!(est.integral.agrees_with(exact_int, 3.0), "{:?} vs {exact_int}", est.integral);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn family_a_symmetric_when_p_equals_q(p in 1.1f64..4.0, c in prop::collection::vec(-8.0f64..8.0, 3)) {
        let fp = FamilyParams { n: 1, decay: 4.0, growth: 15.5, p, q: p, truncation: 10.0 };
        let (f, g) = family_a_pair(&fp).unwrap();
        let x = GroupPoint::from_coords(&c).unwrap();
        prop_assert_eq!(f.evaluate(&x).unwrap(), g.evaluate(&x).unwrap());
        // and at a point inside a support
        let lat = Lattice::new(LatticeFamily::A, LatticeParams { n: 1, decay: 4.0, growth: 15.5, exponent: p, truncation: 10.0 }).unwrap();
        let a = &lat.members_sorted(5)[4];
        let mut rng = stream_rng(p.to_bits(), 0);
        let y = lat.sample_support(a, &mut rng);
        prop_assert!(f.evaluate(&y).unwrap() > 0.0);
        prop_assert_eq!(f.evaluate(&y).unwrap(), g.evaluate(&y).unwrap());
    }
}
