use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinglass::fcl::{generate_fcl_indexed, FclParams};
use spinglass::ground_state::ground_state;
use spinglass::heuristics::{
    geometric_ladder, icm_move, pt_icm, simulated_annealing, AnnealSchedule, CompiledInstance, PtIcmParams,
};
use spinglass::ising::energy;
use spinglass::topology::build_logical_square;

fn short_pt(seed: u64) -> PtIcmParams {
    PtIcmParams {
        betas: geometric_ladder(0.2, 3.0, 8),
        sweeps: 40,
        seed,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn heuristics_never_beat_the_exact_optimum(seed in any::<u64>(), c in 3usize..=7) {
        let inst = generate_fcl_indexed(&build_logical_square(c).unwrap(), &FclParams::new(0.75, 5, seed), 0).unwrap();
        let e0 = ground_state(&inst).unwrap().energy;
        let pt = pt_icm(&inst, &short_pt(seed)).unwrap();
        prop_assert!(pt.energy >= e0);
        prop_assert_eq!(energy(&inst, &pt.config).unwrap(), pt.energy);
        let schedule = AnnealSchedule::Geometric { beta_min: 0.1, beta_max: 3.0, steps: 10, sweeps_per_step: 2 };
        let sa = simulated_annealing(&inst, &schedule, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(sa.energy >= e0);
        prop_assert_eq!(energy(&inst, &sa.config).unwrap(), sa.energy);
    }

    #[test]
    fn identical_seeds_give_identical_traces(seed in any::<u64>()) {
        let inst = generate_fcl_indexed(&build_logical_square(5).unwrap(), &FclParams::new(1.0, 5, seed), 0).unwrap();
        let a = pt_icm(&inst, &short_pt(seed)).unwrap();
        let b = pt_icm(&inst, &short_pt(seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cluster_moves_conserve_the_energy_sum(seed in any::<u64>(), c in 3usize..=8) {
        let inst = generate_fcl_indexed(&build_logical_square(c).unwrap(), &FclParams::new(1.0, 5, seed), 0).unwrap();
        let compiled = CompiledInstance::new(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let random = |rng: &mut ChaCha8Rng| -> Vec<i8> {
            (0..inst.n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()
        };
        let mut a = random(&mut rng);
        let mut b = random(&mut rng);
        let (mut ea, mut eb) = (compiled.energy(&a), compiled.energy(&b));
        for _ in 0..50 {
            let sum = ea + eb;
            icm_move(&compiled, &mut a, &mut ea, &mut b, &mut eb, &mut rng);
            prop_assert_eq!(ea + eb, sum);
            prop_assert_eq!(compiled.energy(&a), ea);
            prop_assert_eq!(compiled.energy(&b), eb);
            if a == b {
                b = random(&mut rng);
                eb = compiled.energy(&b);
            }
        }
    }
}
