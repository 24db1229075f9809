use proptest::prelude::*;

use spinglass::ising::{energy, parse_instance, serialize_instance};
use spinglass::{IsingInstance, SpinConfiguration};

fn instance() -> impl Strategy<Value = (IsingInstance, Vec<i8>)> {
    (2usize..10).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let m = pairs.len();
        (
            proptest::collection::vec(proptest::option::of(-50i64..=50), m),
            proptest::collection::vec(-20i64..=20, n),
            proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], n),
            0u32..3,
        )
            .prop_map(move |(js, hs, spins, scale)| {
                let couplings = pairs
                    .iter()
                    .zip(js)
                    .filter_map(|(&(i, j), v)| v.map(|v| (i, j, v)));
                let mut inst = IsingInstance::from_couplings(n, couplings)
                    .with_biases(hs.into_iter().enumerate().filter(|&(_, h)| h != 0));
                inst.scale = scale;
                (inst, spins)
            })
    })
}

fn canonical(inst: &IsingInstance) -> IsingInstance {
    let mut c = parse_instance(&serialize_instance(inst)).unwrap();
    c.canonicalize_scale();
    c
}

proptest! {
    #[test]
    fn serialization_round_trips((inst, _) in instance()) {
        let text = serialize_instance(&inst);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(serialize_instance(&back), text);
        let mut expected = inst.clone();
        expected.canonicalize_scale();
        prop_assert_eq!(back.scale, expected.scale);
        let nonzero = |i: &IsingInstance| {
            i.couplings.iter().filter(|c| c.value != 0).map(|c| (c.i, c.j, c.value)).collect::<Vec<_>>()
        };
        prop_assert_eq!(nonzero(&back), nonzero(&expected));
    }

    #[test]
    fn energy_is_linear_in_each_term((inst, spins) in instance(), pick in any::<prop::sample::Index>()) {
        let inst = canonical(&inst);
        prop_assume!(!inst.couplings.is_empty());
        let cfg = SpinConfiguration::new(spins).unwrap();
        let base = energy(&inst, &cfg).unwrap();
        let k = pick.index(inst.couplings.len());
        let c = inst.couplings[k];
        let mut doubled = inst.clone();
        doubled.couplings[k].value *= 2;
        let s = cfg.spins();
        prop_assert_eq!(energy(&doubled, &cfg).unwrap() - base, c.value * (s[c.i] * s[c.j]) as i64);
    }

    #[test]
    fn global_flip_negates_only_the_bias_term((inst, spins) in instance()) {
        let cfg = SpinConfiguration::new(spins).unwrap();
        let flipped = cfg.flipped();
        let h: i64 = inst.biases.iter().map(|b| b.value * cfg.spins()[b.i] as i64).sum();
        prop_assert_eq!(energy(&inst, &cfg).unwrap() - energy(&inst, &flipped).unwrap(), 2 * h);
        let mut no_bias = inst.clone();
        no_bias.biases.clear();
        prop_assert_eq!(energy(&no_bias, &cfg).unwrap(), energy(&no_bias, &flipped).unwrap());
    }

    #[test]
    fn integer_instances_have_integer_energy((inst, spins) in instance()) {
        let mut inst = inst;
        inst.scale = 0;
        let cfg = SpinConfiguration::new(spins).unwrap();
        let e = energy(&inst, &cfg).unwrap();
        prop_assert_eq!(inst.format_value(e), e.to_string());
    }
}
