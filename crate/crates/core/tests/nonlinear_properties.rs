use matcircuit::builder::{CircuitBuilder, LinearCombination, Synthesized};
use matcircuit::field::{FieldElement, PrimeModulus};
use matcircuit::nonlinear::{
    counts, run_gadget, synth_bit_decompose, synth_exp_neg, synth_geq, synth_gelu, synth_max, synth_rescale,
    synth_softmax, FixedPointParams, Function,
};
use matcircuit::r1cs::Assignment;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn m61() -> PrimeModulus {
    PrimeModulus::mersenne61()
}

fn inputs(builder: &mut CircuitBuilder, vs: &[i128]) -> Vec<LinearCombination> {
    vs.iter()
        .map(|v| {
            let fe = FieldElement::from_i128(*v, builder.modulus()).unwrap();
            let var = builder.alloc_public("in", Some(fe)).unwrap();
            builder.lc(var)
        })
        .collect()
}

fn ok(s: &Synthesized) -> bool {
    s.instance.is_satisfied(s.assignment.as_ref().unwrap()).unwrap().satisfied
}

/// Perturbs each non-constant column in turn (flip for 0/1 values, +1
/// otherwise) and returns the columns whose mutation is still accepted.
fn surviving_mutations(s: &Synthesized) -> Vec<usize> {
    let base = s.assignment.as_ref().unwrap();
    let m = base.modulus().clone();
    (1..base.len())
        .filter(|&col| {
            let mut z = base.clone();
            let v = &base.values()[col];
            let mutated = if v.is_zero() || v.is_one() {
                FieldElement::one(&m) - v
            } else {
                v + &FieldElement::one(&m)
            };
            z.set(col, mutated).unwrap();
            s.instance.is_satisfied(&z).unwrap().satisfied
        })
        .collect()
}

fn assert_mutation_sound(s: &Synthesized) {
    assert!(ok(s));
    assert_eq!(surviving_mutations(s), Vec::<usize>::new());
}

fn small_params() -> FixedPointParams {
    FixedPointParams { scale_bits: 4, bit_width: 12, threshold: -64, exp_iters: 3 }
}

#[test]
fn every_gadget_is_mutation_sound() {
    let m = m61();
    let p = small_params();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let xs: Vec<i128> = (0..4).map(|_| rng.gen_range(-100..=100)).collect();

        let mut b = CircuitBuilder::new(&m);
        let l = inputs(&mut b, &[xs[0].abs()]);
        synth_bit_decompose(&mut b, &l[0], 8).unwrap();
        assert_mutation_sound(&b.finalize().unwrap());

        let mut b = CircuitBuilder::new(&m);
        let l = inputs(&mut b, &xs[..2]);
        synth_geq(&mut b, &l[0], &l[1], 10).unwrap();
        assert_mutation_sound(&b.finalize().unwrap());

        let mut b = CircuitBuilder::new(&m);
        let l = inputs(&mut b, &xs);
        synth_max(&mut b, &l, 10).unwrap();
        assert_mutation_sound(&b.finalize().unwrap());

        let mut b = CircuitBuilder::new(&m);
        let l = inputs(&mut b, &[xs[0] * 7]);
        synth_rescale(&mut b, &l[0], 4, 12).unwrap();
        assert_mutation_sound(&b.finalize().unwrap());

        let mut b = CircuitBuilder::new(&m);
        let l = inputs(&mut b, &[-xs[0].abs()]);
        synth_exp_neg(&mut b, &l[0], &p).unwrap();
        assert_mutation_sound(&b.finalize().unwrap());

        let mut b = CircuitBuilder::new(&m);
        let l = inputs(&mut b, &[xs[1] / 4]);
        synth_gelu(&mut b, &l[0], &p).unwrap();
        assert_mutation_sound(&b.finalize().unwrap());

        let mut b = CircuitBuilder::new(&m);
        let l = inputs(&mut b, &xs[..3]);
        synth_softmax(&mut b, &l, &p).unwrap();
        assert_mutation_sound(&b.finalize().unwrap());
    }
}

#[test]
fn max_is_exact_on_small_grid() {
    // scaled grid {−4, −3, ..., 4} at s = 0, every vector of length 1..=5
    let m = m61();
    let grid: Vec<i128> = (-4..=4).collect();
    let mut checked = 0;
    for len in 1..=5u32 {
        for code in 0..grid.len().pow(len) {
            let mut c = code;
            let xs: Vec<i128> = (0..len)
                .map(|_| {
                    let v = grid[c % grid.len()];
                    c /= grid.len();
                    v
                })
                .collect();
            let mut b = CircuitBuilder::new(&m);
            let l = inputs(&mut b, &xs);
            let mx = synth_max(&mut b, &l, 6).unwrap();
            assert_eq!(b.value(mx).unwrap().to_signed(), xs.iter().max().copied());
            assert!(ok(&b.finalize().unwrap()));
            checked += 1;
        }
    }
    assert_eq!(checked, 9 + 81 + 729 + 6561 + 59049);
}

#[test]
fn exp_is_monotone_on_clamped_range() {
    let m = m61();
    let p = FixedPointParams::default();
    let mut prev = -1i128;
    for x in p.threshold..=0 {
        let mut b = CircuitBuilder::new(&m);
        let l = inputs(&mut b, &[x as i128]);
        let out = synth_exp_neg(&mut b, &l[0], &p).unwrap();
        let v = b.value(out).unwrap().to_signed().unwrap();
        assert!(v >= prev, "exp({x}) = {v} < {prev}");
        prev = v;
    }
    assert_eq!(prev, 256);
}

#[test]
fn closed_form_counts() {
    let m = m61();
    for p in [FixedPointParams::default(), small_params(), FixedPointParams { scale_bits: 10, bit_width: 30, threshold: -8 << 10, exp_iters: 4 }] {
        let mut b = CircuitBuilder::new(&m);
        let l = inputs(&mut b, &[-5]);
        synth_exp_neg(&mut b, &l[0], &p).unwrap();
        assert_eq!(b.num_constraints(), counts::exp_neg(&p));

        let mut b = CircuitBuilder::new(&m);
        let l = inputs(&mut b, &[3]);
        synth_gelu(&mut b, &l[0], &p).unwrap();
        assert_eq!(b.num_constraints(), counts::gelu(&p));

        for d in 1..=4 {
            let mut b = CircuitBuilder::new(&m);
            let l = inputs(&mut b, &vec![1; d]);
            synth_softmax(&mut b, &l, &p).unwrap();
            assert_eq!(b.num_constraints(), counts::softmax(d, &p));
        }
    }
    // hand tally at the defaults: 25 + 1 + 33 + 6·36 + 1
    assert_eq!(counts::exp_neg(&FixedPointParams::default()), 276);
}

#[test]
fn forged_outputs_are_rejected() {
    // replace the softmax output of the first entry by a neighbour value
    let m = m61();
    let p = FixedPointParams::default();
    let mut b = CircuitBuilder::new(&m);
    let l = inputs(&mut b, &[512, 256, 128]);
    let outs = synth_softmax(&mut b, &l, &p).unwrap();
    let s = b.finalize().unwrap();
    let col = s.layout.column(outs[0]).unwrap();
    for delta in [-1i64, 1] {
        let mut z: Assignment = s.assignment.clone().unwrap();
        let v = &z.values()[col] + &FieldElement::from_i64(delta, &m).unwrap();
        z.set(col, v).unwrap();
        assert!(!s.instance.is_satisfied(&z).unwrap().satisfied);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn softmax_sums_to_one(xs in proptest::collection::vec(-8.0f64..8.0, 1..9)) {
        let p = FixedPointParams::default();
        let r = run_gadget(Function::Softmax, &xs, &p, &m61()).unwrap();
        prop_assert!(r.satisfied);
        prop_assert!(r.scaled.iter().all(|v| *v >= 0));
        let sum: f64 = r.outputs.iter().sum();
        prop_assert!((sum - 1.0).abs() <= xs.len() as f64 / 256.0, "sum {}", sum);
    }

    #[test]
    fn gadgets_complete(x in -4000i128..=4000, y in -4000i128..=4000) {
        let m = m61();
        let p = FixedPointParams::default();
        let mut b = CircuitBuilder::new(&m);
        let l = inputs(&mut b, &[x, y]);
        let g = synth_geq(&mut b, &l[0], &l[1], 24).unwrap();
        prop_assert_eq!(b.value(g).unwrap().is_one(), x >= y);
        let q = synth_rescale(&mut b, &l[0], 5, 24).unwrap();
        prop_assert_eq!(b.value(q.quotient).unwrap().to_signed(), Some(x.div_euclid(32)));
        // −|y|
        let sign = FieldElement::from_i64(if y > 0 { -1 } else { 1 }, &m).unwrap();
        synth_exp_neg(&mut b, &l[1].scale(&sign), &p).unwrap();
        synth_gelu(&mut b, &l[1], &p).unwrap();
        prop_assert!(ok(&b.finalize().unwrap()));
    }
}
