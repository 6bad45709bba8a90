use proptest::prelude::*;

use qsl2::canonical::{split_expand, TableSource};
use qsl2::repmod::{act, act_k, full_basis, inner_product, rho_twist, Generator};
use qsl2::rmatrix::{PairMaps, PermWord};
use qsl2::{BarInvolution, Composition, ModuleVector, RingElem, Sign};

fn ring() -> impl Strategy<Value = RingElem> {
    prop::collection::vec((-6i64..=6, -3i64..=3), 0..4).prop_map(|t| RingElem::laurent(&t))
}

fn composition(max_len: usize, max_part: usize) -> impl Strategy<Value = Composition> {
    prop::collection::vec(0..=max_part, 1..=max_len).prop_map(|p| Composition::new(p).unwrap())
}

fn vector_in(d: Composition) -> impl Strategy<Value = ModuleVector> {
    let basis = full_basis(&d);
    prop::collection::vec(ring(), basis.len()).prop_map(move |cs| {
        let mut v = ModuleVector::zero(&d);
        for (r, c) in basis.iter().zip(cs) {
            v.add_scaled(&c, &ModuleVector::basis(&d, r.clone()).unwrap());
        }
        v
    })
}

fn module_and_vector(max_len: usize, max_part: usize) -> impl Strategy<Value = ModuleVector> {
    composition(max_len, max_part).prop_flat_map(vector_in)
}

fn two_vectors(
    max_len: usize,
    max_part: usize,
) -> impl Strategy<Value = (ModuleVector, ModuleVector)> {
    composition(max_len, max_part).prop_flat_map(|d| (vector_in(d.clone()), vector_in(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bar_is_an_antilinear_involution(u in module_and_vector(3, 2), c in ring()) {
        let bar = BarInvolution::standard().unwrap();
        let pu = bar.apply(&u).unwrap();
        prop_assert_eq!(bar.apply(&pu).unwrap(), u.clone());
        prop_assert_eq!(bar.apply(&u.scale(&c)).unwrap(), pu.scale(&c.bar()));
    }

    #[test]
    fn bar_commutes_with_e_and_f(u in module_and_vector(3, 2)) {
        let bar = BarInvolution::standard().unwrap();
        let pu = bar.apply(&u).unwrap();
        for g in [Generator::E, Generator::F] {
            prop_assert_eq!(bar.apply(&act(&u, g)).unwrap(), act(&pu, g));
        }
        prop_assert_eq!(bar.apply(&act_k(&u, false)).unwrap(), act_k(&pu, true));
    }

    #[test]
    fn form_is_symmetric_and_twisted_adjoint((u, w) in two_vectors(3, 2)) {
        prop_assert_eq!(inner_product(&u, &w).unwrap(), inner_product(&w, &u).unwrap());
        for g in [Generator::K, Generator::E, Generator::F] {
            let xu = match g {
                Generator::K => act_k(&u, false),
                _ => act(&u, g),
            };
            prop_assert_eq!(
                inner_product(&xu, &w).unwrap(),
                inner_product(&u, &rho_twist(g).apply(&w)).unwrap()
            );
        }
    }

    #[test]
    fn braiding_inverts_and_intertwines(u in module_and_vector(3, 2), sign in prop::bool::ANY) {
        let bar = BarInvolution::standard().unwrap();
        let mut maps = PairMaps::new(&bar);
        let d = u.ambient().clone();
        let sign = if sign { Sign::Plus } else { Sign::Minus };
        let l = d.len();
        let word = PermWord::new(l, (1..l).collect()).unwrap();
        let r = maps.r_move(&d, &word, sign).unwrap();
        let back = maps.r_move(&r.target, &word.inverse(), sign.flip()).unwrap();
        let ru = r.map.apply(&u).unwrap();
        prop_assert_eq!(back.map.apply(&ru).unwrap(), u.clone());
        for g in [Generator::E, Generator::F] {
            prop_assert_eq!(r.map.apply(&act(&u, g)).unwrap(), act(&ru, g));
        }
    }

    #[test]
    fn canonical_coordinates_round_trip(u in module_and_vector(3, 2)) {
        let bar = BarInvolution::standard().unwrap();
        let mut tables = TableSource::new(&bar);
        let d = u.ambient().clone();
        let mut rebuilt = ModuleVector::zero(&d);
        for level in 0..=d.total() {
            let slice = ModuleVector::from_terms(
                &d,
                u.terms().filter(|(r, _)| r.total() == level).map(|(r, c)| (r.clone(), c.clone())),
            ).unwrap();
            let t = tables.get(&d, level).unwrap();
            for (s, c) in t.to_canonical(&slice).unwrap() {
                rebuilt.add_scaled(&c, t.row(&s).unwrap());
            }
        }
        prop_assert_eq!(rebuilt, u);
    }

    #[test]
    fn split_expansions_reassemble(d in composition(4, 2), level in 0usize..=8, cut in 1usize..4) {
        prop_assume!(d.len() >= 2 && level <= d.total());
        let cut = 1 + (cut - 1) % (d.len() - 1);
        let bar = BarInvolution::standard().unwrap();
        let mut tables = TableSource::new(&bar);
        let exp = split_expand(&mut tables, &d, cut, level).unwrap();
        qsl2::canonical::check_split_structure(&exp).unwrap();
        for row in &exp.rows {
            let mut sum = ModuleVector::zero(&d);
            for (a, b, c) in &row.terms {
                let ba = tables.get(&exp.left, a.total()).unwrap().row(a).unwrap().clone();
                let bb = tables.get(&exp.right, b.total()).unwrap().row(b).unwrap().clone();
                sum.add_scaled(c, &qsl2::repmod::tensor(&ba, &bb));
            }
            prop_assert_eq!(&sum, tables.get(&d, level).unwrap().row(&row.index).unwrap());
        }
    }
}
