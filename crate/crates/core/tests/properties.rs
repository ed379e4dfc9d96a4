use calabi_core::catalog;
use calabi_core::expr::{BinOp, Func, Node};
use calabi_core::invariants::CalabiInvariants;
use calabi_core::legendre::{legendre_point, AffineTransform};
use calabi_core::pde::{identity_coefficient, identity_coefficient_vanishes, in_window, in_window_rational};
use calabi_core::{ConvexFunction, Domain, Expression};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn func() -> impl Strategy<Value = Func> {
    prop_oneof![
        Just(Func::Ln),
        Just(Func::Exp),
        Just(Func::Sqrt),
        Just(Func::Sin),
        Just(Func::Cos),
        Just(Func::Sinh),
        Just(Func::Cosh),
    ]
}

fn binop() -> impl Strategy<Value = BinOp> {
    prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)]
}

fn node(dim: usize) -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![(-5.0f64..5.0).prop_map(Node::Const), (0..dim).prop_map(Node::Var),];
    leaf.prop_recursive(5, 32, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Node::Neg(Box::new(a))),
            (func(), inner.clone()).prop_map(|(f, a)| Node::Func(f, Box::new(a))),
            (binop(), inner.clone(), inner.clone()).prop_map(|(op, a, b)| Node::Bin(op, Box::new(a), Box::new(b))),
            (inner, prop_oneof![Just(2.0), Just(-1.0), Just(0.5), Just(3.0)])
                .prop_map(|(a, p)| Node::Pow(Box::new(a), p)),
        ]
    })
}

fn same(a: Result<f64, calabi_core::Error>, b: Result<f64, calabi_core::Error>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x == y || (x - y).abs() <= 1e-12 * x.abs().max(y.abs()),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

/// Random element of the Calabi group: `x_{n+1}` maps to itself plus an
/// affine function of the base coordinates.
fn calabi_transform(n: usize, entries: &[f64]) -> AffineTransform {
    let m = n + 1;
    let mut a = DMatrix::from_fn(m, m, |i, j| entries[i * m + j]);
    for i in 0..m {
        a[(i, i)] += 3.0;
        a[(i, n)] = 0.0;
    }
    a[(n, n)] = 1.0;
    let b = DVector::from_fn(m, |i, _| entries[m * m + i]);
    AffineTransform::new(a, b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn printing_then_parsing_round_trips(root in node(3), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        // `(-c)` comes back as a negation rather than a negative constant,
        // so compare printed forms and values instead of trees
        let e = Expression::from_node(root, 3).unwrap();
        let back = Expression::parse(&e.to_string(), 3).unwrap();
        prop_assert_eq!(back.to_string(), e.to_string());
        let p = [x, y, 0.5];
        prop_assert!(same(e.evaluate(&p), back.evaluate(&p)));
    }

    #[test]
    fn compiled_program_matches_tree(root in node(2), x in -2.0f64..2.0, y in -2.0f64..2.0) {
        let e = Expression::from_node(root, 2).unwrap();
        let p = [x, y];
        prop_assert!(same(e.evaluate(&p), e.compile().evaluate(&p)));
    }

    #[test]
    fn calabi_group_is_closed(
        a in prop::collection::vec(-1.0f64..1.0, 12),
        b in prop::collection::vec(-1.0f64..1.0, 12),
        p in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let s = calabi_transform(2, &a);
        let t = calabi_transform(2, &b);
        let st = s.compose(&t).unwrap();
        prop_assert!(s.is_calabi() && t.is_calabi() && st.is_calabi());
        prop_assert!(st.inverse().unwrap().is_calabi());
        let direct = s.apply(&t.apply(&p).unwrap()).unwrap();
        let composed = st.apply(&p).unwrap();
        for (u, v) in direct.iter().zip(&composed) {
            prop_assert!((u - v).abs() < 1e-12);
        }
        let back = st.inverse().unwrap().apply(&composed).unwrap();
        for (u, v) in back.iter().zip(&p) {
            prop_assert!((u - v).abs() < 1e-9);
        }
    }

    /// `f(Ax) + c·x` with `det A = 1` has the same invariants at `x` as `f` at `Ax`.
    #[test]
    fn invariants_survive_unimodular_changes(
        s in -0.8f64..0.8, t in -0.8f64..0.8, c1 in -2.0f64..2.0, c2 in -2.0f64..2.0,
        g in 1.0f64..3.0, x2 in -1.0f64..1.0,
    ) {
        // A = [[1, s], [0, 1]] · [[1, 0], [t, 1]]
        let a = [[1.0 + s * t, s], [t, 1.0]];
        let base = "-0.25*ln(x1 - x2^2/2)";
        let sub = |i: usize| format!("({} * x1 + {} * x2)", a[i][0], a[i][1]);
        let src = base.replace("x1", "X").replace("x2", &sub(1)).replace("X", &sub(0))
            + &format!(" + {c1} * x1 + {c2} * x2");
        let moved = ConvexFunction::new(
            Expression::parse(&src, 2).unwrap(),
            Domain::parse(&[&format!("{} - {}^2/2", sub(0), sub(1))], 2).unwrap(),
            None,
        ).unwrap();
        // pick x with A x = (g + x2²/2, x2)
        let target = [g + x2 * x2 / 2.0, x2];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let x = [
            (a[1][1] * target[0] - a[0][1] * target[1]) / det,
            (a[0][0] * target[1] - a[1][0] * target[0]) / det,
        ];
        let f = catalog::get("thm13a", 2).unwrap().function;
        let i0 = CalabiInvariants::at(&f, &target).unwrap();
        let i1 = CalabiInvariants::at(&moved, &x).unwrap();
        prop_assert!((i0.metric.det - i1.metric.det).abs() < 1e-10 * i0.metric.det);
        prop_assert!((i0.connection.pick_j - i1.connection.pick_j).abs() < 1e-9);
        prop_assert!((i0.connection.tnorm2 - i1.connection.tnorm2).abs() < 1e-9);
        prop_assert!((i0.curvature.scalar_jt - i1.curvature.scalar_jt).abs() < 1e-9);
    }

    #[test]
    fn riemann_tensor_has_its_symmetries(seed in 0u64..1000) {
        for name in ["thm13b", "sphere_case", "hyperbolic_case"] {
            let e = catalog::get(name, 3).unwrap();
            let p = &e.samples(seed, 1)[0];
            let inv = CalabiInvariants::at(&e.function, p).unwrap();
            prop_assert!(inv.curvature.symmetry_defect() < 1e-10);
        }
    }

    #[test]
    fn legendre_map_is_an_involution(x1 in 1.0f64..3.0, x2 in -1.0f64..1.0, x3 in -1.0f64..1.0) {
        let f = catalog::get("thm13b", 3).unwrap().function;
        let g = catalog::get("dual59", 3).unwrap().function;
        let y = [x1, x2, x3];
        let x = legendre_point(&f, &y).unwrap();
        let back = legendre_point(&g, &x.x).unwrap();
        for (u, v) in back.x.iter().zip(&y) {
            prop_assert!((u - v).abs() < 1e-9);
        }
        // u(x) = g(x) and the two transforms add up to y·x
        prop_assert!((x.u_value + back.u_value - y.iter().zip(&x.x).map(|(a, b)| a * b).sum::<f64>()).abs() < 1e-9);
    }

    #[test]
    fn rational_window_agrees_with_floats(p in -200i64..200, q in 1i64..100, n in 2usize..50) {
        let a = p as f64 / q as f64;
        let (lo, hi) = calabi_core::pde::exponent_window(n).unwrap();
        let exact = in_window_rational(p, q, n).unwrap();
        if (a - lo).abs() > 1e-9 && (a - hi).abs() > 1e-9 {
            prop_assert_eq!(exact, in_window(a, n).unwrap());
        }
    }

    #[test]
    fn coefficient_roots_agree_with_floats(p in -60i64..60, q in 1i64..30, n in 2usize..7) {
        let c = identity_coefficient(n, p as f64 / q as f64);
        prop_assert_eq!(identity_coefficient_vanishes(n, p, q), c.abs() < 1e-12);
    }
}
