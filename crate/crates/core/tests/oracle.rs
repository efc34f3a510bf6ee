use magnetotunnel::field::{find_vortices, measure_vortex, GridField, VortexFilter};
use magnetotunnel::oracle::*;
use magnetotunnel::Error;

const NU: f64 = 4.0;
const ALPHA: f64 = 1.0;

fn coarse() -> ProblemSpec {
    ProblemSpec {
        nx: 224,
        ny: 128,
        ..ProblemSpec::new(NU, ALPHA)
    }
}

fn solve(spec: ProblemSpec) -> EigenSolution {
    solve_ground(&build_problem(spec).unwrap(), SolverOptions::default()).unwrap()
}

#[test]
fn zero_field_line_reproduces_exponential() {
    let sol = solve(ProblemSpec::zero_field_line(NU, ALPHA));
    assert!((sol.eigenvalue + 1.0).abs() < 0.01, "{}", sol.eigenvalue);
    let g = &sol.psi;
    let pts: Vec<(f64, f64)> = (0..g.nx / 2).map(|i| (g.x(i), g.at(i, 0).norm().ln())).collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2)));
    let slope = num / den;
    assert!((slope / -NU - 1.0).abs() < 0.01, "slope {slope}");
}

#[test]
fn zero_field_error_is_second_order() {
    let err = |nx: usize| {
        let sol = solve(ProblemSpec {
            nx,
            ..ProblemSpec::zero_field_line(NU, ALPHA)
        });
        (sol.eigenvalue + 1.0).abs()
    };
    let e: Vec<f64> = [128, 256, 512].into_iter().map(err).collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.1, "order {order} from {e:?}");
    }
}

#[test]
fn operator_is_hermitian_at_default_size() {
    let p = build_problem(ProblemSpec::new(NU, ALPHA)).unwrap();
    let h = p.hermiticity(3, 11);
    assert!(h.absolute < 1e-12, "{h:?}");
}

#[test]
fn under_resolved_grid_names_the_scale() {
    match build_problem(ProblemSpec {
        nx: 64,
        ..ProblemSpec::new(NU, ALPHA)
    }) {
        Err(Error::Resolution { scale, .. }) => assert!(scale.contains("length") || scale.contains("core")),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        build_problem(ProblemSpec {
            y_extent: Some(1.05),
            ..ProblemSpec::new(NU, ALPHA)
        }),
        Err(Error::Domain { .. })
    ));
}

#[test]
fn coarse_solution_properties() {
    let sol = solve(coarse());
    assert!(sol.eigenvalue_imag.abs() < 1e-9);

    // gauge shift y -> y + 0.3 leaves the spectrum and |ψ| unchanged
    let shifted = solve(ProblemSpec {
        gauge_offset: 0.3,
        ..coarse()
    });
    assert!((shifted.eigenvalue - sol.eigenvalue).abs() < 1e-8);
    let peak = sol.psi.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let moduli = sol.psi.data.iter().zip(&shifted.psi.data);
    assert!(moduli.map(|(a, b)| (a.norm() - b.norm()).abs()).fold(0.0, f64::max) < 1e-6 * peak);

    // |ψ(x, y)| = |ψ(x, -y)|
    let g = &sol.psi;
    let mut parity = 0.0f64;
    for i in 0..g.nx {
        for j in 0..g.ny {
            parity = parity.max((g.at(i, j).norm() - g.at(i, g.ny - 1 - j).norm()).abs());
        }
    }
    assert!(parity < 1e-6 * peak, "{parity}");

    // every detected node winds once
    let field = GridField::from_oracle(sol.psi.clone(), ALPHA, NU).unwrap();
    let vortices = find_vortices(&field, VortexFilter::for_alpha(ALPHA));
    assert!(!vortices.is_empty());
    for (x, y, w) in vortices {
        assert_eq!(w.abs(), 1);
        let r = measure_vortex(&field, x, y, 0.05).unwrap();
        assert_eq!(r.winding.abs(), 1);
    }

    // refinement by one halving moves Ẽ₁ by less than 1%
    let fine = solve(ProblemSpec {
        nx: 448,
        ny: 256,
        ..ProblemSpec::new(NU, ALPHA)
    });
    assert!((fine.eigenvalue / sol.eigenvalue - 1.0).abs() < 0.01, "{} {}", sol.eigenvalue, fine.eigenvalue);
}

#[test]
fn self_consistent_robin_drifts_downward() {
    // the discrete energy sits slightly above -(κ/ν)², so κ → ν sqrt(-Ẽ₁) only shrinks
    let line = ProblemSpec::zero_field_line(NU, ALPHA);
    match solve_self_consistent(line, SolverOptions::default(), 5) {
        Err(Error::NonConvergence { history, .. }) => {
            assert_eq!(history.len(), 6);
            assert!(history.windows(2).all(|w| w[1] < w[0]), "{history:?}");
        }
        other => panic!("{other:?}"),
    }
}
