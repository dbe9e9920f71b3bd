//! Built-in problem catalog.

use std::f64::consts::PI;

use crate::config::*;

pub const PRESETS: &[(&str, &str)] = &[
    ("pendulum_anticoercive", "relativistic pendulum rho=1, beta=pi/2, periodic j, mean-zero sinusoidal h (anti-coercive)"),
    ("pendulum_semicoercive", "relativistic pendulum rho=1, beta=-pi/2, periodic j (semi-coercive; solution of saddle type)"),
    ("pendulum_periodic", "componentwise pendulum rho*sum(cos u_i - 1), periods 2*pi, periodic j (periodic-potential reduction)"),
    ("exp_steklov", "anti-coercive pendulum with j = (exp|x-y|^2 - 1)/2 (nonlinear Neumann-Steklov coupling)"),
    ("strip_sigma_half", "anti-coercive pendulum, j = indicator of the strip |x-y| <= T a/2"),
    ("strip_sigma_quarter", "anti-coercive pendulum, j = indicator of the strip |x-y| <= T a/4"),
    ("strip_sigma_exp", "anti-coercive pendulum, strip |x-y| <= T a/2 plus (exp|x-y|^2 - 1)/2"),
    ("dirichlet_universal", "pendulum with homogeneous Dirichlet conditions (lambda_1 > 0: solvable for every continuous F)"),
    ("dirichlet_infeasible_gap", "auxiliary Dirichlet data with |y - x| = 1.5 T a > T a (no solution)"),
    ("neumann_manufactured", "auxiliary Neumann problem with manufactured solution 0.15 sin(pi t) + 0.1"),
    ("antiperiodic", "anti-coercive pendulum with antiperiodic conditions u(0) = -u(T)"),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}

fn base(kind: ProblemKind, intervals: usize) -> ProblemConfig {
    ProblemConfig {
        preset: None,
        problem: ProblemSection {
            kind,
            t_end: 1.0,
            intervals,
            dim: 1,
        },
        phi: PhiSection {
            variant: "relativistic".into(),
            a: 1.0,
            p: None,
        },
        boundary: boundary("periodic"),
        potential: PotentialSection {
            variant: "zero".into(),
            rho: None,
            beta: None,
            k: None,
            knots: None,
            values: None,
            periods: None,
        },
        forcing: ForcingSection {
            variant: "none".into(),
            amplitude: None,
            cycles: None,
            value: None,
            angular: None,
            offset: None,
            mean_zero: false,
        },
        solver: SolverSection::default(),
        output: OutputSection::default(),
    }
}

fn boundary(variant: &str) -> BoundarySection {
    BoundarySection {
        variant: variant.into(),
        sigma: None,
        a_coef: None,
        b_coef: None,
        g: "none".into(),
        kappa: None,
        x: None,
        y: None,
    }
}

fn pendulum(beta: f64) -> ProblemConfig {
    let mut c = base(ProblemKind::Full, 800);
    c.potential.variant = "pendulum".into();
    c.potential.rho = Some(1.0);
    c.potential.beta = Some(beta);
    c.forcing.variant = "sine".into();
    c.forcing.amplitude = Some(vec![0.5]);
    c.forcing.cycles = Some(1.0);
    c.forcing.mean_zero = true;
    c
}

pub fn preset(name: &str) -> Option<ProblemConfig> {
    let mut c = match name {
        "pendulum_anticoercive" => {
            let mut c = pendulum(PI / 2.0);
            c.solver.mode = "minimize".into();
            c
        }
        "pendulum_semicoercive" => {
            let mut c = pendulum(-PI / 2.0);
            c.solver.mode = "critical_point".into();
            c
        }
        "pendulum_periodic" => {
            let mut c = pendulum(0.0);
            c.potential.variant = "pendulum_components".into();
            c.potential.beta = None;
            c.potential.periods = Some(vec![2.0 * PI]);
            c
        }
        "exp_steklov" => {
            let mut c = pendulum(PI / 2.0);
            c.boundary = boundary("full_space");
            c.boundary.g = "exp".into();
            c
        }
        "strip_sigma_half" | "strip_sigma_quarter" | "strip_sigma_exp" => {
            let mut c = pendulum(PI / 2.0);
            c.boundary = boundary("strip");
            let frac = if name == "strip_sigma_quarter" { 0.25 } else { 0.5 };
            c.boundary.sigma = Some(frac * c.problem.t_end * c.phi.a);
            if name == "strip_sigma_exp" {
                c.boundary.g = "exp".into();
            }
            c
        }
        "dirichlet_universal" => {
            let mut c = pendulum(PI / 2.0);
            c.boundary = boundary("dirichlet");
            c.forcing.variant = "constant".into();
            c.forcing.amplitude = None;
            c.forcing.cycles = None;
            c.forcing.value = Some(vec![2.0]);
            c.forcing.mean_zero = false;
            c
        }
        "dirichlet_infeasible_gap" => {
            let mut c = base(ProblemKind::Auxiliary, 200);
            c.boundary = boundary("dirichlet");
            c.boundary.x = Some(vec![0.0]);
            c.boundary.y = Some(vec![1.5]);
            c
        }
        "neumann_manufactured" => {
            let mut c = base(ProblemKind::Auxiliary, 400);
            c.boundary = boundary("neumann");
            c.forcing.variant = "manufactured".into();
            c.forcing.amplitude = Some(vec![0.15]);
            c.forcing.angular = Some(PI);
            c.forcing.offset = Some(vec![0.1]);
            c
        }
        "antiperiodic" => {
            let mut c = pendulum(PI / 2.0);
            c.boundary = boundary("antiperiodic");
            c.forcing.variant = "cosine".into();
            c
        }
        _ => return None,
    };
    c.preset = Some(name.into());
    Some(c)
}
