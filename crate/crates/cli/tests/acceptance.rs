//! Acceptance gate: one line per criterion, non-zero exit if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;

use prepost::random::{self, rng};
use prepost::report::{quantize, Report};
use prepost::{
    abl_over_family, abl_pure, assign_probabilities, build_family, decoherence_matrix, hm_scenario,
    projector_from_vector, spin_scenario, spin_states, ComplexMatrix, Error, SpaceDescriptor,
    DEFAULT_TOL,
};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Dense square matrices as plain row-major vectors, independent of the
/// library's linear algebra.
mod oracle {
    use super::{c, Complex64};

    #[derive(Clone)]
    pub struct M {
        pub n: usize,
        pub a: Vec<Complex64>,
    }

    impl M {
        pub fn zeros(n: usize) -> Self {
            M {
                n,
                a: vec![c(0.0); n * n],
            }
        }

        pub fn eye(n: usize) -> Self {
            let mut m = Self::zeros(n);
            for i in 0..n {
                m.a[i * n + i] = c(1.0);
            }
            m
        }

        pub fn at(&self, i: usize, j: usize) -> Complex64 {
            self.a[i * self.n + j]
        }

        pub fn ket_bra(v: &[Complex64]) -> Self {
            let n = v.len();
            let mut m = Self::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    m.a[i * n + j] = v[i] * v[j].conj();
                }
            }
            m
        }

        pub fn mul(&self, o: &M) -> M {
            let n = self.n;
            let mut m = Self::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    let mut s = c(0.0);
                    for k in 0..n {
                        s += self.at(i, k) * o.at(k, j);
                    }
                    m.a[i * n + j] = s;
                }
            }
            m
        }

        pub fn kron(&self, o: &M) -> M {
            let n = self.n * o.n;
            let mut m = Self::zeros(n);
            for i in 0..self.n {
                for j in 0..self.n {
                    for k in 0..o.n {
                        for l in 0..o.n {
                            m.a[(i * o.n + k) * n + j * o.n + l] = self.at(i, j) * o.at(k, l);
                        }
                    }
                }
            }
            m
        }

        pub fn dag(&self) -> M {
            let n = self.n;
            let mut m = Self::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    m.a[j * n + i] = self.at(i, j).conj();
                }
            }
            m
        }

        pub fn minus(&self, o: &M) -> M {
            M {
                n: self.n,
                a: self.a.iter().zip(&o.a).map(|(x, y)| x - y).collect(),
            }
        }

        pub fn scale(&self, f: f64) -> M {
            M {
                n: self.n,
                a: self.a.iter().map(|x| x * f).collect(),
            }
        }

        pub fn trace(&self) -> Complex64 {
            (0..self.n).map(|i| self.at(i, i)).sum()
        }
    }

    /// Permutation taking factor order `order` (a permutation of the factor
    /// positions) to the native order: `P |native digits> = |reordered digits>`.
    pub fn permutation(dims: &[usize], order: &[usize]) -> M {
        let n: usize = dims.iter().product();
        let mut p = M::zeros(n);
        for idx in 0..n {
            let mut digits = vec![0; dims.len()];
            let mut r = idx;
            for k in (0..dims.len()).rev() {
                digits[k] = r % dims[k];
                r /= dims[k];
            }
            let mut j = 0;
            for &k in order {
                j = j * dims[k] + digits[k];
            }
            p.a[j * n + idx] = c(1.0);
        }
        p
    }

    /// `X` on factor positions `targets`, identity elsewhere, via `P† (X ⊗ I) P`.
    pub fn lift(x: &M, targets: &[usize], dims: &[usize]) -> M {
        let rest: Vec<usize> = (0..dims.len()).filter(|k| !targets.contains(k)).collect();
        let rest_dim: usize = rest.iter().map(|&k| dims[k]).product();
        let order: Vec<usize> = targets.iter().chain(&rest).copied().collect();
        let p = permutation(dims, &order);
        p.dag().mul(&x.kron(&M::eye(rest_dim))).mul(&p)
    }

    pub fn bell(d: usize) -> M {
        let mut v = vec![c(0.0); d * d];
        for i in 0..d {
            v[i * d + i] = c(1.0 / (d as f64).sqrt());
        }
        M::ket_bra(&v)
    }
}

fn ac1() -> Outcome {
    let s = spin_states();
    let basis = vec![
        projector_from_vector(&s.up).unwrap(),
        projector_from_vector(&s.down).unwrap(),
    ];
    let start = Instant::now();
    let dist = abl_pure(&s.plus, &s.plus, &basis).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let v = dist.values();
    let err = (v[0] - 0.5).abs().max((v[1] - 0.5).abs());
    check(
        err <= 1e-12 && elapsed < Duration::from_millis(1),
        format!("p = {v:?}, error {err:e}, {elapsed:?}"),
    )
}

fn ac2() -> Outcome {
    // Brute-force 2x2 oracle: chains (z outcome, x outcome), ρ_i = |+><+|, ρ_f = I.
    let h = 1.0 / 2f64.sqrt();
    let kets = [[1.0, 0.0], [0.0, 1.0], [h, h], [h, -h]];
    let proj = |k: [f64; 2]| oracle::M::ket_bra(&[c(k[0]), c(k[1])]);
    let (z, x) = (
        [proj(kets[0]), proj(kets[1])],
        [proj(kets[2]), proj(kets[3])],
    );
    let chains: Vec<oracle::M> = (0..2)
        .flat_map(|a| (0..2).map(move |b| (a, b)))
        .map(|(a, b)| x[b].mul(&z[a]))
        .collect();
    let rho_i = proj(kets[2]);
    let mut oracle_max: f64 = 0.0;
    for (a, ca) in chains.iter().enumerate() {
        for (b, cb) in chains.iter().enumerate() {
            if a != b {
                oracle_max = oracle_max.max(ca.mul(&rho_i).mul(&cb.dag()).trace().norm());
            }
        }
    }

    let sc = spin_scenario();
    let (rho_f, family) = sc.histories_setup();
    let d = decoherence_matrix(family, &sc.rho_i, rho_f).map_err(|e| e.to_string())?;
    match assign_probabilities(&d, DEFAULT_TOL) {
        Err(Error::NotConsistent(v)) => check(
            (v.max_violation - oracle_max).abs() <= 1e-12 && (oracle_max - 0.25).abs() <= 1e-12,
            format!(
                "NotConsistent, max_violation {} (oracle {oracle_max})",
                v.max_violation
            ),
        ),
        other => Err(format!("expected NotConsistent, got {other:?}")),
    }
}

fn ac3() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut values = Vec::new();
    for d in 2..=6 {
        let sc = hm_scenario(d).map_err(|e| e.to_string())?;
        let dm = decoherence_matrix(&sc.family, &sc.rho_i, &sc.rho_f).map_err(|e| e.to_string())?;
        let d2 = (d * d) as f64;
        let want = 1.0 / d2 - 1.0 / (d2 * d2);
        worst = worst.max((dm.get(0, 1) - c(want)).norm());
        values.push(dm.get(0, 1).re);
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-9 && (values[0] - 0.1875).abs() <= 1e-9 && elapsed < Duration::from_secs(5),
        format!("D(1,2) = {values:?}, max error {worst:e}, {elapsed:?}"),
    )
}

fn ac4() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    let mut at2 = Vec::new();
    for d in 2..=6 {
        let sc = hm_scenario(d).map_err(|e| e.to_string())?;
        let abl = abl_over_family(&sc.family, &sc.rho_i, &sc.rho_f).map_err(|e| e.to_string())?;
        let d2 = (d * d) as f64;
        let u = (d2 - 1.0).powi(2);
        let z = 3.0 * d2 * d2 - 6.0 * d2 + 4.0;
        let want = [1.0 / z, u / z, u / z, u / z];
        for (p, w) in abl.values().iter().zip(want) {
            worst = worst.max((p - w).abs());
        }
        worst_sum = worst_sum.max((abl.values().iter().sum::<f64>() - 1.0).abs());
        if d == 2 {
            at2 = abl.values();
        }
    }
    let expected_d2 = [1.0 / 28.0, 9.0 / 28.0, 9.0 / 28.0, 9.0 / 28.0];
    let at2_err = at2
        .iter()
        .zip(expected_d2)
        .map(|(p, w)| (p - w).abs())
        .fold(0.0, f64::max);
    check(
        worst <= 1e-9 && at2_err <= 1e-9 && worst_sum <= 1e-10,
        format!("max error {worst:e}, d=2 {at2:?}, max |sum-1| {worst_sum:e}"),
    )
}

fn ac5() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in 2..=6 {
        let sc = hm_scenario(d).map_err(|e| e.to_string())?;
        let n = sc.space.total_dim();
        let (a, b) = (sc.rho_i.as_slice(), sc.rho_f.as_slice());
        let mut t = c(0.0);
        for i in 0..n {
            for j in 0..n {
                t += a[i * n + j] * b[j * n + i];
            }
        }
        worst = worst.max((t - c(1.0)).norm());
    }
    check(
        worst <= 1e-9,
        format!("max |tr[rho_i rho_f] - 1| = {worst:e} over d = 2..6"),
    )
}

fn random_space(r: &mut impl Rng) -> SpaceDescriptor {
    const SHAPES: &[&[usize]] = &[
        &[2],
        &[3],
        &[5],
        &[8],
        &[16],
        &[2, 2],
        &[2, 3],
        &[3, 3],
        &[2, 2, 2],
        &[4, 4],
        &[2, 2, 2, 2],
    ];
    let dims = SHAPES[r.gen_range(0..SHAPES.len())];
    SpaceDescriptor::new(dims.iter().enumerate().map(|(i, &d)| (format!("s{i}"), d))).unwrap()
}

fn ac6() -> Outcome {
    let mut r = rng(6);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let sp = random_space(&mut r);
        let n = sp.total_dim();
        let k = r.gen_range(1..=n.min(4));
        let slot = random::projective_slot(&mut r, &sp, k);
        let rho_i = random::pure_density(&mut r, &sp);
        let rho_f = ComplexMatrix::identity(n);
        let family = build_family(sp.clone(), vec![slot.clone()]).map_err(|e| e.to_string())?;
        let d = decoherence_matrix(&family, &rho_i, &rho_f).map_err(|e| e.to_string())?;
        let ch =
            assign_probabilities(&d, DEFAULT_TOL).map_err(|e| format!("trial {trial}: {e}"))?;
        let abl = abl_over_family(&family, &rho_i, &rho_f).map_err(|e| e.to_string())?;
        for (j, p) in slot.iter().enumerate() {
            let born = p.matrix().trace_of_product(&rho_i).unwrap().re;
            worst = worst
                .max((ch.values()[j] - born).abs())
                .max((abl.values()[j] - born).abs());
        }
    }
    check(
        worst <= 1e-9,
        format!("100 families, max deviation from Born {worst:e}"),
    )
}

fn ac7() -> Outcome {
    use oracle::{bell, lift, M};
    let dims = [2, 2, 2, 2];
    let (rt_b, r_b, bt_b, b) = (0, 1, 2, 3);
    let rho_i = lift(&bell(2), &[rt_b, r_b], &dims).mul(&lift(&bell(2), &[bt_b, b], &dims));
    let rho_f = lift(&bell(2), &[rt_b, bt_b], &dims).scale(4.0);
    let p1 = lift(&bell(2), &[r_b, b], &dims);
    let p2 = lift(&bell(2), &[bt_b, b], &dims);
    let id = M::eye(16);
    let first = [p1.clone(), id.minus(&p1)];
    let second = [p2.clone(), id.minus(&p2)];
    let chains: Vec<M> = (0..2)
        .flat_map(|a| (0..2).map(move |s| (a, s)))
        .map(|(a, s)| second[s].mul(&first[a]))
        .collect();
    let norm = rho_i.mul(&rho_f).trace();

    let sc = hm_scenario(2).map_err(|e| e.to_string())?;
    let dm = decoherence_matrix(&sc.family, &sc.rho_i, &sc.rho_f).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for bb in 0..4 {
            let want = rho_f
                .mul(&chains[a])
                .mul(&rho_i)
                .mul(&chains[bb].dag())
                .trace()
                / norm;
            worst = worst.max((dm.get(a, bb) - want).norm());
        }
    }
    check(
        worst <= 1e-10,
        format!("max entry deviation {worst:e} (oracle norm {norm})"),
    )
}

fn ac8() -> Outcome {
    let mut r = rng(8);
    let (mut herm, mut diag, mut sum): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let (mut zero_den, mut nan) = (0, 0);
    for _ in 0..200 {
        let sp = random_space(&mut r);
        let n = sp.total_dim();
        let slots = r.gen_range(1..=3);
        let outcomes: Vec<usize> = (0..slots).map(|_| r.gen_range(1..=n.min(3))).collect();
        let family = random::family(&mut r, &sp, &outcomes);
        let rho_i = random::pure_density(&mut r, &sp);
        let rho_f = if r.gen_bool(0.2) {
            ComplexMatrix::identity(n).sub(&rho_i).unwrap()
        } else {
            random::pure_density(&mut r, &sp)
        };
        if rho_i.trace_of_product(&rho_f).unwrap().re > 1e-6 {
            let d = decoherence_matrix(&family, &rho_i, &rho_f).map_err(|e| e.to_string())?;
            herm = herm.max(d.entries().hermiticity_defect());
            let mut total = c(0.0);
            for a in 0..d.len() {
                let z = d.get(a, a);
                diag = diag.max(z.im.abs()).max(-z.re);
                for b in 0..d.len() {
                    total += d.get(a, b);
                }
            }
            sum = sum.max((total - c(1.0)).norm());
        }
        match abl_over_family(&family, &rho_i, &rho_f) {
            Ok(dist) => {
                let s: f64 = dist.values().iter().sum();
                if !dist.denominator.is_finite()
                    || dist.denominator <= 0.0
                    || dist.values().iter().any(|p| !p.is_finite())
                    || (s - 1.0).abs() > 1e-10
                {
                    nan += 1;
                }
            }
            Err(Error::ZeroDenominator(_)) => zero_den += 1,
            Err(e) => return Err(format!("unexpected ABL error {e}")),
        }
    }
    check(
        herm <= 1e-9 && diag <= 1e-9 && sum <= 1e-9 && nan == 0,
        format!(
            "hermiticity {herm:e}, diagonal defect {diag:e}, |sum-1| {sum:e}, \
             {zero_den} zero denominators, {nan} bad distributions"
        ),
    )
}

fn ac9() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_prepost");
    let args = ["run", "--scenario", "hm", "--d", "2", "--format", "json"];
    let start = Instant::now();
    let first = Command::new(exe)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let second = Command::new(exe)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !first.status.success() {
        return Err(format!("exit status {}", first.status));
    }
    let golden = std::fs::read(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/golden/hm_d2.json"
    ))
    .map_err(|e| e.to_string())?;
    let stable = first.stdout == second.stdout && first.stdout == golden;
    let report = Report::from_json(std::str::from_utf8(&first.stdout).unwrap())
        .map_err(|e| e.to_string())?;
    let cf = report.closed_form.ok_or("no closed-form block")?;
    let numeric = cf.numeric.as_ref().ok_or("no numeric block")?;
    let agree = cf.agree
        && numeric.probabilities.len() == 4
        && numeric
            .probabilities
            .iter()
            .zip(&cf.closed_form.probabilities)
            .all(|(a, b)| quantize(*a) == quantize(*b))
        && quantize(numeric.offdiag_12) == quantize(cf.closed_form.offdiag_12);
    check(
        stable && agree && elapsed < Duration::from_secs(1),
        format!("byte-stable {stable}, blocks agree {agree}, {elapsed:?}"),
    )
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("AC1", "spin ABL (1/2, 1/2)", ac1),
        ("AC2", "spin histories refused, max violation 1/4", ac2),
        ("AC3", "black hole D(1,2) = 1/d^2 - 1/d^4, d = 2..6", ac3),
        ("AC4", "black hole ABL closed forms, d = 2..6", ac4),
        ("AC5", "tr[rho_i rho_f] = 1, d = 2..6", ac5),
        ("AC6", "histories = ABL = Born on single-slot families", ac6),
        ("AC7", "D matches permutation-matrix oracle at d = 2", ac7),
        ("AC8", "D and ABL invariants on random families", ac8),
        ("AC9", "CLI JSON golden output and runtime", ac9),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {id} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id} {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
