use num_complex::Complex64;
use rmatrix_core::verify::{residual, run_check, CheckContext, CheckKind};
use rmatrix_core::vertex::{belavin_family, scalar_family, yang_family};
use rmatrix_core::FunctionVariant;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn probe() {
    let tau = c(0.0, 1.0);

    // 1. Belavin certification (runs inside the constructor).
    let t0 = std::time::Instant::now();
    match belavin_family(2, tau) {
        Ok(fam) => {
            println!("belavin N=2 certified in {:?}", t0.elapsed());
            let ctx = CheckContext { family: &fam, m: 2, fd_check: false };
            for kind in [
                CheckKind::Aybe,
                CheckKind::Skew,
                CheckKind::Unitarity,
                CheckKind::Qybe,
                CheckKind::Cubic,
                CheckKind::TwoPlanck,
            ] {
                let rep = run_check(kind, &ctx, 1, 0, 1e-10).unwrap();
                println!("belavin2 {:18} residual {:.3e}", kind.id(), rep.residual);
            }
            let t1 = std::time::Instant::now();
            let rep = run_check(CheckKind::DybeComposite, &ctx, 1, 0, 1e-9).unwrap();
            println!("belavin2 DYBE_COMPOSITE M=2 residual {:.3e} in {:?}", rep.residual, t1.elapsed());
            let rep = run_check(CheckKind::CdybeComposite, &ctx, 1, 0, 1e-9).unwrap();
            println!("belavin2 CDYBE_COMPOSITE M=2 residual {:.3e}", rep.residual);
            let rep = run_check(CheckKind::ClassicalConsistency, &ctx, 1, 0, 1e-6).unwrap();
            println!("belavin2 CLASSICAL_CONSISTENCY M=2 residual {:.3e}", rep.residual);
            let rep = run_check(CheckKind::Cybe, &ctx, 1, 0, 1e-9).unwrap();
            println!("belavin2 CYBE residual {:.3e}", rep.residual);
        }
        Err(e) => println!("BELAVIN N=2 FAILED: {e}"),
    }

    match belavin_family(3, tau) {
        Ok(fam) => {
            let ctx = CheckContext { family: &fam, m: 2, fd_check: false };
            let rep = run_check(CheckKind::Aybe, &ctx, 1, 0, 1e-10).unwrap();
            println!("belavin3 AYBE residual {:.3e}", rep.residual);
        }
        Err(e) => println!("BELAVIN N=3 FAILED: {e}"),
    }

    // 2. Yang composite DYBE at (2,2) and felder elliptic.
    let yang = yang_family(2).unwrap();
    let ctx = CheckContext { family: &yang, m: 2, fd_check: false };
    let rep = run_check(CheckKind::DybeComposite, &ctx, 1, 0, 1e-10).unwrap();
    println!("yang2 DYBE_COMPOSITE M=2 residual {:.3e}", rep.residual);
    let rep = run_check(CheckKind::ComponentIjk, &ctx_m(&yang, 3), 1, 0, 1e-11).unwrap();
    println!("yang2 COMPONENT_IJK M=3 residual {:.3e}", rep.residual);
    let rep = run_check(CheckKind::CdybeFelder, &ctx, 1, 0, 1e-9).unwrap();
    println!("rational CDYBE_FELDER M=2 residual {:.3e}", rep.residual);
    let rep = run_check(CheckKind::CdybeComposite, &ctx, 1, 0, 1e-9).unwrap();
    println!("yang2 CDYBE_COMPOSITE M=2 residual {:.3e}", rep.residual);
    let rep = run_check(CheckKind::ClassicalConsistency, &ctx, 1, 0, 1e-6).unwrap();
    println!("yang2 CLASSICAL_CONSISTENCY M=2 residual {:.3e}", rep.residual);

    // elliptic Felder
    let sc = scalar_family(FunctionVariant::elliptic(tau).unwrap());
    let ctx = CheckContext { family: &sc, m: 2, fd_check: false };
    let rep = run_check(CheckKind::DybeFelder, &ctx, 1, 0, 1e-10).unwrap();
    println!("elliptic DYBE_FELDER M=2 residual {:.3e}", rep.residual);
    let rep = run_check(CheckKind::CdybeFelder, &ctx, 1, 0, 1e-9).unwrap();
    println!("elliptic CDYBE_FELDER M=2 residual {:.3e}", rep.residual);

    // trig Fay
    let tr = scalar_family(FunctionVariant::Trigonometric);
    let ctx = CheckContext { family: &tr, m: 1, fd_check: false };
    let rep = run_check(CheckKind::Fay, &ctx, 1, 0, 1e-11).unwrap();
    println!("trig FAY residual {:.3e}", rep.residual);
    let rep = run_check(CheckKind::ScalarUnitarity, &ctx, 1, 0, 1e-11).unwrap();
    println!("trig SCALAR_UNITARITY residual {:.3e}", rep.residual);

    // 3. timing: yang (3,3) composite DYBE single sample
    let yang3 = yang_family(3).unwrap();
    let ctx = CheckContext { family: &yang3, m: 3, fd_check: false };
    let t2 = std::time::Instant::now();
    let rep = run_check(CheckKind::DybeComposite, &ctx, 1, 0, 1e-10).unwrap();
    println!("yang (3,3) DYBE_COMPOSITE residual {:.3e} in {:?}", rep.residual, t2.elapsed());
}

fn ctx_m<'a>(family: &'a rmatrix_core::RFamily, m: usize) -> CheckContext<'a> {
    CheckContext { family, m, fd_check: false }
}

#[test]
fn probe_unused_residual_import() {
    // keep the import used
    let yang = yang_family(2).unwrap();
    let ctx = CheckContext { family: &yang, m: 1, fd_check: false };
    let rng = &mut rmatrix_core::verify::sample_rng(0, CheckKind::Qybe, 0);
    let _ = rng;
    let rep = run_check(CheckKind::Qybe, &ctx, 0, 0, 1e-11).unwrap();
    let again = residual(CheckKind::Qybe, &ctx, &rep.sample).unwrap();
    assert_eq!(rep.residual.to_bits(), again.to_bits());
}
