#[test]
fn dbg_bivariate() {
    use arma_predict::linalg::{cr, from_rows, op_norm};
    use arma_predict::model::{InversePoleData, PoleTerm};
    use arma_predict::Tolerances;
    let tol = Tolerances::default();
    let p = cr(0.4);
    let planted = InversePoleData {
        dim: 2,
        rho0: from_rows(2, 2, &[cr(-1.0), cr(0.0), cr(0.0), cr(-1.0)]),
        poles: vec![PoleTerm {
            p,
            residues: vec![from_rows(2, 2, &[cr(0.0), cr(0.0), cr(1.0), cr(0.0)])],
        }],
        rho0j: vec![],
    };
    let h = planted.to_rational(&tol).unwrap();
    println!("num degree {} den degree {}", h.numerator().degree(), h.denominator().degree());
    println!("den coeffs {:?}", h.denominator().coeffs);
    for (k, c) in h.numerator().coeffs.iter().enumerate() {
        println!("num[{k}] = {:?}", c.as_slice());
    }
    println!("den roots {:?}", h.poles());
    let det_num = h.numerator().determinant();
    println!("det num coeffs {:?}", det_num.coeffs);
    println!("det num clustered {:?}", det_num.clustered_roots(tol.pole_cluster));
    let z = cr(2.5) + cr(0.375);
    println!("eval_inverse at {z}: {:?}", h.eval_inverse(z).map(|m| op_norm(&m)));
}
