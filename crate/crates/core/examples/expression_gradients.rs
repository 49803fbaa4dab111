//! Parse an expression, evaluate it and compare the reverse-mode gradient
//! against central differences.
//!
//!     cargo run --example expression_gradients

use goml::expr::parse_expr;
use goml::model::central_difference;

fn main() -> goml::Result<()> {
    let names = ["x1".to_string(), "x2".to_string()];
    let src = "-0.43*ln(x1-0.5)-1.1-x1+x2 + x1^2*exp(-x2)";
    let e = parse_expr(src, &names)?;
    let x = [1.2, 0.8];

    let (value, grad) = e.eval_grad(&x, 2)?;
    let fd = central_difference(|p| e.eval(p), &x)?;
    println!("f(x)      = {value:.10}");
    println!("autodiff  = {grad:.10?}");
    println!("central   = {fd:.10?}");
    println!("printed   = {}", e.display(&names));

    // outside the domain of ln the evaluation reports an error, not NaN
    match e.eval(&[0.4, 0.8]) {
        Ok(v) => println!("f(0.4, 0.8) = {v}"),
        Err(err) => println!("f(0.4, 0.8): {err}"),
    }
    Ok(())
}
