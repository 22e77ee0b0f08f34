//! Record a small computation on the tape, backpropagate, and compare the
//! analytic gradients against central finite differences.
//!
//! Run with: cargo run --example autodiff_tape

use dgcl::gradcheck::{central_diff, max_rel_err};
use dgcl::tape::Tape;
use dgcl::tensor::Tensor;

fn main() {
    // loss = mean(softmax(X · W) ⊙ P) for fixed W and P
    let x = Tensor::matrix(2, 3, vec![0.5, -1.0, 2.0, 0.3, 0.8, -0.4]).unwrap();
    let w = Tensor::matrix(3, 3, vec![0.2, -0.1, 0.4, 0.7, 0.05, -0.3, -0.6, 0.9, 0.1]).unwrap();
    let probe = Tensor::matrix(2, 3, vec![1.0, -2.0, 0.5, 0.25, 1.5, -1.0]).unwrap();

    let forward = |tape: &mut Tape, x: &Tensor| {
        let h = tape.matmul(x, &w).unwrap();
        let s = tape.softmax_rows(&h).unwrap();
        let weighted = tape.mul(&s, &probe).unwrap();
        tape.mean_all(&weighted)
    };

    let mut tape = Tape::new();
    let leaf = tape.leaf(&x);
    let loss = forward(&mut tape, &leaf);
    let grads = tape.backward(&loss).unwrap();
    let analytic = grads.get(&leaf).unwrap();

    println!("loss = {:.6}", loss.item());
    println!("analytic dL/dX = {:?}", analytic.data());

    let fd = central_diff(
        |v| {
            let mut t = Tape::new();
            let x = Tensor::matrix(2, 3, v.to_vec()).unwrap();
            forward(&mut t, &x).item()
        },
        x.data(),
        1e-5,
    );
    println!("finite-diff dL/dX = {fd:?}");
    println!(
        "max relative error = {:.2e}",
        max_rel_err(analytic.data(), &fd)
    );
}
