// BPR and its multi-negative softmax extension on the same scores, plus the
// gradient of the combined objective.

use graph_diffusion_cf::{
    bpr_loss, combined_loss, info_bpr_loss, loss_grad_z, DenseMatrix, LossConfig, Result, TrainingBatch,
};

pub fn run_example() -> Result<()> {
    // one user (row 0) and three items (rows 1..=3)
    let z = DenseMatrix::from_rows(&[[1.0, 0.5], [0.9, 0.4], [0.1, 0.2], [-0.5, 0.3]]);

    let single = TrainingBatch::new(vec![0], vec![1], vec![2], 1)?;
    println!("bpr           {:.6}", bpr_loss(&z, &single)?);
    println!("infobpr, 1neg {:.6}", info_bpr_loss(&z, &single)?);

    let multi = TrainingBatch::new(vec![0], vec![1], vec![2, 3], 2)?;
    println!("infobpr, 2neg {:.6}", info_bpr_loss(&z, &multi)?);

    let cfg = LossConfig { n_neg: 2, l2_coeff: 1e-2 };
    println!("combined      {:.6}", combined_loss(&z, &multi, &cfg)?);
    let grad = loss_grad_z(&z, &multi, &cfg)?;
    for r in 0..grad.rows() {
        println!("  dL/dz[{r}] = {:?}", grad.row(r));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
